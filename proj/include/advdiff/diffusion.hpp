#pragma once

#include <functional>
#include <span>
#include <vector>

#include "advdiff/attacks.hpp"
#include "advdiff/data.hpp"
#include "advdiff/linalg.hpp"
#include "advdiff/model.hpp"
#include "advdiff/topology.hpp"

namespace advdiff {

struct NetworkState {
    Matrix weights;        // row k = agent k's iterate
    Matrix intermediates;  // row k = agent k's post-adapt state from the last round
    long iteration = 0;
};

struct RoundTrace {
    long iteration = 0;
    Vector per_agent_loss;     // adversarial batch loss at the pre-update iterate
    Vector msd_per_agent;      // empty unless a reference minimizer was supplied
    double disagreement = 0.0; // max_k || w_k - pi-weighted average ||
    Matrix grad_noise_sample;  // 0x0 unless noise recording is enabled
};

// Small seeded uniform entries in [-0.1, 0.1]; identical rows when shared.
NetworkState init_network_state(int num_agents, int dimension, uint64_t seed, bool identical);

// One synchronous round: every agent perturbs its batch at the previous
// iterate, takes the gradient step, and only then the convex combination
// runs on the snapshot of post-adapt states. Batches hold dataset indices,
// one vector per agent. agent_order may permute the evaluation order (the
// result must not depend on it); per_agent_loss, when non-null, receives the
// batch loss at the pre-update iterate.
void adversarial_atc_step(NetworkState& state, const CombinationMatrix& a, const Dataset& data,
                          const std::vector<std::vector<int>>& batches, double mu, double rho,
                          const AttackSpec& attack, bool parallel = false,
                          std::span<const int> agent_order = {}, Vector* per_agent_loss = nullptr);

// Evaluates the true risk gradient for an agent at a given point; used to
// extract gradient-noise samples.
using RiskGradOracle = std::function<Vector(int agent, const Vector& w)>;

// Per-agent difference between the batch adversarial gradient and the true
// risk gradient at the current iterates. Read-only.
Matrix sample_gradient_noise(const NetworkState& state, const Dataset& data,
                             const std::vector<std::vector<int>>& batches, const AttackSpec& attack,
                             const RiskGradOracle& risk_grad);

struct TrainOptions {
    double mu = 0.01;
    long iters = 1000;
    double rho = 0.0;
    int batch_size = 1;
    uint64_t seed = 0;
    long log_stride = 1;
    bool identical_init = false;
    bool parallel = false;
    AttackSpec attack;
};

struct TrainResult {
    NetworkState state;
    std::vector<RoundTrace> traces;
};

// Called at every logged round after the trace fields are filled; may add
// derived observations but must not touch the state.
using StepObserver = std::function<void(const NetworkState&, RoundTrace&)>;

// Runs iters rounds, drawing one batch per agent per round from the streams.
// Deterministic for a fixed options/seed/stream configuration regardless of
// the parallel flag. oracle_wstar enables the per-round deviation column.
TrainResult run_training(const TrainOptions& opt, const Dataset& train, const CombinationMatrix& a,
                         StreamSet& streams, const Vector* oracle_wstar = nullptr,
                         const StepObserver& observer = {});

// Same loop starting from an explicit state (used by equivalence tests).
TrainResult run_training_from(NetworkState state, const TrainOptions& opt, const Dataset& train,
                              const CombinationMatrix& a, StreamSet& streams,
                              const Vector* oracle_wstar = nullptr,
                              const StepObserver& observer = {});

}  // namespace advdiff
