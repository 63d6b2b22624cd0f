#include "advdiff/diffusion.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "advdiff/rng.hpp"

namespace advdiff {

NetworkState init_network_state(int num_agents, int dimension, uint64_t seed, bool identical) {
    NetworkState state;
    state.weights = Matrix(num_agents, dimension);
    state.intermediates = Matrix(num_agents, dimension);
    for (int k = 0; k < num_agents; ++k) {
        Rng rng(derive_seed(seed, kTagInit, identical ? 0 : static_cast<uint64_t>(k) + 1));
        for (int j = 0; j < dimension; ++j) state.weights(k, j) = rng.uniform(-0.1, 0.1);
    }
    return state;
}

namespace {

// Batch adversarial gradient at w: each sample perturbed independently at
// the same iterate, gradients summed in batch order, then averaged; the
// regularizer enters after the average.
Vector batch_adversarial_gradient(const Vector& w, const Dataset& data,
                                  const std::vector<int>& batch, const AttackSpec& attack,
                                  double rho, double* loss_out) {
    Vector g(w.size(), 0.0);
    double loss = 0.0;
    for (int idx : batch) {
        const LabeledSample& s = data[idx];
        const Vector delta = perturbation(attack, w, s);
        const Vector gs = grad_w_logistic(w, s, delta);
        axpy(1.0, gs, g);
        if (loss_out) loss += logistic_loss(w, s, delta);
    }
    scale(g, 1.0 / batch.size());
    if (rho != 0.0) axpy(rho, w, g);
    if (loss_out) *loss_out = loss / batch.size();
    return g;
}

}  // namespace

void adversarial_atc_step(NetworkState& state, const CombinationMatrix& a, const Dataset& data,
                          const std::vector<std::vector<int>>& batches, double mu, double rho,
                          const AttackSpec& attack, bool parallel,
                          std::span<const int> agent_order, Vector* per_agent_loss) {
    const int k_agents = state.weights.rows();
    const int m = state.weights.cols();
    if (mu <= 0.0) throw std::invalid_argument("atc step: mu must be > 0");
    if (a.num_agents() != k_agents) throw std::invalid_argument("atc step: matrix/state size mismatch");
    if (static_cast<int>(batches.size()) != k_agents)
        throw std::invalid_argument("atc step: one batch per agent required");
    if (!data.empty() && static_cast<int>(data[0].features.size()) != m)
        throw std::invalid_argument("atc step: sample dimension mismatch");

    std::vector<int> order_default;
    if (agent_order.empty()) {
        order_default.resize(k_agents);
        std::iota(order_default.begin(), order_default.end(), 0);
        agent_order = order_default;
    }
    if (static_cast<int>(agent_order.size()) != k_agents)
        throw std::invalid_argument("atc step: agent_order must cover every agent");

    if (per_agent_loss) per_agent_loss->assign(k_agents, 0.0);
    std::vector<std::string> failures(k_agents);

    // adapt: reads only the previous-round weights
    #pragma omp parallel for schedule(static) if (parallel)
    for (int pos = 0; pos < k_agents; ++pos) {
        const int k = agent_order[pos];
        if (batches[k].empty()) {
            failures[k] = "empty batch";
            continue;
        }
        const Vector w(state.weights.row(k).begin(), state.weights.row(k).end());
        double loss = 0.0;
        const Vector g =
            batch_adversarial_gradient(w, data, batches[k], attack, rho, per_agent_loss ? &loss : nullptr);
        if (!all_finite(g)) {
            failures[k] = "non-finite gradient";
            continue;
        }
        for (int j = 0; j < m; ++j) state.intermediates(k, j) = w[j] - mu * g[j];
        if (per_agent_loss) (*per_agent_loss)[k] = loss;
    }
    for (int k = 0; k < k_agents; ++k) {
        if (!failures[k].empty()) {
            std::ostringstream msg;
            msg << "atc step: agent " << k << " at iteration " << state.iteration + 1 << ": "
                << failures[k];
            throw std::runtime_error(msg.str());
        }
    }

    // combine: convex combination of the snapshot, fixed ascending order
    #pragma omp parallel for schedule(static) if (parallel)
    for (int pos = 0; pos < k_agents; ++pos) {
        const int k = agent_order[pos];
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int l : a.column_support[k]) acc += a.entries(l, k) * state.intermediates(l, j);
            state.weights(k, j) = acc;
        }
    }

    ++state.iteration;
}

Matrix sample_gradient_noise(const NetworkState& state, const Dataset& data,
                             const std::vector<std::vector<int>>& batches, const AttackSpec& attack,
                             const RiskGradOracle& risk_grad) {
    const int k_agents = state.weights.rows();
    const int m = state.weights.cols();
    Matrix noise(k_agents, m);
    for (int k = 0; k < k_agents; ++k) {
        const Vector w(state.weights.row(k).begin(), state.weights.row(k).end());
        const Vector g = batch_adversarial_gradient(w, data, batches[k], attack, 0.0, nullptr);
        const Vector truth = risk_grad(k, w);
        for (int j = 0; j < m; ++j) noise(k, j) = g[j] - truth[j];
    }
    return noise;
}

namespace {

double network_disagreement(const NetworkState& state, const Vector& perron) {
    const int k_agents = state.weights.rows();
    const int m = state.weights.cols();
    Vector mean(m, 0.0);
    for (int k = 0; k < k_agents; ++k) axpy(perron[k], state.weights.row(k), mean);
    double worst = 0.0;
    for (int k = 0; k < k_agents; ++k)
        worst = std::max(worst, std::sqrt(sq_dist(state.weights.row(k), mean)));
    return worst;
}

}  // namespace

TrainResult run_training_from(NetworkState state, const TrainOptions& opt, const Dataset& train,
                              const CombinationMatrix& a, StreamSet& streams,
                              const Vector* oracle_wstar, const StepObserver& observer) {
    if (opt.iters < 0) throw std::invalid_argument("run_training: iters must be >= 0");
    if (opt.batch_size < 1) throw std::invalid_argument("run_training: batch size must be >= 1");
    if (opt.log_stride < 1) throw std::invalid_argument("run_training: log stride must be >= 1");
    if (streams.num_agents() != a.num_agents())
        throw std::invalid_argument("run_training: stream/matrix agent mismatch");
    if (train.empty()) throw std::invalid_argument("run_training: empty training set");
    opt.attack.validate();

    const int k_agents = a.num_agents();
    TrainResult out;
    std::vector<std::vector<int>> batches(k_agents);
    Vector loss(k_agents, 0.0);

    for (long n = 1; n <= opt.iters; ++n) {
        for (int k = 0; k < k_agents; ++k) batches[k] = streams.streams[k].next(opt.batch_size);
        const bool record = n % opt.log_stride == 0;
        adversarial_atc_step(state, a, train, batches, opt.mu, opt.rho, opt.attack, opt.parallel,
                             {}, record ? &loss : nullptr);
        if (!record) continue;

        RoundTrace trace;
        trace.iteration = n;
        trace.per_agent_loss = loss;
        trace.disagreement = network_disagreement(state, a.perron);
        if (oracle_wstar) {
            trace.msd_per_agent.resize(k_agents);
            for (int k = 0; k < k_agents; ++k)
                trace.msd_per_agent[k] = sq_dist(state.weights.row(k), *oracle_wstar);
        }
        if (observer) observer(state, trace);
        out.traces.push_back(std::move(trace));
    }
    out.state = std::move(state);
    return out;
}

TrainResult run_training(const TrainOptions& opt, const Dataset& train, const CombinationMatrix& a,
                         StreamSet& streams, const Vector* oracle_wstar,
                         const StepObserver& observer) {
    if (train.empty()) throw std::invalid_argument("run_training: empty training set");
    NetworkState state = init_network_state(a.num_agents(), static_cast<int>(train[0].features.size()),
                                            opt.seed, opt.identical_init);
    return run_training_from(std::move(state), opt, train, a, streams, oracle_wstar, observer);
}

}  // namespace advdiff
