#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "advdiff/linalg.hpp"

namespace advdiff {

struct LabeledSample {
    Vector features;
    int label = 1;  // strictly -1 or +1
};

using Dataset = std::vector<LabeledSample>;

void validate_dataset(const Dataset& data);

// max(z, 0) + log1p(exp(-|z|)); safe for |z| well past 700
double softplus(double z);
double sigmoid(double z);

// gamma * (x + delta)' w ; empty delta means zero perturbation
double margin(const Vector& w, const LabeledSample& s, std::span<const double> delta = {});

// ln(1 + exp(-gamma (x+delta)' w))
double logistic_loss(const Vector& w, const LabeledSample& s, std::span<const double> delta = {});

// d/dw: -gamma * sigmoid(-margin) * (x + delta)
Vector grad_w_logistic(const Vector& w, const LabeledSample& s, std::span<const double> delta = {});

// d/dx: -gamma * sigmoid(-margin) * w
Vector grad_x_logistic(const Vector& w, const LabeledSample& s, std::span<const double> delta = {});

// Mean worst-case loss over the dataset at budget eps (closed-form inner
// maximizer). Throws on an empty dataset.
double robust_empirical_risk(const Vector& w, const Dataset& data, double eps);

// Mean loss gradient at the per-sample worst-case perturbation, plus rho * w.
// The perturbation ignores the regularizer, which enters only additively.
Vector robust_risk_gradient(const Vector& w, const Dataset& data, double eps, double rho = 0.0);

// sign(w'x) with ties mapped to +1
int classify(const Vector& w, const Vector& x);

// Fraction of samples misclassified after the given per-sample perturbation
// rule; perturb may be null for clean error.
double classification_error(const Vector& w, const Dataset& data,
                            const std::function<Vector(const Vector&, const LabeledSample&)>* perturb = nullptr);

struct EmpiricalConstants {
    double strong_convexity_nu = 0.0;
    double lipschitz_L = 0.0;
    double disagreement_C2 = 0.0;
    double noise_beta2 = 0.0;
    double noise_sigma2 = 0.0;
};

// Monte-Carlo estimates of the problem constants on a concrete dataset. All
// values are lower bounds by construction (sampled, not supremal). The noise
// moment fit needs a reference point playing the role of the minimizer; if
// absent those two fields stay zero.
EmpiricalConstants estimate_constants(const Dataset& data, double eps, double rho, int probes,
                                      uint64_t seed, const Vector* wstar = nullptr);

}  // namespace advdiff
