#include "advdiff/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "advdiff/attacks.hpp"
#include "advdiff/rng.hpp"

namespace advdiff {

void validate_dataset(const Dataset& data) {
    for (const auto& s : data) {
        if (s.label != 1 && s.label != -1)
            throw std::invalid_argument("dataset: label must be -1 or +1");
        if (!all_finite(s.features))
            throw std::invalid_argument("dataset: non-finite feature value");
    }
}

double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double margin(const Vector& w, const LabeledSample& s, std::span<const double> delta) {
    if (w.size() != s.features.size())
        throw std::invalid_argument("margin: dimension mismatch");
    if (!delta.empty() && delta.size() != w.size())
        throw std::invalid_argument("margin: delta dimension mismatch");
    double z = 0.0;
    if (delta.empty()) {
        for (size_t i = 0; i < w.size(); ++i) z += s.features[i] * w[i];
    } else {
        for (size_t i = 0; i < w.size(); ++i) z += (s.features[i] + delta[i]) * w[i];
    }
    return s.label * z;
}

double logistic_loss(const Vector& w, const LabeledSample& s, std::span<const double> delta) {
    return softplus(-margin(w, s, delta));
}

Vector grad_w_logistic(const Vector& w, const LabeledSample& s, std::span<const double> delta) {
    const double z = margin(w, s, delta);
    const double c = -s.label * sigmoid(-z);
    Vector g(w.size());
    if (delta.empty()) {
        for (size_t i = 0; i < w.size(); ++i) g[i] = c * s.features[i];
    } else {
        for (size_t i = 0; i < w.size(); ++i) g[i] = c * (s.features[i] + delta[i]);
    }
    return g;
}

Vector grad_x_logistic(const Vector& w, const LabeledSample& s, std::span<const double> delta) {
    const double z = margin(w, s, delta);
    const double c = -s.label * sigmoid(-z);
    Vector g(w.size());
    for (size_t i = 0; i < w.size(); ++i) g[i] = c * w[i];
    return g;
}

double robust_empirical_risk(const Vector& w, const Dataset& data, double eps) {
    if (data.empty()) throw std::invalid_argument("robust_empirical_risk: empty dataset");
    if (eps < 0.0) throw std::invalid_argument("robust_empirical_risk: eps must be >= 0");
    double sum = 0.0;
    for (const auto& s : data) {
        const Vector delta = exact_maximizer(w, s, eps);
        sum += logistic_loss(w, s, delta);
    }
    return sum / data.size();
}

Vector robust_risk_gradient(const Vector& w, const Dataset& data, double eps, double rho) {
    if (data.empty()) throw std::invalid_argument("robust_risk_gradient: empty dataset");
    Vector g(w.size(), 0.0);
    for (const auto& s : data) {
        const Vector delta = exact_maximizer(w, s, eps);
        const Vector gs = grad_w_logistic(w, s, delta);
        axpy(1.0, gs, g);
    }
    scale(g, 1.0 / data.size());
    if (rho != 0.0) axpy(rho, w, g);
    return g;
}

int classify(const Vector& w, const Vector& x) {
    if (w.size() != x.size()) throw std::invalid_argument("classify: dimension mismatch");
    double z = 0.0;
    for (size_t i = 0; i < w.size(); ++i) z += w[i] * x[i];
    return z >= 0.0 ? 1 : -1;
}

double classification_error(const Vector& w, const Dataset& data,
                            const std::function<Vector(const Vector&, const LabeledSample&)>* perturb) {
    if (data.empty()) throw std::invalid_argument("classification_error: empty dataset");
    long wrong = 0;
    Vector x;
    for (const auto& s : data) {
        if (perturb) {
            const Vector delta = (*perturb)(w, s);
            x = s.features;
            axpy(1.0, delta, x);
            if (classify(w, x) != s.label) ++wrong;
        } else {
            if (classify(w, s.features) != s.label) ++wrong;
        }
    }
    return static_cast<double>(wrong) / data.size();
}

namespace {

double regularized_loss(const Vector& w, const LabeledSample& s, std::span<const double> delta,
                        double rho) {
    double r = logistic_loss(w, s, delta);
    if (rho != 0.0) {
        double nw2 = 0.0;
        for (double x : w) nw2 += x * x;
        r += 0.5 * rho * nw2;
    }
    return r;
}

Vector regularized_grad_w(const Vector& w, const LabeledSample& s, std::span<const double> delta,
                          double rho) {
    Vector g = grad_w_logistic(w, s, delta);
    if (rho != 0.0) axpy(rho, w, g);
    return g;
}

Vector random_vector(Rng& rng, size_t m, double scale) {
    Vector v(m);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

Vector random_ball(Rng& rng, size_t m, double eps) {
    Vector v = random_vector(rng, m, 1.0);
    const double n = norm2(v);
    if (n < 1e-300) return Vector(m, 0.0);
    const double r = eps * std::pow(rng.uniform(), 1.0 / m);
    scale(v, r / n);
    return v;
}

}  // namespace

EmpiricalConstants estimate_constants(const Dataset& data, double eps, double rho, int probes,
                                      uint64_t seed, const Vector* wstar) {
    if (data.empty()) throw std::invalid_argument("estimate_constants: empty dataset");
    if (probes < 100) throw std::invalid_argument("estimate_constants: probes must be >= 100");
    const size_t m = data[0].features.size();
    Rng rng(derive_seed(seed, kTagProbe, 0));

    EmpiricalConstants out;

    // Strong convexity: minimum curvature ratio of the (regularized)
    // per-sample loss over random pairs. Colinear large-scale pairs push the
    // logistic contribution into its flat tails, exposing the bare
    // regularizer curvature.
    double nu_min = std::numeric_limits<double>::infinity();
    for (int p = 0; p < probes; ++p) {
        const auto& s = data[rng.uniform_int(0, static_cast<int>(data.size()) - 1)];
        const Vector delta = random_ball(rng, m, eps);
        Vector w1, w2;
        if (p % 4 == 0) {
            const double sc = (p % 8 == 0) ? 1e4 : 1e2;
            w1 = random_vector(rng, m, 1.0);
            const double n1 = norm2(w1);
            if (n1 < 1e-12) continue;
            scale(w1, sc / n1);
            w2 = w1;
            scale(w2, 2.0);
        } else {
            w1 = random_vector(rng, m, rng.uniform(0.5, 2.0));
            w2 = random_vector(rng, m, rng.uniform(0.5, 2.0));
        }
        const double d2 = sq_dist(w1, w2);
        if (d2 < 1e-12) continue;
        const Vector g1 = regularized_grad_w(w1, s, delta, rho);
        double lin = 0.0;
        for (size_t i = 0; i < m; ++i) lin += g1[i] * (w2[i] - w1[i]);
        const double gap = regularized_loss(w2, s, delta, rho) - regularized_loss(w1, s, delta, rho) - lin;
        nu_min = std::min(nu_min, 2.0 * gap / d2);
    }
    out.strong_convexity_nu = nu_min;

    // Smoothness: max observed ratio across the five gradient-Lipschitz
    // inequalities, with real samples and feasible perturbations.
    double l_max = 0.0;
    for (int p = 0; p < probes; ++p) {
        const auto& s1 = data[rng.uniform_int(0, static_cast<int>(data.size()) - 1)];
        const auto& s2 = data[rng.uniform_int(0, static_cast<int>(data.size()) - 1)];
        const Vector delta = random_ball(rng, m, eps);
        const Vector w1 = random_vector(rng, m, rng.uniform(0.5, 2.0));
        const Vector w2 = random_vector(rng, m, rng.uniform(0.5, 2.0));
        const double dw = std::sqrt(sq_dist(w1, w2));

        LabeledSample flip = s1;
        flip.label = -s1.label;

        if (dw > 1e-9) {
            Vector a = regularized_grad_w(w1, s1, delta, rho);
            Vector b = regularized_grad_w(w2, s1, delta, rho);
            l_max = std::max(l_max, std::sqrt(sq_dist(a, b)) / dw);
            a = grad_x_logistic(w1, s1, delta);
            b = grad_x_logistic(w2, s1, delta);
            l_max = std::max(l_max, std::sqrt(sq_dist(a, b)) / dw);
        }
        if (s1.features != s2.features) {
            LabeledSample s2same = s2;
            s2same.label = s1.label;
            const double dx = std::sqrt(sq_dist(s1.features, s2same.features));
            if (dx > 1e-9) {
                Vector a = grad_w_logistic(w1, s1, delta);
                Vector b = grad_w_logistic(w1, s2same, delta);
                l_max = std::max(l_max, std::sqrt(sq_dist(a, b)) / dx);
                a = grad_x_logistic(w1, s1, delta);
                b = grad_x_logistic(w1, s2same, delta);
                l_max = std::max(l_max, std::sqrt(sq_dist(a, b)) / dx);
            }
        }
        {
            const Vector a = grad_w_logistic(w1, s1, delta);
            const Vector b = grad_w_logistic(w1, flip, delta);
            l_max = std::max(l_max, std::sqrt(sq_dist(a, b)) / 2.0);
        }
    }
    out.lipschitz_L = l_max;

    // Gradient disagreement: two interleaved pseudo-agents sharing the
    // distribution; max squared gap between their empirical worst-case
    // gradients over probe points.
    Dataset shard_a, shard_b;
    for (size_t i = 0; i < data.size(); ++i)
        (i % 2 == 0 ? shard_a : shard_b).push_back(data[i]);
    if (!shard_a.empty() && !shard_b.empty()) {
        double c2 = 0.0;
        const int c_probes = std::max(probes / 10, 10);
        for (int p = 0; p < c_probes; ++p) {
            const Vector w = random_vector(rng, m, rng.uniform(0.5, 2.0));
            const Vector ga = robust_risk_gradient(w, shard_a, eps, 0.0);
            const Vector gb = robust_risk_gradient(w, shard_b, eps, 0.0);
            c2 = std::max(c2, sq_dist(ga, gb));
        }
        out.disagreement_C2 = c2;
    }

    // Second-moment fit of single-sample gradient noise against squared
    // distance from the reference point.
    if (wstar != nullptr) {
        const Vector u = random_vector(rng, m, 1.0);
        Vector unit = u;
        const double un = norm2(unit);
        if (un > 1e-12) scale(unit, 1.0 / un);
        std::vector<double> xs, ys;
        for (double t : {0.0, 0.5, 1.0, 2.0, 4.0}) {
            Vector w = *wstar;
            axpy(t, unit, w);
            const Vector full = robust_risk_gradient(w, data, eps, 0.0);
            double m2 = 0.0;
            const int draws = std::max(probes / 5, 50);
            for (int d = 0; d < draws; ++d) {
                const auto& s = data[rng.uniform_int(0, static_cast<int>(data.size()) - 1)];
                const Vector delta = exact_maximizer(w, s, eps);
                const Vector g = grad_w_logistic(w, s, delta);
                m2 += sq_dist(g, full);
            }
            xs.push_back(t * t);
            ys.push_back(m2 / std::max(probes / 5, 50));
        }
        // least-squares affine fit y = beta2 x + sigma2
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        const double denom = n * sxx - sx * sx;
        if (std::abs(denom) > 1e-12) {
            out.noise_beta2 = (n * sxy - sx * sy) / denom;
            out.noise_sigma2 = (sy - out.noise_beta2 * sx) / n;
        }
    }

    return out;
}

}  // namespace advdiff
