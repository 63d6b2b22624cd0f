#include "advdiff/attacks.hpp"

#include <cmath>
#include <stdexcept>

namespace advdiff {

void AttackSpec::validate() const {
    if (epsilon < 0.0) throw std::invalid_argument("attack: epsilon must be >= 0");
    if (deepfool_max_iters < 1) throw std::invalid_argument("attack: max iters must be >= 1");
    if (deepfool_overshoot < 0.0) throw std::invalid_argument("attack: overshoot must be >= 0");
    if (perturb_dims < 0) throw std::invalid_argument("attack: perturb_dims must be >= 0");
}

namespace {

size_t effective_dims(size_t m, int perturb_dims) {
    if (perturb_dims <= 0 || static_cast<size_t>(perturb_dims) > m) return m;
    return static_cast<size_t>(perturb_dims);
}

}  // namespace

Vector exact_maximizer(const Vector& w, const LabeledSample& s, double eps, int perturb_dims) {
    if (w.size() != s.features.size())
        throw std::invalid_argument("exact_maximizer: dimension mismatch");
    if (eps < 0.0) throw std::invalid_argument("exact_maximizer: eps must be >= 0");
    const size_t d = effective_dims(w.size(), perturb_dims);
    Vector delta(w.size(), 0.0);
    double nw = 0.0;
    for (size_t i = 0; i < d; ++i) nw += w[i] * w[i];
    nw = std::sqrt(nw);
    if (nw < 1e-12) return delta;
    const double c = -eps * s.label / nw;
    for (size_t i = 0; i < d; ++i) delta[i] = c * w[i];
    return delta;
}

Vector fgm(const Vector& w, const LabeledSample& s, double eps, int perturb_dims) {
    if (w.size() != s.features.size()) throw std::invalid_argument("fgm: dimension mismatch");
    if (eps < 0.0) throw std::invalid_argument("fgm: eps must be >= 0");
    const Vector g = grad_x_logistic(w, s);
    const size_t d = effective_dims(w.size(), perturb_dims);
    Vector delta(w.size(), 0.0);
    double ng = 0.0;
    for (size_t i = 0; i < d; ++i) ng += g[i] * g[i];
    ng = std::sqrt(ng);
    if (ng < 1e-12) return delta;
    for (size_t i = 0; i < d; ++i) delta[i] = eps * g[i] / ng;
    return delta;
}

Vector deepfool_binary(const Vector& w, const Vector& x, int max_iters, double overshoot,
                       int perturb_dims) {
    if (w.size() != x.size()) throw std::invalid_argument("deepfool_binary: dimension mismatch");
    const size_t d = effective_dims(w.size(), perturb_dims);
    double nw2 = 0.0;
    for (size_t i = 0; i < d; ++i) nw2 += w[i] * w[i];
    if (std::sqrt(nw2) < 1e-12)
        throw std::invalid_argument("deepfool_binary: zero weights give no decision boundary");

    Vector accum(w.size(), 0.0);
    int sign0 = 0;
    for (int it = 0; it < max_iters; ++it) {
        double f = 0.0;
        for (size_t i = 0; i < w.size(); ++i) f += w[i] * (x[i] + (1.0 + overshoot) * accum[i]);
        const int sign = f >= 0.0 ? 1 : -1;
        if (it == 0) {
            sign0 = sign;
        } else if (sign != sign0) {
            break;
        }
        if (f == 0.0) break;  // already on the boundary, no further progress
        const double step = -f / nw2;
        for (size_t i = 0; i < d; ++i) accum[i] += step * w[i];
    }
    scale(accum, 1.0 + overshoot);
    return accum;
}

Vector clip_to_ball(Vector delta, double eps) {
    if (eps < 0.0) throw std::invalid_argument("clip_to_ball: eps must be >= 0");
    const double n = norm2(delta);
    if (n > eps) scale(delta, eps / n);
    return delta;
}

Vector perturbation(const AttackSpec& spec, const Vector& w, const LabeledSample& s) {
    switch (spec.kind) {
        case AttackKind::exact:
            return exact_maximizer(w, s, spec.epsilon, spec.perturb_dims);
        case AttackKind::fgm:
            return fgm(w, s, spec.epsilon, spec.perturb_dims);
        case AttackKind::deepfool: {
            double nw = 0.0;
            const size_t d = effective_dims(w.size(), spec.perturb_dims);
            for (size_t i = 0; i < d; ++i) nw += w[i] * w[i];
            if (std::sqrt(nw) < 1e-12) return Vector(w.size(), 0.0);
            Vector delta = deepfool_binary(w, s.features, spec.deepfool_max_iters,
                                           spec.deepfool_overshoot, spec.perturb_dims);
            return clip_to_ball(std::move(delta), spec.epsilon);
        }
    }
    throw std::logic_error("perturbation: unknown attack kind");
}

AttackKind parse_attack_kind(const std::string& name) {
    if (name == "exact") return AttackKind::exact;
    if (name == "fgm") return AttackKind::fgm;
    if (name == "deepfool") return AttackKind::deepfool;
    throw std::invalid_argument("unknown attack kind: " + name);
}

std::string attack_kind_name(AttackKind kind) {
    switch (kind) {
        case AttackKind::exact: return "exact";
        case AttackKind::fgm: return "fgm";
        case AttackKind::deepfool: return "deepfool";
    }
    return "unknown";
}

}  // namespace advdiff
