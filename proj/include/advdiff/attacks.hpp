#pragma once

#include <string>

#include "advdiff/model.hpp"

namespace advdiff {

enum class AttackKind { exact, fgm, deepfool };

struct AttackSpec {
    AttackKind kind = AttackKind::exact;
    double epsilon = 0.0;
    double deepfool_overshoot = 0.02;
    int deepfool_max_iters = 50;
    // Number of leading coordinates the perturbation may touch; 0 means all.
    // Used with constant-feature augmentation, where the trailing bias
    // coordinate must stay untouched.
    int perturb_dims = 0;

    void validate() const;
};

// Closed-form worst-case perturbation of the logistic loss on the eps-ball:
// -eps * gamma * w / ||w||. Returns zero when ||w|| < 1e-12 (the loss is
// then constant in the perturbation and any point maximizes).
Vector exact_maximizer(const Vector& w, const LabeledSample& s, double eps, int perturb_dims = 0);

// eps-normalized input-gradient step evaluated at the clean sample. Zero
// when the gradient norm is below 1e-12.
Vector fgm(const Vector& w, const LabeledSample& s, double eps, int perturb_dims = 0);

// Minimal boundary-crossing perturbation for the linear classifier
// sign(w'x), scaled by (1 + overshoot). Not clipped to any budget; callers
// clip or report its norm. Throws when ||w|| < 1e-12.
Vector deepfool_binary(const Vector& w, const Vector& x, int max_iters, double overshoot,
                       int perturb_dims = 0);

// delta unchanged if ||delta|| <= eps, else rescaled onto the eps-sphere
Vector clip_to_ball(Vector delta, double eps);

// Dispatch on spec.kind. DeepFool output is clipped to spec.epsilon here so
// every attack respects the same budget.
Vector perturbation(const AttackSpec& spec, const Vector& w, const LabeledSample& s);

AttackKind parse_attack_kind(const std::string& name);
std::string attack_kind_name(AttackKind kind);

}  // namespace advdiff
