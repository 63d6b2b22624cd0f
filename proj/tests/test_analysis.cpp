#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "advdiff/analysis.hpp"
#include "advdiff/data.hpp"
#include "advdiff/diffusion.hpp"
#include "advdiff/model.hpp"
#include "advdiff/rng.hpp"
#include "advdiff/topology.hpp"

using namespace advdiff;

namespace {

Dataset gaussian_data(uint64_t seed, int n = 400, int dim = 5) {
    DatasetSpec spec;
    spec.dimension = dim;
    spec.num_samples = 2 * n;
    spec.train_fraction = 0.5;
    spec.seed = seed;
    return generate_synthetic(spec).first;
}

// independent reference: fixed-step full-batch descent at a conservative
// step, run to a 10x tighter tolerance
Vector reference_minimizer(const Dataset& data, double eps, double rho, double tol) {
    double max_sq = 0.0;
    for (const auto& s : data) {
        double nx = 0.0;
        for (double v : s.features) nx += v * v;
        max_sq = std::max(max_sq, nx);
    }
    const double lip = (std::sqrt(max_sq) + eps) * (std::sqrt(max_sq) + eps) / 4.0 + rho;
    const double step = 1.0 / lip;
    Vector w(data[0].features.size(), 0.0);
    for (long it = 0; it < 2000000; ++it) {
        Vector g(w.size(), 0.0);
        for (const auto& s : data) {
            const Vector delta = exact_maximizer(w, s, eps);
            axpy(1.0, grad_w_logistic(w, s, delta), g);
        }
        scale(g, 1.0 / data.size());
        axpy(rho, w, g);
        if (norm2(g) < tol) return w;
        axpy(-step, g, w);
    }
    FAIL("reference solver did not converge");
    return w;
}

}  // namespace

TEST_CASE("robust minimizer matches an independent reference solver") {
    const Dataset data = gaussian_data(1, 200, 4);
    const Vector w = solve_robust_minimizer(data, 0.0, 0.1, 1e-8);
    const Vector ref = reference_minimizer(data, 0.0, 0.1, 1e-9);
    CHECK(std::sqrt(sq_dist(w, ref)) < 1e-6);

    // adversarial budget on: same agreement
    const Vector wr = solve_robust_minimizer(data, 0.3, 0.1, 1e-8);
    const Vector refr = reference_minimizer(data, 0.3, 0.1, 1e-9);
    CHECK(std::sqrt(sq_dist(wr, refr)) < 1e-6);

    // the stopping rule holds at the returned point
    CHECK(norm2(robust_risk_gradient(wr, data, 0.3, 0.1)) < 1e-8);
}

TEST_CASE("symmetric two-point problem has a symmetric minimizer") {
    Dataset data;
    data.push_back({{1.0, 0.0}, 1});
    data.push_back({{-1.0, 0.0}, -1});
    const Vector w = solve_robust_minimizer(data, 0.2, 0.5, 1e-10);
    CHECK(w[0] > 0.0);
    CHECK(w[1] == 0.0);  // exactly zero by symmetry of every gradient step
}

TEST_CASE("solver reports failure when the budget is too small") {
    const Dataset data = gaussian_data(2, 100, 3);
    CHECK_THROWS_WITH_AS(solve_robust_minimizer(data, 0.3, 0.1, 1e-12, 3),
                         doctest::Contains("gradient norm"), std::runtime_error);
}

TEST_CASE("one full-batch step at the minimizer barely moves") {
    const Dataset data = gaussian_data(3, 200, 4);
    const double tol = 1e-8;
    const Vector wstar = solve_robust_minimizer(data, 0.3, 0.1, tol);
    const EmpiricalConstants c = estimate_constants(data, 0.3, 0.1, 400, 5);
    const double mu = 1.0 / c.lipschitz_L;
    const Vector g = robust_risk_gradient(wstar, data, 0.3, 0.1);
    CHECK(mu * norm2(g) < 10.0 * tol);
}

TEST_CASE("msd curve on constant traces") {
    std::vector<std::vector<RoundTrace>> per_seed(3);
    for (auto& traces : per_seed) {
        for (int i = 1; i <= 10; ++i) {
            RoundTrace t;
            t.iteration = i;
            t.msd_per_agent = {0.0, 0.0};
            traces.push_back(t);
        }
    }
    const ConvergenceReport zero = msd_curve(per_seed, 0.01, {1, 2, 3});
    CHECK(zero.steady_state_msd == 0.0);
    CHECK(zero.tail_window == 2);

    // constant offset v: msd is ||v||^2 everywhere
    const double v2 = 0.7 * 0.7 + 0.1 * 0.1;
    for (auto& traces : per_seed)
        for (auto& t : traces) t.msd_per_agent = {v2, v2};
    const ConvergenceReport offset = msd_curve(per_seed, 0.01, {1, 2, 3});
    CHECK(offset.steady_state_msd == doctest::Approx(v2).epsilon(1e-15));
    for (double m : offset.per_iteration_msd) CHECK(m == doctest::Approx(v2).epsilon(1e-15));

    CHECK_THROWS_AS(msd_curve({per_seed[0], per_seed[1]}, 0.01, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(msd_curve(per_seed, 0.01, {1, 2, 3}, 1.5), std::invalid_argument);
}

TEST_CASE("msd curve is invariant to agent relabeling") {
    Rng rng(5);
    std::vector<std::vector<RoundTrace>> per_seed(3);
    for (auto& traces : per_seed)
        for (int i = 1; i <= 8; ++i) {
            RoundTrace t;
            t.iteration = i;
            t.msd_per_agent = {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
            traces.push_back(t);
        }
    const ConvergenceReport base = msd_curve(per_seed, 0.01, {1, 2, 3});

    std::vector<std::vector<RoundTrace>> permuted = per_seed;
    for (auto& traces : permuted)
        for (auto& t : traces)
            std::rotate(t.msd_per_agent.begin(), t.msd_per_agent.begin() + 2, t.msd_per_agent.end());
    const ConvergenceReport rotated = msd_curve(permuted, 0.01, {1, 2, 3});
    CHECK(base.steady_state_msd == rotated.steady_state_msd);
    CHECK(base.per_iteration_msd == rotated.per_iteration_msd);
}

TEST_CASE("affine lipschitz bound holds empirically") {
    const Dataset data = gaussian_data(4, 300, 5);
    const LipschitzReport rep = verify_affine_lipschitz(data, 0.3, 1000, 7);
    CHECK(rep.violations == 0);
    CHECK(rep.max_ratio < 1.0);
    CHECK(rep.l_hat > 0.0);

    // degenerate pair: the bound reduces to the positive offset
    const double l = rep.l_hat;
    CHECK(0.0 <= 8.0 * l * l * 0.3 * 0.3);

    // zero budget degenerates to a plain Lipschitz check
    const LipschitzReport plain = verify_affine_lipschitz(data, 0.0, 1000, 7);
    CHECK(plain.violations == 0);
}

TEST_CASE("gradient noise suite") {
    const Dataset data = gaussian_data(5, 300, 4);
    const Vector wstar = solve_robust_minimizer(data, 0.3, 0.1, 1e-8);
    const NoiseReport rep = verify_gradient_noise(data, 0.3, wstar, 2000, 11, 4);
    CHECK(rep.frac_z_below_4 >= 0.99);
    CHECK(rep.beta2_hat >= -1e-9);
    CHECK(rep.sigma2_hat >= 0.0);
    CHECK_FALSE(rep.exact_zero);
    CHECK(rep.mean_abs_z_per_agent.size() == 4);

    // degenerate dataset: a single repeated sample has zero noise
    Dataset constant;
    for (int i = 0; i < 50; ++i) constant.push_back({{0.5, -0.2}, 1});
    const Vector w2 = solve_robust_minimizer(constant, 0.1, 0.5, 1e-8);
    const NoiseReport zero = verify_gradient_noise(constant, 0.1, w2, 500, 11, 2);
    CHECK(zero.exact_zero);
    CHECK(zero.frac_z_below_4 == 1.0);
}

TEST_CASE("robustness sweep structure and monotonicity") {
    const Dataset data = gaussian_data(6, 500, 4);
    Rng rng(3);
    Vector w_standard(4), w_robust(4);
    for (int j = 0; j < 4; ++j) {
        w_standard[j] = rng.normal();
        w_robust[j] = rng.normal();
    }
    const Vector grid = {0.0, 0.2, 0.4, 0.6, 0.8};
    AttackSpec df;
    const auto rows = robustness_sweep(w_standard, w_robust, data,
                                       {AttackKind::fgm, AttackKind::deepfool}, grid, df);
    REQUIRE(rows.size() == 2 * 2 * grid.size());

    // at zero budget every attack gives the clean error of its model
    const double clean_std = classification_error(w_standard, data);
    const double clean_rob = classification_error(w_robust, data);
    for (const auto& r : rows) {
        if (r.eps == 0.0) CHECK(r.error == (r.model == "robust" ? clean_rob : clean_std));
    }

    // fgm error is nondecreasing in the budget for a fixed linear model
    for (const std::string& model : {"nonrobust", "robust"}) {
        double prev = -1.0;
        for (const auto& r : rows) {
            if (r.model == model && r.attack == "fgm") {
                CHECK(r.error >= prev);
                prev = r.error;
            }
        }
    }

    CHECK_THROWS_AS(robustness_sweep(w_standard, w_robust, data, {AttackKind::fgm},
                                     Vector{0.4, 0.2}, df),
                    std::invalid_argument);
}

TEST_CASE("closed-form adversarial error equals the perturb-then-classify path") {
    const Dataset data = gaussian_data(7, 400, 5);
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
        Vector w(5);
        for (double& x : w) x = rng.normal();
        const double eps = rng.uniform(0.0, 1.0);
        AttackSpec spec;
        spec.kind = AttackKind::exact;
        spec.epsilon = eps;
        const std::function<Vector(const Vector&, const LabeledSample&)> perturb =
            [&spec](const Vector& wv, const LabeledSample& s) { return perturbation(spec, wv, s); };
        CHECK(adv_error_closed_form(w, data, eps) == classification_error(w, data, &perturb));
    }
}

TEST_CASE("msd trace from a converging run settles below its start") {
    const Dataset data = gaussian_data(8, 600, 5);
    const Graph g = generate_random_graph(10, 0.3, 19);
    const CombinationMatrix cm = build_combination_matrix(g, CombinationRule::metropolis);
    const Vector wstar = solve_robust_minimizer(data, 0.3, 0.1, 1e-8);

    TrainOptions opt;
    opt.mu = 0.01;
    opt.iters = 4000;
    opt.rho = 0.1;
    opt.log_stride = 40;
    opt.attack.kind = AttackKind::exact;
    opt.attack.epsilon = 0.3;

    std::vector<std::vector<RoundTrace>> per_seed;
    std::vector<uint64_t> seeds = {1, 2, 3};
    for (uint64_t s : seeds) {
        opt.seed = s;
        StreamSet streams = partition_streams(data, 10, PartitionMode::iid_shuffle, s);
        per_seed.push_back(run_training(opt, data, cm, streams, &wstar).traces);
    }
    const ConvergenceReport rep = msd_curve(per_seed, opt.mu, seeds);
    CHECK(rep.steady_state_msd < rep.per_iteration_msd.front());

    // tail stationarity: variance within the window is small next to its mean
    double mean = rep.steady_state_msd, var = 0.0;
    for (size_t i = rep.per_iteration_msd.size() - rep.tail_window;
         i < rep.per_iteration_msd.size(); ++i) {
        const double d = rep.per_iteration_msd[i] - mean;
        var += d * d;
    }
    var /= rep.tail_window;
    CHECK(var < 0.1 * mean);
}
