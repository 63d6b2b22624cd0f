#include "advdiff/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "advdiff/analysis.hpp"
#include "advdiff/attacks.hpp"
#include "advdiff/data.hpp"
#include "advdiff/diffusion.hpp"
#include "advdiff/model.hpp"
#include "advdiff/report_io.hpp"
#include "advdiff/rng.hpp"
#include "advdiff/topology.hpp"

namespace advdiff {

namespace {

std::string fmt(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

Vector random_gaussian_vector(Rng& rng, size_t m, double scale) {
    Vector v(m);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

CheckResult check_gradient_fd(bool grad_in_w, int tuples, uint64_t seed, bool corrupt) {
    const double h = 1e-6;
    double worst = 0.0;
    Rng rng(derive_seed(seed, kTagProbe, grad_in_w ? 21 : 22));
    for (int t = 0; t < tuples; ++t) {
        const size_t m = static_cast<size_t>(rng.uniform_int(2, 8));
        LabeledSample s;
        s.label = rng.uniform() < 0.5 ? 1 : -1;
        s.features = random_gaussian_vector(rng, m, rng.uniform(0.5, 1.5));
        Vector w = random_gaussian_vector(rng, m, rng.uniform(0.5, 1.5));
        const double eps = rng.uniform(0.0, 1.0);
        Vector delta = random_gaussian_vector(rng, m, 1.0);
        delta = clip_to_ball(std::move(delta), eps * rng.uniform());

        Vector analytic = grad_in_w ? grad_w_logistic(w, s, delta) : grad_x_logistic(w, s, delta);
        if (corrupt && !analytic.empty()) analytic[0] *= 1.001;

        Vector fd(m, 0.0);
        for (size_t j = 0; j < m; ++j) {
            if (grad_in_w) {
                Vector wp = w, wm = w;
                wp[j] += h;
                wm[j] -= h;
                fd[j] = (logistic_loss(wp, s, delta) - logistic_loss(wm, s, delta)) / (2 * h);
            } else {
                LabeledSample sp = s, sm = s;
                sp.features[j] += h;
                sm.features[j] -= h;
                fd[j] = (logistic_loss(w, sp, delta) - logistic_loss(w, sm, delta)) / (2 * h);
            }
        }
        const double rel = std::sqrt(sq_dist(analytic, fd)) / std::max(norm2(analytic), 1e-12);
        worst = std::max(worst, rel);
    }
    CheckResult r;
    r.name = grad_in_w ? "gradient-w-finite-difference" : "gradient-x-finite-difference";
    r.passed = worst < 1e-6;
    r.detail = "max relative error " + fmt(worst) + " over " + std::to_string(tuples) + " tuples";
    return r;
}

CheckResult check_maximizer_bruteforce(int tuples, int samples, uint64_t seed) {
    Rng rng(derive_seed(seed, kTagProbe, 23));
    long violations = 0;
    for (int t = 0; t < tuples; ++t) {
        const size_t m = static_cast<size_t>(rng.uniform_int(2, 10));
        LabeledSample s;
        s.label = rng.uniform() < 0.5 ? 1 : -1;
        s.features = random_gaussian_vector(rng, m, 1.0);
        Vector w = t % 50 == 0 ? Vector(m, 0.0) : random_gaussian_vector(rng, m, rng.uniform(0.2, 2.0));
        const double eps = rng.uniform(1e-3, 2.0);

        const Vector star = exact_maximizer(w, s, eps);
        const double best = logistic_loss(w, s, star);
        for (int q = 0; q < samples; ++q) {
            Vector cand = random_gaussian_vector(rng, m, 1.0);
            const double n = norm2(cand);
            if (n < 1e-12) continue;
            const double radius = q % 2 == 0 ? eps : eps * std::pow(rng.uniform(), 1.0 / m);
            scale(cand, radius / n);
            if (logistic_loss(w, s, cand) > best) ++violations;
        }
    }
    CheckResult r;
    r.name = "maximizer-bruteforce";
    r.passed = violations == 0;
    r.detail = std::to_string(violations) + " violations over " + std::to_string(tuples) + "x" +
               std::to_string(samples) + " candidates";
    return r;
}

CheckResult check_fgm_consistency(int tuples, uint64_t seed) {
    Rng rng(derive_seed(seed, kTagProbe, 24));
    double worst = 0.0;
    for (int t = 0; t < tuples; ++t) {
        const size_t m = static_cast<size_t>(rng.uniform_int(2, 10));
        LabeledSample s;
        s.label = rng.uniform() < 0.5 ? 1 : -1;
        s.features = random_gaussian_vector(rng, m, 1.0);
        Vector w;
        do {
            w = random_gaussian_vector(rng, m, rng.uniform(0.2, 2.0));
        } while (norm2(w) < 1e-6);
        const double eps = rng.uniform(0.0, 2.0);
        const Vector a = exact_maximizer(w, s, eps);
        const Vector b = fgm(w, s, eps);
        for (size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
    }
    CheckResult r;
    r.name = "fgm-exact-consistency";
    r.passed = worst <= 1e-12;
    r.detail = "max coordinate gap " + fmt(worst);
    return r;
}

CheckResult check_stochastic_matrices(bool quick, uint64_t seed) {
    std::ostringstream why;
    bool ok = true;
    const std::vector<int> sizes = quick ? std::vector<int>{2, 5, 13, 20}
                                         : std::vector<int>{1, 2, 3, 5, 8, 13, 20, 35, 50};
    int checked = 0;
    for (int k : sizes) {
        for (CombinationRule rule : {CombinationRule::metropolis, CombinationRule::uniform_averaging}) {
            const double p = k <= 5 ? 0.8 : 0.25;
            Graph g = generate_random_graph(k, p, seed + k);
            CombinationMatrix cm = build_combination_matrix(g, rule);
            ++checked;
            const auto adj = g.neighbor_lists();

            for (int col = 0; col < k && ok; ++col) {
                double sum = 0.0;
                for (int row = 0; row < k; ++row) {
                    const double a = cm.entries(row, col);
                    if (a < 0.0) { ok = false; why << "negative entry K=" << k; break; }
                    const bool adjacent = row == col ||
                        std::find(adj[col].begin(), adj[col].end(), row) != adj[col].end();
                    if (a > 0.0 && !adjacent) { ok = false; why << "support off graph K=" << k; break; }
                    sum += a;
                }
                if (ok && std::abs(sum - 1.0) > 1e-12) { ok = false; why << "column sum K=" << k; }
                if (ok && cm.entries(col, col) <= 0.0) { ok = false; why << "no self weight K=" << k; }
            }
            if (!ok) break;

            const Vector api = matvec(cm.entries, cm.perron);
            double resid = 0.0, psum = 0.0, pmin = 1.0;
            for (int i = 0; i < k; ++i) {
                resid = std::max(resid, std::abs(api[i] - cm.perron[i]));
                psum += cm.perron[i];
                pmin = std::min(pmin, cm.perron[i]);
            }
            if (resid >= 1e-10) { ok = false; why << "perron residual " << resid << " K=" << k; }
            else if (std::abs(psum - 1.0) > 1e-12) { ok = false; why << "perron sum K=" << k; }
            else if (pmin <= 0.0) { ok = false; why << "perron positivity K=" << k; }

            if (ok && k >= 2) {
                const double mix = estimate_mixing_modulus(cm.entries, cm.perron);
                if (!(mix < 1.0)) { ok = false; why << "mixing modulus " << mix << " K=" << k; }
            }
            if (!ok) break;
        }
        if (!ok) break;
    }
    CheckResult r;
    r.name = "stochastic-matrix-suite";
    r.passed = ok;
    r.detail = ok ? std::to_string(checked) + " matrices pass column/support/perron/mixing checks"
                  : why.str();
    return r;
}

Dataset verify_dataset(uint64_t seed) {
    DatasetSpec spec;
    spec.source = DataSource::synthetic_gaussian;
    spec.dimension = 5;
    spec.num_samples = 800;
    spec.train_fraction = 0.5;
    spec.separation = 1.0;
    spec.noise_scale = 1.0;
    spec.seed = seed;
    return generate_synthetic(spec).first;
}

CheckResult check_lemma1(bool quick, uint64_t seed) {
    const Dataset data = verify_dataset(seed);
    const int pairs = quick ? 100 : 1000;
    const LipschitzReport rep = verify_affine_lipschitz(data, 0.3, pairs, seed, 0.0);
    CheckResult r;
    r.name = "lemma1-affine-lipschitz";
    r.passed = rep.violations == 0;
    r.detail = std::to_string(rep.violations) + " violations, max ratio " + fmt(rep.max_ratio) +
               ", L_hat " + fmt(rep.l_hat);
    return r;
}

CheckResult check_lemma2(bool quick, uint64_t seed) {
    const Dataset data = verify_dataset(seed + 1);
    const Vector wstar = solve_robust_minimizer(data, 0.3, 0.1, 1e-8, 100000);
    const int draws = quick ? 1000 : 10000;
    const NoiseReport rep = verify_gradient_noise(data, 0.3, wstar, draws, seed, 5, 1);
    CheckResult r;
    r.name = "lemma2-gradient-noise";
    r.passed = rep.frac_z_below_4 >= 0.99 && rep.beta2_hat >= -1e-9 && rep.sigma2_hat >= -1e-9;
    r.detail = "z<4 on " + fmt(100.0 * rep.frac_z_below_4) + "% of coordinates, beta2 " +
               fmt(rep.beta2_hat) + ", sigma2 " + fmt(rep.sigma2_hat);
    return r;
}

CheckResult check_determinism(uint64_t seed) {
    const Dataset data = verify_dataset(seed + 2);
    const Graph g = generate_random_graph(5, 0.6, seed);
    const CombinationMatrix cm = build_combination_matrix(g, CombinationRule::metropolis);

    TrainOptions opt;
    opt.mu = 0.05;
    opt.iters = 200;
    opt.rho = 0.1;
    opt.seed = seed;
    opt.log_stride = 20;
    opt.attack.kind = AttackKind::exact;
    opt.attack.epsilon = 0.3;

    auto run = [&]() {
        StreamSet streams = partition_streams(data, 5, PartitionMode::iid_shuffle, opt.seed);
        return run_training(opt, data, cm, streams);
    };
    const TrainResult a = run();
    const TrainResult b = run();

    bool ok = a.state.weights == b.state.weights && a.traces.size() == b.traces.size();
    if (ok) {
        for (size_t i = 0; i < a.traces.size() && ok; ++i) {
            ok = a.traces[i].per_agent_loss == b.traces[i].per_agent_loss &&
                 a.traces[i].disagreement == b.traces[i].disagreement;
        }
    }
    Vector consensus(a.state.weights.cols(), 0.0);
    for (int k = 0; k < a.state.weights.rows(); ++k)
        axpy(cm.perron[k], a.state.weights.row(k), consensus);
    ok = ok && render_weights_json(a.state.weights, consensus) ==
                   render_weights_json(b.state.weights, consensus);

    CheckResult r;
    r.name = "determinism-repeat-run";
    r.passed = ok;
    r.detail = ok ? "two identically-seeded runs are bitwise identical" : "repeat run diverged";
    return r;
}

}  // namespace

std::vector<CheckResult> run_verify_suite(const VerifyOptions& opt) {
    std::vector<CheckResult> results;
    const int grad_tuples = opt.quick ? 200 : 1000;
    results.push_back(check_gradient_fd(true, grad_tuples, opt.seed, opt.inject_gradient_bug));
    results.push_back(check_gradient_fd(false, grad_tuples, opt.seed, false));
    results.push_back(check_maximizer_bruteforce(opt.quick ? 300 : 2000, opt.quick ? 50 : 200, opt.seed));
    results.push_back(check_fgm_consistency(opt.quick ? 300 : 2000, opt.seed));
    results.push_back(check_stochastic_matrices(opt.quick, opt.seed));
    results.push_back(check_lemma1(opt.quick, opt.seed));
    results.push_back(check_lemma2(opt.quick, opt.seed));
    results.push_back(check_determinism(opt.seed));
    return results;
}

}  // namespace advdiff
