#include "advdiff/analysis.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "advdiff/rng.hpp"

namespace advdiff {

namespace {

double regularized_risk(const Vector& w, const Dataset& data, double eps, double rho) {
    double r = robust_empirical_risk(w, data, eps);
    if (rho != 0.0) {
        double nw2 = 0.0;
        for (double x : w) nw2 += x * x;
        r += 0.5 * rho * nw2;
    }
    return r;
}

}  // namespace

Vector solve_robust_minimizer(const Dataset& data, double eps, double rho, double tol,
                              long max_iters) {
    if (data.empty()) throw std::invalid_argument("solve_robust_minimizer: empty dataset");
    if (tol <= 0.0) throw std::invalid_argument("solve_robust_minimizer: tol must be > 0");

    Vector w(data[0].features.size(), 0.0);
    double risk = regularized_risk(w, data, eps, rho);
    double grad_norm = 0.0;

    for (long it = 0; it < max_iters; ++it) {
        const Vector g = robust_risk_gradient(w, data, eps, rho);
        grad_norm = norm2(g);
        if (grad_norm < tol) return w;

        // Armijo backtracking
        double step = 1.0;
        const double slope = grad_norm * grad_norm;
        Vector cand(w.size());
        for (int half = 0; half < 60; ++half) {
            for (size_t j = 0; j < w.size(); ++j) cand[j] = w[j] - step * g[j];
            const double cand_risk = regularized_risk(cand, data, eps, rho);
            if (cand_risk <= risk - 1e-4 * step * slope) {
                w = cand;
                risk = cand_risk;
                break;
            }
            step *= 0.5;
            if (half == 59) throw std::runtime_error("solve_robust_minimizer: line search stalled");
        }
    }
    std::ostringstream msg;
    msg << "solve_robust_minimizer: max_iters exhausted, last gradient norm " << grad_norm;
    throw std::runtime_error(msg.str());
}

ConvergenceReport msd_curve(const std::vector<std::vector<RoundTrace>>& traces_per_seed, double mu,
                            const std::vector<uint64_t>& seeds, double tail_fraction) {
    if (traces_per_seed.size() < 3)
        throw std::invalid_argument("msd_curve: need at least 3 seeds");
    if (tail_fraction <= 0.0 || tail_fraction > 1.0)
        throw std::invalid_argument("msd_curve: tail_fraction must be in (0, 1]");
    const size_t rounds = traces_per_seed[0].size();
    if (rounds == 0) throw std::invalid_argument("msd_curve: empty traces");
    for (const auto& traces : traces_per_seed) {
        if (traces.size() != rounds) throw std::invalid_argument("msd_curve: misaligned traces");
        for (const auto& t : traces)
            if (t.msd_per_agent.empty())
                throw std::invalid_argument("msd_curve: traces lack deviation data");
    }

    ConvergenceReport report;
    report.mu = mu;
    report.seeds = seeds;
    report.per_iteration_msd.resize(rounds, 0.0);
    report.iterations.resize(rounds);
    for (size_t i = 0; i < rounds; ++i) {
        report.iterations[i] = traces_per_seed[0][i].iteration;
        double acc = 0.0;
        long count = 0;
        for (const auto& traces : traces_per_seed) {
            for (double v : traces[i].msd_per_agent) {
                acc += v;
                ++count;
            }
        }
        report.per_iteration_msd[i] = acc / count;
    }

    report.tail_window = std::max<long>(1, std::lround(tail_fraction * rounds));
    double tail = 0.0;
    for (size_t i = rounds - report.tail_window; i < rounds; ++i)
        tail += report.per_iteration_msd[i];
    report.steady_state_msd = tail / report.tail_window;
    return report;
}

LipschitzReport verify_affine_lipschitz(const Dataset& data, double eps, int pairs, uint64_t seed,
                                        double rho) {
    if (pairs < 100) throw std::invalid_argument("verify_affine_lipschitz: pairs must be >= 100");
    const size_t m = data[0].features.size();

    const EmpiricalConstants constants =
        estimate_constants(data, eps, rho, std::max(200, pairs), seed + 1);
    const double l_hat = constants.lipschitz_L * 1.05;

    LipschitzReport report;
    report.l_hat = l_hat;

    Rng rng(derive_seed(seed, kTagProbe, 7));
    Vector w1(m), w2(m);
    for (int p = 0; p < pairs; ++p) {
        const double s1 = rng.uniform(0.5, 2.0);
        const double s2 = rng.uniform(0.5, 2.0);
        for (size_t j = 0; j < m; ++j) {
            w1[j] = s1 * rng.normal();
            w2[j] = s2 * rng.normal();
        }
        const Vector g1 = robust_risk_gradient(w1, data, eps, rho);
        const Vector g2 = robust_risk_gradient(w2, data, eps, rho);
        const double lhs = sq_dist(g1, g2);
        const double rhs = 2.0 * l_hat * l_hat * sq_dist(w1, w2) + 8.0 * l_hat * l_hat * eps * eps;
        if (rhs > 0.0) report.max_ratio = std::max(report.max_ratio, lhs / rhs);
        if (lhs > rhs) ++report.violations;
    }
    return report;
}

NoiseReport verify_gradient_noise(const Dataset& data, double eps, const Vector& wstar, int draws,
                                  uint64_t seed, int num_agents, int batch_size) {
    if (draws < 100) throw std::invalid_argument("verify_gradient_noise: draws must be >= 100");
    if (num_agents < 1) throw std::invalid_argument("verify_gradient_noise: need agents");
    const size_t m = wstar.size();

    Rng dir_rng(derive_seed(seed, kTagProbe, 11));
    Vector unit(m);
    for (double& x : unit) x = dir_rng.normal();
    const double un = norm2(unit);
    if (un > 1e-12) scale(unit, 1.0 / un);

    const std::vector<double> offsets = {0.0, 0.5, 1.0, 2.0, 4.0};

    NoiseReport report;
    report.mean_abs_z_per_agent.assign(num_agents, 0.0);
    long coords_total = 0;
    long coords_ok = 0;
    bool any_nonzero = false;

    std::vector<double> fit_x, fit_y;

    const RiskGradOracle oracle = [&](int, const Vector& w) {
        return robust_risk_gradient(w, data, eps, 0.0);
    };
    AttackSpec attack;
    attack.kind = AttackKind::exact;
    attack.epsilon = eps;

    std::vector<long> agent_coord_count(num_agents, 0);
    for (size_t pt = 0; pt < offsets.size(); ++pt) {
        Vector w = wstar;
        axpy(offsets[pt], unit, w);

        NetworkState state;
        state.weights = Matrix(num_agents, static_cast<int>(m));
        state.intermediates = Matrix(num_agents, static_cast<int>(m));
        for (int k = 0; k < num_agents; ++k)
            for (size_t j = 0; j < m; ++j) state.weights(k, static_cast<int>(j)) = w[j];

        StreamSet streams = partition_streams(data, num_agents, PartitionMode::iid_shuffle,
                                              derive_seed(seed, kTagData, pt + 1));

        // per-agent, per-coordinate running moments plus squared-norm mean
        Matrix mean(num_agents, static_cast<int>(m));
        Matrix m2(num_agents, static_cast<int>(m));
        double sqnorm_mean = 0.0;

        std::vector<std::vector<int>> batches(num_agents);
        for (int d = 0; d < draws; ++d) {
            for (int k = 0; k < num_agents; ++k) batches[k] = streams.streams[k].next(batch_size);
            const Matrix noise = sample_gradient_noise(state, data, batches, attack, oracle);
            for (int k = 0; k < num_agents; ++k) {
                double sq = 0.0;
                for (size_t j = 0; j < m; ++j) {
                    const double x = noise(k, static_cast<int>(j));
                    sq += x * x;
                    const double delta = x - mean(k, static_cast<int>(j));
                    mean(k, static_cast<int>(j)) += delta / (d + 1);
                    m2(k, static_cast<int>(j)) += delta * (x - mean(k, static_cast<int>(j)));
                }
                sqnorm_mean += sq / (num_agents * static_cast<double>(draws));
            }
        }

        for (int k = 0; k < num_agents; ++k) {
            for (size_t j = 0; j < m; ++j) {
                const double var = m2(k, static_cast<int>(j)) / std::max(1, draws - 1);
                const double sd = std::sqrt(var);
                ++coords_total;
                ++agent_coord_count[k];
                if (sd == 0.0) {
                    // exact-zero noise; |z| treated as 0
                    ++coords_ok;
                    continue;
                }
                any_nonzero = true;
                const double z = mean(k, static_cast<int>(j)) / (sd / std::sqrt(draws));
                report.mean_abs_z_per_agent[k] += std::abs(z);
                if (std::abs(z) < 4.0) ++coords_ok;
            }
        }
        fit_x.push_back(offsets[pt] * offsets[pt]);
        fit_y.push_back(sqnorm_mean);
    }

    for (int k = 0; k < num_agents; ++k)
        report.mean_abs_z_per_agent[k] /= std::max<long>(1, agent_coord_count[k]);
    report.frac_z_below_4 = coords_total > 0 ? static_cast<double>(coords_ok) / coords_total : 1.0;
    report.exact_zero = !any_nonzero;

    // affine least squares of the conditional second moment vs squared deviation
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double n = static_cast<double>(fit_x.size());
    for (size_t i = 0; i < fit_x.size(); ++i) {
        sx += fit_x[i];
        sy += fit_y[i];
        sxx += fit_x[i] * fit_x[i];
        sxy += fit_x[i] * fit_y[i];
        syy += fit_y[i] * fit_y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) > 1e-12) {
        report.beta2_hat = (n * sxy - sx * sy) / denom;
        report.sigma2_hat = (sy - report.beta2_hat * sx) / n;
        const double ss_tot = syy - sy * sy / n;
        double ss_res = 0.0;
        for (size_t i = 0; i < fit_x.size(); ++i) {
            const double pred = report.beta2_hat * fit_x[i] + report.sigma2_hat;
            ss_res += (fit_y[i] - pred) * (fit_y[i] - pred);
        }
        report.fit_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    }
    return report;
}

std::vector<SweepRow> robustness_sweep(const Vector& w_standard, const Vector& w_robust,
                                       const Dataset& test, const std::vector<AttackKind>& kinds,
                                       const Vector& eps_grid, const AttackSpec& deepfool_params) {
    if (test.empty()) throw std::invalid_argument("robustness_sweep: empty test set");
    for (size_t i = 1; i < eps_grid.size(); ++i)
        if (eps_grid[i] < eps_grid[i - 1] || eps_grid[i - 1] < 0.0)
            throw std::invalid_argument("robustness_sweep: eps grid must be nonnegative ascending");

    std::vector<SweepRow> rows;
    const std::pair<std::string, const Vector*> models[] = {{"nonrobust", &w_standard},
                                                            {"robust", &w_robust}};
    for (const auto& [name, w] : models) {
        for (AttackKind kind : kinds) {
            for (double eps : eps_grid) {
                AttackSpec spec = deepfool_params;
                spec.kind = kind;
                spec.epsilon = eps;
                const std::function<Vector(const Vector&, const LabeledSample&)> perturb =
                    [&spec](const Vector& wv, const LabeledSample& s) {
                        return perturbation(spec, wv, s);
                    };
                SweepRow row;
                row.model = name;
                row.attack = attack_kind_name(kind);
                row.eps = eps;
                row.error = classification_error(*w, test, &perturb);
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

double adv_error_closed_form(const Vector& w, const Dataset& data, double eps) {
    if (data.empty()) throw std::invalid_argument("adv_error_closed_form: empty dataset");
    const double nw = norm2(w);
    long wrong = 0;
    for (const auto& s : data) {
        double z = 0.0;
        for (size_t j = 0; j < w.size(); ++j) z += w[j] * s.features[j];
        const double attacked = z - eps * s.label * nw;
        const int pred = attacked >= 0.0 ? 1 : -1;
        if (pred != s.label) ++wrong;
    }
    return static_cast<double>(wrong) / data.size();
}

}  // namespace advdiff
