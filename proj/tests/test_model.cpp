#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "advdiff/attacks.hpp"
#include "advdiff/data.hpp"
#include "advdiff/model.hpp"
#include "advdiff/rng.hpp"

using namespace advdiff;

namespace {

Vector randn(Rng& rng, size_t m, double scale = 1.0) {
    Vector v(m);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

LabeledSample random_sample(Rng& rng, size_t m) {
    LabeledSample s;
    s.label = rng.uniform() < 0.5 ? 1 : -1;
    s.features = randn(rng, m);
    return s;
}

Dataset small_gaussian(uint64_t seed, int n = 400, int dim = 5) {
    DatasetSpec spec;
    spec.dimension = dim;
    spec.num_samples = 2 * n;
    spec.train_fraction = 0.5;
    spec.seed = seed;
    return generate_synthetic(spec).first;
}

}  // namespace

TEST_CASE("logistic loss closed-form values") {
    // zero weights: ln 2 regardless of sample or perturbation
    LabeledSample s;
    s.features = {1.0, -2.0};
    s.label = -1;
    const Vector w0(2, 0.0);
    CHECK(logistic_loss(w0, s) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    // large positive margin: softplus tail, no overflow
    Vector w = {50.0, 0.0};
    LabeledSample sp;
    sp.features = {1.0, 0.0};
    sp.label = 1;
    const double tail = logistic_loss(w, sp);
    CHECK(tail > 0.0);
    CHECK(tail < 1e-20);

    // direct scalar evaluation oracle
    w = {1.0, 0.0};
    const Vector delta = {-0.5, 0.0};
    CHECK(logistic_loss(w, sp, delta) ==
          doctest::Approx(std::log(1.0 + std::exp(-0.5))).epsilon(1e-15));

    // extreme margins stay finite
    Vector wbig = {1000.0, 0.0};
    LabeledSample sneg = sp;
    sneg.label = -1;
    CHECK(std::isfinite(logistic_loss(wbig, sneg)));
}

TEST_CASE("gradient closed forms") {
    Rng rng(7);
    LabeledSample s = random_sample(rng, 4);
    const Vector w0(4, 0.0);
    const Vector g = grad_w_logistic(w0, s);
    for (size_t j = 0; j < 4; ++j)
        CHECK(g[j] == doctest::Approx(-s.label * s.features[j] / 2.0).epsilon(1e-15));

    CHECK(norm2(grad_x_logistic(w0, s)) == 0.0);

    // x + delta = 0 zeroes the w-gradient
    Vector delta(4);
    for (size_t j = 0; j < 4; ++j) delta[j] = -s.features[j];
    Vector w = randn(rng, 4);
    CHECK(norm2(grad_w_logistic(w, s, delta)) == 0.0);

    // x-gradient is always collinear with w
    for (int t = 0; t < 50; ++t) {
        w = randn(rng, 4);
        s = random_sample(rng, 4);
        const Vector gx = grad_x_logistic(w, s);
        for (size_t i = 0; i < 4; ++i)
            for (size_t j = i + 1; j < 4; ++j)
                CHECK(std::abs(gx[i] * w[j] - gx[j] * w[i]) < 1e-12);
    }

    Vector wrong(3, 0.0);
    CHECK_THROWS_AS(grad_w_logistic(wrong, s), std::invalid_argument);
}

TEST_CASE("gradients match central finite differences") {
    Rng rng(11);
    const double h = 1e-6;
    double worst_w = 0.0, worst_x = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const size_t m = static_cast<size_t>(rng.uniform_int(2, 8));
        LabeledSample s = random_sample(rng, m);
        Vector w = randn(rng, m, rng.uniform(0.5, 1.5));
        const double eps = rng.uniform(0.0, 1.0);
        Vector delta = clip_to_ball(randn(rng, m), eps * rng.uniform());

        const Vector gw = grad_w_logistic(w, s, delta);
        const Vector gx = grad_x_logistic(w, s, delta);
        Vector fdw(m), fdx(m);
        for (size_t j = 0; j < m; ++j) {
            Vector wp = w, wm = w;
            wp[j] += h;
            wm[j] -= h;
            fdw[j] = (logistic_loss(wp, s, delta) - logistic_loss(wm, s, delta)) / (2 * h);
            LabeledSample spd = s, smd = s;
            spd.features[j] += h;
            smd.features[j] -= h;
            fdx[j] = (logistic_loss(w, spd, delta) - logistic_loss(w, smd, delta)) / (2 * h);
        }
        worst_w = std::max(worst_w, std::sqrt(sq_dist(gw, fdw)) / std::max(norm2(gw), 1e-12));
        worst_x = std::max(worst_x, std::sqrt(sq_dist(gx, fdx)) / std::max(norm2(gx), 1e-12));
    }
    CHECK(worst_w < 1e-6);
    CHECK(worst_x < 1e-6);
}

TEST_CASE("robust risk basics") {
    Rng rng(13);
    const Dataset data = small_gaussian(1);

    // zero budget reduces to the plain empirical risk
    Vector w = randn(rng, 5);
    double plain = 0.0;
    for (const auto& s : data) plain += logistic_loss(w, s);
    plain /= data.size();
    CHECK(robust_empirical_risk(w, data, 0.0) == doctest::Approx(plain).epsilon(1e-15));

    // w = 0: ln 2 for any budget
    const Vector w0(5, 0.0);
    CHECK(robust_empirical_risk(w0, data, 3.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    // single-sample closed form
    Dataset one;
    one.push_back({{1.0, 0.0}, 1});
    const Vector wu = {1.0, 0.0};
    CHECK(robust_empirical_risk(wu, one, 0.5) ==
          doctest::Approx(std::log(1.0 + std::exp(-0.5))).epsilon(1e-14));

    // maximizing over a larger ball can only increase the risk
    for (int t = 0; t < 100; ++t) {
        w = randn(rng, 5, rng.uniform(0.2, 2.0));
        CHECK(robust_empirical_risk(w, data, 0.7) >= robust_empirical_risk(w, data, 0.0) - 1e-12);
    }

    CHECK_THROWS_AS(robust_empirical_risk(w, Dataset{}, 0.1), std::invalid_argument);
}

TEST_CASE("robust risk is convex along random segments") {
    Rng rng(17);
    const Dataset data = small_gaussian(2, 100);
    for (int t = 0; t < 1000; ++t) {
        const Vector w1 = randn(rng, 5, rng.uniform(0.2, 2.0));
        const Vector w2 = randn(rng, 5, rng.uniform(0.2, 2.0));
        const double lam = rng.uniform();
        Vector mix(5);
        for (size_t j = 0; j < 5; ++j) mix[j] = lam * w1[j] + (1 - lam) * w2[j];
        const double lhs = robust_empirical_risk(mix, data, 0.4);
        const double rhs = lam * robust_empirical_risk(w1, data, 0.4) +
                           (1 - lam) * robust_empirical_risk(w2, data, 0.4);
        CHECK(lhs <= rhs + 1e-10);
    }
}

TEST_CASE("loss is nonincreasing in the margin") {
    Rng rng(19);
    for (int t = 0; t < 200; ++t) {
        LabeledSample s = random_sample(rng, 3);
        const Vector w = randn(rng, 3);
        const double m1 = margin(w, s);
        LabeledSample s2 = s;
        for (size_t j = 0; j < 3; ++j) s2.features[j] += 0.3 * s.label * w[j];
        const double m2 = margin(w, s2);
        CHECK(m2 >= m1);
        CHECK(logistic_loss(w, s2) <= logistic_loss(w, s) + 1e-15);
        CHECK(logistic_loss(w, s) >= 0.0);
    }
}

TEST_CASE("classify sign rule") {
    const Vector w = {1.0, -1.0};
    CHECK(classify(w, {3.2, 0.0}) == 1);
    CHECK(classify(w, {0.0, 0.1}) == -1);
    CHECK(classify(w, {0.0, 0.0}) == 1);  // tie goes to +1
}

TEST_CASE("estimated constants") {
    const Dataset data = small_gaussian(3);

    // pure logistic: no strong convexity
    const EmpiricalConstants plain = estimate_constants(data, 0.3, 0.0, 400, 5);
    CHECK(std::abs(plain.strong_convexity_nu) < 1e-9);
    CHECK(plain.lipschitz_L > 0.0);

    // l2 regularizer shifts curvature by exactly rho
    const EmpiricalConstants reg = estimate_constants(data, 0.3, 0.1, 400, 5);
    CHECK(reg.strong_convexity_nu >= 0.1 - 1e-6);

    // identical distributions at the two internal shards: small, seed-stable
    const EmpiricalConstants c1 = estimate_constants(data, 0.3, 0.0, 400, 11);
    const EmpiricalConstants c2 = estimate_constants(data, 0.3, 0.0, 400, 29);
    CHECK(c1.disagreement_C2 < 0.05);
    CHECK(c2.disagreement_C2 < 0.05);
    CHECK(c1.disagreement_C2 > 0.0);

    CHECK_THROWS_AS(estimate_constants(data, 0.3, 0.0, 50, 5), std::invalid_argument);
}

TEST_CASE("dataset validation") {
    Dataset bad;
    bad.push_back({{1.0, std::nan("")}, 1});
    CHECK_THROWS_AS(validate_dataset(bad), std::invalid_argument);
    bad.clear();
    bad.push_back({{1.0, 2.0}, 0});
    CHECK_THROWS_AS(validate_dataset(bad), std::invalid_argument);
}
