#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "advdiff/analysis.hpp"
#include "advdiff/data.hpp"
#include "advdiff/diffusion.hpp"
#include "advdiff/rng.hpp"
#include "advdiff/topology.hpp"

using namespace advdiff;

namespace {

CombinationMatrix identity_matrix(int k) {
    CombinationMatrix cm;
    cm.entries = Matrix(k, k);
    for (int i = 0; i < k; ++i) cm.entries(i, i) = 1.0;
    cm.perron.assign(k, 1.0 / k);
    cm.column_support.resize(k);
    for (int i = 0; i < k; ++i) cm.column_support[i] = {i};
    return cm;
}

Dataset gaussian_data(uint64_t seed, int n, int dim) {
    DatasetSpec spec;
    spec.dimension = dim;
    spec.num_samples = 2 * n;
    spec.train_fraction = 0.5;
    spec.seed = seed;
    return generate_synthetic(spec).first;
}

AttackSpec exact_attack(double eps) {
    AttackSpec a;
    a.kind = AttackKind::exact;
    a.epsilon = eps;
    return a;
}

}  // namespace

TEST_CASE("identity combination degenerates to independent steps") {
    const Dataset data = gaussian_data(1, 50, 3);
    const CombinationMatrix id = identity_matrix(4);
    NetworkState state = init_network_state(4, 3, 7, false);

    adversarial_atc_step(state, id, data, {{0}, {1}, {2}, {3}}, 0.05, 0.0, exact_attack(0.3));
    CHECK(state.weights == state.intermediates);
    CHECK(state.iteration == 1);
}

TEST_CASE("zero budget equals the standard diffusion step") {
    const Dataset data = gaussian_data(2, 50, 3);
    const Graph g = generate_random_graph(4, 0.8, 1);
    const CombinationMatrix cm = build_combination_matrix(g, CombinationRule::metropolis);

    NetworkState engine = init_network_state(4, 3, 7, false);
    const NetworkState start = engine;
    const std::vector<std::vector<int>> batches = {{0}, {1}, {2}, {3}};
    adversarial_atc_step(engine, cm, data, batches, 0.05, 0.1, exact_attack(0.0));

    // hand-rolled clean ATC round on the same snapshot
    const double mu = 0.05, rho = 0.1;
    Matrix phi(4, 3);
    for (int k = 0; k < 4; ++k) {
        const Vector w(start.weights.row(k).begin(), start.weights.row(k).end());
        const Vector grad = grad_w_logistic(w, data[batches[k][0]], Vector(3, 0.0));
        for (int j = 0; j < 3; ++j) phi(k, j) = w[j] - mu * (grad[j] + rho * w[j]);
    }
    for (int k = 0; k < 4; ++k) {
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int l = 0; l < 4; ++l) acc += cm.entries(l, k) * phi(l, j);
            CHECK(engine.weights(k, j) == doctest::Approx(acc).epsilon(1e-15));
        }
    }
}

TEST_CASE("two-agent round matches a hand evaluation") {
    // complete 2-graph: every column is (1/2, 1/2)
    const Graph g = generate_random_graph(2, 1.0, 0);
    const CombinationMatrix cm = build_combination_matrix(g, CombinationRule::metropolis);
    REQUIRE(cm.entries(0, 0) == doctest::Approx(0.5));

    Dataset data;
    data.push_back({{1.0, -0.5}, 1});
    data.push_back({{-0.3, 0.8}, -1});

    NetworkState state;
    state.weights = Matrix(2, 2);
    state.weights(0, 0) = 0.4;
    state.weights(0, 1) = -0.2;
    state.weights(1, 0) = -0.1;
    state.weights(1, 1) = 0.3;
    state.intermediates = Matrix(2, 2);

    const double mu = 0.1, rho = 0.05, eps = 0.25;
    NetworkState engine = state;
    adversarial_atc_step(engine, cm, data, {{0}, {1}}, mu, rho, exact_attack(eps));

    // independent evaluation of the three update equations
    Matrix phi(2, 2);
    for (int k = 0; k < 2; ++k) {
        const double w0 = state.weights(k, 0), w1 = state.weights(k, 1);
        const double nw = std::sqrt(w0 * w0 + w1 * w1);
        const double gamma = data[k].label;
        const double d0 = -eps * gamma * w0 / nw;
        const double d1 = -eps * gamma * w1 / nw;
        const double x0 = data[k].features[0] + d0;
        const double x1 = data[k].features[1] + d1;
        const double z = gamma * (x0 * w0 + x1 * w1);
        const double sig = 1.0 / (1.0 + std::exp(z));
        const double g0 = -gamma * sig * x0 + rho * w0;
        const double g1 = -gamma * sig * x1 + rho * w1;
        phi(k, 0) = w0 - mu * g0;
        phi(k, 1) = w1 - mu * g1;
    }
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
            CHECK(engine.weights(k, j) ==
                  doctest::Approx(0.5 * phi(0, j) + 0.5 * phi(1, j)).epsilon(1e-12));
}

TEST_CASE("round result is independent of agent evaluation order and threading") {
    const Dataset data = gaussian_data(3, 100, 4);
    const Graph g = generate_random_graph(8, 0.4, 2);
    const CombinationMatrix cm = build_combination_matrix(g, CombinationRule::metropolis);

    std::vector<std::vector<int>> batches(8);
    for (int k = 0; k < 8; ++k) batches[k] = {k, k + 8};

    NetworkState natural = init_network_state(8, 4, 11, false);
    NetworkState reversed = natural;
    NetworkState shuffled = natural;
    NetworkState threaded = natural;

    std::vector<int> rev(8), shuf(8);
    std::iota(rev.begin(), rev.end(), 0);
    std::reverse(rev.begin(), rev.end());
    std::iota(shuf.begin(), shuf.end(), 0);
    Rng rng(5);
    for (int i = 7; i > 0; --i) std::swap(shuf[i], shuf[rng.uniform_int(0, i)]);

    for (int round = 0; round < 5; ++round) {
        adversarial_atc_step(natural, cm, data, batches, 0.05, 0.1, exact_attack(0.3), false);
        adversarial_atc_step(reversed, cm, data, batches, 0.05, 0.1, exact_attack(0.3), false, rev);
        adversarial_atc_step(shuffled, cm, data, batches, 0.05, 0.1, exact_attack(0.3), false, shuf);
        adversarial_atc_step(threaded, cm, data, batches, 0.05, 0.1, exact_attack(0.3), true);
    }
    CHECK(natural.weights == reversed.weights);
    CHECK(natural.weights == shuffled.weights);
    CHECK(natural.weights == threaded.weights);
    CHECK(natural.intermediates == threaded.intermediates);
}

TEST_CASE("identity network with shared streams equals independent single-agent runs") {
    const Dataset data = gaussian_data(4, 200, 3);
    const int k_agents = 3;
    const long iters = 25;

    TrainOptions opt;
    opt.mu = 0.05;
    opt.iters = iters;
    opt.rho = 0.05;
    opt.seed = 99;
    opt.log_stride = 5;
    opt.attack = exact_attack(0.4);

    NetworkState multi_init = init_network_state(k_agents, 3, 21, false);
    StreamSet shared = partition_streams(data, k_agents, PartitionMode::iid_shuffle, 99, true);
    const TrainResult multi =
        run_training_from(multi_init, opt, data, identity_matrix(k_agents), shared);

    for (int k = 0; k < k_agents; ++k) {
        NetworkState single;
        single.weights = Matrix(1, 3);
        single.intermediates = Matrix(1, 3);
        for (int j = 0; j < 3; ++j) single.weights(0, j) = multi_init.weights(k, j);
        StreamSet solo = partition_streams(data, 1, PartitionMode::iid_shuffle, 99, true);
        const TrainResult one = run_training_from(single, opt, data, identity_matrix(1), solo);
        for (int j = 0; j < 3; ++j) CHECK(one.state.weights(0, j) == multi.state.weights(k, j));
    }
}

TEST_CASE("combined iterate stays inside the neighborhood convex hull") {
    const Dataset data = gaussian_data(5, 100, 4);
    const Graph g = generate_random_graph(10, 0.3, 4);
    const CombinationMatrix cm = build_combination_matrix(g, CombinationRule::uniform_averaging);

    NetworkState state = init_network_state(10, 4, 3, false);
    std::vector<std::vector<int>> batches(10);
    for (int round = 0; round < 10; ++round) {
        for (int k = 0; k < 10; ++k) batches[k] = {(round * 10 + k) % static_cast<int>(data.size())};
        adversarial_atc_step(state, cm, data, batches, 0.1, 0.0, exact_attack(0.3));
        for (int k = 0; k < 10; ++k) {
            for (int j = 0; j < 4; ++j) {
                double lo = 1e300, hi = -1e300;
                for (int l : cm.column_support[k]) {
                    lo = std::min(lo, state.intermediates(l, j));
                    hi = std::max(hi, state.intermediates(l, j));
                }
                CHECK(state.weights(k, j) >= lo - 1e-12);
                CHECK(state.weights(k, j) <= hi + 1e-12);
            }
        }
    }
}

TEST_CASE("training is deterministic and zero iterations is a no-op") {
    const Dataset data = gaussian_data(6, 100, 3);
    const Graph g = generate_random_graph(5, 0.6, 6);
    const CombinationMatrix cm = build_combination_matrix(g, CombinationRule::metropolis);

    TrainOptions opt;
    opt.mu = 0.05;
    opt.iters = 0;
    opt.seed = 13;
    opt.attack = exact_attack(0.2);

    StreamSet s0 = partition_streams(data, 5, PartitionMode::iid_shuffle, 13);
    const TrainResult empty = run_training(opt, data, cm, s0);
    CHECK(empty.traces.empty());
    CHECK(empty.state.weights == init_network_state(5, 3, 13, false).weights);

    opt.iters = 40;
    opt.log_stride = 10;
    StreamSet s1 = partition_streams(data, 5, PartitionMode::iid_shuffle, 13);
    StreamSet s2 = partition_streams(data, 5, PartitionMode::iid_shuffle, 13);
    const TrainResult a = run_training(opt, data, cm, s1);
    const TrainResult b = run_training(opt, data, cm, s2);
    CHECK(a.state.weights == b.state.weights);
    REQUIRE(a.traces.size() == 4);
    for (size_t i = 0; i < a.traces.size(); ++i) {
        CHECK(a.traces[i].per_agent_loss == b.traces[i].per_agent_loss);
        CHECK(a.traces[i].disagreement == b.traces[i].disagreement);
    }
}

TEST_CASE("identical initialization flag") {
    const NetworkState shared = init_network_state(4, 3, 5, true);
    for (int k = 1; k < 4; ++k)
        for (int j = 0; j < 3; ++j) CHECK(shared.weights(k, j) == shared.weights(0, j));
    const NetworkState separate = init_network_state(4, 3, 5, false);
    CHECK(sq_dist(separate.weights.row(0), separate.weights.row(1)) > 0.0);
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 3; ++j) {
            CHECK(separate.weights(k, j) >= -0.1);
            CHECK(separate.weights(k, j) <= 0.1);
        }
}

TEST_CASE("mini-batches average per-sample adversarial gradients") {
    const Dataset data = gaussian_data(7, 50, 3);
    const CombinationMatrix id = identity_matrix(1);
    NetworkState state = init_network_state(1, 3, 8, false);
    const Vector w(state.weights.row(0).begin(), state.weights.row(0).end());

    const double mu = 0.1, rho = 0.07, eps = 0.3;
    adversarial_atc_step(state, id, data, {{0, 1, 2}}, mu, rho, exact_attack(eps));

    Vector g(3, 0.0);
    for (int idx : {0, 1, 2}) {
        const Vector delta = exact_maximizer(w, data[idx], eps);
        axpy(1.0, grad_w_logistic(w, data[idx], delta), g);
    }
    scale(g, 1.0 / 3.0);
    axpy(rho, w, g);
    for (int j = 0; j < 3; ++j)
        CHECK(state.weights(0, j) == doctest::Approx(w[j] - mu * g[j]).epsilon(1e-15));
}

TEST_CASE("non-finite gradients abort with a diagnostic") {
    Dataset data;
    data.push_back({{std::numeric_limits<double>::infinity(), 1.0}, 1});
    const CombinationMatrix id = identity_matrix(1);
    NetworkState state = init_network_state(1, 2, 1, false);
    CHECK_THROWS_WITH_AS(
        adversarial_atc_step(state, id, data, {{0}}, 0.1, 0.0, exact_attack(0.1)),
        doctest::Contains("agent 0"), std::runtime_error);
}

TEST_CASE("gradient noise vanishes when the batch is the full oracle set") {
    const Dataset data = gaussian_data(8, 60, 3);
    const int n = static_cast<int>(data.size());
    NetworkState state = init_network_state(2, 3, 9, false);

    std::vector<int> full(n);
    std::iota(full.begin(), full.end(), 0);
    const RiskGradOracle oracle = [&](int, const Vector& w) {
        return robust_risk_gradient(w, data, 0.3, 0.0);
    };
    const Matrix noise =
        sample_gradient_noise(state, data, {full, full}, exact_attack(0.3), oracle);
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 3; ++j) CHECK(noise(k, j) == 0.0);
}

TEST_CASE("gradient noise is zero mean across draws") {
    const Dataset data = gaussian_data(9, 300, 3);
    NetworkState state = init_network_state(1, 3, 10, false);
    const RiskGradOracle oracle = [&](int, const Vector& w) {
        return robust_risk_gradient(w, data, 0.3, 0.0);
    };

    StreamSet streams = partition_streams(data, 1, PartitionMode::iid_shuffle, 77);
    const int draws = 10000;
    Vector mean(3, 0.0), m2(3, 0.0);
    for (int d = 0; d < draws; ++d) {
        const Matrix s =
            sample_gradient_noise(state, data, {streams.streams[0].next(1)}, exact_attack(0.3), oracle);
        for (int j = 0; j < 3; ++j) {
            const double delta = s(0, j) - mean[j];
            mean[j] += delta / (d + 1);
            m2[j] += delta * (s(0, j) - mean[j]);
        }
    }
    for (int j = 0; j < 3; ++j) {
        const double sd = std::sqrt(m2[j] / (draws - 1));
        CHECK(std::abs(mean[j]) < 3.0 * sd / std::sqrt(static_cast<double>(draws)) + 1e-12);
    }
}

TEST_CASE("network disagreement contracts from its initial level") {
    const Dataset data = gaussian_data(10, 500, 5);
    const Graph g = generate_random_graph(12, 0.3, 12);
    const CombinationMatrix cm = build_combination_matrix(g, CombinationRule::metropolis);

    TrainOptions opt;
    opt.mu = 0.01;
    opt.iters = 1500;
    opt.rho = 0.1;
    opt.seed = 31;
    opt.log_stride = 1;
    opt.attack = exact_attack(0.3);

    StreamSet streams = partition_streams(data, 12, PartitionMode::iid_shuffle, 31);
    const TrainResult r = run_training(opt, data, cm, streams);
    const double initial = r.traces.front().disagreement;
    double tail = 0.0;
    for (size_t i = r.traces.size() - 150; i < r.traces.size(); ++i)
        tail += r.traces[i].disagreement;
    tail /= 150;
    CHECK(tail < initial);
}
