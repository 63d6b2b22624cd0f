#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advdiff/analysis.hpp"
#include "advdiff/attacks.hpp"
#include "advdiff/data.hpp"
#include "advdiff/diffusion.hpp"
#include "advdiff/model.hpp"
#include "advdiff/report_io.hpp"
#include "advdiff/rng.hpp"
#include "advdiff/topology.hpp"
#include "advdiff/verify.hpp"

namespace fs = std::filesystem;
using namespace advdiff;

namespace {

struct CliConfig {
    // data
    std::string data = "synthetic";
    int dim = 10;
    int samples = 4000;
    double train_frac = 0.5;
    double separation = 1.0;
    double noise = 1.0;
    double major_sep = 1.2;
    double major_noise = 0.3;
    double minor_frac = 0.10;
    double minor_sep = 0.5;
    double minor_noise = 0.05;
    double background_noise = 0.05;
    std::string normalization = "none";
    std::string mnist_images, mnist_labels, mnist_test_images, mnist_test_labels;
    std::string csv_file;
    bool csv_header = false;

    // graph
    std::string graph_file;
    int graph_k = 20;
    double graph_p = 0.2;
    uint64_t graph_seed = 7;
    std::string combination = "metropolis";

    // training
    double mu = 0.01;
    long iters = 1000;
    double eps = 0.0;
    double rho = 0.0;
    int batch = 1;
    uint64_t seed = 0;
    long log_stride = 1;
    std::string partition = "iid_shuffle";
    bool identical_init = false;
    bool parallel = false;
    bool msd = false;
    double eval_eps = -1.0;

    // attack
    std::string attack = "exact";
    double overshoot = 0.02;
    int df_max_iters = 50;

    std::map<std::string, std::string> to_map() const;
    void from_map(const std::map<std::string, std::string>& m);
    void validate() const;

    double effective_eval_eps() const { return eval_eps >= 0.0 ? eval_eps : eps; }
};

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::map<std::string, std::string> CliConfig::to_map() const {
    std::map<std::string, std::string> m;
    m["data"] = data;
    m["dim"] = std::to_string(dim);
    m["samples"] = std::to_string(samples);
    m["train_frac"] = format_double(train_frac);
    m["separation"] = format_double(separation);
    m["noise"] = format_double(noise);
    m["major_sep"] = format_double(major_sep);
    m["major_noise"] = format_double(major_noise);
    m["minor_frac"] = format_double(minor_frac);
    m["minor_sep"] = format_double(minor_sep);
    m["minor_noise"] = format_double(minor_noise);
    m["background_noise"] = format_double(background_noise);
    m["normalization"] = normalization;
    m["mnist_images"] = mnist_images;
    m["mnist_labels"] = mnist_labels;
    m["mnist_test_images"] = mnist_test_images;
    m["mnist_test_labels"] = mnist_test_labels;
    m["csv_file"] = csv_file;
    m["csv_header"] = bool_str(csv_header);
    m["graph_file"] = graph_file;
    m["graph_k"] = std::to_string(graph_k);
    m["graph_p"] = format_double(graph_p);
    m["graph_seed"] = std::to_string(graph_seed);
    m["combination"] = combination;
    m["mu"] = format_double(mu);
    m["iters"] = std::to_string(iters);
    m["eps"] = format_double(eps);
    m["rho"] = format_double(rho);
    m["batch"] = std::to_string(batch);
    m["seed"] = std::to_string(seed);
    m["log_stride"] = std::to_string(log_stride);
    m["partition"] = partition;
    m["identical_init"] = bool_str(identical_init);
    m["parallel"] = bool_str(parallel);
    m["msd"] = bool_str(msd);
    m["eval_eps"] = format_double(eval_eps);
    m["attack"] = attack;
    m["overshoot"] = format_double(overshoot);
    m["df_max_iters"] = std::to_string(df_max_iters);
    return m;
}

void CliConfig::from_map(const std::map<std::string, std::string>& m) {
    auto str = [&](const char* k, std::string& v) { if (m.count(k)) v = m.at(k); };
    auto dbl = [&](const char* k, double& v) { if (m.count(k)) v = std::stod(m.at(k)); };
    auto i32 = [&](const char* k, int& v) { if (m.count(k)) v = std::stoi(m.at(k)); };
    auto i64 = [&](const char* k, long& v) { if (m.count(k)) v = std::stol(m.at(k)); };
    auto u64 = [&](const char* k, uint64_t& v) { if (m.count(k)) v = std::stoull(m.at(k)); };
    auto bol = [&](const char* k, bool& v) { if (m.count(k)) v = m.at(k) == "true"; };
    str("data", data); i32("dim", dim); i32("samples", samples);
    dbl("train_frac", train_frac); dbl("separation", separation); dbl("noise", noise);
    dbl("major_sep", major_sep); dbl("major_noise", major_noise); dbl("minor_frac", minor_frac);
    dbl("minor_sep", minor_sep); dbl("minor_noise", minor_noise);
    dbl("background_noise", background_noise);
    str("normalization", normalization);
    str("mnist_images", mnist_images); str("mnist_labels", mnist_labels);
    str("mnist_test_images", mnist_test_images); str("mnist_test_labels", mnist_test_labels);
    str("csv_file", csv_file); bol("csv_header", csv_header);
    str("graph_file", graph_file); i32("graph_k", graph_k); dbl("graph_p", graph_p);
    u64("graph_seed", graph_seed); str("combination", combination);
    dbl("mu", mu); i64("iters", iters); dbl("eps", eps); dbl("rho", rho); i32("batch", batch);
    u64("seed", seed); i64("log_stride", log_stride); str("partition", partition);
    bol("identical_init", identical_init); bol("parallel", parallel); bol("msd", msd);
    dbl("eval_eps", eval_eps);
    str("attack", attack); dbl("overshoot", overshoot); i32("df_max_iters", df_max_iters);
}

void config_error(const std::string& field, const std::string& message) {
    throw CLI::ValidationError("config field '" + field + "': " + message);
}

void CliConfig::validate() const {
    if (mu <= 0.0) config_error("mu", "must be > 0");
    if (iters < 0) config_error("iters", "must be >= 0");
    if (eps < 0.0) config_error("eps", "must be >= 0");
    if (rho < 0.0) config_error("rho", "must be >= 0");
    if (batch < 1) config_error("batch", "must be >= 1");
    if (log_stride < 1) config_error("log_stride", "must be >= 1");
    if (dim < 1) config_error("dim", "must be >= 1");
    if (samples < 2) config_error("samples", "must be >= 2");
    if (train_frac <= 0.0 || train_frac >= 1.0) config_error("train_frac", "must be in (0, 1)");
    if (graph_k < 1) config_error("graph_k", "must be >= 1");
    if (graph_file.empty() && (graph_p <= 0.0 || graph_p > 1.0))
        config_error("graph_p", "must be in (0, 1]");
    if (overshoot < 0.0) config_error("overshoot", "must be >= 0");
    if (df_max_iters < 1) config_error("df_max_iters", "must be >= 1");
    parse_data_source(data);
    parse_attack_kind(attack);
    parse_combination_rule(combination);
    parse_partition_mode(partition);
    parse_normalization(normalization);
    const DataSource src = parse_data_source(data);
    if (src == DataSource::mnist_idx && (mnist_images.empty() || mnist_labels.empty()))
        config_error("mnist_images", "mnist source needs --mnist-images and --mnist-labels");
    if (src == DataSource::csv && csv_file.empty())
        config_error("csv_file", "csv source needs --csv-file");
}

// Hash over the canonical config rendering plus any referenced input files.
std::string input_hash(const CliConfig& cfg) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [k, v] : cfg.to_map()) h = fnv1a64(k + "=" + v + "\n", h);
    for (const std::string& p : {cfg.graph_file, cfg.csv_file, cfg.mnist_images, cfg.mnist_labels,
                                 cfg.mnist_test_images, cfg.mnist_test_labels})
        if (!p.empty()) h = fnv1a64_file(p, h);
    return hash_hex(h);
}

std::pair<Dataset, Dataset> build_dataset(const CliConfig& cfg) {
    const DataSource src = parse_data_source(cfg.data);
    if (src == DataSource::synthetic_gaussian || src == DataSource::synthetic_mixture) {
        DatasetSpec spec;
        spec.source = src;
        spec.dimension = cfg.dim;
        spec.num_samples = cfg.samples;
        spec.train_fraction = cfg.train_frac;
        spec.seed = cfg.seed;
        spec.normalization = parse_normalization(cfg.normalization);
        spec.separation = cfg.separation;
        spec.noise_scale = cfg.noise;
        spec.major_separation = cfg.major_sep;
        spec.major_noise = cfg.major_noise;
        spec.minor_fraction = cfg.minor_frac;
        spec.minor_separation = cfg.minor_sep;
        spec.minor_noise = cfg.minor_noise;
        spec.background_noise = cfg.background_noise;
        return generate_synthetic(spec);
    }
    if (src == DataSource::mnist_idx) {
        const Normalization norm = parse_normalization(cfg.normalization) == Normalization::none
                                       ? Normalization::scale_0_1
                                       : parse_normalization(cfg.normalization);
        Dataset train = load_mnist_idx(cfg.mnist_images, cfg.mnist_labels, norm);
        Dataset test;
        if (!cfg.mnist_test_images.empty())
            test = load_mnist_idx(cfg.mnist_test_images, cfg.mnist_test_labels, norm);
        else {
            const size_t n_train = static_cast<size_t>(train.size() * cfg.train_frac);
            test.assign(train.begin() + n_train, train.end());
            train.resize(n_train);
        }
        return {std::move(train), std::move(test)};
    }
    Dataset all = load_csv(cfg.csv_file, cfg.csv_header);
    normalize(all, parse_normalization(cfg.normalization));
    const size_t n_train = static_cast<size_t>(all.size() * cfg.train_frac);
    Dataset train(all.begin(), all.begin() + n_train);
    Dataset test(all.begin() + n_train, all.end());
    return {std::move(train), std::move(test)};
}

CombinationMatrix build_matrix(const CliConfig& cfg) {
    const Graph g = cfg.graph_file.empty()
                        ? generate_random_graph(cfg.graph_k, cfg.graph_p, cfg.graph_seed)
                        : read_graph_file(cfg.graph_file);
    return build_combination_matrix(g, parse_combination_rule(cfg.combination));
}

AttackSpec build_attack(const CliConfig& cfg, double eps) {
    AttackSpec spec;
    spec.kind = parse_attack_kind(cfg.attack);
    spec.epsilon = eps;
    spec.deepfool_overshoot = cfg.overshoot;
    spec.deepfool_max_iters = cfg.df_max_iters;
    spec.validate();
    return spec;
}

Vector consensus_weights(const NetworkState& state, const CombinationMatrix& cm) {
    Vector w(state.weights.cols(), 0.0);
    for (int k = 0; k < state.weights.rows(); ++k) axpy(cm.perron[k], state.weights.row(k), w);
    return w;
}

int cmd_train(const CliConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);

    const CombinationMatrix cm = build_matrix(cfg);
    auto [train, test] = build_dataset(cfg);
    if (static_cast<int>(train.size()) < 1 || test.empty())
        throw std::runtime_error("train: dataset split left an empty side");

    Vector wstar;
    if (cfg.msd) wstar = solve_robust_minimizer(train, cfg.eps, cfg.rho);

    TrainOptions opt;
    opt.mu = cfg.mu;
    opt.iters = cfg.iters;
    opt.rho = cfg.rho;
    opt.batch_size = cfg.batch;
    opt.seed = cfg.seed;
    opt.log_stride = cfg.log_stride;
    opt.identical_init = cfg.identical_init;
    opt.parallel = cfg.parallel;
    opt.attack = build_attack(cfg, cfg.eps);

    const double eval_eps = cfg.effective_eval_eps();
    std::vector<std::vector<std::string>> rows;
    const StepObserver observer = [&](const NetworkState& state, RoundTrace& trace) {
        double err = 0.0;
        for (int k = 0; k < state.weights.rows(); ++k) {
            const Vector wk(state.weights.row(k).begin(), state.weights.row(k).end());
            err += adv_error_closed_form(wk, test, eval_eps);
        }
        err /= state.weights.rows();
        double loss = 0.0;
        for (double v : trace.per_agent_loss) loss += v;
        loss /= trace.per_agent_loss.size();

        std::vector<std::string> row = {std::to_string(trace.iteration), format_double(err),
                                        format_double(loss), format_double(trace.disagreement)};
        if (cfg.msd) {
            double msd = 0.0;
            for (double v : trace.msd_per_agent) msd += v;
            row.push_back(format_double(msd / trace.msd_per_agent.size()));
        }
        rows.push_back(std::move(row));
    };

    StreamSet streams = partition_streams(train, cm.num_agents(),
                                          parse_partition_mode(cfg.partition), cfg.seed);
    const TrainResult result =
        run_training(opt, train, cm, streams, cfg.msd ? &wstar : nullptr, observer);

    std::vector<std::string> header = {"iter", "avg_adv_error", "avg_loss", "disagreement"};
    if (cfg.msd) header.push_back("msd");
    write_text_file(out_dir + "/train_trace.csv", render_csv(header, rows));
    write_text_file(out_dir + "/manifest.json",
                    render_manifest("train", cfg.to_map(), input_hash(cfg), cfg.seed));
    write_text_file(out_dir + "/weights.json",
                    render_weights_json(result.state.weights, consensus_weights(result.state, cm)));
    std::cout << "train: " << rows.size() << " logged rounds, artifacts in " << out_dir << "\n";
    return 0;
}

Vector parse_grid(const std::string& csv) {
    Vector out;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty()) out.push_back(std::stod(cell));
    }
    if (out.empty()) throw CLI::ValidationError("empty grid: " + csv);
    return out;
}

int cmd_sweep(const CliConfig& cfg, const std::string& out_dir, const std::string& eps_grid_str,
              const std::string& mu_grid_str, const std::string& seeds_str, double eps_train) {
    cfg.validate();
    fs::create_directories(out_dir);
    const CombinationMatrix cm = build_matrix(cfg);
    auto [train, test] = build_dataset(cfg);

    if (!eps_grid_str.empty()) {
        const Vector grid = parse_grid(eps_grid_str);
        const double train_eps = eps_train >= 0.0 ? eps_train : cfg.eps;

        auto train_model = [&](double eps) {
            TrainOptions opt;
            opt.mu = cfg.mu;
            opt.iters = cfg.iters;
            opt.rho = cfg.rho;
            opt.batch_size = cfg.batch;
            opt.seed = cfg.seed;
            opt.log_stride = std::max<long>(1, cfg.iters);
            opt.identical_init = cfg.identical_init;
            opt.parallel = cfg.parallel;
            opt.attack = build_attack(cfg, eps);
            StreamSet streams = partition_streams(train, cm.num_agents(),
                                                  parse_partition_mode(cfg.partition), cfg.seed);
            const TrainResult r = run_training(opt, train, cm, streams);
            return consensus_weights(r.state, cm);
        };
        const Vector w_standard = train_model(0.0);
        const Vector w_robust = train_model(train_eps);

        AttackSpec df;
        df.deepfool_overshoot = cfg.overshoot;
        df.deepfool_max_iters = cfg.df_max_iters;
        const auto rows =
            robustness_sweep(w_standard, w_robust, test, {AttackKind::fgm, AttackKind::deepfool},
                             grid, df);
        write_text_file(out_dir + "/sweep_robustness.csv", render_sweep_csv(rows));
        write_text_file(out_dir + "/manifest.json",
                        render_manifest("sweep", cfg.to_map(), input_hash(cfg), cfg.seed));
        std::cout << "sweep: wrote " << rows.size() << " robustness rows to " << out_dir << "\n";
        return 0;
    }

    if (!mu_grid_str.empty()) {
        const Vector mu_grid = parse_grid(mu_grid_str);
        std::vector<uint64_t> seeds;
        for (double s : parse_grid(seeds_str.empty() ? "1,2,3,4,5" : seeds_str))
            seeds.push_back(static_cast<uint64_t>(s));

        const Vector wstar = solve_robust_minimizer(train, cfg.eps, cfg.rho);
        std::vector<ConvergenceReport> reports;
        for (double mu : mu_grid) {
            std::vector<std::vector<RoundTrace>> traces(seeds.size());
            #pragma omp parallel for schedule(dynamic)
            for (size_t i = 0; i < seeds.size(); ++i) {
                TrainOptions opt;
                opt.mu = mu;
                opt.iters = cfg.iters;
                opt.rho = cfg.rho;
                opt.batch_size = cfg.batch;
                opt.seed = seeds[i];
                opt.log_stride = cfg.log_stride;
                opt.attack = build_attack(cfg, cfg.eps);
                StreamSet streams = partition_streams(train, cm.num_agents(),
                                                      parse_partition_mode(cfg.partition), seeds[i]);
                traces[i] = run_training(opt, train, cm, streams, &wstar).traces;
            }
            reports.push_back(msd_curve(traces, mu, seeds));
        }
        std::string summary = "mu,steady_state_msd\n";
        for (size_t i = 0; i < reports.size(); ++i) {
            write_text_file(out_dir + "/convergence_mu_" + format_double(mu_grid[i]) + ".json",
                            render_convergence_json(reports[i]));
            summary += format_double(mu_grid[i]) + "," + format_double(reports[i].steady_state_msd) + "\n";
        }
        write_text_file(out_dir + "/msd_summary.csv", summary);
        write_text_file(out_dir + "/manifest.json",
                        render_manifest("sweep", cfg.to_map(), input_hash(cfg), cfg.seed));
        std::cout << "sweep: wrote " << reports.size() << " convergence reports to " << out_dir << "\n";
        return 0;
    }

    throw CLI::ValidationError("sweep needs --eps-grid or --mu-grid");
}

int cmd_eval(const CliConfig& cfg, const std::string& weights_path, const std::string& eps_grid_str,
             const std::string& out_dir) {
    cfg.validate();
    Vector w;
    read_weights_json(weights_path, nullptr, &w);
    auto [train, test] = build_dataset(cfg);
    (void)train;

    const Vector grid = eps_grid_str.empty() ? Vector{cfg.effective_eval_eps()}
                                             : parse_grid(eps_grid_str);
    AttackSpec spec = build_attack(cfg, 0.0);
    std::vector<SweepRow> rows;
    for (double eps : grid) {
        spec.epsilon = eps;
        const std::function<Vector(const Vector&, const LabeledSample&)> perturb =
            [&spec](const Vector& wv, const LabeledSample& s) { return perturbation(spec, wv, s); };
        SweepRow row;
        row.model = "loaded";
        row.attack = cfg.attack;
        row.eps = eps;
        row.error = classification_error(w, test, &perturb);
        rows.push_back(row);
        std::cout << row.model << "," << row.attack << "," << format_double(row.eps) << ","
                  << format_double(row.error) << "\n";
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text_file(out_dir + "/eval.csv", render_sweep_csv(rows));
        write_text_file(out_dir + "/manifest.json",
                        render_manifest("eval", cfg.to_map(), input_hash(cfg), cfg.seed));
    }
    return 0;
}

int cmd_verify(bool quick, bool inject_bug) {
    VerifyOptions opt;
    opt.quick = quick;
    opt.inject_gradient_bug = inject_bug;
    const auto results = run_verify_suite(opt);
    int failures = 0;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS" : "FAIL") << "  " << r.name << "  (" << r.detail << ")\n";
        if (!r.passed) ++failures;
    }
    std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed")
              << "\n";
    return failures == 0 ? 0 : 1;
}

void register_config_options(CLI::App* cmd, CliConfig& cfg) {
    cmd->add_option("--data", cfg.data, "synthetic|mixture|mnist|csv");
    cmd->add_option("--dim", cfg.dim, "feature dimension for synthetic sources");
    cmd->add_option("--samples", cfg.samples, "total synthetic sample count");
    cmd->add_option("--train-frac", cfg.train_frac, "train split fraction");
    cmd->add_option("--separation", cfg.separation, "gaussian class separation");
    cmd->add_option("--noise", cfg.noise, "gaussian noise scale");
    cmd->add_option("--major-sep", cfg.major_sep, "mixture majority separation");
    cmd->add_option("--major-noise", cfg.major_noise, "mixture majority noise");
    cmd->add_option("--minor-frac", cfg.minor_frac, "mixture minority fraction");
    cmd->add_option("--minor-sep", cfg.minor_sep, "mixture minority separation");
    cmd->add_option("--minor-noise", cfg.minor_noise, "mixture minority noise");
    cmd->add_option("--background-noise", cfg.background_noise, "mixture background noise");
    cmd->add_option("--normalization", cfg.normalization, "none|scale_0_1|unit_variance");
    cmd->add_option("--mnist-images", cfg.mnist_images, "IDX image file");
    cmd->add_option("--mnist-labels", cfg.mnist_labels, "IDX label file");
    cmd->add_option("--mnist-test-images", cfg.mnist_test_images, "IDX test image file");
    cmd->add_option("--mnist-test-labels", cfg.mnist_test_labels, "IDX test label file");
    cmd->add_option("--csv-file", cfg.csv_file, "CSV dataset path");
    cmd->add_flag("--csv-header", cfg.csv_header, "CSV file has a header row");

    cmd->add_option("--graph-file", cfg.graph_file, "edge-list graph file");
    cmd->add_option("--graph-k", cfg.graph_k, "random graph size");
    cmd->add_option("--graph-p", cfg.graph_p, "random graph edge probability");
    cmd->add_option("--graph-seed", cfg.graph_seed, "random graph seed");
    cmd->add_option("--combination", cfg.combination, "metropolis|uniform");

    cmd->add_option("--mu", cfg.mu, "step size");
    cmd->add_option("--iters", cfg.iters, "training iterations");
    cmd->add_option("--eps", cfg.eps, "perturbation budget");
    cmd->add_option("--rho", cfg.rho, "l2 regularizer");
    cmd->add_option("--batch", cfg.batch, "mini-batch size");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--log-stride", cfg.log_stride, "trace logging stride");
    cmd->add_option("--partition", cfg.partition, "iid_shuffle|round_robin");
    cmd->add_flag("--identical-init", cfg.identical_init, "same initialization on every agent");
    cmd->add_flag("--parallel", cfg.parallel, "OpenMP-parallel agent loop");
    cmd->add_flag("--msd", cfg.msd, "solve the reference minimizer and log deviation");
    cmd->add_option("--eval-eps", cfg.eval_eps, "budget for the logged test error (default: eps)");

    cmd->add_option("--attack", cfg.attack, "exact|fgm|deepfool");
    cmd->add_option("--overshoot", cfg.overshoot, "deepfool overshoot");
    cmd->add_option("--max-iters", cfg.df_max_iters, "deepfool iteration cap");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial diffusion training over networks"};
    app.require_subcommand(1);

    CliConfig cfg;
    std::string out_dir, from_manifest, eps_grid, mu_grid, seeds_str, weights_path;
    double eps_train = -1.0;
    bool quick = false, inject_bug = false;

    CLI::App* train = app.add_subcommand("train", "run adversarial diffusion training");
    register_config_options(train, cfg);
    train->add_option("--out", out_dir, "output directory")->required();
    train->add_option("--from-manifest", from_manifest, "replay the config of a previous run");
    train->set_config("--config", "", "key = value config file");

    CLI::App* sweep = app.add_subcommand("sweep", "robustness or step-size sweeps");
    register_config_options(sweep, cfg);
    sweep->add_option("--out", out_dir, "output directory")->required();
    sweep->add_option("--eps-grid", eps_grid, "comma list of test budgets");
    sweep->add_option("--eps-train", eps_train, "robust training budget (default: --eps)");
    sweep->add_option("--mu-grid", mu_grid, "comma list of step sizes");
    sweep->add_option("--seeds", seeds_str, "comma list of seeds for the mu sweep");
    sweep->set_config("--config", "", "key = value config file");

    CLI::App* eval = app.add_subcommand("eval", "evaluate stored weights under an attack");
    register_config_options(eval, cfg);
    eval->add_option("--weights", weights_path, "weights.json from a training run")->required();
    eval->add_option("--eps-grid", eps_grid, "comma list of test budgets");
    eval->add_option("--out", out_dir, "optional output directory");
    eval->set_config("--config", "", "key = value config file");

    CLI::App* verify = app.add_subcommand("verify", "run the numerical check suites");
    verify->add_flag("--quick", quick, "reduced probe counts");
    verify->add_flag("--inject-gradient-bug", inject_bug,
                     "negative control: corrupt a gradient and expect failure");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            if (!from_manifest.empty()) cfg.from_map(read_manifest_config(from_manifest));
            return cmd_train(cfg, out_dir);
        }
        if (*sweep) return cmd_sweep(cfg, out_dir, eps_grid, mu_grid, seeds_str, eps_train);
        if (*eval) return cmd_eval(cfg, weights_path, eps_grid, out_dir);
        if (*verify) return cmd_verify(quick, inject_bug);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
