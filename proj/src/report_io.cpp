#include "advdiff/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace advdiff {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

uint64_t fnv1a64(const std::string& bytes, uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t fnv1a64_file(const std::string& path, uint64_t h) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("hash: cannot open " + path);
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) throw std::logic_error("csv: row width mismatch");
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    return out;
}

std::string render_manifest(const std::string& command,
                            const std::map<std::string, std::string>& config,
                            const std::string& input_hash, uint64_t seed) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    j["config"] = config;
    j["input_hash"] = input_hash;
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

std::map<std::string, std::string> read_manifest_config(const std::string& path,
                                                        std::string* command) {
    const nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    if (command) *command = j.at("command").get<std::string>();
    return j.at("config").get<std::map<std::string, std::string>>();
}

std::string render_weights_json(const Matrix& weights, const Vector& consensus) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["num_agents"] = weights.rows();
    j["dimension"] = weights.cols();
    std::vector<std::vector<double>> rows(weights.rows());
    for (int k = 0; k < weights.rows(); ++k)
        rows[k].assign(weights.row(k).begin(), weights.row(k).end());
    j["weights"] = rows;
    j["consensus"] = consensus;
    return j.dump(2) + "\n";
}

void read_weights_json(const std::string& path, Matrix* weights, Vector* consensus) {
    const nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    const int k = j.at("num_agents").get<int>();
    const int m = j.at("dimension").get<int>();
    if (weights) {
        *weights = Matrix(k, m);
        const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
        for (int i = 0; i < k; ++i)
            for (int jj = 0; jj < m; ++jj) (*weights)(i, jj) = rows[i][jj];
    }
    if (consensus) *consensus = j.at("consensus").get<Vector>();
}

std::string render_convergence_json(const ConvergenceReport& report) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["mu"] = report.mu;
    j["steady_state_msd"] = report.steady_state_msd;
    j["tail_window"] = report.tail_window;
    j["seeds"] = report.seeds;
    j["iterations"] = report.iterations;
    j["per_iteration_msd"] = report.per_iteration_msd;
    return j.dump(2) + "\n";
}

std::string render_sweep_csv(const std::vector<SweepRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    cells.reserve(rows.size());
    for (const auto& r : rows)
        cells.push_back({r.model, r.attack, format_double(r.eps), format_double(r.error)});
    return render_csv({"model", "attack", "eps", "error"}, cells);
}

}  // namespace advdiff
