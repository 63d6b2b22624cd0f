#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "advdiff/analysis.hpp"
#include "advdiff/linalg.hpp"

namespace advdiff {

inline constexpr int kSchemaVersion = 1;

// Shortest round-trip formatting; used for every numeric artifact field so
// reruns are byte-identical.
std::string format_double(double v);

// FNV-1a 64-bit over bytes / file contents, hex-encoded.
uint64_t fnv1a64(const std::string& bytes, uint64_t h = 0xcbf29ce484222325ULL);
uint64_t fnv1a64_file(const std::string& path, uint64_t h = 0xcbf29ce484222325ULL);
std::string hash_hex(uint64_t h);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// CSV with a fixed header; every cell already formatted.
std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);

// Run manifest: schema version, command name, ordered config map, input
// content hash, seed. Serialized with sorted keys.
std::string render_manifest(const std::string& command,
                            const std::map<std::string, std::string>& config,
                            const std::string& input_hash, uint64_t seed);

std::map<std::string, std::string> read_manifest_config(const std::string& path,
                                                        std::string* command = nullptr);

std::string render_weights_json(const Matrix& weights, const Vector& consensus);
void read_weights_json(const std::string& path, Matrix* weights, Vector* consensus);

std::string render_convergence_json(const ConvergenceReport& report);
std::string render_sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace advdiff
