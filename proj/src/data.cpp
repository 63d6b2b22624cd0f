#include "advdiff/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "advdiff/rng.hpp"

namespace advdiff {

void DatasetSpec::validate() const {
    if (dimension < 1) throw std::invalid_argument("dataset: dimension must be >= 1");
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw std::invalid_argument("dataset: train_fraction must be in (0, 1)");
    if (num_samples < 2) throw std::invalid_argument("dataset: num_samples must be >= 2");
    if (source == DataSource::synthetic_mixture) {
        if (minor_fraction < 0.0 || minor_fraction >= 1.0)
            throw std::invalid_argument("dataset: minor_fraction must be in [0, 1)");
        if (dimension < 2)
            throw std::invalid_argument("dataset: mixture source needs dimension >= 2");
    }
}

namespace {

LabeledSample draw_gaussian_sample(const DatasetSpec& spec, Rng& rng) {
    LabeledSample s;
    s.label = rng.uniform() < 0.5 ? 1 : -1;
    const double mean = spec.separation / std::sqrt(spec.dimension);
    s.features.resize(spec.dimension);
    for (double& x : s.features) x = s.label * mean + spec.noise_scale * rng.normal();
    return s;
}

LabeledSample draw_mixture_sample(const DatasetSpec& spec, Rng& rng) {
    LabeledSample s;
    s.label = rng.uniform() < 0.5 ? 1 : -1;
    const bool minor = rng.uniform() < spec.minor_fraction;
    s.features.resize(spec.dimension);
    for (double& x : s.features) x = spec.background_noise * rng.normal();
    if (minor) {
        s.features[1] += s.label * (spec.minor_separation + spec.minor_noise * rng.normal());
    } else {
        s.features[0] += s.label * (spec.major_separation + spec.major_noise * rng.normal());
    }
    return s;
}

}  // namespace

std::pair<Dataset, Dataset> generate_synthetic(const DatasetSpec& spec) {
    spec.validate();
    if (spec.source != DataSource::synthetic_gaussian && spec.source != DataSource::synthetic_mixture)
        throw std::invalid_argument("generate_synthetic: spec source is not synthetic");
    Rng rng(derive_seed(spec.seed, kTagData, 0));
    const int n_train = static_cast<int>(std::lround(spec.num_samples * spec.train_fraction));
    Dataset train, test;
    train.reserve(n_train);
    test.reserve(spec.num_samples - n_train);
    for (int i = 0; i < spec.num_samples; ++i) {
        LabeledSample s = spec.source == DataSource::synthetic_gaussian
                              ? draw_gaussian_sample(spec, rng)
                              : draw_mixture_sample(spec, rng);
        (i < n_train ? train : test).push_back(std::move(s));
    }
    if (spec.normalization != Normalization::none) {
        normalize(train, spec.normalization);
        normalize(test, spec.normalization);
    }
    return {std::move(train), std::move(test)};
}

namespace {

uint32_t read_be32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error("idx: truncated file " + path);
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

void write_be32(std::ofstream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       Normalization norm) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("idx: cannot open " + labels_path);

    if (read_be32(img, images_path) != 0x00000803u)
        throw std::runtime_error("idx: bad image magic in " + images_path);
    if (read_be32(lab, labels_path) != 0x00000801u)
        throw std::runtime_error("idx: bad label magic in " + labels_path);

    const uint32_t n_img = read_be32(img, images_path);
    const uint32_t rows = read_be32(img, images_path);
    const uint32_t cols = read_be32(img, images_path);
    const uint32_t n_lab = read_be32(lab, labels_path);
    if (n_img != n_lab)
        throw std::runtime_error("idx: image/label count mismatch between " + images_path + " and " +
                                 labels_path);

    const size_t pixels = static_cast<size_t>(rows) * cols;
    std::vector<unsigned char> buf(pixels);
    Dataset out;
    for (uint32_t i = 0; i < n_img; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), pixels))
            throw std::runtime_error("idx: truncated file " + images_path);
        char lraw;
        if (!lab.read(&lraw, 1)) throw std::runtime_error("idx: truncated file " + labels_path);
        const unsigned char l = static_cast<unsigned char>(lraw);
        if (l > 1) continue;  // keep digits 0 and 1 only
        LabeledSample s;
        s.label = l == 1 ? 1 : -1;
        s.features.resize(pixels);
        for (size_t p = 0; p < pixels; ++p) {
            s.features[p] = norm == Normalization::scale_0_1 ? buf[p] / 255.0
                                                             : static_cast<double>(buf[p]);
        }
        out.push_back(std::move(s));
    }
    if (norm == Normalization::unit_variance) normalize(out, norm);
    return out;
}

void write_idx_images(const std::string& path, const std::vector<std::vector<uint8_t>>& images,
                      int rows, int cols) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("idx: cannot open " + path);
    write_be32(out, 0x00000803u);
    write_be32(out, static_cast<uint32_t>(images.size()));
    write_be32(out, static_cast<uint32_t>(rows));
    write_be32(out, static_cast<uint32_t>(cols));
    for (const auto& im : images) {
        if (im.size() != static_cast<size_t>(rows) * cols)
            throw std::invalid_argument("idx: image size mismatch");
        out.write(reinterpret_cast<const char*>(im.data()), im.size());
    }
}

void write_idx_labels(const std::string& path, const std::vector<uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("idx: cannot open " + path);
    write_be32(out, 0x00000801u);
    write_be32(out, static_cast<uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), labels.size());
}

Dataset load_csv(const std::string& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open " + path);
    Dataset out;
    std::string line;
    size_t lineno = 0;
    size_t dim = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && has_header) continue;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error("csv: bad number at " + path + ":" + std::to_string(lineno));
            }
        }
        if (vals.size() < 2)
            throw std::runtime_error("csv: need label plus features at " + path + ":" +
                                     std::to_string(lineno));
        LabeledSample s;
        const double l = vals[0];
        if (l == 1.0) s.label = 1;
        else if (l == -1.0 || l == 0.0) s.label = -1;
        else
            throw std::runtime_error("csv: label must be -1, 0 or 1 at " + path + ":" +
                                     std::to_string(lineno));
        s.features.assign(vals.begin() + 1, vals.end());
        if (dim == 0) dim = s.features.size();
        if (s.features.size() != dim)
            throw std::runtime_error("csv: inconsistent row width at " + path + ":" +
                                     std::to_string(lineno));
        out.push_back(std::move(s));
    }
    return out;
}

void normalize(Dataset& data, Normalization norm) {
    if (data.empty() || norm == Normalization::none) return;
    const size_t m = data[0].features.size();
    if (norm == Normalization::scale_0_1) {
        for (size_t j = 0; j < m; ++j) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (const auto& s : data) {
                lo = std::min(lo, s.features[j]);
                hi = std::max(hi, s.features[j]);
            }
            const double range = hi - lo;
            for (auto& s : data) s.features[j] = range > 0.0 ? (s.features[j] - lo) / range : 0.0;
        }
    } else {
        for (size_t j = 0; j < m; ++j) {
            double mean = 0.0;
            for (const auto& s : data) mean += s.features[j];
            mean /= data.size();
            double var = 0.0;
            for (const auto& s : data) {
                const double d = s.features[j] - mean;
                var += d * d;
            }
            var /= data.size();
            const double sd = std::sqrt(var);
            for (auto& s : data) s.features[j] = sd > 0.0 ? (s.features[j] - mean) / sd : 0.0;
        }
    }
}

void augment_with_bias(Dataset& data) {
    for (auto& s : data) s.features.push_back(1.0);
}

SampleStream SampleStream::iid(size_t dataset_size, uint64_t seed) {
    SampleStream s;
    s.iid_ = true;
    s.size_ = dataset_size;
    s.rng_state_ = seed;
    return s;
}

SampleStream SampleStream::shard(std::vector<int> indices) {
    SampleStream s;
    s.iid_ = false;
    s.shard_ = std::move(indices);
    s.size_ = s.shard_.size();
    return s;
}

std::vector<int> SampleStream::next(int n) {
    if (size_ == 0) throw std::logic_error("SampleStream: empty stream");
    std::vector<int> out(n);
    if (iid_) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % size_;
        for (int i = 0; i < n; ++i) {
            uint64_t v;
            do {
                v = splitmix64(rng_state_);
            } while (v >= limit);
            out[i] = static_cast<int>(v % size_);
        }
    } else {
        for (int i = 0; i < n; ++i) {
            out[i] = shard_[cursor_];
            cursor_ = (cursor_ + 1) % shard_.size();
        }
    }
    return out;
}

StreamSet partition_streams(const Dataset& data, int num_agents, PartitionMode mode, uint64_t seed,
                            bool shared) {
    if (data.empty()) throw std::invalid_argument("partition_streams: empty dataset");
    if (num_agents < 1) throw std::invalid_argument("partition_streams: need at least one agent");
    StreamSet set;
    set.streams.reserve(num_agents);
    if (mode == PartitionMode::iid_shuffle) {
        for (int k = 0; k < num_agents; ++k) {
            const uint64_t sub = derive_seed(seed, kTagData, shared ? 0 : static_cast<uint64_t>(k) + 1);
            set.streams.push_back(SampleStream::iid(data.size(), sub));
        }
    } else {
        for (int k = 0; k < num_agents; ++k) {
            std::vector<int> shard;
            for (size_t i = k; i < data.size(); i += num_agents) shard.push_back(static_cast<int>(i));
            if (shard.empty())
                throw std::invalid_argument("partition_streams: more agents than samples");
            set.streams.push_back(SampleStream::shard(std::move(shard)));
        }
    }
    return set;
}

PartitionMode parse_partition_mode(const std::string& name) {
    if (name == "iid_shuffle" || name == "iid") return PartitionMode::iid_shuffle;
    if (name == "round_robin") return PartitionMode::round_robin;
    throw std::invalid_argument("unknown partition mode: " + name);
}

DataSource parse_data_source(const std::string& name) {
    if (name == "synthetic" || name == "synthetic_gaussian") return DataSource::synthetic_gaussian;
    if (name == "mixture" || name == "synthetic_mixture") return DataSource::synthetic_mixture;
    if (name == "mnist" || name == "mnist_idx") return DataSource::mnist_idx;
    if (name == "csv") return DataSource::csv;
    throw std::invalid_argument("unknown data source: " + name);
}

Normalization parse_normalization(const std::string& name) {
    if (name == "none") return Normalization::none;
    if (name == "scale_0_1") return Normalization::scale_0_1;
    if (name == "unit_variance") return Normalization::unit_variance;
    throw std::invalid_argument("unknown normalization: " + name);
}

}  // namespace advdiff
