#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "advdiff/model.hpp"

namespace advdiff {

enum class DataSource { synthetic_gaussian, synthetic_mixture, mnist_idx, csv };
enum class Normalization { none, scale_0_1, unit_variance };

struct DatasetSpec {
    DataSource source = DataSource::synthetic_gaussian;
    int dimension = 10;
    int num_samples = 4000;
    double train_fraction = 0.5;
    uint64_t seed = 0;
    Normalization normalization = Normalization::none;

    // synthetic_gaussian: class means at +/- separation * 1/sqrt(M), isotropic
    // noise with the given scale
    double separation = 1.0;
    double noise_scale = 1.0;

    // synthetic_mixture: majority margin along coordinate 0, a minority
    // sub-population separated only along coordinate 1, background noise on
    // all coordinates
    double major_separation = 1.2;
    double major_noise = 0.3;
    double minor_fraction = 0.10;
    double minor_separation = 0.5;
    double minor_noise = 0.05;
    double background_noise = 0.05;

    // file-backed sources
    std::string images_path, labels_path;
    std::string test_images_path, test_labels_path;
    std::string csv_path;
    bool csv_has_header = false;

    void validate() const;
};

// Seeded, reproducible draw of (train, test) per the spec.
std::pair<Dataset, Dataset> generate_synthetic(const DatasetSpec& spec);

// IDX-format MNIST pair; keeps digits 0 and 1 only, mapping 0 -> -1 and
// 1 -> +1 and flattening to 784 features. scale_0_1 divides by 255.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       Normalization norm = Normalization::scale_0_1);

// Fixture/round-trip writers for the same binary format.
void write_idx_images(const std::string& path, const std::vector<std::vector<uint8_t>>& images,
                      int rows, int cols);
void write_idx_labels(const std::string& path, const std::vector<uint8_t>& labels);

// Rows "label,f1,...,fM"; labels -1/+1, with 0 accepted as -1.
Dataset load_csv(const std::string& path, bool has_header);

// In-place feature normalization; labels and count are untouched.
void normalize(Dataset& data, Normalization norm);

// Appends a constant-1 coordinate. Attacks must then restrict to the
// original dimension via AttackSpec::perturb_dims.
void augment_with_bias(Dataset& data);

enum class PartitionMode { iid_shuffle, round_robin };

class SampleStream {
  public:
    static SampleStream iid(size_t dataset_size, uint64_t seed);
    static SampleStream shard(std::vector<int> indices);

    // next batch of dataset indices
    std::vector<int> next(int n);

  private:
    SampleStream() = default;
    bool iid_ = true;
    size_t size_ = 0;
    uint64_t rng_state_ = 0;
    std::vector<int> shard_;
    size_t cursor_ = 0;
};

struct StreamSet {
    std::vector<SampleStream> streams;
    int num_agents() const { return static_cast<int>(streams.size()); }
};

// iid_shuffle draws with replacement from the whole set, one independent
// stream per agent (identical streams when shared = true); round_robin deals
// disjoint shards i % K and cycles each in order.
StreamSet partition_streams(const Dataset& data, int num_agents, PartitionMode mode, uint64_t seed,
                            bool shared = false);

PartitionMode parse_partition_mode(const std::string& name);
DataSource parse_data_source(const std::string& name);
Normalization parse_normalization(const std::string& name);

}  // namespace advdiff
