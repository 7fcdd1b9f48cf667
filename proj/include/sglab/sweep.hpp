#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sglab/config.hpp"
#include "sglab/trainer.hpp"

namespace sglab {

inline const std::vector<std::string> kSweepAxes = {"n_colors", "p_burst", "jitter",
                                                    "train_fraction", "hidden_dim"};

struct SweepSpec {
    std::string axis;
    std::vector<double> values;
    int seeds = 3;
};

struct SweepCell {
    double value = 0.0;
    uint64_t seed = 0;
    std::string run_dir;
    std::string status;  // "complete" / "failed: ..."
};

// mean +/- stderr over seeds, keyed (value, attribute, split).
struct AggregateCell {
    double mean = 0.0;
    double stderr_ = 0.0;
    int n = 0;
};

struct AggregateTable {
    std::string axis;
    // key: value|attribute|split
    std::map<std::string, AggregateCell> cells;

    static std::string key(double value, const std::string& attribute, const std::string& split);
    void save_json(const std::filesystem::path& path) const;
    void save_csv(const std::filesystem::path& path) const;
    static AggregateTable load_json(const std::filesystem::path& path);
};

struct SweepResult {
    std::vector<SweepCell> cells;
    AggregateTable aggregate;
};

// One run per (value, seed); completed cells are skipped, failed cells are
// recorded and the sweep continues. Datasets are generated on demand under
// out_root/datasets.
SweepResult run_sweep(const ExperimentConfig& base, const SweepSpec& spec,
                      const std::filesystem::path& out_root);

// Applies an axis value to a base config (dataset or model, depending on axis).
ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis, double value);

// Canonical dataset directory name for a config (the fields that change its
// contents).
std::string dataset_dir_name(const DatasetConfig& c);

// mean and standard error of a sample.
std::pair<double, double> mean_stderr(const std::vector<double>& xs);

}  // namespace sglab
