#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sglab/analysis.hpp"
#include "sglab/checkpoint.hpp"
#include "sglab/dataset.hpp"
#include "sglab/model.hpp"
#include "sglab/raster.hpp"

namespace sglab {

struct TrainConfig {
    double learning_rate = 1e-4;
    int batch_size = 256;
    int epochs = 1000;
    double mlm_probability = 0.15;
    double beta1 = 0.9, beta2 = 0.999;
    double adam_eps = 1e-8;
    uint64_t seed = 0;
    int eval_every = 10;        // epochs between periodic evals; 0 disables
    int eval_max_samples = 0;   // 0 = full test sets
    int checkpoint_every = 0;   // epochs between resumable snapshots; 0 = end only
    bool save_best_id = false;

    void validate() const {
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (!(mlm_probability > 0.0 && mlm_probability < 1.0)) {
            throw ConfigError("mlm_probability must lie in (0,1)");
        }
    }
};

struct EvalEntry {
    int epoch = 0;
    std::string split;
    std::string attribute;
    double accuracy = 0.0;
};

struct RunRecord {
    std::string status;  // "complete" or "failed: ..."
    std::string dataset_dir;
    std::string manifest_hash;
    std::string source_rev;
    size_t param_count = 0;
    double wall_seconds = 0.0;
    std::vector<double> epoch_losses;
    std::vector<EvalEntry> evals;
    std::string checkpoint_path;
    // full config snapshot (dataset + model + train) for exact re-execution
    std::string config_json;

    double final_accuracy(const std::string& split, Attribute a) const;
};

void save_run_record(const RunRecord& record, const std::filesystem::path& path);
RunRecord load_run_record(const std::filesystem::path& path);

// Deterministic epoch-stepped optimization; all randomness is derived from
// (seed, epoch, sample index) so a restored snapshot continues bit-identically.
class Trainer {
public:
    Trainer(const DatasetManifest& manifest, const ModelConfig& model_config,
            const TrainConfig& train_config);

    void run_epoch(int epoch);  // one pass in the epoch's shuffled order
    double last_epoch_loss() const { return last_loss_; }

    const Parameters<float>& params() const { return params_; }
    Checkpoint snapshot(int epoch) const;
    void restore(const Checkpoint& ckpt);

    EvalReport evaluate_subset(Subset subset, int max_samples = 0) const;
    const DatasetManifest& manifest() const { return manifest_; }

private:
    struct CachedSample {
        Image image;
        std::vector<int> token_ids;  // unmasked
    };

    DatasetManifest manifest_;
    TrainConfig config_;
    Parameters<float> params_;
    Parameters<float> grads_;
    AdamState adam_;
    std::vector<CachedSample> samples_;
    double last_loss_ = 0.0;

    void adam_step();
};

// File-level orchestration: trains (or resumes) into run_dir, writing
// metrics.csv, run.json and checkpoint.bin. Completed runs are returned
// as-is.
RunRecord train(const DatasetManifest& manifest, const ModelConfig& model_config,
                const TrainConfig& train_config, const std::filesystem::path& run_dir);

// Model config with vocab/patch/seq sizes filled in from the dataset.
ModelConfig resolve_model_config(ModelConfig base, const DatasetManifest& manifest);

}  // namespace sglab
