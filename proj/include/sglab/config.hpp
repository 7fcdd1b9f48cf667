#pragma once

#include <filesystem>
#include <string>

#include "sglab/model.hpp"
#include "sglab/scene.hpp"
#include "sglab/trainer.hpp"

namespace sglab {

// One experiment = dataset + model + training recipe + analysis toggles.
// Serializes with every default materialized so archived configs re-execute
// exactly.
struct ExperimentConfig {
    DatasetConfig dataset;
    ModelConfig model;
    TrainConfig train;
    bool run_nmi = true;
    bool run_pscore = true;
    bool run_dci = true;
    std::string output_dir = "out";

    std::string to_json_str() const;
    static ExperimentConfig from_json_str(const std::string& s);
    static ExperimentConfig from_file(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

// Named presets. "desk" finishes a run quickly on one machine; "paper" mirrors
// the full-scale recipe (224px, 75k samples, 1000 epochs).
ExperimentConfig preset(const std::string& name);

}  // namespace sglab
