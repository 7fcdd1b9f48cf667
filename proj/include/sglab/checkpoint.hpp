#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "sglab/model.hpp"

namespace sglab {

// Adam first/second moments plus the shared step counter.
struct AdamState {
    Parameters<float> m, v;
    int64_t step = 0;

    static AdamState zeros(const ModelConfig& config) {
        return AdamState{Parameters<float>::zeros(config), Parameters<float>::zeros(config), 0};
    }
};

struct Checkpoint {
    Parameters<float> params;
    int64_t step = 0;
    int epoch = 0;
    std::string manifest_hash;
    std::optional<AdamState> adam;

    size_t param_count() const { return params.param_count(); }
};

// Single binary container: magic + JSON header (config, tensor names,
// shapes, offsets) + little-endian float32 payload, row-major per tensor.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

ModelConfig model_config_from_json_str(const std::string& s);
std::string model_config_to_json_str(const ModelConfig& c);

// FNV-1a over a file's bytes, hex string; used for provenance hashes.
std::string file_hash(const std::filesystem::path& path);

}  // namespace sglab
