#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sglab/joint_table.hpp"
#include "sglab/latent.hpp"
#include "sglab/scene.hpp"
#include "sglab/text.hpp"

namespace sglab {

enum class Subset { Train, TestId, TestOod };
inline constexpr std::array<Subset, 3> kSubsets{Subset::Train, Subset::TestId, Subset::TestOod};
const std::string& subset_dir(Subset s);  // "train" / "test_id" / "test_ood"

inline constexpr int kManifestVersion = 1;

struct DatasetManifest {
    DatasetConfig config;
    SplitSpec split_spec;
    std::vector<std::string> vocab_tokens;
    std::map<std::string, size_t> sizes;  // per subset dir name
    int format_version = kManifestVersion;
    std::filesystem::path root;

    size_t size(Subset s) const { return sizes.at(subset_dir(s)); }
    Palette palette() const {
        return build_palette(divisions_from_color_count(config.n_colors));
    }
    Vocabulary vocabulary() const { return Vocabulary::from_tokens(vocab_tokens); }
    std::filesystem::path image_path(Subset s, size_t index) const;
};

// One line of records.jsonl.
struct SampleRecord {
    uint64_t id = 0;
    uint64_t seed = 0;
    Split split = Split::A;
    Scene scene;
    std::string text;
};

// Generates train / test-ID / test-OOD under out_dir and writes
// manifest.json plus per-subset images and records. Pure function of the
// config; re-running over an existing matching dataset is a no-op.
DatasetManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir);

DatasetManifest load_manifest(const std::filesystem::path& dataset_dir);

std::vector<SampleRecord> load_records(const DatasetManifest& manifest, Subset subset);

// Joint count tables over all entities of a subset (spheres included):
// (color, shape) plus the five other attribute pairs.
std::map<std::string, JointTable> dataset_attribute_table(const DatasetManifest& manifest,
                                                          Subset subset);

// Stable per-sample rng stream id for a subset.
uint64_t sample_seed(const DatasetConfig& config, Subset subset, uint64_t index);

}  // namespace sglab
