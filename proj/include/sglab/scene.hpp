#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sglab/latent.hpp"
#include "sglab/rng.hpp"

namespace sglab {

// Glyph extent as a fraction of the image side.
inline double size_radius(ObjectSize z) { return z == ObjectSize::Small ? 0.06 : 0.11; }

struct Entity {
    Shape shape = Shape::Sphere;
    int color = 0;  // palette index
    Material material = Material::Rubber;
    ObjectSize size = ObjectSize::Small;
    double x = 0.0, y = 0.0;  // center, normalized [0,1]^2
    double radius = 0.0;      // normalized extent

    bool operator==(const Entity&) const = default;
};

struct Scene {
    std::vector<Entity> entities;  // 3..10
    bool bursty = false;
    std::vector<int> burst_colors;  // <= burst_cap palette indices when bursty
    uint64_t seed = 0;

    bool operator==(const Scene&) const = default;
};

struct DatasetConfig {
    int n_colors = 8;            // palette cardinality, n^3
    double common_ratio = 0.0;   // fraction of colors shared by cubes and cylinders
    double p_burst = 0.0;        // probability a train scene is bursty
    int burst_cap = 3;           // max distinct colors in a bursty scene
    double jitter = 0.0;         // hue half-range in [0, 0.5], applied at batch time
    bool jitter_redraw = true;   // fresh draw per epoch
    int train_size = 8000;
    int test_size = 2000;
    double train_fraction = 1.0;
    int image_side = 64;
    int patch_side = 8;
    uint64_t seed = 0;

    void validate() const;
    int effective_train_size() const;
};

// Minimum number of attributes in which any two entities of a scene must
// differ, so that masking one attribute leaves every entity uniquely
// described by the remaining three.
inline constexpr int kMinAttributeDistance = 2;

// Samples one scene for the given split. Burstiness, resolvability and
// non-overlap are enforced by bounded rejection; throws GenerationError
// naming the failed constraint when the retry budget runs out.
Scene sample_scene(const SplitSpec& spec, Split split, const DatasetConfig& config, Rng& rng);

int attribute_distance(const Entity& a, const Entity& b);

}  // namespace sglab
