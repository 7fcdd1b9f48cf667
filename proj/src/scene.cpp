#include "sglab/scene.hpp"

#include <algorithm>
#include <cmath>

namespace sglab {

void DatasetConfig::validate() const {
    divisions_from_color_count(n_colors);
    if (common_ratio < 0.0 || common_ratio > 1.0) throw ConfigError("common_ratio outside [0,1]");
    if (p_burst < 0.0 || p_burst > 1.0) throw ConfigError("p_burst outside [0,1]");
    if (burst_cap < 1) throw ConfigError("burst_cap must be >= 1");
    if (jitter < 0.0 || jitter > 0.5) throw ConfigError("jitter outside [0, 0.5]");
    if (train_size < 1 || test_size < 1) throw ConfigError("train/test sizes must be >= 1");
    if (effective_train_size() < 1) throw ConfigError("train_size * train_fraction must be >= 1");
    if (image_side < 32) throw ConfigError("image_side must be >= 32");
    if (patch_side < 1 || image_side % patch_side != 0)
        throw ConfigError("image_side must be divisible by patch_side");
}

int DatasetConfig::effective_train_size() const {
    return static_cast<int>(std::lround(train_size * train_fraction));
}

int attribute_distance(const Entity& a, const Entity& b) {
    return (a.shape != b.shape) + (a.color != b.color) + (a.material != b.material) +
           (a.size != b.size);
}

namespace {

bool boxes_overlap(const Entity& a, const Entity& b) {
    return std::abs(a.x - b.x) < a.radius + b.radius && std::abs(a.y - b.y) < a.radius + b.radius;
}

bool intersects(const std::vector<int>& sorted_legal, const std::vector<int>& subset) {
    for (int c : subset) {
        if (std::binary_search(sorted_legal.begin(), sorted_legal.end(), c)) return true;
    }
    return false;
}

std::vector<int> intersection(const std::vector<int>& sorted_legal, const std::vector<int>& subset) {
    std::vector<int> out;
    for (int c : subset) {
        if (std::binary_search(sorted_legal.begin(), sorted_legal.end(), c)) out.push_back(c);
    }
    return out;
}

}  // namespace

Scene sample_scene(const SplitSpec& spec, Split split, const DatasetConfig& config, Rng& rng) {
    const std::vector<int> legal[3] = {
        legal_colors(spec, Shape::Sphere, split),
        legal_colors(spec, Shape::Cube, split),
        legal_colors(spec, Shape::Cylinder, split),
    };

    // Union of legal colors across shapes, for burst subset draws.
    std::vector<int> color_union = legal[0];  // spheres always see the full palette

    constexpr int kSceneRetries = 64;
    constexpr int kSubsetRetries = 64;
    constexpr int kEntityRetries = 256;
    constexpr int kPlacementRetries = 512;

    for (int scene_try = 0; scene_try < kSceneRetries; ++scene_try) {
        Scene scene;
        const int count = uniform_int(rng, 3, 10);

        scene.bursty = bernoulli(rng, config.p_burst);
        std::vector<int> per_shape_colors[3];
        if (scene.bursty) {
            bool found = false;
            for (int t = 0; t < kSubsetRetries && !found; ++t) {
                auto subset = sample_without_replacement(
                    rng, color_union, static_cast<size_t>(config.burst_cap));
                std::sort(subset.begin(), subset.end());
                if (intersects(legal[1], subset) && intersects(legal[2], subset)) {
                    scene.burst_colors = subset;
                    found = true;
                }
            }
            if (!found) {
                throw GenerationError(
                    "burst subset has empty intersection with a shape's legal colors");
            }
            for (int s = 0; s < 3; ++s) per_shape_colors[s] = intersection(legal[s], scene.burst_colors);
        } else {
            for (int s = 0; s < 3; ++s) per_shape_colors[s] = legal[s];
        }

        bool attributes_ok = true;
        for (int i = 0; i < count; ++i) {
            bool placed = false;
            for (int t = 0; t < kEntityRetries && !placed; ++t) {
                Entity e;
                int shape_idx = uniform_int(rng, 0, 2);
                e.shape = kShapes[shape_idx];
                const auto& colors = per_shape_colors[shape_idx];
                e.color = colors[uniform_below(rng, colors.size())];
                e.material = kMaterials[uniform_int(rng, 0, 1)];
                e.size = kSizes[uniform_int(rng, 0, 1)];
                e.radius = size_radius(e.size);
                bool resolvable = true;
                for (const auto& other : scene.entities) {
                    if (attribute_distance(e, other) < kMinAttributeDistance) {
                        resolvable = false;
                        break;
                    }
                }
                if (!resolvable) continue;
                scene.entities.push_back(e);
                placed = true;
            }
            if (!placed) {
                attributes_ok = false;
                break;
            }
        }
        if (!attributes_ok) continue;  // fresh burst subset and entity count

        // Positions: uniform with the bounding box inside the image and no
        // two boxes overlapping.
        bool positions_ok = true;
        for (auto& e : scene.entities) {
            bool placed = false;
            for (int t = 0; t < kPlacementRetries && !placed; ++t) {
                e.x = uniform_real(rng, e.radius, 1.0 - e.radius);
                e.y = uniform_real(rng, e.radius, 1.0 - e.radius);
                bool clear = true;
                for (const auto& other : scene.entities) {
                    if (&other == &e) break;  // earlier entities only
                    if (boxes_overlap(e, other)) {
                        clear = false;
                        break;
                    }
                }
                placed = clear;
            }
            if (!placed) {
                positions_ok = false;
                break;
            }
        }
        if (!positions_ok) continue;

        return scene;
    }
    throw GenerationError("scene sampling exhausted retries (resolvability or placement)");
}

}  // namespace sglab
