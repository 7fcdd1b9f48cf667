#include "sglab/latent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sglab/rng.hpp"

namespace sglab {

namespace {
const std::string kShapeLabels[] = {"sphere", "cube", "cylinder"};
const std::string kMaterialLabels[] = {"rubber", "metal"};
const std::string kSizeLabels[] = {"small", "large"};
}  // namespace

const std::string& label(Shape s) { return kShapeLabels[static_cast<int>(s)]; }
const std::string& label(Material m) { return kMaterialLabels[static_cast<int>(m)]; }
const std::string& label(ObjectSize z) { return kSizeLabels[static_cast<int>(z)]; }

Shape shape_from_label(const std::string& s) {
    for (auto sh : kShapes)
        if (label(sh) == s) return sh;
    throw ConfigError("unknown shape label: " + s);
}

Material material_from_label(const std::string& s) {
    for (auto m : kMaterials)
        if (label(m) == s) return m;
    throw ConfigError("unknown material label: " + s);
}

ObjectSize size_from_label(const std::string& s) {
    for (auto z : kSizes)
        if (label(z) == s) return z;
    throw ConfigError("unknown size label: " + s);
}

std::string to_hex(Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

Palette build_palette(int n) {
    if (n < 2 || n > 16) {
        throw ConfigError("palette channel divisions must be in [2, 16], got " + std::to_string(n));
    }
    std::vector<uint8_t> grid(n);
    for (int k = 0; k < n; ++k) {
        grid[k] = static_cast<uint8_t>(std::lround(255.0 * k / (n - 1)));
    }
    Palette p;
    p.channel_divisions = n;
    p.colors.reserve(static_cast<size_t>(n) * n * n);
    for (int r = 0; r < n; ++r)
        for (int g = 0; g < n; ++g)
            for (int b = 0; b < n; ++b) p.colors.push_back(Rgb{grid[r], grid[g], grid[b]});
    return p;
}

int divisions_from_color_count(int n_colors) {
    for (int n = 2; n <= 16; ++n) {
        if (n * n * n == n_colors) return n;
        if (n == n_colors) return n;
    }
    throw ConfigError("color count must be n or n^3 for n in [2, 16], got " +
                      std::to_string(n_colors));
}

SplitSpec build_split_spec(const Palette& palette, double common_ratio, uint64_t seed) {
    if (!(common_ratio >= 0.0 && common_ratio <= 1.0)) {
        throw ConfigError("common_ratio must lie in [0, 1]");
    }
    const int total = palette.size();
    if (total < 2 && common_ratio < 1.0) {
        throw ConfigError("palette needs at least 2 colors to form exclusive sets");
    }
    const int n_common = static_cast<int>(std::lround(common_ratio * total));

    std::vector<int> indices(total);
    for (int i = 0; i < total; ++i) indices[i] = i;
    Rng rng = make_rng(seed, /*stream=*/0x5eed);
    shuffle(rng, indices);

    SplitSpec spec;
    spec.common_ratio = common_ratio;
    spec.seed = seed;
    spec.palette_size = total;
    spec.common_colors.assign(indices.begin(), indices.begin() + n_common);
    // Alternate the remainder cube-first so cube takes the extra color when
    // the count is odd.
    for (int i = n_common; i < total; ++i) {
        if ((i - n_common) % 2 == 0)
            spec.cube_exclusive.push_back(indices[i]);
        else
            spec.cylinder_exclusive.push_back(indices[i]);
    }
    std::sort(spec.common_colors.begin(), spec.common_colors.end());
    std::sort(spec.cube_exclusive.begin(), spec.cube_exclusive.end());
    std::sort(spec.cylinder_exclusive.begin(), spec.cylinder_exclusive.end());
    return spec;
}

std::vector<int> legal_colors(const SplitSpec& spec, Shape shape, Split split) {
    std::vector<int> out;
    if (shape == Shape::Sphere) {
        out.resize(spec.palette_size);
        for (int i = 0; i < spec.palette_size; ++i) out[i] = i;
        return out;
    }
    const auto& own = shape == Shape::Cube ? spec.cube_exclusive : spec.cylinder_exclusive;
    const auto& other = shape == Shape::Cube ? spec.cylinder_exclusive : spec.cube_exclusive;
    if (split == Split::A) {
        out = spec.common_colors;
        out.insert(out.end(), own.begin(), own.end());
        std::sort(out.begin(), out.end());
    } else {
        out = other;
    }
    if (out.empty()) {
        throw EmptySplitError("no legal colors for " + label(shape) + " in split " +
                              (split == Split::A ? "A" : "B"));
    }
    return out;
}

}  // namespace sglab
