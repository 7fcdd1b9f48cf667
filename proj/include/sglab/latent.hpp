#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sglab/errors.hpp"

namespace sglab {

enum class Shape { Sphere, Cube, Cylinder };
enum class Material { Rubber, Metal };
enum class ObjectSize { Small, Large };
enum class Split { A, B };

inline constexpr std::array<Shape, 3> kShapes{Shape::Sphere, Shape::Cube, Shape::Cylinder};
inline constexpr std::array<Material, 2> kMaterials{Material::Rubber, Material::Metal};
inline constexpr std::array<ObjectSize, 2> kSizes{ObjectSize::Small, ObjectSize::Large};

const std::string& label(Shape s);
const std::string& label(Material m);
const std::string& label(ObjectSize z);
Shape shape_from_label(const std::string& s);
Material material_from_label(const std::string& s);
ObjectSize size_from_label(const std::string& s);

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

std::string to_hex(Rgb c);  // lowercase "#rrggbb"

// Deterministic color grid: channel_divisions^3 colors, each channel on the
// endpoint-inclusive grid round(255*k/(n-1)), ordered lexicographically over
// (R,G,B) grid indices.
struct Palette {
    std::vector<Rgb> colors;
    int channel_divisions = 0;

    int size() const { return static_cast<int>(colors.size()); }
    std::string hex(int index) const { return to_hex(colors.at(index)); }
};

Palette build_palette(int channel_divisions);

// Accepts either the division count n or a perfect cube n^3.
int divisions_from_color_count(int n_colors);

struct AttributeSpace {
    Palette palette;

    static AttributeSpace with_colors(int n_colors) {
        return AttributeSpace{build_palette(divisions_from_color_count(n_colors))};
    }
};

// Partition of the palette into colors seen by both cubes and cylinders in
// Split A (common) and colors exclusive to one of the two shapes. Spheres are
// unconstrained. Split B swaps the exclusive sets.
struct SplitSpec {
    std::vector<int> common_colors;      // sorted palette indices
    std::vector<int> cube_exclusive;     // sorted
    std::vector<int> cylinder_exclusive; // sorted
    double common_ratio = 0.0;
    uint64_t seed = 0;
    int palette_size = 0;

    // Split B pairs cubes with cylinder-exclusive colors and vice versa, so
    // it is unusable as soon as either exclusive set is empty.
    bool split_b_empty() const { return cube_exclusive.empty() || cylinder_exclusive.empty(); }
};

SplitSpec build_split_spec(const Palette& palette, double common_ratio, uint64_t seed);

// Sorted palette indices legal for (shape, split). Throws EmptySplitError when
// the result would be empty (cube/cylinder in Split B at ratio 1).
std::vector<int> legal_colors(const SplitSpec& spec, Shape shape, Split split);

}  // namespace sglab
