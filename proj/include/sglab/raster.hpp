#pragma once

#include <cstdint>
#include <vector>

#include "sglab/latent.hpp"
#include "sglab/rng.hpp"
#include "sglab/scene.hpp"

namespace sglab {

// Row-major 8-bit RGB image, H = W = side.
struct Image {
    int side = 0;
    std::vector<uint8_t> pixels;  // side*side*3

    static Image filled(int side, Rgb color);
    Rgb at(int x, int y) const {
        size_t i = (static_cast<size_t>(y) * side + x) * 3;
        return Rgb{pixels[i], pixels[i + 1], pixels[i + 2]};
    }
    void set(int x, int y, Rgb c) {
        size_t i = (static_cast<size_t>(y) * side + x) * 3;
        pixels[i] = c.r;
        pixels[i + 1] = c.g;
        pixels[i + 2] = c.b;
    }
    bool operator==(const Image&) const = default;
};

inline constexpr Rgb kBackground{128, 128, 128};

// Glyph renderer: sphere -> circle, cube -> square, cylinder -> upright 1:2
// rectangle; metal adds fixed diagonal white stripes. No anti-aliasing.
Image rasterize(const Scene& scene, const Palette& palette, int side);

struct Hsv {
    double h = 0.0;  // [0,1), fraction of the hue circle
    double s = 0.0;
    double v = 0.0;
};

Hsv rgb_to_hsv(Rgb c);
Rgb hsv_to_rgb(const Hsv& c);

// Shifts every pixel's hue by delta (fraction of the circle, mod 1).
// delta == 0 is an exact identity.
Image hue_shift(const Image& img, double delta);

// Draws delta ~ Uniform[-half_range, +half_range] once and applies it to the
// whole image. Labels and text are untouched by construction.
Image hue_jitter(const Image& img, double half_range, Rng& rng);

uint64_t image_hash(const Image& img);  // FNV-1a over the pixel bytes

}  // namespace sglab
