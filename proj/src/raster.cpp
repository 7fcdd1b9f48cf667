#include "sglab/raster.hpp"

#include <algorithm>
#include <cmath>

namespace sglab {

Image Image::filled(int side, Rgb color) {
    Image img;
    img.side = side;
    img.pixels.resize(static_cast<size_t>(side) * side * 3);
    for (size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = color.r;
        img.pixels[i + 1] = color.g;
        img.pixels[i + 2] = color.b;
    }
    return img;
}

namespace {

// Diagonal specular stripes for metal: every 8th band, 2 pixels wide, in
// image coordinates so the pattern orientation is scene-independent.
bool on_stripe(int x, int y) { return ((x - y) & 7) < 2; }

bool inside_glyph(Shape shape, double px, double py, double cx, double cy, double r) {
    const double dx = px - cx, dy = py - cy;
    switch (shape) {
        case Shape::Sphere:
            return dx * dx + dy * dy <= r * r;
        case Shape::Cube:
            return std::abs(dx) <= r && std::abs(dy) <= r;
        case Shape::Cylinder:
            return std::abs(dx) <= r * 0.5 && std::abs(dy) <= r;
    }
    return false;
}

}  // namespace

Image rasterize(const Scene& scene, const Palette& palette, int side) {
    if (side < 32) throw ConfigError("image side must be >= 32");
    if (scene.entities.empty()) throw ConfigError("refusing to rasterize an empty scene");
    Image img = Image::filled(side, kBackground);
    for (const auto& e : scene.entities) {
        if (e.x - e.radius < -1e-9 || e.x + e.radius > 1.0 + 1e-9 || e.y - e.radius < -1e-9 ||
            e.y + e.radius > 1.0 + 1e-9) {
            throw GenerationError("entity bounding box outside the image");
        }
        const Rgb fill = palette.colors.at(e.color);
        const double cx = e.x * side, cy = e.y * side, r = e.radius * side;
        const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
        const int x1 = std::min(side - 1, static_cast<int>(std::ceil(cx + r)));
        const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
        const int y1 = std::min(side - 1, static_cast<int>(std::ceil(cy + r)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                if (!inside_glyph(e.shape, x + 0.5, y + 0.5, cx, cy, r)) continue;
                if (e.material == Material::Metal && on_stripe(x, y)) {
                    img.set(x, y, Rgb{255, 255, 255});
                } else {
                    img.set(x, y, fill);
                }
            }
        }
    }
    return img;
}

Hsv rgb_to_hsv(Rgb c) {
    const double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
    const double maxc = std::max({r, g, b});
    const double minc = std::min({r, g, b});
    const double delta = maxc - minc;
    Hsv out;
    out.v = maxc;
    out.s = maxc <= 0.0 ? 0.0 : delta / maxc;
    if (delta <= 0.0) {
        out.h = 0.0;
    } else if (maxc == r) {
        out.h = std::fmod((g - b) / delta, 6.0) / 6.0;
    } else if (maxc == g) {
        out.h = ((b - r) / delta + 2.0) / 6.0;
    } else {
        out.h = ((r - g) / delta + 4.0) / 6.0;
    }
    if (out.h < 0.0) out.h += 1.0;
    return out;
}

Rgb hsv_to_rgb(const Hsv& c) {
    auto to_byte = [](double x) {
        return static_cast<uint8_t>(std::clamp(std::lround(x * 255.0), 0L, 255L));
    };
    if (c.s <= 0.0) {
        uint8_t v = to_byte(c.v);
        return Rgb{v, v, v};
    }
    double h = c.h - std::floor(c.h);
    double sector = h * 6.0;
    int i = static_cast<int>(sector) % 6;
    double f = sector - std::floor(sector);
    double p = c.v * (1.0 - c.s);
    double q = c.v * (1.0 - c.s * f);
    double t = c.v * (1.0 - c.s * (1.0 - f));
    double r, g, b;
    switch (i) {
        case 0: r = c.v; g = t; b = p; break;
        case 1: r = q; g = c.v; b = p; break;
        case 2: r = p; g = c.v; b = t; break;
        case 3: r = p; g = q; b = c.v; break;
        case 4: r = t; g = p; b = c.v; break;
        default: r = c.v; g = p; b = q; break;
    }
    return Rgb{to_byte(r), to_byte(g), to_byte(b)};
}

Image hue_shift(const Image& img, double delta) {
    if (delta == 0.0) return img;
    Image out = img;
    for (size_t i = 0; i < out.pixels.size(); i += 3) {
        Rgb c{out.pixels[i], out.pixels[i + 1], out.pixels[i + 2]};
        Hsv hsv = rgb_to_hsv(c);
        hsv.h += delta;
        Rgb shifted = hsv_to_rgb(hsv);
        out.pixels[i] = shifted.r;
        out.pixels[i + 1] = shifted.g;
        out.pixels[i + 2] = shifted.b;
    }
    return out;
}

Image hue_jitter(const Image& img, double half_range, Rng& rng) {
    if (half_range < 0.0 || half_range > 0.5) throw ConfigError("jitter half-range outside [0, 0.5]");
    const double delta = uniform_real(rng, -half_range, half_range);
    return hue_shift(img, delta);
}

uint64_t image_hash(const Image& img) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (uint8_t b : img.pixels) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace sglab
