#include "sglab/patches.hpp"

#include <cmath>

namespace sglab {

PatchSequence patchify(const Image& image, int patch_side) {
    if (patch_side < 1 || image.side % patch_side != 0) {
        throw ConfigError("image side not divisible by patch side");
    }
    const int grid = image.side / patch_side;
    const int dim = patch_side * patch_side * 3;
    PatchSequence seq;
    seq.patch_side = patch_side;
    seq.image_side = image.side;
    seq.patches.resize(grid * grid, dim);
    seq.grid_coords.reserve(static_cast<size_t>(grid) * grid);
    for (int gy = 0; gy < grid; ++gy) {
        for (int gx = 0; gx < grid; ++gx) {
            const int p = gy * grid + gx;
            seq.grid_coords.emplace_back(gy, gx);
            int o = 0;
            for (int py = 0; py < patch_side; ++py) {
                const int y = gy * patch_side + py;
                for (int px = 0; px < patch_side; ++px) {
                    const int x = gx * patch_side + px;
                    const size_t i = (static_cast<size_t>(y) * image.side + x) * 3;
                    seq.patches(p, o++) = image.pixels[i] / 255.0f;
                    seq.patches(p, o++) = image.pixels[i + 1] / 255.0f;
                    seq.patches(p, o++) = image.pixels[i + 2] / 255.0f;
                }
            }
        }
    }
    return seq;
}

Image unpatchify(const PatchSequence& seq) {
    Image img = Image::filled(seq.image_side, Rgb{0, 0, 0});
    for (int p = 0; p < seq.count(); ++p) {
        const int gy = seq.grid_coords[p].first, gx = seq.grid_coords[p].second;
        int o = 0;
        for (int py = 0; py < seq.patch_side; ++py) {
            const int y = gy * seq.patch_side + py;
            for (int px = 0; px < seq.patch_side; ++px) {
                const int x = gx * seq.patch_side + px;
                const size_t i = (static_cast<size_t>(y) * seq.image_side + x) * 3;
                for (int c = 0; c < 3; ++c) {
                    img.pixels[i + c] =
                        static_cast<uint8_t>(std::lround(seq.patches(p, o++) * 255.0f));
                }
            }
        }
    }
    return img;
}

}  // namespace sglab
