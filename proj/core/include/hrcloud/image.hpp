#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hrcloud/error.hpp"

namespace hrcloud {

// Interleaved HxWxC float image with values in [0,1]. Channels is 1 (gray /
// mask / probability map) or 3 (RGB).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c),
          data(static_cast<size_t>(int64_t(h) * w * c), fill) {}

    float& at(int y, int x, int c = 0) {
        return data[static_cast<size_t>((int64_t(y) * width + x) * channels + c)];
    }
    float at(int y, int x, int c = 0) const {
        return data[static_cast<size_t>((int64_t(y) * width + x) * channels + c)];
    }
    int64_t pixel_count() const { return int64_t(height) * width; }
    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

// Netpbm raster I/O. Readers accept binary and ASCII variants (P5/P2 gray,
// P6/P3 color) with maxval up to 255; values are normalized to [0,1].
Image read_pnm(const std::string& path);
void write_pgm(const std::string& path, const Image& gray);   // 1 channel
void write_ppm(const std::string& path, const Image& color);  // 3 channels

// Loader abstraction used by everything that touches image files.
Image load_image(const std::string& path);
// Loads a label mask: converts color to luma if needed, binarizes at 0.5.
Image load_mask(const std::string& path);

// Writes round(255 * v) as 8-bit grayscale.
void save_probability_map(const std::string& path, const Image& prob);

// Rec.601 luma of an RGB image (returns a copy for single-channel input).
Image to_grayscale(const Image& img);

float luma(float r, float g, float b);

}  // namespace hrcloud
