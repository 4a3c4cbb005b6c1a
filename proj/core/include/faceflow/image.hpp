#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace faceflow {

struct ImageRGB8 {
    int width = 0, height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel

    ImageRGB8() = default;
    ImageRGB8(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t* at(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }
    const std::uint8_t* at(int x, int y) const {
        return &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
    }
};

struct DepthMap {
    int width = 0, height = 0;
    std::vector<float> values;  // row-major, top-down

    DepthMap() = default;
    DepthMap(int w, int h, float fill = 0.f)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// 8-bit RGB PNG, fixed encoder settings so identical pixels give identical
// bytes. Reading accepts gray/palette/alpha inputs and converts to RGB.
void write_png(const ImageRGB8& image, const std::string& path);
ImageRGB8 read_png(const std::string& path);

// Width/height from the PNG header without decoding the pixel data.
void read_png_size(const std::string& path, int* width, int* height);

}  // namespace faceflow
