#pragma once

#include <cstdint>
#include <vector>

#include "faceflow/rasterizer.hpp"
#include "faceflow/sequence.hpp"

namespace faceflow {

// Dense per-pixel mask stored one bit per pixel.
class Bitmask {
  public:
    Bitmask() = default;
    Bitmask(int width, int height)
        : width_(width),
          height_(height),
          bits_((static_cast<std::size_t>(width) * height + 63) / 64, 0) {}

    int width() const { return width_; }
    int height() const { return height_; }

    bool get(int x, int y) const {
        std::size_t i = static_cast<std::size_t>(y) * width_ + x;
        return (bits_[i >> 6] >> (i & 63)) & 1u;
    }
    void set(int x, int y, bool value) {
        std::size_t i = static_cast<std::size_t>(y) * width_ + x;
        std::uint64_t bit = std::uint64_t(1) << (i & 63);
        if (value)
            bits_[i >> 6] |= bit;
        else
            bits_[i >> 6] &= ~bit;
    }
    std::size_t count() const;
    bool empty() const { return bits_.empty(); }

    bool operator==(const Bitmask&) const = default;

  private:
    int width_ = 0, height_ = 0;
    std::vector<std::uint64_t> bits_;
};

// Dense displacement field in pixels, float32 storage. `valid` marks pixels
// carrying a defined flow (here: everything, since the background is a
// static plane with zero flow). `occluded` flags pixels whose target-frame
// surface point fails the target depth test.
struct FlowField {
    int width = 0, height = 0;
    std::vector<float> u, v;  // row-major
    Bitmask valid;
    Bitmask occluded;  // default-constructed (empty) when not computed

    FlowField() = default;
    FlowField(int w, int h)
        : width(w),
          height(h),
          u(static_cast<std::size_t>(w) * h, 0.f),
          v(static_cast<std::size_t>(w) * h, 0.f),
          valid(w, h) {}

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

// Exact forward flow from mesh correspondence. For every source-covered pixel
// the hit point is re-posed with the target mesh via its stored barycentrics
// and reprojected; background pixels carry exactly (0,0).
FlowField compute_flow(const Mesh& source_mesh, const Mesh& target_mesh, const Camera& camera,
                       const VisibilityBuffer& source_visibility, const RenderConfig& config);

struct DecomposedFlows {
    FlowField facial;      // source -> facial target
    FlowField head;        // source -> head target (expression held)
    FlowField expression;  // facial - head, computed once
};

// Rasterizes the source once and derives all three flows from the shared
// visibility, so facial/head/expression agree pixel-for-pixel by construction.
DecomposedFlows compute_decomposed_flows(const MeshPairSample& sample, const Camera& camera,
                                         const RenderConfig& config);

// Same, reusing a visibility buffer already produced by rasterizing
// sample.source with this camera.
DecomposedFlows compute_decomposed_flows(const MeshPairSample& sample, const Camera& camera,
                                         const RenderConfig& config,
                                         const VisibilityBuffer& source_visibility);

// Face-coverage mask of a visibility buffer (pixels hit by any triangle).
Bitmask coverage_mask(const VisibilityBuffer& visibility);

}  // namespace faceflow
