#pragma once

#include <cstdint>
#include <vector>

#include "faceflow/face_model.hpp"
#include "faceflow/image.hpp"
#include "faceflow/math.hpp"

namespace faceflow {

// Pinhole camera. Extrinsics map world to camera coordinates:
// X_cam = rotation * X_world + translation. Camera axes: x right, y down,
// z forward; depth is the camera-space z.
struct Camera {
    double fx = 0.0, fy = 0.0;
    double cx = 0.0, cy = 0.0;
    Mat3 rotation;
    Vec3 translation;
    int width = 0, height = 0;

    Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
};

// Camera on the +z world axis at `distance`, looking back at the origin,
// with focal length chosen so a head-sized object fills ~60% of the frame.
Camera default_camera(int width, int height, double distance = 0.45);

void validate_camera(const Camera& camera);

// Projects a camera-frame point. Throws if depth <= near.
Vec2 project(const Camera& camera, const Vec3& camera_point, double near_clip = 1e-6);

struct RenderConfig {
    Vec3 background_color{0.55, 0.58, 0.62};   // linear RGB, used when no image is set
    const ImageRGB8* background_image = nullptr;  // optional, stretched to the frame
    double background_depth = 0.95;            // depth of the stationary plane
    Vec3 light_direction{-0.35, -0.45, -0.85}; // direction light travels, world frame
    double ambient = 0.35;
    double near_clip = 0.01;
    double far_clip = 100.0;
};

// Per-pixel hit record from rasterizing one mesh: triangle id (-1 = none),
// perspective-correct object-space barycentrics, and camera-space depth.
struct VisibilityBuffer {
    int width = 0, height = 0;
    std::vector<std::int32_t> triangle;  // -1 where only background is visible
    std::vector<double> bary;            // 3 per pixel
    std::vector<double> depth;

    VisibilityBuffer() = default;
    VisibilityBuffer(int w, int h)
        : width(w),
          height(h),
          triangle(static_cast<std::size_t>(w) * h, -1),
          bary(static_cast<std::size_t>(w) * h * 3, 0.0),
          depth(static_cast<std::size_t>(w) * h, 0.0) {}

    bool covered(int x, int y) const {
        return triangle[static_cast<std::size_t>(y) * width + x] >= 0;
    }
};

struct RenderResult {
    ImageRGB8 frame;
    DepthMap depth;
    VisibilityBuffer visibility;
};

// Z-buffered scanline rasterization with a top-left fill rule and pixel
// centers at (i+0.5, j+0.5). Perspective-correct barycentrics are stored per
// pixel so the hit point on the 3D surface can be reconstructed exactly.
// Depth ties go to the lower triangle id. `threads` > 1 splits the image into
// row bands; the output is bit-identical to the serial pass.
RenderResult rasterize(const Mesh& mesh, const Camera& camera, const RenderConfig& config,
                       const std::vector<Vec3>& vertex_albedo, int threads = 1);

// Depth + visibility only (no shading); used for target-frame occlusion tests.
void rasterize_depth(const Mesh& mesh, const Camera& camera, const RenderConfig& config,
                     VisibilityBuffer* visibility, int threads = 1);

}  // namespace faceflow
