#include "faceflow/flow.hpp"

#include <algorithm>
#include <cmath>

#include "faceflow/error.hpp"

namespace faceflow {

std::size_t Bitmask::count() const {
    std::size_t n = 0;
    for (std::uint64_t block : bits_) n += static_cast<std::size_t>(__builtin_popcountll(block));
    return n;
}

Bitmask coverage_mask(const VisibilityBuffer& visibility) {
    Bitmask mask(visibility.width, visibility.height);
    for (int y = 0; y < visibility.height; ++y)
        for (int x = 0; x < visibility.width; ++x)
            if (visibility.covered(x, y)) mask.set(x, y, true);
    return mask;
}

FlowField compute_flow(const Mesh& source_mesh, const Mesh& target_mesh, const Camera& camera,
                       const VisibilityBuffer& source_visibility, const RenderConfig& config) {
    if (source_mesh.triangles != target_mesh.triangles &&
        *source_mesh.triangles != *target_mesh.triangles)
        throw_invalid("compute_flow: source and target meshes do not share topology");
    if (source_mesh.vertices.size() != target_mesh.vertices.size())
        throw_invalid("compute_flow: vertex count mismatch");
    if (source_visibility.width != camera.width || source_visibility.height != camera.height)
        throw_invalid("compute_flow: visibility buffer does not match camera size");

    const int width = camera.width, height = camera.height;
    FlowField flow(width, height);

    // Target-frame depth for the occlusion test.
    VisibilityBuffer target_visibility;
    rasterize_depth(target_mesh, camera, config, &target_visibility);

    // Occlusion tolerance: 1e-3 of the covered depth range (both frames).
    double min_depth = config.background_depth, max_depth = 0.0;
    bool any_covered = false;
    auto track_range = [&](const VisibilityBuffer& vis) {
        for (std::size_t i = 0; i < vis.depth.size(); ++i)
            if (vis.triangle[i] >= 0) {
                any_covered = true;
                min_depth = std::min(min_depth, vis.depth[i]);
                max_depth = std::max(max_depth, vis.depth[i]);
            }
    };
    track_range(source_visibility);
    track_range(target_visibility);
    double depth_range = any_covered ? std::max(config.background_depth, max_depth) - min_depth
                                     : config.background_depth;
    double eps_z = 1e-3 * std::max(depth_range, 1e-12);

    flow.occluded = Bitmask(width, height);
    const Topology& topology = *source_mesh.triangles;

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            std::size_t idx = flow.index(x, y);
            std::int32_t tid = source_visibility.triangle[idx];
            // Background: static plane, exact zero flow, valid.
            flow.valid.set(x, y, true);
            if (tid < 0) continue;

            const Triangle& tri = topology[static_cast<std::size_t>(tid)];
            double b0 = source_visibility.bary[idx * 3 + 0];
            double b1 = source_visibility.bary[idx * 3 + 1];
            double b2 = source_visibility.bary[idx * 3 + 2];

            Vec3 target_point = target_mesh.vertices[tri[0]] * b0 +
                                target_mesh.vertices[tri[1]] * b1 +
                                target_mesh.vertices[tri[2]] * b2;
            Vec3 cam_point = camera.to_camera(target_point);
            if (!(cam_point.z > config.near_clip)) {
                // Moved behind the camera: no defined displacement.
                flow.valid.set(x, y, false);
                flow.occluded.set(x, y, true);
                continue;
            }
            double u_t = camera.fx * cam_point.x / cam_point.z + camera.cx;
            double v_t = camera.fy * cam_point.y / cam_point.z + camera.cy;
            flow.u[idx] = static_cast<float>(u_t - (x + 0.5));
            flow.v[idx] = static_cast<float>(v_t - (y + 0.5));

            // Depth test against the target frame at the landing pixel.
            int tx = static_cast<int>(std::floor(u_t));
            int ty = static_cast<int>(std::floor(v_t));
            if (tx < 0 || tx >= width || ty < 0 || ty >= height) {
                flow.occluded.set(x, y, true);
            } else {
                double target_depth =
                    target_visibility.depth[static_cast<std::size_t>(ty) * width + tx];
                if (cam_point.z > target_depth + eps_z) flow.occluded.set(x, y, true);
            }
        }
    }
    return flow;
}

DecomposedFlows compute_decomposed_flows(const MeshPairSample& sample, const Camera& camera,
                                         const RenderConfig& config) {
    VisibilityBuffer source_visibility;
    rasterize_depth(sample.source, camera, config, &source_visibility);
    return compute_decomposed_flows(sample, camera, config, source_visibility);
}

DecomposedFlows compute_decomposed_flows(const MeshPairSample& sample, const Camera& camera,
                                         const RenderConfig& config,
                                         const VisibilityBuffer& source_visibility) {
    DecomposedFlows flows;
    flows.facial = compute_flow(sample.source, sample.facial_target, camera, source_visibility,
                                config);
    flows.head = compute_flow(sample.source, sample.head_target, camera, source_visibility,
                              config);

    // Expression flow is the one subtraction, stored; all three fields share
    // the source-frame validity.
    flows.expression = FlowField(camera.width, camera.height);
    flows.expression.valid = flows.facial.valid;
    flows.expression.occluded = flows.facial.occluded;
    for (std::size_t i = 0; i < flows.expression.u.size(); ++i) {
        flows.expression.u[i] = flows.facial.u[i] - flows.head.u[i];
        flows.expression.v[i] = flows.facial.v[i] - flows.head.v[i];
    }
    flows.head.valid = flows.facial.valid;
    return flows;
}

}  // namespace faceflow
