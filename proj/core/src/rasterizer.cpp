#include "faceflow/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "faceflow/error.hpp"

namespace faceflow {

namespace {

struct ProjectedVertex {
    double u, v;   // screen position, pixel units
    double z;      // camera-space depth
    Vec3 camera;   // camera-space position
    bool valid;    // z > near
};

double edge_function(double ax, double ay, double bx, double by, double px, double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Top-left fill rule for a triangle normalized to positive screen area.
// A pixel exactly on an edge belongs to the triangle iff the edge is a top
// edge (horizontal, running toward +x) or a left edge (running toward -y).
bool edge_is_top_left(double ex, double ey) {
    return (ey == 0.0 && ex > 0.0) || ey < 0.0;
}

std::uint8_t to_srgb8(double linear) {
    double v = std::clamp(linear, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(255.0 * std::pow(v, 1.0 / 2.2)));
}

std::vector<Vec3> smooth_vertex_normals(const Mesh& mesh) {
    std::vector<Vec3> normals(mesh.vertices.size());
    for (const Triangle& tri : *mesh.triangles) {
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        Vec3 n = (b - a).cross(c - a);  // area-weighted
        normals[tri[0]] += n;
        normals[tri[1]] += n;
        normals[tri[2]] += n;
    }
    for (Vec3& n : normals) n = n.normalized();
    return normals;
}

struct RasterContext {
    const Mesh* mesh;
    const Camera* camera;
    const RenderConfig* config;
    const std::vector<Vec3>* albedo;        // nullptr => depth-only pass
    const std::vector<Vec3>* normals;       // world-space smooth normals
    std::vector<ProjectedVertex> projected;
    Vec3 light;                              // normalized direction light travels

    ImageRGB8* frame;
    DepthMap* depth_map;
    VisibilityBuffer* visibility;
};

// Rasterizes every triangle into the row band [y_begin, y_end). Bands do not
// overlap, and each band sees triangles in id order, so the result is
// bit-identical for any band partition.
void raster_band(RasterContext& ctx, int y_begin, int y_end) {
    const Camera& cam = *ctx.camera;
    const RenderConfig& cfg = *ctx.config;
    const int width = cam.width;
    const auto& tris = *ctx.mesh->triangles;

    for (std::size_t tid = 0; tid < tris.size(); ++tid) {
        const Triangle& tri = tris[tid];
        const ProjectedVertex& p0 = ctx.projected[tri[0]];
        const ProjectedVertex& p1 = ctx.projected[tri[1]];
        const ProjectedVertex& p2 = ctx.projected[tri[2]];
        if (!p0.valid || !p1.valid || !p2.valid) continue;  // near-plane cull

        double area = edge_function(p0.u, p0.v, p1.u, p1.v, p2.u, p2.v);
        if (area == 0.0) continue;

        // Normalize to positive screen area so the inside test is w >= 0.
        double s0u = p0.u, s0v = p0.v, s1u = p1.u, s1v = p1.v, s2u = p2.u, s2v = p2.v;
        double z0 = p0.z, z1 = p1.z, z2 = p2.z;
        bool flipped = false;
        if (area < 0.0) {
            std::swap(s1u, s2u);
            std::swap(s1v, s2v);
            std::swap(z1, z2);
            area = -area;
            flipped = true;
        }

        double min_u = std::min({s0u, s1u, s2u});
        double max_u = std::max({s0u, s1u, s2u});
        double min_v = std::min({s0v, s1v, s2v});
        double max_v = std::max({s0v, s1v, s2v});
        int x_lo = std::max(0, static_cast<int>(std::floor(min_u - 0.5)));
        int x_hi = std::min(width - 1, static_cast<int>(std::ceil(max_u - 0.5)));
        int y_lo = std::max(y_begin, static_cast<int>(std::floor(min_v - 0.5)));
        int y_hi = std::min(y_end - 1, static_cast<int>(std::ceil(max_v - 0.5)));
        if (x_lo > x_hi || y_lo > y_hi) continue;

        const bool tl0 = edge_is_top_left(s2u - s1u, s2v - s1v);
        const bool tl1 = edge_is_top_left(s0u - s2u, s0v - s2v);
        const bool tl2 = edge_is_top_left(s1u - s0u, s1v - s0v);

        for (int y = y_lo; y <= y_hi; ++y) {
            double py = y + 0.5;
            for (int x = x_lo; x <= x_hi; ++x) {
                double px = x + 0.5;
                double w0 = edge_function(s1u, s1v, s2u, s2v, px, py);
                double w1 = edge_function(s2u, s2v, s0u, s0v, px, py);
                double w2 = edge_function(s0u, s0v, s1u, s1v, px, py);
                bool inside = (w0 > 0.0 || (w0 == 0.0 && tl0)) &&
                              (w1 > 0.0 || (w1 == 0.0 && tl1)) &&
                              (w2 > 0.0 || (w2 == 0.0 && tl2));
                if (!inside) continue;

                double l0 = w0 / area, l1 = w1 / area, l2 = w2 / area;
                double denom = l0 / z0 + l1 / z1 + l2 / z2;
                double z = 1.0 / denom;
                if (z >= cfg.far_clip) continue;

                std::size_t idx = static_cast<std::size_t>(y) * width + x;
                double& zbuf = ctx.visibility->depth[idx];
                std::int32_t& tbuf = ctx.visibility->triangle[idx];
                // Strict test + id-ordered traversal: lower id wins exact ties.
                if (z >= zbuf) continue;

                double b0 = (l0 / z0) * z;
                double b1 = (l1 / z1) * z;
                double b2 = (l2 / z2) * z;
                if (flipped) std::swap(b1, b2);

                zbuf = z;
                tbuf = static_cast<std::int32_t>(tid);
                ctx.visibility->bary[idx * 3 + 0] = b0;
                ctx.visibility->bary[idx * 3 + 1] = b1;
                ctx.visibility->bary[idx * 3 + 2] = b2;

                if (ctx.albedo) {
                    const Vec3& c0 = (*ctx.albedo)[tri[0]];
                    const Vec3& c1 = (*ctx.albedo)[tri[1]];
                    const Vec3& c2 = (*ctx.albedo)[tri[2]];
                    Vec3 albedo = c0 * b0 + c1 * b1 + c2 * b2;
                    const Vec3& n0 = (*ctx.normals)[tri[0]];
                    const Vec3& n1 = (*ctx.normals)[tri[1]];
                    const Vec3& n2 = (*ctx.normals)[tri[2]];
                    Vec3 n = (n0 * b0 + n1 * b1 + n2 * b2).normalized();
                    double diffuse = std::max(0.0, -n.dot(ctx.light));
                    double intensity = cfg.ambient + (1.0 - cfg.ambient) * diffuse;
                    std::uint8_t* out = ctx.frame->at(x, y);
                    out[0] = to_srgb8(albedo.x * intensity);
                    out[1] = to_srgb8(albedo.y * intensity);
                    out[2] = to_srgb8(albedo.z * intensity);
                }
            }
        }
    }

    if (ctx.depth_map) {
        for (int y = y_begin; y < y_end; ++y)
            for (int x = 0; x < width; ++x)
                ctx.depth_map->at(x, y) =
                    static_cast<float>(ctx.visibility->depth[static_cast<std::size_t>(y) * width + x]);
    }
}

void run_bands(RasterContext& ctx, int threads) {
    const int height = ctx.camera->height;
    threads = std::clamp(threads, 1, height);
    if (threads == 1) {
        raster_band(ctx, 0, height);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    int rows_per = (height + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        int y0 = t * rows_per;
        int y1 = std::min(height, y0 + rows_per);
        if (y0 >= y1) break;
        pool.emplace_back([&ctx, y0, y1] { raster_band(ctx, y0, y1); });
    }
    for (auto& th : pool) th.join();
}

void prepare(RasterContext& ctx, const Mesh& mesh, const Camera& camera,
             const RenderConfig& config) {
    validate_camera(camera);
    if (config.near_clip >= config.far_clip)
        throw_invalid("render config: near clip must be below far clip");
    if (!mesh.triangles) throw_invalid("mesh: missing topology");
    for (const Vec3& v : mesh.vertices)
        if (!(std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z)))
            throw_invalid("mesh: non-finite vertex");

    ctx.mesh = &mesh;
    ctx.camera = &camera;
    ctx.config = &config;
    ctx.projected.resize(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        Vec3 c = camera.to_camera(mesh.vertices[i]);
        ProjectedVertex& pv = ctx.projected[i];
        pv.camera = c;
        pv.valid = c.z > config.near_clip;
        if (pv.valid) {
            pv.u = camera.fx * c.x / c.z + camera.cx;
            pv.v = camera.fy * c.y / c.z + camera.cy;
            pv.z = c.z;
        } else {
            pv.u = pv.v = 0.0;
            pv.z = 0.0;
        }
    }
}

}  // namespace

Camera default_camera(int width, int height, double distance) {
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.fx = cam.fy = 1.1 * height;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    // Looking down the -z world axis from (0, 0, distance); y down in image.
    cam.rotation = Mat3{{{1, 0, 0}, {0, -1, 0}, {0, 0, -1}}};
    cam.translation = Vec3{0.0, 0.0, distance};
    return cam;
}

void validate_camera(const Camera& camera) {
    if (camera.fx <= 0.0 || camera.fy <= 0.0)
        throw_invalid("camera: focal lengths must be positive");
    if (camera.width < 8 || camera.height < 8)
        throw_invalid("camera: image size must be at least 8x8");
    // Orthonormality of the extrinsic rotation.
    Mat3 rt = camera.rotation.transposed();
    Mat3 prod = camera.rotation * rt;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double expect = i == j ? 1.0 : 0.0;
            if (std::abs(prod.m[i][j] - expect) > 1e-9)
                throw_invalid("camera: rotation is not orthonormal");
        }
}

Vec2 project(const Camera& camera, const Vec3& camera_point, double near_clip) {
    if (!(camera_point.z > near_clip))
        throw_invalid("project: point is behind the camera near plane");
    return {camera.fx * camera_point.x / camera_point.z + camera.cx,
            camera.fy * camera_point.y / camera_point.z + camera.cy};
}

RenderResult rasterize(const Mesh& mesh, const Camera& camera, const RenderConfig& config,
                       const std::vector<Vec3>& vertex_albedo, int threads) {
    RenderResult result;
    result.frame = ImageRGB8(camera.width, camera.height);
    result.depth = DepthMap(camera.width, camera.height);
    result.visibility = VisibilityBuffer(camera.width, camera.height);
    std::fill(result.visibility.depth.begin(), result.visibility.depth.end(),
              config.background_depth);

    // Background first: stretched image or flat color.
    if (config.background_image && config.background_image->width > 0) {
        const ImageRGB8& bg = *config.background_image;
        for (int y = 0; y < camera.height; ++y) {
            int sy = static_cast<int>(static_cast<std::int64_t>(y) * bg.height / camera.height);
            for (int x = 0; x < camera.width; ++x) {
                int sx = static_cast<int>(static_cast<std::int64_t>(x) * bg.width / camera.width);
                const std::uint8_t* src = bg.at(sx, sy);
                std::uint8_t* dst = result.frame.at(x, y);
                dst[0] = src[0];
                dst[1] = src[1];
                dst[2] = src[2];
            }
        }
    } else {
        std::uint8_t r = to_srgb8(config.background_color.x);
        std::uint8_t g = to_srgb8(config.background_color.y);
        std::uint8_t b = to_srgb8(config.background_color.z);
        for (int y = 0; y < camera.height; ++y)
            for (int x = 0; x < camera.width; ++x) {
                std::uint8_t* dst = result.frame.at(x, y);
                dst[0] = r;
                dst[1] = g;
                dst[2] = b;
            }
    }

    std::vector<Vec3> albedo = vertex_albedo;
    if (albedo.empty()) albedo.assign(mesh.vertices.size(), Vec3{0.75, 0.75, 0.75});
    if (albedo.size() != mesh.vertices.size())
        throw_invalid("rasterize: albedo size does not match vertex count");

    RasterContext ctx;
    prepare(ctx, mesh, camera, config);
    std::vector<Vec3> normals = smooth_vertex_normals(mesh);
    ctx.albedo = &albedo;
    ctx.normals = &normals;
    ctx.light = config.light_direction.normalized();
    ctx.frame = &result.frame;
    ctx.depth_map = &result.depth;
    ctx.visibility = &result.visibility;
    run_bands(ctx, threads);
    return result;
}

void rasterize_depth(const Mesh& mesh, const Camera& camera, const RenderConfig& config,
                     VisibilityBuffer* visibility, int threads) {
    *visibility = VisibilityBuffer(camera.width, camera.height);
    std::fill(visibility->depth.begin(), visibility->depth.end(), config.background_depth);

    RasterContext ctx;
    prepare(ctx, mesh, camera, config);
    ctx.albedo = nullptr;
    ctx.normals = nullptr;
    ctx.frame = nullptr;
    ctx.depth_map = nullptr;
    ctx.visibility = visibility;
    run_bands(ctx, threads);
}

}  // namespace faceflow
