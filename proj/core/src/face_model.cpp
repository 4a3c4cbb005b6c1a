#include "faceflow/face_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "binary_io.hpp"
#include "faceflow/error.hpp"
#include "faceflow/rng.hpp"

namespace faceflow {

namespace {

constexpr double kWeightSumTol = 1e-6;

// Head semi-axes in length-units (meters): width, height, depth. The face
// looks along +z, y is up.
constexpr double kAxisX = 0.078;
constexpr double kAxisY = 0.105;
constexpr double kAxisZ = 0.092;

double smooth01(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

bool finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

}  // namespace

void validate_asset(const FaceModelAsset& asset) {
    const std::size_t n_v = asset.template_vertices.size();
    if (n_v < 3) throw_invalid("template_vertices: fewer than 3 vertices");
    if (!asset.triangles || asset.triangles->empty())
        throw_invalid("triangles: topology missing or empty");
    if (asset.shape_basis.empty()) throw_invalid("shape_basis: |beta| must be >= 1");
    if (asset.expression_basis.empty()) throw_invalid("expression_basis: |psi| must be >= 1");

    for (const Vec3& v : asset.template_vertices)
        if (!finite(v)) throw_invalid("template_vertices: non-finite coordinate");

    for (const Triangle& tri : *asset.triangles) {
        for (std::uint32_t idx : tri)
            if (idx >= n_v) throw_invalid("triangles: vertex index out of range");
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
            throw_invalid("triangles: degenerate triangle with repeated index");
    }

    for (const auto& basis : asset.shape_basis)
        if (basis.size() != n_v) throw_invalid("shape_basis: vertex count mismatch");
    for (const auto& basis : asset.expression_basis)
        if (basis.size() != n_v) throw_invalid("expression_basis: vertex count mismatch");

    if (asset.skin_weights.size() != n_v * (kNumJoints + 1))
        throw_invalid("skin_weights: expected n_v x (k+1) entries");
    for (std::size_t v = 0; v < n_v; ++v) {
        double sum = 0.0;
        for (int c = 0; c <= kNumJoints; ++c) {
            double w = asset.skin_weight(v, c);
            if (!(w >= 0.0)) throw_invalid("skin_weights: negative weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > kWeightSumTol)
            throw_invalid("skin_weights: row does not sum to 1");
    }

    if (asset.region_labels.size() != n_v)
        throw_invalid("region_labels: vertex count mismatch");
    for (Region r : asset.region_labels)
        if (static_cast<std::uint8_t>(r) > static_cast<std::uint8_t>(Region::other))
            throw_invalid("region_labels: unknown region value");

    for (std::uint32_t idx : asset.landmark_indices)
        if (idx >= n_v) throw_invalid("landmark_indices: vertex index out of range");

    for (int j = 0; j < kNumJoints; ++j) {
        int parent = asset.kinematic_tree[j];
        if (parent < -1 || parent >= j)
            throw_invalid("kinematic_tree: parent must precede child or be -1");
        if (!finite(asset.joint_offsets[j])) throw_invalid("joint_offsets: non-finite");
    }
}

std::array<Affine, kNumJoints + 1> pose_transforms(const FaceModelAsset& asset,
                                                   const std::vector<double>& theta) {
    if (theta.size() != 3 * kNumJoints + 3)
        throw_invalid("theta: expected " + std::to_string(3 * kNumJoints + 3) +
                      " entries, got " + std::to_string(theta.size()));

    std::array<Affine, kNumJoints + 1> world;
    world[0] = Affine{axis_angle_matrix({theta[0], theta[1], theta[2]}), Vec3{}};
    for (int j = 0; j < kNumJoints; ++j) {
        Vec3 aa{theta[3 + 3 * j], theta[4 + 3 * j], theta[5 + 3 * j]};
        Affine local = Affine::rotation_about(axis_angle_matrix(aa), asset.joint_offsets[j]);
        int parent = asset.kinematic_tree[j];
        const Affine& parent_world = (parent < 0) ? world[0] : world[parent + 1];
        world[j + 1] = parent_world.compose(local);
    }
    return world;
}

Mesh evaluate_model(const FaceModelAsset& asset, const FaceParams& params) {
    const std::size_t n_v = asset.template_vertices.size();
    if (params.beta.size() != asset.shape_basis.size())
        throw_invalid("beta: expected " + std::to_string(asset.shape_basis.size()) +
                      " entries, got " + std::to_string(params.beta.size()));
    if (params.psi.size() != asset.expression_basis.size())
        throw_invalid("psi: expected " + std::to_string(asset.expression_basis.size()) +
                      " entries, got " + std::to_string(params.psi.size()));
    for (double v : params.beta)
        if (!std::isfinite(v)) throw_invalid("beta: non-finite value");
    for (double v : params.psi)
        if (!std::isfinite(v)) throw_invalid("psi: non-finite value");
    for (double v : params.theta)
        if (!std::isfinite(v)) throw_invalid("theta: non-finite value");

    Mesh mesh;
    mesh.triangles = asset.triangles;
    mesh.vertices = asset.template_vertices;

    // Blendshapes first, applied at zero pose. Zero coefficients are skipped
    // so the identity case stays bit-exact.
    for (std::size_t a = 0; a < params.beta.size(); ++a) {
        double c = params.beta[a];
        if (c == 0.0) continue;
        const auto& basis = asset.shape_basis[a];
        for (std::size_t v = 0; v < n_v; ++v) mesh.vertices[v] += basis[v] * c;
    }
    for (std::size_t b = 0; b < params.psi.size(); ++b) {
        double c = params.psi[b];
        if (c == 0.0) continue;
        const auto& basis = asset.expression_basis[b];
        for (std::size_t v = 0; v < n_v; ++v) mesh.vertices[v] += basis[v] * c;
    }

    const auto transforms = pose_transforms(asset, params.theta);

    // v' = v + sum_c w_c (T_c v - v). Identity transforms contribute exactly
    // zero, so zero pose leaves the shaped vertices untouched.
    for (std::size_t v = 0; v < n_v; ++v) {
        Vec3 p = mesh.vertices[v];
        Vec3 out = p;
        for (int c = 0; c <= kNumJoints; ++c) {
            double w = asset.skin_weight(v, c);
            if (w == 0.0) continue;
            out += (transforms[c].apply(p) - p) * w;
        }
        mesh.vertices[v] = out;
    }
    return mesh;
}

// ---------------------------------------------------------------------------
// Synthetic asset generation

namespace {

struct RingLayout {
    std::size_t rings;
    std::vector<std::size_t> sizes;  // vertices per ring, top to bottom
};

RingLayout plan_rings(std::size_t interior) {
    RingLayout layout;
    std::size_t rings = static_cast<std::size_t>(
        std::max(1.0, std::round(std::sqrt(static_cast<double>(interior) / 2.0))));
    while (interior / rings < 3 && rings > 1) --rings;
    layout.rings = rings;
    std::size_t base = interior / rings;
    std::size_t extra = interior % rings;
    layout.sizes.assign(rings, base);
    // Spread the remainder over the middle rings.
    for (std::size_t i = 0; i < extra; ++i)
        layout.sizes[(rings / 2 + i) % rings] += 1;
    return layout;
}

// Stitch two vertex rings (ordered by azimuth) with a triangle strip. Emits
// a_size + b_size triangles, watertight, deterministic.
void stitch_rings(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                  Topology& out) {
    const std::size_t pa = a.size(), pb = b.size();
    std::size_t ai = 0, bi = 0;
    while (ai < pa || bi < pb) {
        double next_a = static_cast<double>(ai + 1) / static_cast<double>(pa);
        double next_b = static_cast<double>(bi + 1) / static_cast<double>(pb);
        bool advance_a = bi >= pb || (ai < pa && next_a <= next_b);
        if (advance_a) {
            out.push_back({a[ai % pa], b[bi % pb], a[(ai + 1) % pa]});
            ++ai;
        } else {
            out.push_back({a[ai % pa], b[bi % pb], b[(bi + 1) % pb]});
            ++bi;
        }
    }
}

// Normalized template coordinate (unit-sphere direction scaled out of the
// ellipsoid axes); used for all region / weight decisions.
Vec3 unit_coord(const Vec3& p) {
    return Vec3{p.x / kAxisX, p.y / kAxisY, p.z / kAxisZ};
}

struct ExprComponent {
    std::vector<Vec3> anchors;  // in unit-sphere coordinates
    Vec3 direction;             // displacement at anchor, length-units
    double sigma;               // falloff radius in unit coords
    bool mirror_direction_x;    // negate x for the mirrored anchor
};

std::vector<ExprComponent> expression_components() {
    std::vector<ExprComponent> c;
    // mouth open
    c.push_back({{{0.0, -0.40, 0.92}}, {0.0, -0.013, 0.001}, 0.34, false});
    // smile (mouth corners up/out)
    c.push_back({{{0.45, -0.35, 0.80}, {-0.45, -0.35, 0.80}}, {0.004, 0.008, 0.0}, 0.28, true});
    // brow raise
    c.push_back({{{0.30, 0.52, 0.80}, {-0.30, 0.52, 0.80}}, {0.0, 0.009, 0.002}, 0.30, false});
    // lid close
    c.push_back({{{0.42, 0.30, 0.85}, {-0.42, 0.30, 0.85}}, {0.0, -0.006, 0.001}, 0.22, false});
    // pucker
    c.push_back({{{0.0, -0.40, 0.92}}, {0.0, 0.002, 0.010}, 0.26, false});
    // frown
    c.push_back({{{0.45, -0.35, 0.80}, {-0.45, -0.35, 0.80}}, {-0.003, -0.007, 0.0}, 0.28, true});
    // cheek puff
    c.push_back({{{0.62, -0.12, 0.62}, {-0.62, -0.12, 0.62}}, {0.006, 0.0, 0.004}, 0.36, true});
    // nose scrunch
    c.push_back({{{0.0, 0.05, 0.98}}, {0.0, 0.004, -0.005}, 0.24, false});
    return c;
}

}  // namespace

FaceModelAsset make_synthetic_asset(std::uint64_t seed, std::size_t n_v,
                                    std::size_t n_beta, std::size_t n_psi) {
    if (n_v < 12) throw_invalid("make_synthetic_asset: n_v must be >= 12");
    if (n_beta < 1 || n_psi < 1)
        throw_invalid("make_synthetic_asset: |beta| and |psi| must be >= 1");

    std::mt19937_64 rng(splitmix64(seed));

    FaceModelAsset asset;
    asset.kinematic_tree = {-1, 0, 0, 0};  // neck under global; jaw/eyes under neck

    // --- ellipsoid template: two poles + stacked rings ---
    const std::size_t interior = n_v - 2;
    RingLayout layout = plan_rings(interior);

    asset.template_vertices.reserve(n_v);
    asset.template_vertices.push_back({0.0, kAxisY, 0.0});  // north pole (index 0)
    std::vector<std::vector<std::uint32_t>> ring_indices(layout.rings);
    for (std::size_t r = 0; r < layout.rings; ++r) {
        double polar = M_PI * static_cast<double>(r + 1) / static_cast<double>(layout.rings + 1);
        std::size_t count = layout.sizes[r];
        ring_indices[r].reserve(count);
        for (std::size_t j = 0; j < count; ++j) {
            double azimuth = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(count);
            Vec3 p{std::sin(polar) * std::sin(azimuth), std::cos(polar),
                   std::sin(polar) * std::cos(azimuth)};
            ring_indices[r].push_back(static_cast<std::uint32_t>(asset.template_vertices.size()));
            asset.template_vertices.push_back({p.x * kAxisX, p.y * kAxisY, p.z * kAxisZ});
        }
    }
    const std::uint32_t south = static_cast<std::uint32_t>(asset.template_vertices.size());
    asset.template_vertices.push_back({0.0, -kAxisY, 0.0});  // south pole

    auto topology = std::make_shared<Topology>();
    for (std::size_t j = 0; j < ring_indices[0].size(); ++j) {
        std::size_t jn = (j + 1) % ring_indices[0].size();
        topology->push_back({0, ring_indices[0][j], ring_indices[0][jn]});
    }
    for (std::size_t r = 0; r + 1 < layout.rings; ++r)
        stitch_rings(ring_indices[r], ring_indices[r + 1], *topology);
    const auto& last = ring_indices[layout.rings - 1];
    for (std::size_t j = 0; j < last.size(); ++j) {
        std::size_t jn = (j + 1) % last.size();
        topology->push_back({south, last[jn], last[j]});
    }

    // Orient all faces outward; construction gives consistent winding, so a
    // single global flip decision suffices.
    {
        const Triangle& t0 = (*topology)[0];
        Vec3 a = asset.template_vertices[t0[0]];
        Vec3 b = asset.template_vertices[t0[1]];
        Vec3 c = asset.template_vertices[t0[2]];
        Vec3 n = (b - a).cross(c - a);
        Vec3 centroid = (a + b + c) * (1.0 / 3.0);
        if (n.dot(centroid) < 0.0)
            for (Triangle& t : *topology) std::swap(t[1], t[2]);
    }
    asset.triangles = topology;

    // Low-frequency seeded bumps along the ellipsoid normal give each seed a
    // distinct but still head-like template.
    {
        std::vector<double> cs(9), ph(9);
        std::vector<Vec3> freq(9);
        for (int i = 0; i < 9; ++i) {
            cs[i] = uniform_range(rng, -1.0, 1.0);
            ph[i] = uniform_range(rng, 0.0, 2.0 * M_PI);
            freq[i] = {uniform_range(rng, -2.0, 2.0), uniform_range(rng, -2.0, 2.0),
                       uniform_range(rng, -2.0, 2.0)};
        }
        for (Vec3& p : asset.template_vertices) {
            Vec3 q = unit_coord(p);
            double f = 0.0;
            for (int i = 0; i < 9; ++i) f += cs[i] * std::sin(freq[i].dot(q) + ph[i]);
            Vec3 normal{q.x / kAxisX, q.y / kAxisY, q.z / kAxisZ};
            p += normal.normalized() * (0.004 * f / 3.0);
        }
    }

    // --- joints ---
    asset.joint_offsets[0] = {0.0, -0.80 * kAxisY, -0.10 * kAxisZ};  // neck
    asset.joint_offsets[1] = {0.0, -0.20 * kAxisY, 0.05 * kAxisZ};   // jaw pivot
    asset.joint_offsets[2] = {-0.42 * kAxisX, 0.30 * kAxisY, 0.85 * kAxisZ};  // left eye
    asset.joint_offsets[3] = {0.42 * kAxisX, 0.30 * kAxisY, 0.85 * kAxisZ};   // right eye

    // --- shape basis: smooth low-frequency normal displacement fields ---
    asset.shape_basis.resize(n_beta);
    for (std::size_t a = 0; a < n_beta; ++a) {
        std::array<double, 6> cs{}, ph{};
        std::array<Vec3, 6> freq{};
        for (int i = 0; i < 6; ++i) {
            cs[i] = uniform_range(rng, -1.0, 1.0);
            ph[i] = uniform_range(rng, 0.0, 2.0 * M_PI);
            freq[i] = {uniform_range(rng, -1.8, 1.8), uniform_range(rng, -1.8, 1.8),
                       uniform_range(rng, -1.8, 1.8)};
        }
        auto& basis = asset.shape_basis[a];
        basis.resize(n_v);
        for (std::size_t v = 0; v < n_v; ++v) {
            Vec3 q = unit_coord(asset.template_vertices[v]);
            double f = 0.0;
            for (int i = 0; i < 6; ++i) f += cs[i] * std::sin(freq[i].dot(q) + ph[i]);
            Vec3 normal = Vec3{q.x / kAxisX, q.y / kAxisY, q.z / kAxisZ}.normalized();
            basis[v] = normal * (0.006 * f / 2.0);
        }
    }

    // --- expression basis: localized Gaussian displacement around anchors ---
    const auto components = expression_components();
    asset.expression_basis.resize(n_psi);
    for (std::size_t b = 0; b < n_psi; ++b) {
        const ExprComponent& comp = components[b % components.size()];
        double gain = uniform_range(rng, 0.9, 1.1);
        auto& basis = asset.expression_basis[b];
        basis.resize(n_v);
        for (std::size_t v = 0; v < n_v; ++v) {
            Vec3 q = unit_coord(asset.template_vertices[v]);
            Vec3 d{};
            for (std::size_t k = 0; k < comp.anchors.size(); ++k) {
                Vec3 delta = q - comp.anchors[k];
                double w = std::exp(-delta.dot(delta) / (comp.sigma * comp.sigma));
                Vec3 dir = comp.direction;
                if (comp.mirror_direction_x && comp.anchors[k].x < 0.0) dir.x = -dir.x;
                d += dir * w;
            }
            basis[v] = d * gain;
        }
    }

    // --- region labels (priority: eyes, nose, lips, forehead, cheeks) ---
    asset.region_labels.resize(n_v);
    const Vec3 eye_l{-0.42, 0.30, 0.85}, eye_r{0.42, 0.30, 0.85};
    for (std::size_t v = 0; v < n_v; ++v) {
        Vec3 q = unit_coord(asset.template_vertices[v]);
        Region label = Region::other;
        if ((q - eye_l).norm() < 0.30 || (q - eye_r).norm() < 0.30)
            label = Region::eyes;
        else if (std::abs(q.x) < 0.20 && q.y > -0.22 && q.y < 0.30 && q.z > 0.80)
            label = Region::nose;
        else if (std::abs(q.x) < 0.48 && q.y > -0.66 && q.y < -0.16 && q.z > 0.52)
            label = Region::lips;
        else if (q.y > 0.38 && q.z > 0.20)
            label = Region::forehead;
        else if (q.z > 0.40 && std::abs(q.x) > 0.16 && q.y > -0.50 && q.y < 0.32)
            label = Region::cheeks;
        asset.region_labels[v] = label;
    }

    // --- skin weights: distance falloff, renormalized to sum 1 ---
    asset.skin_weights.assign(n_v * (kNumJoints + 1), 0.0);
    for (std::size_t v = 0; v < n_v; ++v) {
        const Vec3 p = asset.template_vertices[v];
        const Vec3 q = unit_coord(p);
        double w_neck = 0.55 * smooth01((-0.55 - q.y) / 0.35);
        // Lower-front wedge follows the jaw; fades to zero toward the skull.
        double w_jaw = 0.85 * smooth01((-0.12 - q.y) / 0.40) * smooth01((q.z - 0.05) / 0.45) *
                       (1.0 - 0.5 * smooth01((-0.80 - q.y) / 0.15));
        double d_eye_l = (q - eye_l).norm();
        double d_eye_r = (q - eye_r).norm();
        double w_eye_l = 0.45 * std::exp(-(d_eye_l * d_eye_l) / (0.20 * 0.20));
        double w_eye_r = 0.45 * std::exp(-(d_eye_r * d_eye_r) / (0.20 * 0.20));

        double joint_sum = w_neck + w_jaw + w_eye_l + w_eye_r;
        if (joint_sum > 0.95) {
            double s = 0.95 / joint_sum;
            w_neck *= s;
            w_jaw *= s;
            w_eye_l *= s;
            w_eye_r *= s;
            joint_sum = 0.95;
        }
        double w_global = 1.0 - joint_sum;
        double raw[kNumJoints + 1] = {w_global, w_neck, w_jaw, w_eye_l, w_eye_r};
        double total = 0.0;
        for (double w : raw) total += w;
        for (int c = 0; c <= kNumJoints; ++c)
            asset.skin_weights[v * (kNumJoints + 1) + c] = raw[c] / total;
    }

    // --- landmarks: nearest vertices to canonical anchor points ---
    const Vec3 anchor_list[] = {
        {0.0, 0.05, 0.98},    // nose tip
        {0.0, -0.88, 0.40},   // chin
        {0.0, -0.40, 0.92},   // mouth center
        {0.45, -0.35, 0.80},  // mouth corner R
        {-0.45, -0.35, 0.80}, // mouth corner L
        {0.42, 0.30, 0.85},   // eye R
        {-0.42, 0.30, 0.85},  // eye L
        {0.30, 0.52, 0.80},   // brow R
        {-0.30, 0.52, 0.80},  // brow L
        {0.0, 0.72, 0.55},    // forehead center
    };
    for (const Vec3& anchor : anchor_list) {
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_idx = 0;
        for (std::size_t v = 0; v < n_v; ++v) {
            double d = (unit_coord(asset.template_vertices[v]) - anchor).norm();
            if (d < best) {
                best = d;
                best_idx = static_cast<std::uint32_t>(v);
            }
        }
        if (std::find(asset.landmark_indices.begin(), asset.landmark_indices.end(), best_idx) ==
            asset.landmark_indices.end())
            asset.landmark_indices.push_back(best_idx);
    }

    validate_asset(asset);
    return asset;
}

std::vector<Vec3> default_albedo(const FaceModelAsset& asset) {
    std::vector<Vec3> albedo(asset.vertex_count());
    for (std::size_t v = 0; v < albedo.size(); ++v) {
        Vec3 c{0.80, 0.62, 0.50};  // base skin tone
        switch (asset.region_labels[v]) {
            case Region::lips: c = {0.72, 0.38, 0.36}; break;
            case Region::eyes: c = {0.56, 0.44, 0.38}; break;
            case Region::forehead: c = {0.82, 0.65, 0.53}; break;
            case Region::cheeks: c = {0.83, 0.60, 0.50}; break;
            case Region::nose: c = {0.81, 0.61, 0.49}; break;
            case Region::other: c = {0.76, 0.58, 0.47}; break;
        }
        // Fixed per-vertex jitter so renders have some texture but stay a pure
        // function of the asset.
        std::uint64_t h = splitmix64(0xA1BEul ^ (static_cast<std::uint64_t>(v) << 1));
        double j = (static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5) * 0.06;
        c = {std::clamp(c.x + j, 0.0, 1.0), std::clamp(c.y + j, 0.0, 1.0),
             std::clamp(c.z + j, 0.0, 1.0)};
        albedo[v] = c;
    }
    return albedo;
}

// ---------------------------------------------------------------------------
// Asset file format: magic "FFNA", u32 version, u32 dims
// (n_v, n_f, |beta|, |psi|, k, n_landmarks), then float64 arrays in field
// order, region labels as u8.

namespace {
constexpr char kAssetMagic[4] = {'F', 'F', 'N', 'A'};
constexpr std::uint32_t kAssetVersion = 1;
}  // namespace

void save_asset(const FaceModelAsset& asset, const std::string& path) {
    validate_asset(asset);
    detail::ByteWriter w;
    w.bytes(kAssetMagic, 4);
    w.u32(kAssetVersion);
    w.u32(static_cast<std::uint32_t>(asset.vertex_count()));
    w.u32(static_cast<std::uint32_t>(asset.triangle_count()));
    w.u32(static_cast<std::uint32_t>(asset.shape_dim()));
    w.u32(static_cast<std::uint32_t>(asset.expression_dim()));
    w.u32(kNumJoints);
    w.u32(static_cast<std::uint32_t>(asset.landmark_indices.size()));

    for (const Vec3& v : asset.template_vertices) {
        w.f64(v.x);
        w.f64(v.y);
        w.f64(v.z);
    }
    for (const Triangle& t : *asset.triangles)
        for (std::uint32_t idx : t) w.u32(idx);
    for (const auto& basis : asset.shape_basis)
        for (const Vec3& v : basis) {
            w.f64(v.x);
            w.f64(v.y);
            w.f64(v.z);
        }
    for (const auto& basis : asset.expression_basis)
        for (const Vec3& v : basis) {
            w.f64(v.x);
            w.f64(v.y);
            w.f64(v.z);
        }
    for (const Vec3& j : asset.joint_offsets) {
        w.f64(j.x);
        w.f64(j.y);
        w.f64(j.z);
    }
    for (int parent : asset.kinematic_tree) w.i32(parent);
    for (double weight : asset.skin_weights) w.f64(weight);
    for (Region r : asset.region_labels) w.u8(static_cast<std::uint8_t>(r));
    for (std::uint32_t idx : asset.landmark_indices) w.u32(idx);

    w.write_file(path);
}

FaceModelAsset load_asset(const std::string& path) {
    detail::ByteReader r = detail::ByteReader::from_file(path);

    char magic[4];
    r.raw(magic, 4, "magic");
    if (std::memcmp(magic, kAssetMagic, 4) != 0)
        throw_format(path + ": bad magic, not an asset file");
    std::uint32_t version = r.u32("version");
    if (version != kAssetVersion)
        throw_format(path + ": unsupported version " + std::to_string(version));

    std::uint32_t n_v = r.u32("n_v");
    std::uint32_t n_f = r.u32("n_f");
    std::uint32_t n_beta = r.u32("n_beta");
    std::uint32_t n_psi = r.u32("n_psi");
    std::uint32_t k = r.u32("k");
    std::uint32_t n_landmarks = r.u32("n_landmarks");
    if (k != kNumJoints) throw_format(path + ": unsupported joint count");
    if (n_v == 0 || n_f == 0) throw_format(path + ": empty geometry");
    constexpr std::uint32_t kMaxDim = 50'000'000;
    if (n_v > kMaxDim || n_f > kMaxDim || n_beta > 4096 || n_psi > 4096 ||
        n_landmarks > kMaxDim)
        throw_format(path + ": dimensions header out of range");

    FaceModelAsset asset;
    asset.template_vertices.resize(n_v);
    for (Vec3& v : asset.template_vertices) {
        v.x = r.f64("template_vertices");
        v.y = r.f64("template_vertices");
        v.z = r.f64("template_vertices");
    }
    auto topology = std::make_shared<Topology>(n_f);
    for (Triangle& t : *topology)
        for (std::uint32_t& idx : t) idx = r.u32("triangles");
    asset.triangles = topology;

    asset.shape_basis.resize(n_beta);
    for (auto& basis : asset.shape_basis) {
        basis.resize(n_v);
        for (Vec3& v : basis) {
            v.x = r.f64("shape_basis");
            v.y = r.f64("shape_basis");
            v.z = r.f64("shape_basis");
        }
    }
    asset.expression_basis.resize(n_psi);
    for (auto& basis : asset.expression_basis) {
        basis.resize(n_v);
        for (Vec3& v : basis) {
            v.x = r.f64("expression_basis");
            v.y = r.f64("expression_basis");
            v.z = r.f64("expression_basis");
        }
    }
    for (Vec3& j : asset.joint_offsets) {
        j.x = r.f64("joint_offsets");
        j.y = r.f64("joint_offsets");
        j.z = r.f64("joint_offsets");
    }
    for (int& parent : asset.kinematic_tree) parent = r.i32("kinematic_tree");
    asset.skin_weights.resize(static_cast<std::size_t>(n_v) * (kNumJoints + 1));
    for (double& weight : asset.skin_weights) weight = r.f64("skin_weights");
    asset.region_labels.resize(n_v);
    for (Region& label : asset.region_labels) label = static_cast<Region>(r.u8("region_labels"));
    asset.landmark_indices.resize(n_landmarks);
    for (std::uint32_t& idx : asset.landmark_indices) idx = r.u32("landmark_indices");

    if (!r.at_end()) throw_format(path + ": trailing bytes after payload");

    try {
        validate_asset(asset);
    } catch (const Error& e) {
        throw_format(path + ": " + e.what());
    }
    return asset;
}

bool assets_equal(const FaceModelAsset& a, const FaceModelAsset& b) {
    auto vec3_eq = [](const Vec3& x, const Vec3& y) {
        return std::memcmp(&x, &y, sizeof(Vec3)) == 0;
    };
    if (a.vertex_count() != b.vertex_count()) return false;
    for (std::size_t i = 0; i < a.vertex_count(); ++i)
        if (!vec3_eq(a.template_vertices[i], b.template_vertices[i])) return false;
    if (*a.triangles != *b.triangles) return false;
    if (a.shape_basis.size() != b.shape_basis.size() ||
        a.expression_basis.size() != b.expression_basis.size())
        return false;
    for (std::size_t s = 0; s < a.shape_basis.size(); ++s)
        for (std::size_t i = 0; i < a.shape_basis[s].size(); ++i)
            if (!vec3_eq(a.shape_basis[s][i], b.shape_basis[s][i])) return false;
    for (std::size_t s = 0; s < a.expression_basis.size(); ++s)
        for (std::size_t i = 0; i < a.expression_basis[s].size(); ++i)
            if (!vec3_eq(a.expression_basis[s][i], b.expression_basis[s][i])) return false;
    for (int j = 0; j < kNumJoints; ++j)
        if (!vec3_eq(a.joint_offsets[j], b.joint_offsets[j])) return false;
    if (a.kinematic_tree != b.kinematic_tree) return false;
    if (a.skin_weights.size() != b.skin_weights.size()) return false;
    if (std::memcmp(a.skin_weights.data(), b.skin_weights.data(),
                    a.skin_weights.size() * sizeof(double)) != 0)
        return false;
    if (a.region_labels != b.region_labels) return false;
    if (a.landmark_indices != b.landmark_indices) return false;
    return true;
}

}  // namespace faceflow
