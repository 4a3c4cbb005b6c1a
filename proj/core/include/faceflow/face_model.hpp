#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "faceflow/math.hpp"

namespace faceflow {

// Deformable head model: blendshapes for identity and expression plus linear
// blend skinning over a tiny fixed skeleton (global + neck, jaw, two eyes).

enum class Region : std::uint8_t {
    lips = 0,
    forehead = 1,
    cheeks = 2,
    nose = 3,
    eyes = 4,
    other = 5,
};

inline const char* region_name(Region r) {
    switch (r) {
        case Region::lips: return "lips";
        case Region::forehead: return "forehead";
        case Region::cheeks: return "cheeks";
        case Region::nose: return "nose";
        case Region::eyes: return "eyes";
        case Region::other: return "other";
    }
    return "other";
}

using Triangle = std::array<std::uint32_t, 3>;
using Topology = std::vector<Triangle>;

// Joint order is fixed: neck(0), jaw(1), left eye(2), right eye(3).
// skin_weights column 0 is the global (whole-head) transform; joint j maps
// to column j+1.
inline constexpr int kNumJoints = 4;

struct FaceModelAsset {
    std::vector<Vec3> template_vertices;            // n_v
    std::shared_ptr<const Topology> triangles;      // n_f, shared with posed meshes
    std::vector<std::vector<Vec3>> shape_basis;     // |beta| x n_v
    std::vector<std::vector<Vec3>> expression_basis;// |psi| x n_v
    std::array<Vec3, kNumJoints> joint_offsets{};   // template-space positions
    std::array<int, kNumJoints> kinematic_tree{};   // parent joint, -1 = global
    std::vector<double> skin_weights;               // n_v x (k+1), row-major
    std::vector<Region> region_labels;              // n_v
    std::vector<std::uint32_t> landmark_indices;

    std::size_t vertex_count() const { return template_vertices.size(); }
    std::size_t triangle_count() const { return triangles ? triangles->size() : 0; }
    std::size_t shape_dim() const { return shape_basis.size(); }
    std::size_t expression_dim() const { return expression_basis.size(); }

    double skin_weight(std::size_t vertex, std::size_t column) const {
        return skin_weights[vertex * (kNumJoints + 1) + column];
    }
};

struct FaceParams {
    std::vector<double> beta;   // |beta|
    std::vector<double> psi;    // |psi|
    std::vector<double> theta;  // 3k+3 axis-angle radians; first 3 = global rotation

    static FaceParams zeros(std::size_t n_beta, std::size_t n_psi) {
        FaceParams p;
        p.beta.assign(n_beta, 0.0);
        p.psi.assign(n_psi, 0.0);
        p.theta.assign(3 * kNumJoints + 3, 0.0);
        return p;
    }
};

struct Mesh {
    std::vector<Vec3> vertices;
    std::shared_ptr<const Topology> triangles;  // shared topology, never copied
};

// Throws Error{invalid_argument,...} naming the first violated invariant.
void validate_asset(const FaceModelAsset& asset);

// M(beta, theta, psi) -> mesh. Blendshape offsets are applied at the template,
// then vertices are skinned against the joint transforms composed along the
// kinematic tree. Zero parameters reproduce the template bit-exactly.
Mesh evaluate_model(const FaceModelAsset& asset, const FaceParams& params);

// Per-joint world transforms (index 0 = global) for the given pose, exposed
// for the skinning-convexity checks.
std::array<Affine, kNumJoints + 1> pose_transforms(const FaceModelAsset& asset,
                                                   const std::vector<double>& theta);

// Deterministic head-like stand-in asset: triangulated ellipsoid with a jaw
// wedge, smooth low-frequency shape basis, localized expression basis and
// distance-falloff skin weights. Same seed => bit-identical asset.
FaceModelAsset make_synthetic_asset(std::uint64_t seed, std::size_t n_v,
                                    std::size_t n_beta, std::size_t n_psi);

// Binary asset container (magic "FFNA", little-endian, float64 geometry).
void save_asset(const FaceModelAsset& asset, const std::string& path);
FaceModelAsset load_asset(const std::string& path);

bool assets_equal(const FaceModelAsset& a, const FaceModelAsset& b);

// Per-vertex linear-RGB albedo derived from region labels plus a fixed
// per-vertex jitter. Not part of the asset file; purely a render input.
std::vector<Vec3> default_albedo(const FaceModelAsset& asset);

}  // namespace faceflow
