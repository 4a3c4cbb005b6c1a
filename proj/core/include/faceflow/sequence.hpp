#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "faceflow/face_model.hpp"

namespace faceflow {

// Per-component bounds for sampling target parameters when a spec does not
// carry explicit values. Magnitudes are radians (pose) and blendshape units.
struct SampleBounds {
    double global_rotation_max = 0.3;
    double jaw_rotation_max = 0.4;
    double psi_min = -1.5;
    double psi_max = 1.5;
    double beta_min = -1.0;
    double beta_max = 1.0;
};

// An n-frame clip: frame t carries parameters (beta, t*theta/n, t*psi/n),
// so frame 0 is the rest pose and frame n hits the targets exactly.
struct SequenceSpec {
    const FaceModelAsset* asset = nullptr;
    FaceParams target;
    int n = 5;
    std::uint64_t seed = 0;
    bool allow_custom_length = false;  // permit any n >= 2 instead of {5,10,15,20}
};

// One training pair: the source frame plus both targets. `facial_target`
// advances pose and expression; `head_target` advances pose only, holding the
// source frame's expression.
struct MeshPairSample {
    Mesh source;         // frame t
    Mesh facial_target;  // frame t+1, full motion
    Mesh head_target;    // frame t+1, pose only
    int t = 0;           // pair index in [1, n-1]
};

void validate_sequence_spec(const SequenceSpec& spec);

// Frame t of the full-motion track: M(beta, t*theta/n, t*psi/n), 0 <= t <= n.
Mesh facial_mesh(const SequenceSpec& spec, int t);

// Pose-only target for pair t: M(beta, (t+1)*theta/n, t*psi/n), 1 <= t+1 <= n.
Mesh head_mesh(const SequenceSpec& spec, int t_plus_1);

// All n-1 pairs of the clip, t = 1..n-1.
std::vector<MeshPairSample> generate_sequence(const SequenceSpec& spec);

// Deterministic target-parameter draw within bounds. Global rotation and jaw
// get a random direction with bounded magnitude; neck and eye joints stay at
// zero; beta/psi are drawn per component.
FaceParams sample_target_params(const FaceModelAsset& asset, const SampleBounds& bounds,
                                std::uint64_t seed);

// JSON spec files: either explicit {asset_path, n, seed, beta, theta, psi}
// or {asset_path, n, seed, sample_bounds{...}}.
struct SequenceSpecFile {
    std::string asset_path;
    int n = 5;
    std::uint64_t seed = 0;
    bool has_explicit_params = false;
    FaceParams params;
    SampleBounds bounds;
};

SequenceSpecFile load_sequence_spec(const std::string& path);
void save_sequence_spec(const SequenceSpecFile& spec, const std::string& path);

}  // namespace faceflow
