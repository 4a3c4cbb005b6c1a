#include "faceflow/sequence.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "faceflow/error.hpp"
#include "faceflow/rng.hpp"

namespace faceflow {

namespace {

using json = nlohmann::ordered_json;

bool standard_length(int n) { return n == 5 || n == 10 || n == 15 || n == 20; }

// Shared scaling so that equal (numerator, n) pairs produce bit-identical
// parameters across facial_mesh and head_mesh.
std::vector<double> scale_params(const std::vector<double>& target, int numerator, int n) {
    std::vector<double> out(target.size());
    for (std::size_t i = 0; i < target.size(); ++i)
        out[i] = target[i] * static_cast<double>(numerator) / static_cast<double>(n);
    return out;
}

FaceParams params_at(const SequenceSpec& spec, int theta_numerator, int psi_numerator) {
    FaceParams p;
    p.beta = spec.target.beta;  // identity is constant across the clip
    p.theta = scale_params(spec.target.theta, theta_numerator, spec.n);
    p.psi = scale_params(spec.target.psi, psi_numerator, spec.n);
    return p;
}

}  // namespace

void validate_sequence_spec(const SequenceSpec& spec) {
    if (!spec.asset) throw_invalid("sequence spec: missing asset");
    if (spec.n < 2) throw_invalid("sequence spec: n must be >= 2");
    if (!spec.allow_custom_length && !standard_length(spec.n))
        throw_invalid("sequence spec: n must be one of {5, 10, 15, 20} "
                      "(set allow_custom_length for other values)");
    if (spec.target.theta.size() != 3 * kNumJoints + 3)
        throw_invalid("sequence spec: theta has wrong length");
}

Mesh facial_mesh(const SequenceSpec& spec, int t) {
    validate_sequence_spec(spec);
    if (t < 0 || t > spec.n)
        throw_invalid("facial_mesh: t=" + std::to_string(t) + " outside [0, n]");
    return evaluate_model(*spec.asset, params_at(spec, t, t));
}

Mesh head_mesh(const SequenceSpec& spec, int t_plus_1) {
    validate_sequence_spec(spec);
    if (t_plus_1 < 1 || t_plus_1 > spec.n)
        throw_invalid("head_mesh: t+1=" + std::to_string(t_plus_1) + " outside [1, n]");
    // Pose advances to t+1, expression stays at t.
    return evaluate_model(*spec.asset, params_at(spec, t_plus_1, t_plus_1 - 1));
}

std::vector<MeshPairSample> generate_sequence(const SequenceSpec& spec) {
    validate_sequence_spec(spec);
    std::vector<MeshPairSample> samples;
    samples.reserve(spec.n - 1);
    Mesh prev = facial_mesh(spec, 1);
    for (int t = 1; t <= spec.n - 1; ++t) {
        MeshPairSample sample;
        sample.t = t;
        sample.source = std::move(prev);
        sample.facial_target = facial_mesh(spec, t + 1);
        sample.head_target = head_mesh(spec, t + 1);
        prev = sample.facial_target;  // reuse as next source
        samples.push_back(std::move(sample));
    }
    return samples;
}

FaceParams sample_target_params(const FaceModelAsset& asset, const SampleBounds& bounds,
                                std::uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed));
    FaceParams p = FaceParams::zeros(asset.shape_dim(), asset.expression_dim());

    for (double& b : p.beta) b = uniform_range(rng, bounds.beta_min, bounds.beta_max);

    // Global rotation: random axis, magnitude within the bound.
    {
        double zc = uniform_range(rng, -1.0, 1.0);
        double az = uniform_range(rng, 0.0, 2.0 * M_PI);
        double s = std::sqrt(std::max(0.0, 1.0 - zc * zc));
        Vec3 axis{s * std::cos(az), s * std::sin(az), zc};
        double mag = uniform_range(rng, 0.0, bounds.global_rotation_max);
        p.theta[0] = axis.x * mag;
        p.theta[1] = axis.y * mag;
        p.theta[2] = axis.z * mag;
    }

    // Jaw (joint 1): mostly an opening rotation about +x with a little sway.
    {
        double open_angle = uniform_range(rng, 0.0, bounds.jaw_rotation_max);
        double sway = uniform_range(rng, -0.1, 0.1) * bounds.jaw_rotation_max;
        double norm = std::sqrt(open_angle * open_angle + sway * sway);
        if (norm > bounds.jaw_rotation_max && norm > 0.0) {
            double s = bounds.jaw_rotation_max / norm;
            open_angle *= s;
            sway *= s;
        }
        p.theta[3 + 3 * 1 + 0] = open_angle;
        p.theta[3 + 3 * 1 + 1] = sway;
    }

    for (double& e : p.psi) e = uniform_range(rng, bounds.psi_min, bounds.psi_max);
    return p;
}

SequenceSpecFile load_sequence_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw_format(path + ": invalid JSON: " + e.what());
    }

    SequenceSpecFile spec;
    try {
        spec.asset_path = j.at("asset_path").get<std::string>();
        spec.n = j.at("n").get<int>();
        spec.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("beta") || j.contains("theta") || j.contains("psi")) {
            spec.has_explicit_params = true;
            spec.params.beta = j.at("beta").get<std::vector<double>>();
            spec.params.theta = j.at("theta").get<std::vector<double>>();
            spec.params.psi = j.at("psi").get<std::vector<double>>();
        } else if (j.contains("sample_bounds")) {
            const json& b = j["sample_bounds"];
            SampleBounds& sb = spec.bounds;
            sb.global_rotation_max = b.value("global_rotation_max", sb.global_rotation_max);
            sb.jaw_rotation_max = b.value("jaw_rotation_max", sb.jaw_rotation_max);
            sb.psi_min = b.value("psi_min", sb.psi_min);
            sb.psi_max = b.value("psi_max", sb.psi_max);
            sb.beta_min = b.value("beta_min", sb.beta_min);
            sb.beta_max = b.value("beta_max", sb.beta_max);
        }
    } catch (const json::exception& e) {
        throw_format(path + ": " + e.what());
    }
    return spec;
}

void save_sequence_spec(const SequenceSpecFile& spec, const std::string& path) {
    json j;
    j["asset_path"] = spec.asset_path;
    j["n"] = spec.n;
    j["seed"] = spec.seed;
    if (spec.has_explicit_params) {
        j["beta"] = spec.params.beta;
        j["theta"] = spec.params.theta;
        j["psi"] = spec.params.psi;
    } else {
        j["sample_bounds"] = {{"global_rotation_max", spec.bounds.global_rotation_max},
                              {"jaw_rotation_max", spec.bounds.jaw_rotation_max},
                              {"psi_min", spec.bounds.psi_min},
                              {"psi_max", spec.bounds.psi_max},
                              {"beta_min", spec.bounds.beta_min},
                              {"beta_max", spec.bounds.beta_max}};
    }
    std::ofstream out(path);
    if (!out) throw_io("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

}  // namespace faceflow
