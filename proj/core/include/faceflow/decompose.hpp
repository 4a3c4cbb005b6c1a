#pragma once

#include <string>
#include <vector>

#include "faceflow/flow.hpp"

namespace faceflow {

// Parametric 2D motion models mapping a pixel position to a displacement.
// Coefficient layout (position (x, y) in pixel units):
//   translation: [tx, ty]                u = tx,                 v = ty
//   similarity:  [tx, ty, s, r]          u = tx + s*x - r*y,     v = ty + r*x + s*y
//   affine:      [a, b, c, d, e, f]      u = a + b*x + c*y,      v = d + e*x + f*y
enum class MotionModelKind { translation, similarity, affine };

struct MotionModel {
    MotionModelKind kind = MotionModelKind::translation;
    std::vector<double> coefficients;

    Vec2 displacement(double x, double y) const;
    static std::size_t coefficient_count(MotionModelKind kind);
};

const char* motion_model_name(MotionModelKind kind);
MotionModelKind motion_model_from_name(const std::string& name);

enum class RobustLoss { huber, tukey };

struct IRLSConfig {
    RobustLoss loss = RobustLoss::huber;
    // Huber: threshold in pixels. Tukey: multiplier on the MAD-estimated
    // robust sigma (cutoff = 4.685 * sigma * scale).
    double scale = 1.0;
    int max_iterations = 50;
    double tolerance = 1e-10;  // convergence on max coefficient change
};

struct FitDiagnostics {
    int iterations = 0;
    bool converged = false;
    double final_objective = 0.0;
    double inlier_fraction = 0.0;            // residual < 3 * scale estimate
    std::vector<double> objective_per_iteration;
    std::size_t pixels_used = 0;
    double robust_sigma = 0.0;               // fixed scale used by tukey
};

// Robust fit of a motion model to the masked flow by iteratively reweighted
// least squares, starting from the unweighted solution. The robust objective
// is non-increasing across iterations (fixed loss scale, MM property).
// Throws Error{rank,...} when the masked support is underdetermined.
MotionModel fit_head_motion(const FlowField& flow, const Bitmask& face_mask,
                            MotionModelKind kind, const IRLSConfig& config,
                            FitDiagnostics* diagnostics = nullptr);

struct DecomposeResult {
    FlowField head;
    FlowField expression;
    std::size_t additivity_fixups = 0;  // pixels needing float32 compensation
};

// head(p) = model(p) on masked pixels (everywhere if extrapolate) else 0;
// expression = flow - head, adjusted so head + expression == flow bit-exactly
// in float32 on every pixel.
DecomposeResult decompose_flow(const FlowField& flow, const Bitmask& face_mask,
                               const MotionModel& model, bool extrapolate_beyond_mask = false);

// Robust objective value of a model against masked flow; exposed for the
// model-nesting checks.
double robust_objective(const FlowField& flow, const Bitmask& face_mask,
                        const MotionModel& model, const IRLSConfig& config,
                        double fixed_sigma = 0.0);

}  // namespace faceflow
