#include "faceflow/decompose.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "faceflow/error.hpp"

namespace faceflow {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct NormalizedFrame {
    double cx, cy, scale;

    double nx(double x) const { return (x - cx) / scale; }
    double ny(double y) const { return (y - cy) / scale; }
};

// Rows of the design matrix for one pixel position, normalized coordinates.
void design_rows(MotionModelKind kind, double x, double y, Vector& row_u, Vector& row_v) {
    switch (kind) {
        case MotionModelKind::translation:
            row_u << 1, 0;
            row_v << 0, 1;
            break;
        case MotionModelKind::similarity:
            row_u << 1, 0, x, -y;
            row_v << 0, 1, y, x;
            break;
        case MotionModelKind::affine:
            row_u << 1, x, y, 0, 0, 0;
            row_v << 0, 0, 0, 1, x, y;
            break;
    }
}

Vec2 displacement_normalized(MotionModelKind kind, const Vector& c, double x, double y) {
    switch (kind) {
        case MotionModelKind::translation:
            return {c[0], c[1]};
        case MotionModelKind::similarity:
            return {c[0] + c[2] * x - c[3] * y, c[1] + c[3] * x + c[2] * y};
        case MotionModelKind::affine:
            return {c[0] + c[1] * x + c[2] * y, c[3] + c[4] * x + c[5] * y};
    }
    return {};
}

// Convert coefficients fitted in normalized coordinates back to the public
// pixel-position convention.
std::vector<double> denormalize(MotionModelKind kind, const Vector& c, const NormalizedFrame& f) {
    switch (kind) {
        case MotionModelKind::translation:
            return {c[0], c[1]};
        case MotionModelKind::similarity: {
            double s = c[2] / f.scale, r = c[3] / f.scale;
            return {c[0] - s * f.cx + r * f.cy, c[1] - r * f.cx - s * f.cy, s, r};
        }
        case MotionModelKind::affine: {
            double b = c[1] / f.scale, cc = c[2] / f.scale;
            double e = c[4] / f.scale, ff = c[5] / f.scale;
            return {c[0] - b * f.cx - cc * f.cy, b, cc, c[3] - e * f.cx - ff * f.cy, e, ff};
        }
    }
    return {};
}

struct MaskedPixels {
    std::vector<double> x, y;    // normalized positions
    std::vector<double> fu, fv;  // flow values, pixels
};

MaskedPixels collect(const FlowField& flow, const Bitmask& mask, const NormalizedFrame& frame) {
    MaskedPixels px;
    for (int y = 0; y < flow.height; ++y)
        for (int x = 0; x < flow.width; ++x) {
            if (!mask.get(x, y)) continue;
            if (!flow.valid.empty() && !flow.valid.get(x, y)) continue;
            std::size_t i = flow.index(x, y);
            px.x.push_back(frame.nx(x + 0.5));
            px.y.push_back(frame.ny(y + 0.5));
            px.fu.push_back(flow.u[i]);
            px.fv.push_back(flow.v[i]);
        }
    return px;
}

// Weighted least squares via normal equations accumulated in pixel order.
Vector solve_weighted(const MaskedPixels& px, MotionModelKind kind,
                      const std::vector<double>& weights) {
    const auto dim = static_cast<Eigen::Index>(MotionModel::coefficient_count(kind));
    Matrix ata = Matrix::Zero(dim, dim);
    Vector atb = Vector::Zero(dim);
    Vector row_u(dim), row_v(dim);
    for (std::size_t i = 0; i < px.x.size(); ++i) {
        double w = weights.empty() ? 1.0 : weights[i];
        if (w == 0.0) continue;
        design_rows(kind, px.x[i], px.y[i], row_u, row_v);
        ata.noalias() += w * (row_u * row_u.transpose() + row_v * row_v.transpose());
        atb.noalias() += w * (row_u * px.fu[i] + row_v * px.fv[i]);
    }
    Eigen::FullPivLU<Matrix> lu(ata);
    lu.setThreshold(1e-10);
    if (lu.rank() < dim)
        throw_rank("fit_head_motion: masked support is rank-deficient for " +
                   std::string(motion_model_name(kind)) + " model");
    return lu.solve(atb);
}

std::vector<double> residuals(const MaskedPixels& px, MotionModelKind kind, const Vector& c) {
    std::vector<double> r(px.x.size());
    for (std::size_t i = 0; i < px.x.size(); ++i) {
        Vec2 d = displacement_normalized(kind, c, px.x[i], px.y[i]);
        r[i] = std::hypot(px.fu[i] - d.x, px.fv[i] - d.y);
    }
    return r;
}

double rho(RobustLoss loss, double r, double k) {
    if (loss == RobustLoss::huber)
        return r <= k ? 0.5 * r * r : k * (r - 0.5 * k);
    // tukey
    if (r >= k) return k * k / 6.0;
    double t = 1.0 - (r / k) * (r / k);
    return k * k / 6.0 * (1.0 - t * t * t);
}

double irls_weight(RobustLoss loss, double r, double k) {
    if (loss == RobustLoss::huber) return r <= k ? 1.0 : k / r;
    if (r >= k) return 0.0;
    double t = 1.0 - (r / k) * (r / k);
    return t * t;
}

double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double hi = values[mid];
    if (values.size() % 2 == 1) return hi;
    std::nth_element(values.begin(), values.begin() + mid - 1, values.begin() + mid);
    return 0.5 * (values[mid - 1] + hi);
}

}  // namespace

std::size_t MotionModel::coefficient_count(MotionModelKind kind) {
    switch (kind) {
        case MotionModelKind::translation: return 2;
        case MotionModelKind::similarity: return 4;
        case MotionModelKind::affine: return 6;
    }
    return 0;
}

Vec2 MotionModel::displacement(double x, double y) const {
    const auto& c = coefficients;
    switch (kind) {
        case MotionModelKind::translation:
            return {c[0], c[1]};
        case MotionModelKind::similarity:
            return {c[0] + c[2] * x - c[3] * y, c[1] + c[3] * x + c[2] * y};
        case MotionModelKind::affine:
            return {c[0] + c[1] * x + c[2] * y, c[3] + c[4] * x + c[5] * y};
    }
    return {};
}

const char* motion_model_name(MotionModelKind kind) {
    switch (kind) {
        case MotionModelKind::translation: return "translation";
        case MotionModelKind::similarity: return "similarity";
        case MotionModelKind::affine: return "affine";
    }
    return "?";
}

MotionModelKind motion_model_from_name(const std::string& name) {
    if (name == "translation") return MotionModelKind::translation;
    if (name == "similarity") return MotionModelKind::similarity;
    if (name == "affine") return MotionModelKind::affine;
    throw_invalid("unknown motion model '" + name + "'");
}

MotionModel fit_head_motion(const FlowField& flow, const Bitmask& face_mask,
                            MotionModelKind kind, const IRLSConfig& config,
                            FitDiagnostics* diagnostics) {
    if (config.scale <= 0.0) throw_invalid("irls: scale must be positive");
    if (config.max_iterations < 1) throw_invalid("irls: max_iterations must be >= 1");
    if (config.tolerance <= 0.0) throw_invalid("irls: tolerance must be positive");
    if (face_mask.width() != flow.width || face_mask.height() != flow.height)
        throw_invalid("irls: mask dimensions do not match flow");

    NormalizedFrame frame{flow.width / 2.0, flow.height / 2.0,
                          std::max(flow.width, flow.height) / 2.0};
    MaskedPixels px = collect(flow, face_mask, frame);
    const std::size_t dim = MotionModel::coefficient_count(kind);
    if (px.x.size() < dim)
        throw_rank("fit_head_motion: mask selects " + std::to_string(px.x.size()) +
                   " pixels, need at least " + std::to_string(dim));

    FitDiagnostics diag;
    diag.pixels_used = px.x.size();

    // Start from the unweighted least-squares solution.
    Vector coeff = solve_weighted(px, kind, {});
    std::vector<double> res = residuals(px, kind, coeff);

    // Loss scale, fixed for the whole run so IRLS keeps its majorize-minimize
    // monotonicity. Huber: user threshold. Tukey: 4.685 x MAD sigma x scale.
    double k;
    if (config.loss == RobustLoss::huber) {
        k = config.scale;
    } else {
        double sigma = 1.4826 * median_of(res);
        diag.robust_sigma = sigma;
        if (sigma <= 0.0) {
            // Initial fit is already exact on at least half the support.
            diag.converged = true;
            diag.iterations = 0;
            diag.final_objective = 0.0;
            diag.inlier_fraction = 1.0;
            diag.objective_per_iteration.push_back(0.0);
            if (diagnostics) *diagnostics = diag;
            return MotionModel{kind, denormalize(kind, coeff, frame)};
        }
        k = 4.685 * sigma * config.scale;
    }

    auto objective = [&](const std::vector<double>& r) {
        double sum = 0.0;
        for (double v : r) sum += rho(config.loss, v, k);
        return sum;
    };

    diag.objective_per_iteration.push_back(objective(res));

    std::vector<double> weights(px.x.size());
    for (int iter = 0; iter < config.max_iterations; ++iter) {
        for (std::size_t i = 0; i < res.size(); ++i)
            weights[i] = irls_weight(config.loss, res[i], k);

        Vector next;
        try {
            next = solve_weighted(px, kind, weights);
        } catch (const Error&) {
            // Weights zeroed out too much support; keep the current iterate.
            break;
        }
        double delta = (next - coeff).cwiseAbs().maxCoeff();
        coeff = next;
        res = residuals(px, kind, coeff);
        diag.objective_per_iteration.push_back(objective(res));
        diag.iterations = iter + 1;
        if (delta < config.tolerance) {
            diag.converged = true;
            break;
        }
    }

    diag.final_objective = diag.objective_per_iteration.back();
    double inlier_cutoff = 3.0 * (config.loss == RobustLoss::huber ? config.scale
                                                                   : diag.robust_sigma);
    std::size_t inliers = 0;
    for (double r : res)
        if (r < inlier_cutoff) ++inliers;
    diag.inlier_fraction = static_cast<double>(inliers) / static_cast<double>(res.size());
    if (diagnostics) *diagnostics = diag;

    return MotionModel{kind, denormalize(kind, coeff, frame)};
}

double robust_objective(const FlowField& flow, const Bitmask& face_mask,
                        const MotionModel& model, const IRLSConfig& config,
                        double fixed_sigma) {
    double k = config.loss == RobustLoss::huber
                   ? config.scale
                   : 4.685 * (fixed_sigma > 0.0 ? fixed_sigma : config.scale) * config.scale;
    double sum = 0.0;
    for (int y = 0; y < flow.height; ++y)
        for (int x = 0; x < flow.width; ++x) {
            if (!face_mask.get(x, y)) continue;
            if (!flow.valid.empty() && !flow.valid.get(x, y)) continue;
            std::size_t i = flow.index(x, y);
            Vec2 d = model.displacement(x + 0.5, y + 0.5);
            sum += rho(config.loss, std::hypot(flow.u[i] - d.x, flow.v[i] - d.y), k);
        }
    return sum;
}

DecomposeResult decompose_flow(const FlowField& flow, const Bitmask& face_mask,
                               const MotionModel& model, bool extrapolate_beyond_mask) {
    if (model.coefficients.size() != MotionModel::coefficient_count(model.kind))
        throw_invalid("decompose_flow: coefficient count does not match model kind");
    for (double c : model.coefficients)
        if (!std::isfinite(c)) throw_invalid("decompose_flow: non-finite coefficient");
    if (!extrapolate_beyond_mask &&
        (face_mask.width() != flow.width || face_mask.height() != flow.height))
        throw_invalid("decompose_flow: mask dimensions do not match flow");

    DecomposeResult result;
    result.head = FlowField(flow.width, flow.height);
    result.expression = FlowField(flow.width, flow.height);
    result.head.valid = flow.valid;
    result.expression.valid = flow.valid;

    // Per-component split with exact float32 additivity: if f != h + e after
    // rounding, recompute h as the complement; the planted value differs by
    // at most one ulp.
    auto split = [&result](float f, float h_model, float& h_out, float& e_out) {
        float h = h_model;
        float e = f - h;
        if (h + e != f) {
            h = f - e;
            e = f - h;
            ++result.additivity_fixups;
        }
        if (h + e != f) {  // pathological magnitudes only
            h = f;
            e = 0.0f;
        }
        h_out = h;
        e_out = e;
    };

    for (int y = 0; y < flow.height; ++y)
        for (int x = 0; x < flow.width; ++x) {
            std::size_t i = flow.index(x, y);
            bool in_mask = extrapolate_beyond_mask || face_mask.get(x, y);
            float hu = 0.f, hv = 0.f;
            if (in_mask) {
                Vec2 d = model.displacement(x + 0.5, y + 0.5);
                hu = static_cast<float>(d.x);
                hv = static_cast<float>(d.y);
            }
            split(flow.u[i], hu, result.head.u[i], result.expression.u[i]);
            split(flow.v[i], hv, result.head.v[i], result.expression.v[i]);
        }
    return result;
}

}  // namespace faceflow
