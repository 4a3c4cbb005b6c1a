#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "faceflow/face_model.hpp"
#include "faceflow/flow.hpp"
#include "faceflow/image.hpp"

namespace faceflow {

// Sparse point correspondences between two frames, optionally tagged with a
// face region. Positions are in pixels within the source/target frames.
struct CorrespondenceSet {
    std::vector<Vec2> source;  // C1
    std::vector<Vec2> target;  // C2
    std::vector<std::optional<Region>> region;  // empty or one entry per point
};

CorrespondenceSet load_correspondences_csv(const std::string& path);
void save_correspondences_csv(const CorrespondenceSet& corr, const std::string& path);

struct EvalReport {
    double epe = 0.0;
    std::size_t count = 0;
    std::map<std::string, double> region_epe;
    std::map<std::string, std::size_t> region_count;
    std::string mask_source;

    // Count-weighted mean over the selected regions; lips+cheeks+eyes is the
    // default subset for vertex-style evaluation.
    double region_subset_epe(const std::vector<std::string>& regions) const;
};

std::string report_to_json(const EvalReport& report);

// Mean endpoint error over masked pixels.
EvalReport masked_epe(const FlowField& predicted, const FlowField& reference,
                      const Bitmask& mask);

// Foreground mask from a depth map: pixels strictly closer than
// background_depth - epsilon.
Bitmask depth_mask(const DepthMap& depth, double background_depth, double epsilon);

// Sparse endpoint error: mean over points of
//   || (C2 - C1) - Flow(C1) ||           (default)
//   || (C1 - C2) - Flow(C1) ||           (literal_sign = true)
// with the flow sampled bilinearly at C1. Per-region means are reported when
// tags are present.
EvalReport landmark_epe(const FlowField& flow, const CorrespondenceSet& corr,
                        bool literal_sign = false);

// Bilinear flow sample at a subpixel position (pixel centers at x+0.5);
// border neighbors clamp.
Vec2 sample_flow_bilinear(const FlowField& flow, double x, double y);

struct EmbeddingStats {
    double std_dev = 0.0;             // mean over dimensions of per-dim stddev
    double coefficient_of_variation = 0.0;  // std / ||mean vector|| * 100
    double mean_pairwise_cosine = 0.0;
};

// Diversity statistics of m row vectors of dimension d (population standard
// deviation). Throws for m < 2 or a zero mean vector (cv undefined).
EmbeddingStats embedding_stats(const std::vector<std::vector<double>>& vectors);

// Optical-flow color coding: hue from direction, saturation from
// magnitude / max_magnitude, zero flow maps to white. max_magnitude <= 0
// auto-scales to the field's maximum; larger flows clamp to full saturation.
ImageRGB8 flow_to_colorwheel_png(const FlowField& flow, double max_magnitude = 0.0);

// Color for a single flow vector under the same wheel (radius in [0,1]).
void flow_color(double u, double v, std::uint8_t rgb[3]);

}  // namespace faceflow
