#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "faceflow/dataset_io.hpp"
#include "faceflow/eval.hpp"
#include "faceflow/sequence.hpp"

namespace faceflow {

// Everything a `gen` run needs; the global seed fully determines all sampled
// parameters, so reruns are byte-identical regardless of worker count.
struct GenerationConfig {
    std::string asset_path;          // empty: synthesize one into the output root
    std::uint64_t asset_seed = 7;
    std::size_t asset_vertices = 500;
    std::size_t asset_shape_dims = 4;
    std::size_t asset_expr_dims = 8;

    int sequence_count = 10;
    std::vector<int> lengths = {5, 10, 15, 20};  // cycled over sequences
    int width = 128, height = 128;
    std::uint64_t seed = 42;
    int workers = 1;
    std::array<int, 3> split_ratios = {97, 2, 1};
    SampleBounds bounds;

    std::string output_root;
    std::string background_dir;      // optional PNG pool; flat color fallback
    double camera_distance = 0.45;
    double background_depth = 0.95;
};

struct SequenceFailure {
    std::uint64_t id = 0;
    std::string kind;     // "validation" | "io" | "format" | "internal"
    std::string message;
};

struct GenerationResult {
    DatasetManifest manifest;
    std::vector<SequenceFailure> failures;
    std::string manifest_path;
};

// Generates all sequences (meshes -> frames -> flows -> depth), writes the
// dataset tree plus manifest.json, and assigns split tags. Sequences that
// fail are flagged incomplete in the manifest and reported in `failures`.
GenerationResult run_generation(const GenerationConfig& config);

// Dataset-level evaluation: per-pair depth-masked EPE of predicted facial
// flow against ground truth, grouped by motion scale (sequence length n).
struct DatasetEvalResult {
    std::map<int, EvalReport> by_length;  // key: n
    EvalReport overall;
    std::vector<std::string> missing_predictions;
    std::size_t pairs_evaluated = 0;
};

// `prediction_dir` mirrors the dataset layout: seq_<id>/flow_f_<t>.flo.
// The face mask is depth < background_depth - epsilon; epsilon defaults to
// 1e-3 x background_depth when <= 0.
DatasetEvalResult evaluate_predictions(const std::string& dataset_root,
                                       const std::string& prediction_dir,
                                       double mask_epsilon = 0.0);

std::string dataset_eval_to_json(const DatasetEvalResult& result);

}  // namespace faceflow
