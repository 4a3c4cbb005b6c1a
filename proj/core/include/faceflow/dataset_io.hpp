#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "faceflow/flow.hpp"
#include "faceflow/image.hpp"

namespace faceflow {

// Middlebury .flo container: magic float 202021.25, i32 width, i32 height,
// row-major interleaved (u, v) float32, all little-endian.
void write_flo(const FlowField& flow, const std::string& path);
FlowField read_flo(const std::string& path);

// Grayscale PFM ("Pf"), negative scale = little-endian float32, bottom-up
// row order.
void write_pfm(const DepthMap& depth, const std::string& path);
DepthMap read_pfm(const std::string& path);

enum class Split { train, test, val };
const char* split_name(Split split);
Split split_from_name(const std::string& name);

struct SequenceRecord {
    std::uint64_t id = 0;
    int n = 0;
    std::uint64_t seed = 0;
    int width = 0, height = 0;
    Split split = Split::train;
    bool complete = true;
    std::vector<std::string> frame_paths;       // n entries, relative to root
    std::vector<std::string> flow_facial_paths; // n-1
    std::vector<std::string> flow_head_paths;   // n-1
    std::vector<std::string> flow_expr_paths;   // n-1
    std::vector<std::string> depth_paths;       // n
};

struct DatasetManifest {
    int version = 1;
    std::string asset_fingerprint;  // hex fnv1a of the asset file
    double background_depth = 0.0;
    std::vector<SequenceRecord> sequences;

    std::size_t pair_count() const;
    std::size_t pair_count(Split split) const;
};

void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

// Structural checks against the dataset root: every referenced file exists
// and flow/depth dimensions agree with the frame dimensions.
void validate_manifest(const DatasetManifest& manifest, const std::string& root);

// Largest-remainder apportionment of sequences over (train, test, val) after
// a deterministic shuffle. Assignment is per sequence id, never per pair.
void split_dataset(std::vector<SequenceRecord>& records,
                   const std::array<int, 3>& ratios, std::uint64_t seed);

std::array<std::size_t, 3> apportion(std::size_t total, const std::array<int, 3>& ratios);

}  // namespace faceflow
