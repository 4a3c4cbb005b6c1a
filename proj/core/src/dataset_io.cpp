#include "faceflow/dataset_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "faceflow/error.hpp"
#include "faceflow/rng.hpp"

namespace faceflow {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr float kFloMagic = 202021.25f;
constexpr std::int32_t kMaxFlowDim = 100'000'000;

}  // namespace

void write_flo(const FlowField& flow, const std::string& path) {
    if (flow.width <= 0 || flow.height <= 0)
        throw_invalid("write_flo: dimensions must be positive");
    for (std::size_t i = 0; i < flow.u.size(); ++i)
        if (!std::isfinite(flow.u[i]) || !std::isfinite(flow.v[i]))
            throw_invalid("write_flo: non-finite flow value");

    detail::ByteWriter w;
    w.f32(kFloMagic);
    w.i32(flow.width);
    w.i32(flow.height);
    for (int y = 0; y < flow.height; ++y)
        for (int x = 0; x < flow.width; ++x) {
            std::size_t i = flow.index(x, y);
            w.f32(flow.u[i]);
            w.f32(flow.v[i]);
        }
    w.write_file(path);
}

FlowField read_flo(const std::string& path) {
    detail::ByteReader r = detail::ByteReader::from_file(path);
    float magic = r.f32("magic");
    if (magic != kFloMagic)
        throw_format(path + ": bad .flo magic (expected 202021.25)");
    std::int32_t width = r.i32("width");
    std::int32_t height = r.i32("height");
    if (width <= 0 || height <= 0 || width > kMaxFlowDim || height > kMaxFlowDim)
        throw_format(path + ": implausible dimensions");
    if (static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height) >
        std::uint64_t(1) << 34)
        throw_format(path + ": size overflow");

    FlowField flow(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            std::size_t i = flow.index(x, y);
            flow.u[i] = r.f32("flow data");
            flow.v[i] = r.f32("flow data");
        }
    if (!r.at_end()) throw_format(path + ": trailing bytes after flow data");
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) flow.valid.set(x, y, true);
    return flow;
}

void write_pfm(const DepthMap& depth, const std::string& path) {
    if (depth.width <= 0 || depth.height <= 0)
        throw_invalid("write_pfm: dimensions must be positive");

    detail::ByteWriter w;
    std::string header = "Pf\n" + std::to_string(depth.width) + " " +
                         std::to_string(depth.height) + "\n-1.0\n";
    w.bytes(header.data(), header.size());
    // PFM stores rows bottom-up.
    for (int y = depth.height - 1; y >= 0; --y)
        for (int x = 0; x < depth.width; ++x) w.f32(depth.at(x, y));
    w.write_file(path);
}

DepthMap read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open '" + path + "'");

    auto token = [&](const char* what) {
        std::string t;
        char c;
        // Single whitespace separators per the PFM convention.
        while (in.get(c)) {
            if (c == ' ' || c == '\n' || c == '\r' || c == '\t') {
                if (!t.empty()) break;
                continue;
            }
            t.push_back(c);
        }
        if (t.empty()) throw_format(path + ": truncated header while reading " + std::string(what));
        return t;
    };

    std::string magic = token("magic");
    if (magic == "PF") throw_format(path + ": color PFM not supported, expected grayscale 'Pf'");
    if (magic != "Pf") throw_format(path + ": bad PFM magic");

    int width = 0, height = 0;
    double scale = 0.0;
    try {
        width = std::stoi(token("width"));
        height = std::stoi(token("height"));
        scale = std::stod(token("scale"));
    } catch (const std::exception&) {
        throw_format(path + ": malformed PFM header");
    }
    if (width <= 0 || height <= 0 || width > kMaxFlowDim || height > kMaxFlowDim)
        throw_format(path + ": implausible dimensions");
    if (scale >= 0.0) throw_format(path + ": big-endian PFM not supported");

    DepthMap depth(width, height);
    std::vector<float> row(width);
    for (int y = height - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(width) * 4);
        if (!in) throw_format(path + ": truncated pixel data");
        for (int x = 0; x < width; ++x) depth.at(x, y) = row[x];
    }
    char extra;
    if (in.get(extra)) throw_format(path + ": trailing bytes after pixel data");
    return depth;
}

const char* split_name(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::test: return "test";
        case Split::val: return "val";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "test") return Split::test;
    if (name == "val") return Split::val;
    throw_format("unknown split tag '" + name + "'");
}

std::size_t DatasetManifest::pair_count() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.flow_facial_paths.size();
    return n;
}

std::size_t DatasetManifest::pair_count(Split split) const {
    std::size_t n = 0;
    for (const auto& s : sequences)
        if (s.split == split) n += s.flow_facial_paths.size();
    return n;
}

namespace {

json record_to_json(const SequenceRecord& r) {
    return json{{"id", r.id},
                {"n", r.n},
                {"seed", r.seed},
                {"width", r.width},
                {"height", r.height},
                {"split", split_name(r.split)},
                {"complete", r.complete},
                {"frames", r.frame_paths},
                {"flow_facial", r.flow_facial_paths},
                {"flow_head", r.flow_head_paths},
                {"flow_expression", r.flow_expr_paths},
                {"depth", r.depth_paths}};
}

SequenceRecord record_from_json(const json& j) {
    SequenceRecord r;
    r.id = j.at("id").get<std::uint64_t>();
    r.n = j.at("n").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.split = split_from_name(j.at("split").get<std::string>());
    r.complete = j.at("complete").get<bool>();
    r.frame_paths = j.at("frames").get<std::vector<std::string>>();
    r.flow_facial_paths = j.at("flow_facial").get<std::vector<std::string>>();
    r.flow_head_paths = j.at("flow_head").get<std::vector<std::string>>();
    r.flow_expr_paths = j.at("flow_expression").get<std::vector<std::string>>();
    r.depth_paths = j.at("depth").get<std::vector<std::string>>();
    return r;
}

}  // namespace

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    json j;
    j["version"] = manifest.version;
    j["asset_fingerprint"] = manifest.asset_fingerprint;
    j["background_depth"] = manifest.background_depth;
    j["counts"] = {{"sequences", manifest.sequences.size()},
                   {"pairs", manifest.pair_count()},
                   {"train_pairs", manifest.pair_count(Split::train)},
                   {"test_pairs", manifest.pair_count(Split::test)},
                   {"val_pairs", manifest.pair_count(Split::val)}};
    j["sequences"] = json::array();
    for (const auto& r : manifest.sequences) j["sequences"].push_back(record_to_json(r));

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw_io("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
    if (!out) throw_io("short write to '" + path + "'");
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw_format(path + ": invalid JSON: " + e.what());
    }

    DatasetManifest manifest;
    try {
        manifest.version = j.at("version").get<int>();
        manifest.asset_fingerprint = j.at("asset_fingerprint").get<std::string>();
        manifest.background_depth = j.value("background_depth", 0.0);
        for (const json& rec : j.at("sequences")) manifest.sequences.push_back(record_from_json(rec));
        const json& counts = j.at("counts");
        if (counts.at("sequences").get<std::size_t>() != manifest.sequences.size())
            throw_format(path + ": sequence count disagrees with record list");
        if (counts.at("pairs").get<std::size_t>() != manifest.pair_count())
            throw_format(path + ": pair count disagrees with record list");
    } catch (const json::exception& e) {
        throw_format(path + ": " + e.what());
    }
    return manifest;
}

void validate_manifest(const DatasetManifest& manifest, const std::string& root) {
    for (const auto& r : manifest.sequences) {
        if (r.n < 2) throw_format("sequence " + std::to_string(r.id) + ": n < 2");
        if (r.frame_paths.size() != static_cast<std::size_t>(r.n) ||
            r.depth_paths.size() != static_cast<std::size_t>(r.n) ||
            r.flow_facial_paths.size() != static_cast<std::size_t>(r.n - 1) ||
            r.flow_head_paths.size() != static_cast<std::size_t>(r.n - 1) ||
            r.flow_expr_paths.size() != static_cast<std::size_t>(r.n - 1))
            throw_format("sequence " + std::to_string(r.id) + ": path list lengths disagree with n");

        auto check_exists = [&](const std::string& rel) {
            fs::path p = fs::path(root) / rel;
            if (!fs::exists(p)) throw_format("missing file: " + p.string());
            return p.string();
        };

        for (const auto& rel : r.frame_paths) {
            std::string p = check_exists(rel);
            int w = 0, h = 0;
            read_png_size(p, &w, &h);
            if (w != r.width || h != r.height)
                throw_format("sequence " + std::to_string(r.id) + ": frame size " +
                             std::to_string(w) + "x" + std::to_string(h) +
                             " disagrees with manifest " + std::to_string(r.width) + "x" +
                             std::to_string(r.height));
        }
        auto check_flo = [&](const std::string& rel) {
            std::string p = check_exists(rel);
            FlowField f = read_flo(p);
            if (f.width != r.width || f.height != r.height)
                throw_format("sequence " + std::to_string(r.id) + ": flow dimensions of " + p +
                             " disagree with frame dimensions");
        };
        for (const auto& rel : r.flow_facial_paths) check_flo(rel);
        for (const auto& rel : r.flow_head_paths) check_flo(rel);
        for (const auto& rel : r.flow_expr_paths) check_flo(rel);
        for (const auto& rel : r.depth_paths) {
            std::string p = check_exists(rel);
            DepthMap d = read_pfm(p);
            if (d.width != r.width || d.height != r.height)
                throw_format("sequence " + std::to_string(r.id) + ": depth dimensions of " + p +
                             " disagree with frame dimensions");
        }
    }
}

std::array<std::size_t, 3> apportion(std::size_t total, const std::array<int, 3>& ratios) {
    for (int r : ratios)
        if (r < 0) throw_invalid("split ratios must be non-negative");
    long long ratio_sum = ratios[0] + ratios[1] + ratios[2];
    if (ratio_sum <= 0) throw_invalid("split ratios must sum to a positive value");

    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        double quota = static_cast<double>(total) * ratios[i] / static_cast<double>(ratio_sum);
        counts[i] = static_cast<std::size_t>(std::floor(quota));
        remainders[i] = quota - std::floor(quota);
        assigned += counts[i];
    }
    // Distribute the remainder by largest fractional part; ties favor the
    // earlier split (train before test before val).
    while (assigned < total) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (remainders[i] > remainders[best]) best = i;
        counts[best] += 1;
        remainders[best] = -1.0;
        ++assigned;
    }
    return counts;
}

void split_dataset(std::vector<SequenceRecord>& records, const std::array<int, 3>& ratios,
                   std::uint64_t seed) {
    if (records.empty()) throw_invalid("split_dataset: no records");

    // Deterministic Fisher-Yates over record positions (std::shuffle is
    // implementation-defined).
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(splitmix64(seed));
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::size_t j = uniform_index(rng, i + 1);
        std::swap(order[i], order[j]);
    }

    auto counts = apportion(records.size(), ratios);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        Split tag = pos < counts[0]                ? Split::train
                    : pos < counts[0] + counts[1] ? Split::test
                                                   : Split::val;
        records[order[pos]].split = tag;
    }
}

}  // namespace faceflow
