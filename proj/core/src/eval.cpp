#include "faceflow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "faceflow/error.hpp"

namespace faceflow {

namespace {
using json = nlohmann::ordered_json;
}

CorrespondenceSet load_correspondences_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open '" + path + "'");

    CorrespondenceSet corr;
    std::string line;
    bool saw_region = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        // Header line: id,x1,y1,x2,y2[,region]
        if (line_no == 1 && line.find("x1") != std::string::npos) continue;

        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5 && cells.size() != 6)
            throw_format(path + ":" + std::to_string(line_no) + ": expected 5 or 6 columns");
        try {
            corr.source.push_back({std::stod(cells[1]), std::stod(cells[2])});
            corr.target.push_back({std::stod(cells[3]), std::stod(cells[4])});
        } catch (const std::exception&) {
            throw_format(path + ":" + std::to_string(line_no) + ": malformed number");
        }
        if (cells.size() == 6 && !cells[5].empty()) {
            saw_region = true;
            std::string name = cells[5];
            Region region = Region::other;
            bool found = false;
            for (int ri = 0; ri <= static_cast<int>(Region::other); ++ri)
                if (name == region_name(static_cast<Region>(ri))) {
                    region = static_cast<Region>(ri);
                    found = true;
                }
            if (!found)
                throw_format(path + ":" + std::to_string(line_no) + ": unknown region '" + name + "'");
            corr.region.push_back(region);
        } else {
            corr.region.push_back(std::nullopt);
        }
    }
    if (!saw_region) corr.region.clear();
    return corr;
}

void save_correspondences_csv(const CorrespondenceSet& corr, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw_io("cannot open '" + path + "' for writing");
    out << "id,x1,y1,x2,y2,region\n";
    for (std::size_t i = 0; i < corr.source.size(); ++i) {
        out << i << "," << corr.source[i].x << "," << corr.source[i].y << ","
            << corr.target[i].x << "," << corr.target[i].y << ",";
        if (i < corr.region.size() && corr.region[i]) out << region_name(*corr.region[i]);
        out << "\n";
    }
}

double EvalReport::region_subset_epe(const std::vector<std::string>& regions) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const std::string& r : regions) {
        auto it = region_epe.find(r);
        if (it == region_epe.end()) continue;
        std::size_t c = region_count.at(r);
        sum += it->second * static_cast<double>(c);
        n += c;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

std::string report_to_json(const EvalReport& report) {
    json j;
    j["epe"] = report.epe;
    j["count"] = report.count;
    if (!report.region_epe.empty()) {
        j["regions"] = json::object();
        for (const auto& [name, value] : report.region_epe)
            j["regions"][name] = {{"epe", value}, {"count", report.region_count.at(name)}};
    }
    if (!report.mask_source.empty()) j["mask_source"] = report.mask_source;
    return j.dump(2);
}

EvalReport masked_epe(const FlowField& predicted, const FlowField& reference,
                      const Bitmask& mask) {
    if (predicted.width != reference.width || predicted.height != reference.height)
        throw_invalid("masked_epe: flow dimensions disagree");
    if (mask.width() != predicted.width || mask.height() != predicted.height)
        throw_invalid("masked_epe: mask dimensions disagree");

    double sum = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < predicted.height; ++y)
        for (int x = 0; x < predicted.width; ++x) {
            if (!mask.get(x, y)) continue;
            std::size_t i = predicted.index(x, y);
            double du = static_cast<double>(predicted.u[i]) - reference.u[i];
            double dv = static_cast<double>(predicted.v[i]) - reference.v[i];
            sum += std::hypot(du, dv);
            ++n;
        }
    if (n == 0) throw_invalid("masked_epe: mask selects no pixels");

    EvalReport report;
    report.epe = sum / static_cast<double>(n);
    report.count = n;
    return report;
}

Bitmask depth_mask(const DepthMap& depth, double background_depth, double epsilon) {
    if (epsilon <= 0.0) throw_invalid("depth_mask: epsilon must be positive");
    Bitmask mask(depth.width, depth.height);
    for (int y = 0; y < depth.height; ++y)
        for (int x = 0; x < depth.width; ++x)
            if (depth.at(x, y) < background_depth - epsilon) mask.set(x, y, true);
    return mask;
}

Vec2 sample_flow_bilinear(const FlowField& flow, double x, double y) {
    // Position relative to pixel-center lattice.
    double gx = x - 0.5, gy = y - 0.5;
    int x0 = static_cast<int>(std::floor(gx));
    int y0 = static_cast<int>(std::floor(gy));
    double ax = gx - x0, ay = gy - y0;
    auto clamp_x = [&](int v) { return std::clamp(v, 0, flow.width - 1); };
    auto clamp_y = [&](int v) { return std::clamp(v, 0, flow.height - 1); };
    int x1 = clamp_x(x0 + 1), y1 = clamp_y(y0 + 1);
    x0 = clamp_x(x0);
    y0 = clamp_y(y0);

    auto lerp2 = [&](const std::vector<float>& c) {
        double v00 = c[flow.index(x0, y0)], v10 = c[flow.index(x1, y0)];
        double v01 = c[flow.index(x0, y1)], v11 = c[flow.index(x1, y1)];
        double top = v00 * (1.0 - ax) + v10 * ax;
        double bot = v01 * (1.0 - ax) + v11 * ax;
        return top * (1.0 - ay) + bot * ay;
    };
    return {lerp2(flow.u), lerp2(flow.v)};
}

EvalReport landmark_epe(const FlowField& flow, const CorrespondenceSet& corr,
                        bool literal_sign) {
    if (corr.source.size() != corr.target.size())
        throw_invalid("landmark_epe: correspondence lists differ in length");
    if (corr.source.empty()) throw_invalid("landmark_epe: empty correspondence set");
    if (!corr.region.empty() && corr.region.size() != corr.source.size())
        throw_invalid("landmark_epe: region tags must cover all points or none");

    double sum = 0.0;
    std::map<std::string, double> region_sum;
    std::map<std::string, std::size_t> region_n;

    for (std::size_t i = 0; i < corr.source.size(); ++i) {
        const Vec2& c1 = corr.source[i];
        if (c1.x < 0.0 || c1.x >= flow.width || c1.y < 0.0 || c1.y >= flow.height)
            throw_invalid("landmark_epe: point " + std::to_string(i) + " outside flow bounds");

        Vec2 sampled = sample_flow_bilinear(flow, c1.x, c1.y);
        Vec2 displacement = literal_sign ? corr.source[i] - corr.target[i]
                                         : corr.target[i] - corr.source[i];
        double err = (displacement - sampled).norm();
        sum += err;
        if (!corr.region.empty() && corr.region[i]) {
            std::string name = region_name(*corr.region[i]);
            region_sum[name] += err;
            region_n[name] += 1;
        }
    }

    EvalReport report;
    report.count = corr.source.size();
    report.epe = sum / static_cast<double>(report.count);
    for (const auto& [name, s] : region_sum) {
        report.region_epe[name] = s / static_cast<double>(region_n[name]);
        report.region_count[name] = region_n[name];
    }
    return report;
}

EmbeddingStats embedding_stats(const std::vector<std::vector<double>>& vectors) {
    const std::size_t m = vectors.size();
    if (m < 2) throw_invalid("embedding_stats: need at least 2 vectors");
    const std::size_t d = vectors[0].size();
    if (d < 1) throw_invalid("embedding_stats: dimension must be >= 1");
    for (const auto& v : vectors)
        if (v.size() != d) throw_invalid("embedding_stats: inconsistent dimensions");

    std::vector<double> mean(d, 0.0);
    for (const auto& v : vectors)
        for (std::size_t j = 0; j < d; ++j) mean[j] += v[j];
    for (double& x : mean) x /= static_cast<double>(m);

    double std_sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double var = 0.0;
        for (const auto& v : vectors) {
            double delta = v[j] - mean[j];
            var += delta * delta;
        }
        std_sum += std::sqrt(var / static_cast<double>(m));
    }

    EmbeddingStats stats;
    stats.std_dev = std_sum / static_cast<double>(d);

    double mean_norm = 0.0;
    for (double x : mean) mean_norm += x * x;
    mean_norm = std::sqrt(mean_norm);
    if (mean_norm == 0.0)
        throw_invalid("embedding_stats: zero mean vector, coefficient of variation undefined");
    stats.coefficient_of_variation = stats.std_dev / mean_norm * 100.0;

    double cos_sum = 0.0;
    std::size_t pairs = 0;
    std::vector<double> norms(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double n = 0.0;
        for (double x : vectors[i]) n += x * x;
        norms[i] = std::sqrt(n);
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = i + 1; k < m; ++k) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += vectors[i][j] * vectors[k][j];
            double denom = norms[i] * norms[k];
            cos_sum += denom > 0.0 ? dot / denom : 0.0;
            ++pairs;
        }
    stats.mean_pairwise_cosine = cos_sum / static_cast<double>(pairs);
    return stats;
}

// ---------------------------------------------------------------------------
// Flow color wheel (Middlebury segment layout, white at zero motion).

namespace {

struct ColorWheel {
    static constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
    static constexpr int size = RY + YG + GC + CB + BM + MR;
    std::uint8_t colors[size][3];

    ColorWheel() {
        int k = 0;
        auto set = [&](int r, int g, int b) {
            colors[k][0] = static_cast<std::uint8_t>(r);
            colors[k][1] = static_cast<std::uint8_t>(g);
            colors[k][2] = static_cast<std::uint8_t>(b);
            ++k;
        };
        for (int i = 0; i < RY; ++i) set(255, 255 * i / RY, 0);
        for (int i = 0; i < YG; ++i) set(255 - 255 * i / YG, 255, 0);
        for (int i = 0; i < GC; ++i) set(0, 255, 255 * i / GC);
        for (int i = 0; i < CB; ++i) set(0, 255 - 255 * i / CB, 255);
        for (int i = 0; i < BM; ++i) set(255 * i / BM, 0, 255);
        for (int i = 0; i < MR; ++i) set(255, 0, 255 - 255 * i / MR);
    }
};

const ColorWheel& wheel() {
    static const ColorWheel w;
    return w;
}

}  // namespace

void flow_color(double u, double v, std::uint8_t rgb[3]) {
    const ColorWheel& w = wheel();
    double rad = std::min(1.0, std::sqrt(u * u + v * v));
    double angle = std::atan2(-v, -u) / M_PI;  // [-1, 1]
    double fk = (angle + 1.0) / 2.0 * (ColorWheel::size - 1);
    int k0 = static_cast<int>(fk);
    int k1 = (k0 + 1) % ColorWheel::size;
    double f = fk - k0;
    for (int b = 0; b < 3; ++b) {
        double col0 = w.colors[k0][b] / 255.0;
        double col1 = w.colors[k1][b] / 255.0;
        double col = (1.0 - f) * col0 + f * col1;
        col = 1.0 - rad * (1.0 - col);  // saturate with magnitude; white at zero
        rgb[b] = static_cast<std::uint8_t>(std::lround(255.0 * col));
    }
}

ImageRGB8 flow_to_colorwheel_png(const FlowField& flow, double max_magnitude) {
    double max_mag = max_magnitude;
    if (max_mag <= 0.0) {
        for (std::size_t i = 0; i < flow.u.size(); ++i)
            max_mag = std::max(max_mag, static_cast<double>(std::hypot(flow.u[i], flow.v[i])));
        if (max_mag <= 0.0) max_mag = 1.0;
    }

    ImageRGB8 image(flow.width, flow.height);
    for (int y = 0; y < flow.height; ++y)
        for (int x = 0; x < flow.width; ++x) {
            std::size_t i = flow.index(x, y);
            std::uint8_t rgb[3];
            flow_color(flow.u[i] / max_mag, flow.v[i] / max_mag, rgb);
            std::uint8_t* out = image.at(x, y);
            out[0] = rgb[0];
            out[1] = rgb[1];
            out[2] = rgb[2];
        }
    return image;
}

}  // namespace faceflow
