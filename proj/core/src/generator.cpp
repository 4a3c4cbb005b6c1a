#include "faceflow/generator.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "faceflow/error.hpp"
#include "faceflow/rasterizer.hpp"
#include "faceflow/rng.hpp"

namespace faceflow {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open '" + path + "' for fingerprinting");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64(data.data(), data.size());
}

std::vector<std::string> list_backgrounds(const std::string& dir) {
    std::vector<std::string> files;
    if (dir.empty()) return files;
    if (!fs::is_directory(dir)) throw_io("background dir '" + dir + "' is not a directory");
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());  // stable selection across platforms
    return files;
}

struct SequenceJob {
    std::uint64_t id;
    int n;
    std::uint64_t seed;
};

}  // namespace

GenerationResult run_generation(const GenerationConfig& config) {
    if (config.sequence_count < 1) throw_invalid("gen: sequence_count must be >= 1");
    if (config.lengths.empty()) throw_invalid("gen: at least one sequence length required");
    if (config.workers < 1) throw_invalid("gen: workers must be >= 1");
    if (config.output_root.empty()) throw_invalid("gen: output root required");

    std::error_code ec;
    fs::create_directories(config.output_root, ec);
    if (ec || !fs::is_directory(config.output_root))
        throw_io("cannot create output root '" + config.output_root + "'");
    {
        // Probe writability up front for a clean error instead of a late one.
        std::string probe = (fs::path(config.output_root) / ".write_probe").string();
        std::ofstream f(probe, std::ios::trunc);
        if (!f) throw_io("output root '" + config.output_root + "' is not writable");
        f.close();
        fs::remove(probe, ec);
    }

    // Asset: load or synthesize; synthesized assets are stored with the
    // dataset so downstream evaluation is self-contained.
    FaceModelAsset asset;
    std::string asset_file;
    if (!config.asset_path.empty()) {
        asset = load_asset(config.asset_path);
        asset_file = config.asset_path;
    } else {
        asset = make_synthetic_asset(config.asset_seed, config.asset_vertices,
                                     config.asset_shape_dims, config.asset_expr_dims);
        asset_file = (fs::path(config.output_root) / "asset.ffna").string();
        save_asset(asset, asset_file);
    }
    const std::vector<Vec3> albedo = default_albedo(asset);

    const std::vector<std::string> background_files = list_backgrounds(config.background_dir);
    Camera camera = default_camera(config.width, config.height, config.camera_distance);

    std::vector<SequenceJob> jobs(config.sequence_count);
    for (int i = 0; i < config.sequence_count; ++i) {
        jobs[i].id = static_cast<std::uint64_t>(i);
        jobs[i].n = config.lengths[i % config.lengths.size()];
        jobs[i].seed = derive_seed(config.seed, jobs[i].id);
    }

    std::vector<SequenceRecord> records(jobs.size());
    std::vector<SequenceFailure> failures;
    std::mutex failure_mutex;

    auto run_one = [&](const SequenceJob& job, SequenceRecord& record) {
        record.id = job.id;
        record.n = job.n;
        record.seed = job.seed;
        record.width = config.width;
        record.height = config.height;
        record.complete = false;

        SequenceSpec spec;
        spec.asset = &asset;
        spec.n = job.n;
        spec.seed = job.seed;
        spec.allow_custom_length = true;  // lengths validated at config level
        spec.target = sample_target_params(asset, config.bounds, job.seed);

        RenderConfig render;
        render.background_depth = config.background_depth;
        ImageRGB8 background;
        if (!background_files.empty()) {
            std::size_t pick = static_cast<std::size_t>(derive_seed(job.seed, 0xB06ull) %
                                                        background_files.size());
            background = read_png(background_files[pick]);
            render.background_image = &background;
        }

        fs::path seq_dir = fs::path(config.output_root) / ("seq_" + std::to_string(job.id));
        fs::create_directories(seq_dir);
        auto rel = [&](const std::string& name) {
            return (fs::path("seq_" + std::to_string(job.id)) / name).string();
        };
        auto abs = [&](const std::string& name) { return (seq_dir / name).string(); };

        // Frames 1..n; pair t maps frame t -> t+1.
        RenderResult prev_render;
        Mesh prev_mesh;
        for (int t = 1; t <= job.n; ++t) {
            Mesh mesh = facial_mesh(spec, t);
            RenderResult render_result = rasterize(mesh, camera, render, albedo);

            std::string frame_name = "frame_" + std::to_string(t) + ".png";
            std::string depth_name = "depth_" + std::to_string(t) + ".pfm";
            write_png(render_result.frame, abs(frame_name));
            write_pfm(render_result.depth, abs(depth_name));
            record.frame_paths.push_back(rel(frame_name));
            record.depth_paths.push_back(rel(depth_name));

            if (t > 1) {
                MeshPairSample sample;
                sample.t = t - 1;
                sample.source = prev_mesh;
                sample.facial_target = mesh;
                sample.head_target = head_mesh(spec, t);
                DecomposedFlows flows =
                    compute_decomposed_flows(sample, camera, render, prev_render.visibility);

                std::string f_name = "flow_f_" + std::to_string(t - 1) + ".flo";
                std::string h_name = "flow_h_" + std::to_string(t - 1) + ".flo";
                std::string e_name = "flow_e_" + std::to_string(t - 1) + ".flo";
                write_flo(flows.facial, abs(f_name));
                write_flo(flows.head, abs(h_name));
                write_flo(flows.expression, abs(e_name));
                record.flow_facial_paths.push_back(rel(f_name));
                record.flow_head_paths.push_back(rel(h_name));
                record.flow_expr_paths.push_back(rel(e_name));
            }
            prev_render = std::move(render_result);
            prev_mesh = std::move(mesh);
        }
        record.complete = true;
    };

    std::atomic<std::size_t> next_job{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next_job.fetch_add(1);
            if (i >= jobs.size()) break;
            try {
                run_one(jobs[i], records[i]);
            } catch (const Error& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                const char* kind = e.kind() == ErrorKind::io       ? "io"
                                   : e.kind() == ErrorKind::format ? "format"
                                                                   : "validation";
                failures.push_back({jobs[i].id, kind, e.what()});
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failures.push_back({jobs[i].id, "internal", e.what()});
            }
        }
    };

    int workers = std::min<int>(config.workers, static_cast<int>(jobs.size()));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Split tags are a pure function of (ids, seed): identical for any
    // worker count.
    split_dataset(records, config.split_ratios, config.seed);

    GenerationResult result;
    result.manifest.version = 1;
    result.manifest.asset_fingerprint = hex64(file_fingerprint(asset_file));
    result.manifest.background_depth = config.background_depth;
    result.manifest.sequences = std::move(records);
    result.failures = std::move(failures);
    std::sort(result.failures.begin(), result.failures.end(),
              [](const SequenceFailure& a, const SequenceFailure& b) { return a.id < b.id; });

    result.manifest_path = (fs::path(config.output_root) / "manifest.json").string();
    save_manifest(result.manifest, result.manifest_path);
    return result;
}

DatasetEvalResult evaluate_predictions(const std::string& dataset_root,
                                       const std::string& prediction_dir,
                                       double mask_epsilon) {
    DatasetManifest manifest = load_manifest((fs::path(dataset_root) / "manifest.json").string());
    double eps = mask_epsilon > 0.0 ? mask_epsilon : 1e-3 * manifest.background_depth;
    if (eps <= 0.0) throw_invalid("eval: mask epsilon must be positive");

    DatasetEvalResult result;
    std::map<int, double> group_sum;
    std::map<int, std::size_t> group_n;
    double total_sum = 0.0;
    std::size_t total_n = 0;

    for (const SequenceRecord& record : manifest.sequences) {
        if (!record.complete) continue;
        for (std::size_t pair = 0; pair < record.flow_facial_paths.size(); ++pair) {
            fs::path pred_path = fs::path(prediction_dir) / record.flow_facial_paths[pair];
            if (!fs::exists(pred_path)) {
                result.missing_predictions.push_back(pred_path.string());
                continue;
            }
            FlowField predicted = read_flo(pred_path.string());
            FlowField reference =
                read_flo((fs::path(dataset_root) / record.flow_facial_paths[pair]).string());
            DepthMap depth =
                read_pfm((fs::path(dataset_root) / record.depth_paths[pair]).string());
            Bitmask mask = depth_mask(depth, manifest.background_depth, eps);
            if (mask.count() == 0) continue;  // fully clipped frame

            EvalReport report = masked_epe(predicted, reference, mask);
            group_sum[record.n] += report.epe * static_cast<double>(report.count);
            group_n[record.n] += report.count;
            total_sum += report.epe * static_cast<double>(report.count);
            total_n += report.count;
            ++result.pairs_evaluated;
        }
    }

    for (const auto& [n, sum] : group_sum) {
        EvalReport r;
        r.epe = sum / static_cast<double>(group_n[n]);
        r.count = group_n[n];
        r.mask_source = "depth";
        result.by_length[n] = r;
    }
    result.overall.epe = total_n ? total_sum / static_cast<double>(total_n) : 0.0;
    result.overall.count = total_n;
    result.overall.mask_source = "depth";
    return result;
}

std::string dataset_eval_to_json(const DatasetEvalResult& result) {
    json j;
    j["groups"] = json::object();
    for (const auto& [n, report] : result.by_length)
        j["groups"]["1/" + std::to_string(n)] = {{"epe", report.epe},
                                                 {"pixels", report.count}};
    j["overall"] = {{"epe", result.overall.epe}, {"pixels", result.overall.count}};
    j["pairs_evaluated"] = result.pairs_evaluated;
    if (!result.missing_predictions.empty()) j["missing"] = result.missing_predictions;
    return j.dump(2);
}

}  // namespace faceflow
