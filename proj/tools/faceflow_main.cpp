// Command-line driver: dataset generation, evaluation, flow decomposition,
// visualization, split management and asset handling.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "faceflow/dataset_io.hpp"
#include "faceflow/decompose.hpp"
#include "faceflow/error.hpp"
#include "faceflow/eval.hpp"
#include "faceflow/generator.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace faceflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitPartial = 3;

void print_error_record(const std::string& kind, const std::string& message) {
    json j{{"error", kind}, {"message", message}};
    std::cerr << j.dump() << "\n";
}

int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::io: return kExitIo;
        default: return kExitValidation;
    }
}

const char* kind_name(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::io: return "io";
        case ErrorKind::format: return "format";
        case ErrorKind::rank: return "rank";
        default: return "validation";
    }
}

std::array<int, 3> parse_ratios(const std::string& text) {
    std::array<int, 3> ratios{};
    char sep1 = 0, sep2 = 0;
    std::istringstream ss(text);
    if (!(ss >> ratios[0] >> sep1 >> ratios[1] >> sep2 >> ratios[2]) || sep1 != ':' || sep2 != ':')
        throw_invalid("ratios must look like 97:2:1");
    for (int r : ratios)
        if (r < 0) throw_invalid("ratios must be non-negative");
    return ratios;
}

int default_workers() {
    if (const char* env = std::getenv("FACEFLOW_WORKERS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

// Fills config values from a JSON file for every option the user did not pass
// on the command line (precedence: CLI > file > defaults).
template <typename T>
void fill_from_json(const json& j, const CLI::Option* opt, const char* key, T& value) {
    if (opt->count() == 0 && j.contains(key)) value = j.at(key).get<T>();
}

// --- gen -------------------------------------------------------------------

int run_gen(GenerationConfig config, const std::vector<SequenceFailure>** /*unused*/) {
    GenerationResult result = run_generation(config);
    std::cout << "dataset: " << config.output_root << "\n"
              << "sequences: " << result.manifest.sequences.size()
              << " pairs: " << result.manifest.pair_count() << "\n"
              << "manifest: " << result.manifest_path << "\n";
    if (!result.failures.empty()) {
        for (const auto& f : result.failures)
            print_error_record(f.kind, "sequence " + std::to_string(f.id) + ": " + f.message);
        return kExitPartial;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic facial optical-flow dataset generator with decomposed "
                 "(facial/head/expression) ground truth"};
    app.require_subcommand(1);

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "Generate a dataset with ground-truth flows");
    GenerationConfig gen_config;
    gen_config.workers = default_workers();
    std::string gen_ratios = "97:2:1";
    std::string gen_config_file;
    auto* o_out = gen->add_option("--out", gen_config.output_root, "Output dataset root");
    auto* o_asset = gen->add_option("--asset", gen_config.asset_path, "Asset file (.ffna)");
    auto* o_aseed = gen->add_option("--asset-seed", gen_config.asset_seed,
                                    "Seed for a synthesized asset");
    auto* o_averts = gen->add_option("--asset-vertices", gen_config.asset_vertices,
                                     "Vertex count for a synthesized asset");
    auto* o_ashape = gen->add_option("--asset-shape-dims", gen_config.asset_shape_dims,
                                     "Identity blendshape count");
    auto* o_aexpr = gen->add_option("--asset-expr-dims", gen_config.asset_expr_dims,
                                    "Expression blendshape count");
    auto* o_seqs = gen->add_option("--sequences", gen_config.sequence_count,
                                   "Number of sequences");
    auto* o_lengths = gen->add_option("--lengths", gen_config.lengths,
                                      "Sequence lengths, cycled (default 5 10 15 20)");
    auto* o_width = gen->add_option("--width", gen_config.width, "Frame width");
    auto* o_height = gen->add_option("--height", gen_config.height, "Frame height");
    auto* o_seed = gen->add_option("--seed", gen_config.seed, "Global seed");
    auto* o_workers = gen->add_option("--workers", gen_config.workers,
                                      "Worker threads (env FACEFLOW_WORKERS)");
    auto* o_split = gen->add_option("--split", gen_ratios, "Split ratios train:test:val");
    auto* o_bg = gen->add_option("--bg-dir", gen_config.background_dir,
                                 "Directory of background PNGs");
    gen->add_option("--config", gen_config_file, "JSON config file (CLI flags win)");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "Depth-masked EPE of predictions vs ground truth");
    std::string eval_dataset, eval_pred, eval_out;
    double eval_epsilon = 0.0;
    eval_cmd->add_option("--dataset", eval_dataset, "Dataset root (with manifest.json)")
        ->required();
    eval_cmd->add_option("--pred", eval_pred, "Prediction dir mirroring seq_<id>/flow_f_<t>.flo")
        ->required();
    eval_cmd->add_option("--out", eval_out, "Write the JSON report here (default stdout)");
    eval_cmd->add_option("--epsilon", eval_epsilon, "Depth mask epsilon (default 1e-3 x bg depth)");

    // ---- decompose ----
    auto* dec = app.add_subcommand("decompose", "Split a flow into parametric head + residual "
                                                "expression flow");
    std::string dec_flow, dec_depth, dec_head = "head.flo", dec_expr = "expression.flo";
    std::string dec_model = "affine", dec_loss = "huber", dec_report;
    double dec_bg_depth = 0.0, dec_epsilon = 0.0, dec_scale = 1.0;
    int dec_max_iter = 50;
    bool dec_extrapolate = false;
    dec->add_option("--flow", dec_flow, "Input .flo")->required();
    dec->add_option("--depth", dec_depth, "Source-frame depth PFM for the face mask");
    dec->add_option("--bg-depth", dec_bg_depth, "Background plane depth for the mask");
    dec->add_option("--epsilon", dec_epsilon, "Depth mask epsilon (default 1e-3 x bg depth)");
    dec->add_option("--model", dec_model, "translation | similarity | affine");
    dec->add_option("--loss", dec_loss, "huber | tukey");
    dec->add_option("--scale", dec_scale, "Robust loss scale (px / sigma multiplier)");
    dec->add_option("--max-iter", dec_max_iter, "IRLS iteration cap");
    dec->add_option("--head", dec_head, "Output head flow .flo");
    dec->add_option("--expr", dec_expr, "Output expression flow .flo");
    dec->add_option("--report", dec_report, "Write fit diagnostics JSON here");
    dec->add_flag("--extrapolate", dec_extrapolate,
                  "Apply the head model outside the mask too (default: zero)");

    // ---- viz ----
    auto* viz = app.add_subcommand("viz", "Render a .flo as a color-wheel PNG");
    std::string viz_flow, viz_out = "flow.png";
    double viz_max = 0.0;
    viz->add_option("--flow", viz_flow, "Input .flo")->required();
    viz->add_option("--out", viz_out, "Output PNG");
    viz->add_option("--max-mag", viz_max, "Magnitude at full saturation (default: field max)");

    // ---- split ----
    auto* split_cmd = app.add_subcommand("split", "Re-assign train/test/val tags in a manifest");
    std::string split_dataset_root, split_ratios_text = "97:2:1";
    std::uint64_t split_seed = 0;
    split_cmd->add_option("--dataset", split_dataset_root, "Dataset root")->required();
    split_cmd->add_option("--ratios", split_ratios_text, "train:test:val (default 97:2:1)");
    split_cmd->add_option("--seed", split_seed, "Shuffle seed");

    // ---- asset ----
    auto* asset_cmd = app.add_subcommand("asset", "Create or inspect a synthetic head asset");
    std::string asset_out, asset_describe;
    std::uint64_t asset_seed = 7;
    std::size_t asset_vertices = 500, asset_shape = 4, asset_expr = 8;
    asset_cmd->add_option("--out", asset_out, "Write a synthesized asset here");
    asset_cmd->add_option("--seed", asset_seed, "Asset seed");
    asset_cmd->add_option("--vertices", asset_vertices, "Vertex count");
    asset_cmd->add_option("--shape-dims", asset_shape, "Identity blendshape count");
    asset_cmd->add_option("--expr-dims", asset_expr, "Expression blendshape count");
    asset_cmd->add_option("--describe", asset_describe, "Print the dimensions of an asset file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            if (!gen_config_file.empty()) {
                std::ifstream in(gen_config_file);
                if (!in) throw_io("cannot open config '" + gen_config_file + "'");
                json j;
                try {
                    in >> j;
                } catch (const json::exception& e) {
                    throw_format(gen_config_file + ": invalid JSON: " + e.what());
                }
                fill_from_json(j, o_out, "out", gen_config.output_root);
                fill_from_json(j, o_asset, "asset", gen_config.asset_path);
                fill_from_json(j, o_aseed, "asset_seed", gen_config.asset_seed);
                fill_from_json(j, o_averts, "asset_vertices", gen_config.asset_vertices);
                fill_from_json(j, o_ashape, "asset_shape_dims", gen_config.asset_shape_dims);
                fill_from_json(j, o_aexpr, "asset_expr_dims", gen_config.asset_expr_dims);
                fill_from_json(j, o_seqs, "sequences", gen_config.sequence_count);
                fill_from_json(j, o_lengths, "lengths", gen_config.lengths);
                fill_from_json(j, o_width, "width", gen_config.width);
                fill_from_json(j, o_height, "height", gen_config.height);
                fill_from_json(j, o_seed, "seed", gen_config.seed);
                fill_from_json(j, o_workers, "workers", gen_config.workers);
                fill_from_json(j, o_split, "split", gen_ratios);
                fill_from_json(j, o_bg, "bg_dir", gen_config.background_dir);
            }
            if (gen_config.output_root.empty())
                throw_invalid("gen: --out (or config key 'out') is required");
            gen_config.split_ratios = parse_ratios(gen_ratios);
            return run_gen(gen_config, nullptr);
        }

        if (eval_cmd->parsed()) {
            DatasetEvalResult result = evaluate_predictions(eval_dataset, eval_pred, eval_epsilon);
            std::string report = dataset_eval_to_json(result);
            if (eval_out.empty()) {
                std::cout << report << "\n";
            } else {
                std::ofstream out(eval_out, std::ios::trunc);
                if (!out) throw_io("cannot open '" + eval_out + "' for writing");
                out << report << "\n";
            }
            if (!result.missing_predictions.empty()) {
                for (const auto& missing : result.missing_predictions)
                    print_error_record("io", "missing prediction: " + missing);
                return kExitPartial;
            }
            return kExitOk;
        }

        if (dec->parsed()) {
            FlowField flow = read_flo(dec_flow);
            Bitmask mask(flow.width, flow.height);
            if (!dec_depth.empty()) {
                if (dec_bg_depth <= 0.0)
                    throw_invalid("decompose: --bg-depth is required with --depth");
                DepthMap depth = read_pfm(dec_depth);
                double eps = dec_epsilon > 0.0 ? dec_epsilon : 1e-3 * dec_bg_depth;
                mask = depth_mask(depth, dec_bg_depth, eps);
            } else {
                for (int y = 0; y < flow.height; ++y)
                    for (int x = 0; x < flow.width; ++x) mask.set(x, y, true);
            }

            IRLSConfig irls;
            irls.loss = dec_loss == "tukey" ? RobustLoss::tukey : RobustLoss::huber;
            if (dec_loss != "tukey" && dec_loss != "huber")
                throw_invalid("decompose: --loss must be huber or tukey");
            irls.scale = dec_scale;
            irls.max_iterations = dec_max_iter;

            FitDiagnostics diag;
            MotionModel model =
                fit_head_motion(flow, mask, motion_model_from_name(dec_model), irls, &diag);
            DecomposeResult split = decompose_flow(flow, mask, model, dec_extrapolate);
            write_flo(split.head, dec_head);
            write_flo(split.expression, dec_expr);

            json j{{"model", motion_model_name(model.kind)},
                   {"coefficients", model.coefficients},
                   {"iterations", diag.iterations},
                   {"converged", diag.converged},
                   {"final_objective", diag.final_objective},
                   {"inlier_fraction", diag.inlier_fraction},
                   {"pixels_used", diag.pixels_used}};
            if (dec_report.empty()) {
                std::cout << j.dump(2) << "\n";
            } else {
                std::ofstream out(dec_report, std::ios::trunc);
                if (!out) throw_io("cannot open '" + dec_report + "' for writing");
                out << j.dump(2) << "\n";
            }
            return kExitOk;
        }

        if (viz->parsed()) {
            FlowField flow = read_flo(viz_flow);
            write_png(flow_to_colorwheel_png(flow, viz_max), viz_out);
            return kExitOk;
        }

        if (split_cmd->parsed()) {
            fs::path manifest_path = fs::path(split_dataset_root) / "manifest.json";
            DatasetManifest manifest = load_manifest(manifest_path.string());
            split_dataset(manifest.sequences, parse_ratios(split_ratios_text), split_seed);
            save_manifest(manifest, manifest_path.string());
            std::cout << "train pairs: " << manifest.pair_count(Split::train)
                      << " test pairs: " << manifest.pair_count(Split::test)
                      << " val pairs: " << manifest.pair_count(Split::val) << "\n";
            return kExitOk;
        }

        if (asset_cmd->parsed()) {
            if (!asset_describe.empty()) {
                FaceModelAsset asset = load_asset(asset_describe);
                json j{{"vertices", asset.vertex_count()},
                       {"triangles", asset.triangle_count()},
                       {"shape_dims", asset.shape_dim()},
                       {"expression_dims", asset.expression_dim()},
                       {"joints", kNumJoints},
                       {"landmarks", asset.landmark_indices.size()}};
                std::cout << j.dump(2) << "\n";
                return kExitOk;
            }
            if (asset_out.empty())
                throw_invalid("asset: pass --out to synthesize or --describe to inspect");
            FaceModelAsset asset =
                make_synthetic_asset(asset_seed, asset_vertices, asset_shape, asset_expr);
            save_asset(asset, asset_out);
            std::cout << "wrote " << asset_out << " (" << asset.vertex_count() << " vertices, "
                      << asset.triangle_count() << " triangles)\n";
            return kExitOk;
        }
    } catch (const Error& e) {
        print_error_record(kind_name(e), e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        print_error_record("internal", e.what());
        return kExitValidation;
    }
    return kExitOk;
}
