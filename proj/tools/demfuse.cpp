// demfuse: command-line front end for the DEM fusion pipeline.
//
// Exit codes: 0 success, 1 runtime/algorithmic failure, 2 usage or input
// validation error.

#include "demfuse/align.hpp"
#include "demfuse/config.hpp"
#include "demfuse/errors.hpp"
#include "demfuse/features.hpp"
#include "demfuse/fusion.hpp"
#include "demfuse/grid.hpp"
#include "demfuse/metrics.hpp"
#include "demfuse/mlp.hpp"
#include "demfuse/pipeline.hpp"
#include "demfuse/refine.hpp"
#include "demfuse/synth.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace demfuse;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void require_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " file not found: '" + path + "'");
}

Grid load_grid(const std::string& path, const char* what) {
    require_file(path, what);
    return read_ascii_grid_file(path);
}

std::optional<Grid> load_optional_grid(const std::string& path, const char* what) {
    if (path.empty()) return std::nullopt;
    return load_grid(path, what);
}

template <typename Fn>
void write_text_file(const std::string& path, Fn&& writer) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    writer(out);
    if (!out) throw Error("I/O failure writing '" + path + "'");
}

// Flags that map onto PipelineConfig keys; applied over the config file.
struct ConfigFlags {
    std::string config_file;
    std::map<std::string, std::string> values;

    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option_function<std::string>(
            flag, [this, key](const std::string& v) { values[key] = v; }, help);
    }

    PipelineConfig resolve() const {
        PipelineConfig cfg;
        if (!config_file.empty()) cfg = parse_config_file(config_file);
        for (const auto& [k, v] : values) apply_setting(cfg, k, v);
        cfg.train.validate();
        return cfg;
    }
};

void add_feature_flags(CLI::App* app, ConfigFlags& flags) {
    app->add_option("--config", flags.config_file, "key=value settings file (flags win)");
    flags.add(app, "--features", "features", "comma-separated feature list, or 'all'");
    flags.add(app, "--min-count", "min_count", "drop bins with fewer samples (default max(10, 0.001 k))");
}

void add_train_flags(CLI::App* app, ConfigFlags& flags) {
    flags.add(app, "--hidden", "hidden", "hidden layer widths, e.g. 20 or 20,10 (default 20)");
    flags.add(app, "--epochs", "epochs", "maximum epochs (default 2000)");
    flags.add(app, "--lr", "learning_rate", "learning rate (default 0.01)");
    flags.add(app, "--momentum", "momentum", "momentum (default 0.9)");
    flags.add(app, "--patience", "patience", "early-stopping patience in epochs (default 50)");
    flags.add(app, "--batch", "batch_size", "mini-batch size (default 64)");
    flags.add(app, "--max-samples", "max_samples", "random training subset size, 0 = all");
    flags.add(app, "--split", "split", "train,validation,test fractions (default 0.7,0.15,0.15)");
    flags.add(app, "--seed", "seed", "random seed (default 1)");
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss << std::setprecision(6) << v;
    return ss.str();
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    int size = 257;
    std::uint64_t seed = 7;
    std::string presets = "insar-like,optical-like";
    std::string out_dir = ".";
    double roughness = 0.6;
    double cellsize = 5.0;
    double density = 0.3;
    double building_min = 6.0;
    double building_max = 30.0;
    double min_height = 0.0;
    double max_height = 80.0;
};

int cmd_synth(const SynthArgs& a) {
    std::vector<std::string> presets;
    std::stringstream ss(a.presets);
    for (std::string p; std::getline(ss, p, ',');) presets.push_back(p);
    if (presets.size() != 2) throw UsageError("--preset needs exactly two comma-separated presets (for dem_a, dem_b)");
    const ErrorModel model_a = error_preset(presets[0], a.seed + 2);
    const ErrorModel model_b = error_preset(presets[1], a.seed + 3);

    TerrainSpec spec;
    spec.size = a.size;
    spec.roughness = a.roughness;
    spec.cellsize = a.cellsize;
    spec.min_height = a.min_height;
    spec.max_height = a.max_height;
    const Grid terrain = generate_terrain(spec, a.seed);
    const Grid truth = add_buildings(terrain, a.density, {a.building_min, a.building_max}, a.seed + 1);
    const Corruption ca = corrupt(truth, model_a);
    const Corruption cb = corrupt(truth, model_b);

    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    const std::vector<std::pair<std::string, const Grid*>> outputs = {
        {"truth.asc", &truth}, {"dem_a.asc", &ca.dem}, {"dem_b.asc", &cb.dem},
        {"hem_a.asc", &ca.true_error}, {"hem_b.asc", &cb.true_error}};
    for (const auto& [name, grid] : outputs) write_ascii_grid_file((dir / name).string(), *grid);

    write_text_file((dir / "manifest.txt").string(), [&](std::ostream& m) {
        m << "seed=" << a.seed << '\n'
          << "size=" << a.size << '\n'
          << "roughness=" << a.roughness << '\n'
          << "cellsize=" << a.cellsize << '\n'
          << "height_range=" << a.min_height << ',' << a.max_height << '\n'
          << "building_density=" << a.density << '\n'
          << "building_height=" << a.building_min << ',' << a.building_max << '\n'
          << "terrain_seed=" << a.seed << '\n'
          << "building_seed=" << a.seed + 1 << '\n'
          << "preset_a=" << presets[0] << '\n'
          << "noise_seed_a=" << model_a.seed << '\n'
          << "preset_b=" << presets[1] << '\n'
          << "noise_seed_b=" << model_b.seed << '\n'
          << "rng=splitmix64\n";
        for (const auto& [name, grid] : outputs) m << "output=" << (dir / name).string() << '\n';
    });
    std::cout << "wrote " << outputs.size() << " grids and manifest.txt to " << a.out_dir << '\n';
    return 0;
}

// ---------------------------------------------------------------- align

struct AlignArgs {
    std::string moving, fixed, out_transform, out_grid;
    int max_iters = 50;
    double tol = 1e-4;
};

std::optional<double> overlap_rmse(const Grid& moving_on_fixed, const Grid& fixed) {
    const Eigen::VectorXd res = valid_residuals(moving_on_fixed, fixed);
    if (res.size() == 0) return std::nullopt;
    return rmse(res);
}

int cmd_align(const AlignArgs& a) {
    const Grid moving = load_grid(a.moving, "moving grid");
    const Grid fixed = load_grid(a.fixed, "fixed grid");

    RigidTransform initial;
    if (same_geometry(moving.header(), fixed.header())) {
        try {
            initial.translation.z() = vertical_bias(moving, fixed);
        } catch (const InsufficientDataError&) {
        }
    }
    const auto pre = overlap_rmse(apply_transform(moving, RigidTransform{}, fixed.header()), fixed);
    IcpOptions opts;
    opts.max_iters = a.max_iters;
    opts.tol = a.tol;
    const IcpResult res = icp_register(moving, fixed, opts, initial);
    const Grid aligned = apply_transform(moving, res.transform, fixed.header());
    const auto post = overlap_rmse(aligned, fixed);

    write_transform_file(a.out_transform, res.transform);
    write_ascii_grid_file(a.out_grid, aligned);
    std::cout << "pre_rmse=" << (pre ? fmt(*pre) : "nan") << '\n'
              << "post_rmse=" << (post ? fmt(*post) : "nan") << '\n'
              << "icp_rmse=" << fmt(res.rmse) << '\n'
              << "iterations=" << res.iterations << '\n'
              << "rotation_deg=" << fmt(rotation_angle_deg(res.transform)) << '\n';
    return 0;
}

// ---------------------------------------------------------------- features / residuals

struct FeatureArgs {
    std::string dem, reference, aux, out, bins_out;
    bool raw = false;
    ConfigFlags flags;
};

int cmd_features(FeatureArgs& a) {
    const PipelineConfig cfg = a.flags.resolve();
    const Grid dem = load_grid(a.dem, "DEM");
    const auto aux = load_optional_grid(a.aux, "aux");
    const FeatureTable table = extract_feature_table(dem, aux ? &*aux : nullptr, cfg.features);
    write_text_file(a.out, [&](std::ostream& o) { write_feature_csv(o, table); });
    std::cout << "pixels=" << table.rows() << " features=" << table.cols() << '\n';
    return 0;
}

int cmd_residuals(FeatureArgs& a) {
    const PipelineConfig cfg = a.flags.resolve();
    const Grid dem = load_grid(a.dem, "DEM");
    const Grid ref = load_grid(a.reference, "reference");
    const auto aux = load_optional_grid(a.aux, "aux");
    RefineOptions refine;
    refine.min_count = cfg.min_count;
    refine.smooth = !a.raw;
    const TrainingSet ts = build_training_set(dem, ref, aux ? &*aux : nullptr, cfg.features, refine);
    write_text_file(a.out, [&](std::ostream& o) { write_training_csv(o, ts); });
    if (!a.bins_out.empty()) write_text_file(a.bins_out, [&](std::ostream& o) { write_bins_csv(o, ts); });
    std::cout << "samples=" << ts.size() << '\n';
    return 0;
}

// ---------------------------------------------------------------- train / predict

struct TrainArgs {
    std::string dem, reference, aux, out, history;
    bool raw = false;
    ConfigFlags flags;
};

int cmd_train(TrainArgs& a) {
    const PipelineConfig cfg = a.flags.resolve();
    const Grid dem = load_grid(a.dem, "DEM");
    const Grid ref = load_grid(a.reference, "reference");
    const auto aux = load_optional_grid(a.aux, "aux");
    RefineOptions refine;
    refine.min_count = cfg.min_count;
    refine.smooth = !a.raw;
    const TrainResult res = train_error_model(dem, ref, aux ? &*aux : nullptr, cfg.features, refine, cfg.train);
    save_model_file(a.out, res.model);
    if (!a.history.empty()) write_text_file(a.history, [&](std::ostream& o) { write_history_csv(o, res.history); });

    const auto& h = res.history;
    std::cout << "samples=" << h.train_count + h.validation_count + h.test_count << '\n'
              << "epochs=" << h.epochs.size() << '\n'
              << "best_epoch=" << h.best_epoch << '\n'
              << "train_sse=" << fmt(h.train_sse) << '\n'
              << "validation_sse=" << fmt(h.best_validation_sse) << '\n'
              << "test_sse=" << fmt(h.test_sse) << '\n'
              << "test_correlation=" << fmt(h.test_correlation) << '\n';
    for (const auto& name : h.dropped_features) std::cout << "dropped_feature=" << name << '\n';
    return 0;
}

struct PredictArgs {
    std::string model, dem, aux, out;
};

int cmd_predict(const PredictArgs& a) {
    require_file(a.model, "model");
    const MlpModel model = load_model_file(a.model);
    const Grid dem = load_grid(a.dem, "DEM");
    const auto aux = load_optional_grid(a.aux, "aux");
    const Grid err = predict_dem_error(model, dem, aux ? &*aux : nullptr);
    write_ascii_grid_file(a.out, err);
    std::cout << "predicted_pixels=" << err.valid_count() << '\n';
    return 0;
}

// ---------------------------------------------------------------- fuse / eval

struct FuseArgs {
    std::string dem_a, dem_b, mode = "ann", model_a, model_b, hem_a, hem_b, aux_a, aux_b, mask, truth, report, out;
    ConfigFlags flags;
};

void print_report(const std::string& label, const AccuracyReport& r) {
    std::cout << label << "_rmse=" << fmt(r.rmse) << '\n' << label << "_nmad=" << fmt(r.nmad) << '\n';
}

int run_fuse(FuseArgs& a) {
    const PipelineConfig cfg = a.flags.resolve();
    const Grid dem_a = load_grid(a.dem_a, "DEM A");
    const Grid dem_b = load_grid(a.dem_b, "DEM B");
    require_same_geometry(dem_a.header(), dem_b.header(), "fuse");

    Grid fused;
    if (a.mode == "ann") {
        if (a.model_a.empty() || a.model_b.empty()) throw UsageError("--mode ann needs --model-a and --model-b");
        if (!a.hem_a.empty() || !a.hem_b.empty()) throw UsageError("--hem-a/--hem-b are only valid with --mode hem");
        require_file(a.model_a, "model A");
        require_file(a.model_b, "model B");
        const auto aux_a = load_optional_grid(a.aux_a, "aux A");
        const auto aux_b = load_optional_grid(a.aux_b, "aux B");
        fused = fuse_ann(dem_a, dem_b, load_model_file(a.model_a), load_model_file(a.model_b), cfg.scheme,
                         cfg.error_floor, aux_a ? &*aux_a : nullptr, aux_b ? &*aux_b : nullptr);
    } else if (a.mode == "hem") {
        if (a.hem_a.empty() || a.hem_b.empty()) throw UsageError("--mode hem needs --hem-a and --hem-b");
        if (!a.model_a.empty() || !a.model_b.empty()) throw UsageError("--model-a/--model-b are only valid with --mode ann");
        const Grid hem_a = load_grid(a.hem_a, "HEM A");
        const Grid hem_b = load_grid(a.hem_b, "HEM B");
        if (cfg.scheme == WeightScheme::OneMinusNorm && (!has_error_spread(hem_a) || !has_error_spread(hem_b)))
            std::cerr << "warning: constant HEM; one-minus-norm weights are all 1\n";
        fused = fuse_hem_baseline(dem_a, dem_b, hem_a, hem_b, cfg.scheme, cfg.error_floor);
    } else if (a.mode == "average") {
        if (!a.model_a.empty() || !a.model_b.empty() || !a.hem_a.empty() || !a.hem_b.empty())
            throw UsageError("--mode average takes no models or HEMs");
        fused = fuse_plain_average(dem_a, dem_b);
    } else {
        throw UsageError("unknown --mode '" + a.mode + "' (ann | hem | average)");
    }

    if (!a.mask.empty()) fused = substitute_by_mask(fused, dem_b, load_grid(a.mask, "mask"));
    write_ascii_grid_file(a.out, fused);

    if (!a.truth.empty()) {
        const Grid truth = load_grid(a.truth, "truth");
        const AccuracyReport ra = accuracy_report(dem_a, truth);
        const AccuracyReport rb = accuracy_report(dem_b, truth);
        const Grid& better = ra.rmse <= rb.rmse ? dem_a : dem_b;
        const AccuracyReport rf = accuracy_report(fused, truth, &better);
        print_report("dem_a", ra);
        print_report("dem_b", rb);
        print_report("fused", rf);
        std::cout << "fused_pct_improved=" << fmt(*rf.pct_improved) << '\n';
        if (!a.report.empty()) write_text_file(a.report, [&](std::ostream& o) { o << to_key_value(rf); });
    } else if (!a.report.empty()) {
        throw UsageError("--report needs --truth");
    }
    return 0;
}

struct EvalArgs {
    std::string dem, truth, baseline, out;
};

int cmd_eval(const EvalArgs& a) {
    const Grid dem = load_grid(a.dem, "DEM");
    const Grid truth = load_grid(a.truth, "truth");
    const auto baseline = load_optional_grid(a.baseline, "baseline");
    const AccuracyReport r = accuracy_report(dem, truth, baseline ? &*baseline : nullptr);
    const std::string kv = to_key_value(r);
    std::cout << kv;
    if (!a.out.empty()) write_text_file(a.out, [&](std::ostream& o) { o << kv; });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"demfuse: learn DEM height-error maps from terrain features and fuse two DEMs"};
    app.require_subcommand(1);
    std::function<int()> action;

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "generate a synthetic truth surface and two corrupted DEMs");
    s->add_option("--size", synth.size, "grid size, 2^k + 1");
    s->add_option("--seed", synth.seed, "random seed");
    s->add_option("--preset", synth.presets, "error presets for dem_a,dem_b (insar-like | optical-like)");
    s->add_option("--out", synth.out_dir, "output directory");
    s->add_option("--roughness", synth.roughness, "terrain roughness in (0, 1]");
    s->add_option("--cellsize", synth.cellsize, "cell size in meters");
    s->add_option("--density", synth.density, "building coverage fraction in [0, 1]");
    s->add_option("--building-min", synth.building_min, "minimum building height above terrain");
    s->add_option("--building-max", synth.building_max, "maximum building height above terrain");
    s->add_option("--min-height", synth.min_height, "terrain minimum height");
    s->add_option("--max-height", synth.max_height, "terrain maximum height");
    s->callback([&] { action = [&] { return cmd_synth(synth); }; });

    AlignArgs align;
    auto* al = app.add_subcommand("align", "co-register a moving DEM onto a fixed DEM (ICP)");
    al->add_option("moving", align.moving, "moving grid")->required();
    al->add_option("fixed", align.fixed, "fixed grid")->required();
    al->add_option("--out-transform", align.out_transform, "transform output file")->required();
    al->add_option("--out-grid", align.out_grid, "aligned grid output file")->required();
    al->add_option("--max-iters", align.max_iters, "maximum ICP iterations");
    al->add_option("--tol", align.tol, "RMSE improvement tolerance (m)");
    al->callback([&] { action = [&] { return cmd_align(align); }; });

    FeatureArgs feat;
    auto* f = app.add_subcommand("features", "compute the per-pixel feature table (CSV)");
    f->add_option("dem", feat.dem, "height grid")->required();
    f->add_option("--aux", feat.aux, "aux error raster (feature 'aux')");
    f->add_option("--out", feat.out, "CSV output")->required();
    add_feature_flags(f, feat.flags);
    f->callback([&] { action = [&] { return cmd_features(feat); }; });

    FeatureArgs resid;
    auto* r = app.add_subcommand("residuals", "build the refined training set (CSV)");
    r->add_option("dem", resid.dem, "DEM grid")->required();
    r->add_option("reference", resid.reference, "reference (ground truth) grid")->required();
    r->add_option("--aux", resid.aux, "aux error raster (feature 'aux')");
    r->add_option("--out", resid.out, "training CSV output")->required();
    r->add_option("--bins", resid.bins_out, "feature-error model CSV output");
    r->add_flag("--raw", resid.raw, "skip smoothing: targets are |residual| after outlier removal");
    add_feature_flags(r, resid.flags);
    r->callback([&] { action = [&] { return cmd_residuals(resid); }; });

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "train a height-error predictor for one DEM");
    t->add_option("dem", tr.dem, "DEM grid")->required();
    t->add_option("reference", tr.reference, "reference (ground truth) grid")->required();
    t->add_option("--aux", tr.aux, "aux error raster (feature 'aux')");
    t->add_option("--out", tr.out, "model output file")->required();
    t->add_option("--history", tr.history, "per-epoch SSE CSV output");
    t->add_flag("--raw", tr.raw, "train on unsmoothed |residual| targets");
    add_feature_flags(t, tr.flags);
    add_train_flags(t, tr.flags);
    t->callback([&] { action = [&] { return cmd_train(tr); }; });

    PredictArgs pr;
    auto* p = app.add_subcommand("predict", "predict a DEM's height-error map with a trained model");
    p->add_option("model", pr.model, "model file")->required();
    p->add_option("dem", pr.dem, "DEM grid")->required();
    p->add_option("--aux", pr.aux, "aux error raster, if the model uses it");
    p->add_option("--out", pr.out, "error map output grid")->required();
    p->callback([&] { action = [&] { return cmd_predict(pr); }; });

    FuseArgs fu;
    auto* fz = app.add_subcommand("fuse", "fuse two DEMs by weighted averaging");
    fz->add_option("dem_a", fu.dem_a, "first DEM")->required();
    fz->add_option("dem_b", fu.dem_b, "second DEM")->required();
    fz->add_option("--mode", fu.mode, "ann | hem | average");
    fz->add_option("--model-a", fu.model_a, "error model for dem_a (ann mode)");
    fz->add_option("--model-b", fu.model_b, "error model for dem_b (ann mode)");
    fz->add_option("--hem-a", fu.hem_a, "height error map for dem_a (hem mode)");
    fz->add_option("--hem-b", fu.hem_b, "height error map for dem_b (hem mode)");
    fz->add_option("--aux-a", fu.aux_a, "aux raster for dem_a's model");
    fz->add_option("--aux-b", fu.aux_b, "aux raster for dem_b's model");
    fz->add_option("--mask", fu.mask, "0/1 grid; cells at 1 take dem_b heights wholesale");
    fz->add_option("--truth", fu.truth, "ground truth for an accuracy report");
    fz->add_option("--report", fu.report, "key=value report output (needs --truth)");
    fz->add_option("--out", fu.out, "fused grid output")->required();
    fz->add_option("--config", fu.flags.config_file, "key=value settings file (flags win)");
    fu.flags.add(fz, "--scheme", "scheme", "inverse-square | one-minus-norm");
    fu.flags.add(fz, "--floor", "floor", "error floor for inverse-square weights (default 0.05 m)");
    fz->callback([&] { action = [&] { return run_fuse(fu); }; });

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "accuracy of a DEM against ground truth");
    e->add_option("dem", ev.dem, "DEM grid")->required();
    e->add_option("truth", ev.truth, "ground truth grid")->required();
    e->add_option("--baseline", ev.baseline, "baseline DEM for pct_improved");
    e->add_option("--out", ev.out, "report output file");
    e->callback([&] { action = [&] { return cmd_eval(ev); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& ok) {
        return app.exit(ok);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return kExitUsage;
    }

    try {
        return action();
    } catch (const UsageError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitUsage;
    } catch (const GeometryError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitUsage;
    } catch (const StructuralError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitRuntime;
    }
}
