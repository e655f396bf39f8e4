// Command-line pipeline: prepare annotation data into a scene cache, train
// and evaluate the predictor, score the linear baseline, verify gradients
// and render trajectory / error-distribution plots.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "trajpred/trajpred.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trajpred;

namespace {

struct CommonOpts {
    std::string precision = "fast";
    std::string backbone;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

ModelConfig load_model_config(const std::string& path, const std::string& backbone) {
    ModelConfig cfg;
    if (!path.empty()) cfg = model_config_from(ConfigMap::parse_file(path));
    if (backbone == "nomap") {
        cfg.image_enabled = false;
    } else if (backbone == "patch") {
        cfg.image_enabled = true;
    } else if (!backbone.empty()) {
        throw ConfigError("unknown backbone '" + backbone + "' (expected nomap or patch)");
    }
    cfg.validate();
    return cfg;
}

TrainConfig load_train_config(const std::string& path, const CommonOpts& common) {
    TrainConfig cfg;
    if (!path.empty()) cfg = train_config_from(ConfigMap::parse_file(path));
    if (common.seed_given) cfg.seed = common.seed;
    cfg.validate();
    return cfg;
}

/// Fold selection over a scene cache: a dataset name gives the
/// leave-one-out fold (train on the rest, test on it); "all" trains and
/// tests on every scene.
std::pair<std::vector<Scene>, std::vector<Scene>> apply_split(const std::vector<Scene>& all,
                                                              const std::string& split) {
    if (split == "all") return {all, all};
    std::vector<Scene> train, test;
    for (const auto& s : all) {
        (s.dataset == split ? test : train).push_back(s);
    }
    if (test.empty()) {
        throw ConfigError("split '" + split + "': no scenes with that dataset tag");
    }
    if (train.empty()) {
        throw ConfigError("split '" + split + "': no training scenes left");
    }
    return {train, test};
}

std::map<std::string, std::vector<Scene>> group_by_dataset(const std::vector<Scene>& scenes) {
    std::map<std::string, std::vector<Scene>> groups;
    for (const auto& s : scenes) groups[s.dataset].push_back(s);
    return groups;
}

json fold_json(const FoldMetrics& f) {
    return json{{"name", f.name},
                {"units", units_name(f.units)},
                {"scenes", f.n},
                {"ade", f.ade},
                {"fde", f.fde}};
}

json report_json(const MetricReport& report, std::uint64_t seed) {
    json folds = json::array();
    for (const auto& f : report.folds) folds.push_back(fold_json(f));
    return json{{"seed", seed}, {"folds", folds}, {"mean", fold_json(report.mean)}};
}

std::string report_table(const MetricReport& report) {
    std::ostringstream os;
    os << std::left << std::setw(14) << "dataset" << std::right << std::setw(8) << "scenes"
       << std::setw(12) << "ADE" << std::setw(12) << "FDE" << std::setw(10) << "units"
       << "\n";
    os << std::string(56, '-') << "\n";
    auto row = [&](const FoldMetrics& f) {
        os << std::left << std::setw(14) << f.name << std::right << std::setw(8) << f.n
           << std::setw(12) << std::fixed << std::setprecision(4) << f.ade << std::setw(12)
           << f.fde << std::setw(10) << units_name(f.units) << "\n";
    };
    for (const auto& f : report.folds) row(f);
    os << std::string(56, '-') << "\n";
    row(report.mean);
    return os.str();
}

void write_metrics(const std::string& out_dir, const MetricReport& report,
                   std::uint64_t seed, const std::string& label) {
    fs::create_directories(out_dir);
    std::ofstream js(out_dir + "/" + label + "_metrics.json");
    js << report_json(report, seed).dump(2) << "\n";
    std::ofstream table(out_dir + "/" + label + "_metrics.txt");
    table << report_table(report);
    std::ofstream scenes(out_dir + "/" + label + "_scenes.jsonl");
    for (const auto& s : report.scenes) {
        scenes << json{{"dataset", s.dataset},
                       {"agent", s.agent_id},
                       {"start_frame", s.start_frame},
                       {"ade", s.ade},
                       {"fde", s.fde},
                       {"err_x", s.final_err_norm.x},
                       {"err_y", s.final_err_norm.y}}
                      .dump()
               << "\n";
    }
    std::cout << report_table(report);
}

MetricReport evaluate_grouped(const std::vector<Scene>& test,
                              const std::function<std::vector<Vec2>(const Scene&)>& predict) {
    std::vector<MetricReport> reports;
    for (const auto& [name, scenes] : group_by_dataset(test)) {
        reports.push_back(evaluate_scenes(scenes, name, predict));
    }
    return merge_reports(reports);
}

/// Forwards epoch records to stdout while train() writes them to disk.
class TeeStream : public std::ostream {
    struct TeeBuf : std::streambuf {
        std::streambuf* a;
        std::streambuf* b;
        int overflow(int c) override {
            if (c != EOF) {
                a->sputc(static_cast<char>(c));
                b->sputc(static_cast<char>(c));
            }
            return c;
        }
    };

public:
    TeeStream(std::ostream& a, std::ostream& b) : std::ostream(&buf_) {
        buf_.a = a.rdbuf();
        buf_.b = b.rdbuf();
    }

private:
    TeeBuf buf_;
};

/// Deterministic constant-turn fixture scene for gradient checking.
Scene gradcheck_scene(Rng& rng, const ModelConfig& cfg) {
    Scene s;
    s.dataset = "gradcheck";
    s.agent_id = 1;
    s.units = Units::meters;
    Vec2 p{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    double theta = rng.uniform(0, 2 * M_PI);
    const double step = rng.uniform(0.4, 0.6);
    const double turn = 0.15;
    for (std::size_t k = 0; k < cfg.t_obs + cfg.t_pred; ++k) {
        TrackPoint tp;
        tp.frame = static_cast<long long>(k);
        tp.t = static_cast<double>(k) * kTimeStep;
        tp.pos = p;
        (k < cfg.t_obs ? s.observed : s.future).push_back(tp);
        p = p + Vec2{std::cos(theta) * step, std::sin(theta) * step};
        theta += turn;
    }
    for (int n = 0; n < 2; ++n) {
        NeighborTrack nb;
        nb.agent_id = 100 + n;
        Vec2 q = s.observed.front().pos + Vec2{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const Vec2 dq{rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)};
        for (std::size_t k = 0; k < cfg.t_obs; ++k) {
            TrackPoint tp;
            tp.frame = s.observed[k].frame;
            tp.t = s.observed[k].t;
            tp.pos = q;
            nb.points.push_back(tp);
            nb.valid.push_back(1);
            q = q + dq;
        }
        s.neighbors.push_back(std::move(nb));
    }
    if (cfg.image_enabled) {
        const std::size_t side = 2 * cfg.crop_size;
        auto img = std::make_shared<BevImage>(side, side);
        for (auto& v : img->pixels) v = static_cast<float>(rng.uniform());
        img->meters_per_pixel = 1.0;
        img->origin = {-static_cast<double>(side) / 2.0, -static_cast<double>(side) / 2.0};
        s.image = img;
    }
    return s;
}

// ---- subcommands ---------------------------------------------------------------

struct PrepareOpts {
    std::string dataset_root;
    std::string format = "ethucy";
    std::string out;
    std::size_t stride = 1;
    std::size_t t_obs = 8;
    std::size_t t_pred = 12;
    std::string sdd_keep = "Pedestrian";
    std::string sdd_drop = "lost";
    std::size_t dump_crops = 0;
    std::size_t crop_size = 64;
};

int cmd_prepare(const PrepareOpts& opts, const CommonOpts& common) {
    std::vector<std::string> datasets;
    if (!fs::is_directory(opts.dataset_root)) {
        throw IoError("dataset root '" + opts.dataset_root + "' is not a directory");
    }
    for (const auto& entry : fs::directory_iterator(opts.dataset_root)) {
        if (entry.is_directory()) datasets.push_back(entry.path().filename().string());
    }
    std::sort(datasets.begin(), datasets.end());
    if (datasets.empty()) {
        throw IoError("dataset root '" + opts.dataset_root + "' contains no dataset directories");
    }
    std::vector<std::string> missing;
    for (const auto& name : datasets) {
        if (!fs::exists(fs::path(opts.dataset_root) / name / "annotations.txt")) {
            missing.push_back(opts.dataset_root + "/" + name + "/annotations.txt");
        }
    }
    if (!missing.empty()) {
        std::string joined;
        for (const auto& m : missing) joined += "\n  " + m;
        throw IoError("missing annotation files:" + joined);
    }

    fs::create_directories(opts.out);
    std::vector<Scene> all;
    json summary;
    summary["seed"] = common.seed;
    summary["format"] = opts.format;
    summary["stride"] = opts.stride;
    for (const auto& name : datasets) {
        const fs::path dir = fs::path(opts.dataset_root) / name;
        std::vector<Trajectory> tracks;
        if (opts.format == "ethucy") {
            std::optional<Homography> h;
            if (fs::exists(dir / "homography.txt")) {
                h = parse_homography_file((dir / "homography.txt").string());
            }
            tracks = parse_eth_ucy_file((dir / "annotations.txt").string(), h);
        } else if (opts.format == "sdd") {
            SddOptions sdd;
            sdd.keep_classes.clear();
            for (const auto& c : split_csv(opts.sdd_keep)) sdd.keep_classes.insert(c);
            sdd.drop_flags.clear();
            for (const auto& f : split_csv(opts.sdd_drop)) sdd.drop_flags.insert(f);
            tracks = parse_sdd_file((dir / "annotations.txt").string(), sdd);
        } else {
            throw ConfigError("unknown format '" + opts.format + "' (expected ethucy or sdd)");
        }

        SceneBuildOptions build;
        build.dataset = name;
        build.stride = opts.stride;
        build.t_obs = opts.t_obs;
        build.t_pred = opts.t_pred;
        if (fs::exists(dir / "reference.png")) {
            build.image = std::make_shared<BevImage>(read_png((dir / "reference.png").string()));
        } else if (fs::exists(dir / "reference.raw")) {
            build.image =
                std::make_shared<BevImage>(read_raw_image((dir / "reference.raw").string()));
        }
        auto scenes = build_scenes(tracks, build);
        summary["datasets"][name] = {{"trajectories", tracks.size()}, {"scenes", scenes.size()}};
        std::cout << name << ": " << tracks.size() << " trajectories, " << scenes.size()
                  << " scenes\n";
        all.insert(all.end(), scenes.begin(), scenes.end());
    }
    summary["total_scenes"] = all.size();
    std::cout << "total: " << all.size() << " scenes\n";

    const std::string cache_path = opts.out + "/scenes.cache";
    save_scene_cache(cache_path, all);
    std::ofstream(opts.out + "/prepare_summary.json") << summary.dump(2) << "\n";

    std::size_t dumped = 0;
    for (const auto& scene : all) {
        if (dumped >= opts.dump_crops || !scene.image) break;
        const auto tf = heading_transform(scene.observed_positions());
        const BevImage crop = rotate_crop(*scene.image, tf, opts.crop_size,
                                          CropSampling::nearest);
        write_png(opts.out + "/crop_" + std::to_string(dumped) + ".png", crop);
        ++dumped;
    }
    std::cout << "cache written to " << cache_path << "\n";
    return 0;
}

struct TrainOpts {
    std::string cache;
    std::string split = "all";
    std::string model_config;
    std::string train_config;
    std::string out = "out";
    long long epochs_override = -1;
};

template <typename T>
int run_train(const TrainOpts& opts, const CommonOpts& common) {
    auto all = load_scene_cache(opts.cache);
    auto [train_scenes, test_scenes] = apply_split(all, opts.split);
    ModelConfig model_cfg = load_model_config(opts.model_config, common.backbone);
    TrainConfig train_cfg = load_train_config(opts.train_config, common);
    if (opts.epochs_override >= 0) {
        train_cfg.epochs = static_cast<std::size_t>(opts.epochs_override);
    }

    Model<T> model{model_cfg};
    Rng rng(train_cfg.seed);
    model.init(rng);

    fs::create_directories(opts.out);
    std::ofstream log(opts.out + "/train_log.jsonl");
    TeeStream tee(log, std::cout);
    auto report = train(model, train_scenes, train_cfg, opts.out, &tee);

    json out;
    out["seed"] = train_cfg.seed;
    out["precision"] = common.precision;
    out["split"] = opts.split;
    out["train_scenes"] = train_scenes.size();
    out["wall_seconds"] = report.wall_seconds;
    out["final_checkpoint"] = report.final_checkpoint;
    out["best_checkpoint"] = report.best_checkpoint;
    json epochs = json::array();
    for (const auto& e : report.epochs) {
        json rec{{"epoch", e.epoch}, {"loss", e.train_loss}, {"lr", e.lr}};
        if (std::isfinite(e.val_ade)) {
            rec["val_ade"] = e.val_ade;
            rec["val_fde"] = e.val_fde;
        }
        epochs.push_back(rec);
    }
    out["epochs"] = epochs;
    std::ofstream(opts.out + "/train_report.json") << out.dump(2) << "\n";
    std::cout << "checkpoint written to " << report.final_checkpoint << "\n";
    return 0;
}

struct EvalOpts {
    std::string cache;
    std::string split = "all";
    std::string checkpoint;
    std::string model_config;
    std::string out = "out";
};

template <typename T>
int run_eval(const EvalOpts& opts, const CommonOpts& common) {
    auto all = load_scene_cache(opts.cache);
    auto [train_scenes, test_scenes] = apply_split(all, opts.split);
    (void)train_scenes;
    ModelConfig model_cfg = load_model_config(opts.model_config, common.backbone);
    Model<T> model{model_cfg};
    auto meta = load_checkpoint(opts.checkpoint, model.params());
    const auto seed_it = meta.find("seed");
    const std::uint64_t seed =
        seed_it == meta.end() ? common.seed : static_cast<std::uint64_t>(seed_it->second);

    auto report = evaluate_grouped(test_scenes, [&](const Scene& scene) {
        Graph<T> g;
        return extract_prediction(model.forward(g, scene, DecodeMode::inference))
            .world_trajectory();
    });
    write_metrics(opts.out, report, seed, "eval");
    return 0;
}

int cmd_baseline(const EvalOpts& opts, const CommonOpts& common) {
    auto all = load_scene_cache(opts.cache);
    auto [train_scenes, test_scenes] = apply_split(all, opts.split);
    (void)train_scenes;
    auto report = evaluate_grouped(test_scenes, [&](const Scene& scene) {
        return linear_baseline(scene.observed_positions(), scene.future.size());
    });
    write_metrics(opts.out, report, common.seed, "baseline");
    return 0;
}

struct GradcheckOpts {
    std::string model_config;
    std::size_t probes = 200;
    double tolerance = 1e-4;
};

int cmd_gradcheck(const GradcheckOpts& opts, const CommonOpts& common) {
    // finite differences are meaningless in fast mode, so this always runs
    // in check (double) precision
    ModelConfig cfg = load_model_config(opts.model_config, common.backbone);
    Model<double> model{cfg};
    Rng rng(common.seed == 0 ? 7 : common.seed);
    model.init(rng);
    // the decoder heads initialize to zero output; probe a generic point so
    // gradients flow through every layer
    const std::size_t goal_last = cfg.goal_mlp.size() - 2;
    const std::size_t traj_last = cfg.traj_mlp.size() - 2;
    init_normal(model.params().at("goal_mlp." + std::to_string(goal_last) + ".w").tensor, rng,
                0.05);
    init_normal(model.params().at("traj_mlp." + std::to_string(traj_last) + ".w").tensor, rng,
                0.05);
    Scene scene = gradcheck_scene(rng, cfg);

    const auto tf = heading_transform(scene.observed_positions());
    auto build = [&](Graph<double>& g) {
        auto fwd = model.forward(g, scene, DecodeMode::teacher_forced);
        return loss_graph(g, fwd, model.normalized_future(scene, tf), 0.5);
    };
    Rng probe_rng(common.seed + 1);
    auto report = gradient_check(build, model.params(), opts.probes, probe_rng);

    json out{{"max_rel_err", report.max_rel_err},
             {"probes", report.probes},
             {"rejected", report.rejected},
             {"worst_param", report.worst_param},
             {"tolerance", opts.tolerance},
             {"seed", common.seed}};
    std::cout << out.dump(2) << "\n";
    if (report.max_rel_err >= opts.tolerance) {
        std::cerr << "error: gradient check failed: max_rel_err " << report.max_rel_err
                  << " >= " << opts.tolerance << "\n";
        return 1;
    }
    return 0;
}

struct PlotOpts {
    std::string cache;
    std::string split = "all";
    std::string checkpoint;
    std::string model_config;
    std::string out = "out";
    std::size_t max_scenes = 8;
};

template <typename T>
int run_plot(const PlotOpts& opts, const CommonOpts& common) {
    auto all = load_scene_cache(opts.cache);
    auto [train_scenes, test_scenes] = apply_split(all, opts.split);
    (void)train_scenes;
    ModelConfig model_cfg = load_model_config(opts.model_config, common.backbone);
    Model<T> model{model_cfg};
    auto meta = load_checkpoint(opts.checkpoint, model.params());
    fs::create_directories(opts.out);

    auto predict = [&](const Scene& scene) {
        Graph<T> g;
        return extract_prediction(model.forward(g, scene, DecodeMode::inference))
            .world_trajectory();
    };
    for (std::size_t i = 0; i < std::min(opts.max_scenes, test_scenes.size()); ++i) {
        Canvas canvas = plot_scene_overlay(test_scenes[i], predict(test_scenes[i]));
        canvas.save_png(opts.out + "/scene_" + std::to_string(i) + ".png");
    }

    auto report = evaluate_grouped(test_scenes, predict);
    auto dist = error_distribution(report);
    plot_histogram(dist).save_png(opts.out + "/fde_histogram.png");
    plot_error_cloud(dist).save_png(opts.out + "/final_error_cloud.png");

    json quantiles = json::array();
    for (const auto& [p, v] : dist.quantiles) quantiles.push_back({{"p", p}, {"value", v}});
    json contours = json::array();
    for (std::size_t i = 0; i < dist.contour_levels.size(); ++i) {
        contours.push_back({{"mass", dist.contour_mass[i]}, {"level", dist.contour_levels[i]}});
    }
    json points = json::array();
    for (const auto& p : dist.points) points.push_back({{"x", p.x}, {"y", p.y}});
    json out{{"seed", common.seed},
             {"median_fde", dist.median},
             {"quantiles", quantiles},
             {"hist_min", dist.hist_min},
             {"hist_max", dist.hist_max},
             {"hist_counts", dist.hist_counts},
             {"contours", contours},
             {"points", points}};
    std::ofstream(opts.out + "/distribution.json") << out.dump(2) << "\n";
    std::cout << "median FDE " << dist.median << ", plots written to " << opts.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"goal-conditioned pedestrian trajectory prediction pipeline"};
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--precision", common.precision, "numeric precision: fast or check")
        ->check(CLI::IsMember({"fast", "check"}))
        ->envname("TRAJPRED_PRECISION");
    app.add_option("--backbone", common.backbone, "nomap (no image path) or patch")
        ->check(CLI::IsMember({"nomap", "patch"}))
        ->envname("TRAJPRED_BACKBONE");
    auto* seed_opt = app.add_option("--seed", common.seed, "run seed")
                         ->envname("TRAJPRED_SEED");

    PrepareOpts prep;
    auto* prepare = app.add_subcommand("prepare", "parse annotations into a scene cache");
    prepare->fallthrough();
    prepare->add_option("--dataset-root", prep.dataset_root, "directory of dataset folders")
        ->required()
        ->envname("TRAJPRED_DATASET_ROOT");
    prepare->add_option("--format", prep.format, "annotation format: ethucy or sdd");
    prepare->add_option("--out", prep.out, "output directory")->required();
    prepare->add_option("--stride", prep.stride, "scene window stride in timesteps");
    prepare->add_option("--t-obs", prep.t_obs, "observed steps per scene");
    prepare->add_option("--t-pred", prep.t_pred, "predicted steps per scene");
    prepare->add_option("--sdd-keep", prep.sdd_keep, "comma list of SDD classes to keep");
    prepare->add_option("--sdd-drop", prep.sdd_drop, "comma list of SDD flags to drop");
    prepare->add_option("--dump-crops", prep.dump_crops, "write this many crops as PNG");
    prepare->add_option("--crop-size", prep.crop_size, "crop side for dumps, pixels");

    TrainOpts tr;
    auto* train_cmd = app.add_subcommand("train", "train the model on a scene cache");
    train_cmd->fallthrough();
    train_cmd->add_option("--cache", tr.cache, "scene cache file")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--split", tr.split, "held-out dataset name or 'all'")
        ->envname("TRAJPRED_SPLIT");
    train_cmd->add_option("--model-config", tr.model_config, "model config file")
        ->envname("TRAJPRED_MODEL_CONFIG");
    train_cmd->add_option("--train-config", tr.train_config, "train config file")
        ->envname("TRAJPRED_TRAIN_CONFIG");
    train_cmd->add_option("--out", tr.out, "output directory")->required();
    train_cmd->add_option("--epochs", tr.epochs_override, "override epoch count");

    EvalOpts ev;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->fallthrough();
    eval_cmd->add_option("--cache", ev.cache, "scene cache file")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--split", ev.split, "held-out dataset name or 'all'");
    eval_cmd->add_option("--checkpoint", ev.checkpoint, "parameter checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--model-config", ev.model_config, "model config file");
    eval_cmd->add_option("--out", ev.out, "output directory")->required();

    EvalOpts bl;
    auto* baseline_cmd = app.add_subcommand("baseline", "score the linear baseline");
    baseline_cmd->fallthrough();
    baseline_cmd->add_option("--cache", bl.cache, "scene cache file")
        ->required()
        ->check(CLI::ExistingFile);
    baseline_cmd->add_option("--split", bl.split, "held-out dataset name or 'all'");
    baseline_cmd->add_option("--out", bl.out, "output directory")->required();

    GradcheckOpts gc;
    auto* gradcheck_cmd =
        app.add_subcommand("gradcheck", "finite-difference check of the loss gradient");
    gradcheck_cmd->fallthrough();
    gradcheck_cmd->add_option("--model-config", gc.model_config, "model config file");
    gradcheck_cmd->add_option("--probes", gc.probes, "probed parameter coordinates");
    gradcheck_cmd->add_option("--tolerance", gc.tolerance, "max relative error allowed");

    PlotOpts pl;
    auto* plot_cmd = app.add_subcommand("plot", "render overlays and error distributions");
    plot_cmd->fallthrough();
    plot_cmd->add_option("--cache", pl.cache, "scene cache file")
        ->required()
        ->check(CLI::ExistingFile);
    plot_cmd->add_option("--split", pl.split, "held-out dataset name or 'all'");
    plot_cmd->add_option("--checkpoint", pl.checkpoint, "parameter checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    plot_cmd->add_option("--model-config", pl.model_config, "model config file");
    plot_cmd->add_option("--out", pl.out, "output directory")->required();
    plot_cmd->add_option("--max-scenes", pl.max_scenes, "overlay image count");

    CLI11_PARSE(app, argc, argv);
    common.seed_given = seed_opt->count() > 0;
    const bool precision_given = app.get_option("--precision")->count() > 0;
    bool check_mode = common.precision == "check";

    try {
        if (prepare->parsed()) return cmd_prepare(prep, common);
        if (train_cmd->parsed()) {
            if (!precision_given && !tr.train_config.empty()) {
                check_mode = load_train_config(tr.train_config, common).precision == "check";
            }
            return check_mode ? run_train<double>(tr, common) : run_train<float>(tr, common);
        }
        if (eval_cmd->parsed()) {
            return check_mode ? run_eval<double>(ev, common) : run_eval<float>(ev, common);
        }
        if (baseline_cmd->parsed()) return cmd_baseline(bl, common);
        if (gradcheck_cmd->parsed()) return cmd_gradcheck(gc, common);
        if (plot_cmd->parsed()) {
            return check_mode ? run_plot<double>(pl, common) : run_plot<float>(pl, common);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
