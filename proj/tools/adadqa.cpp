#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "adadqa/harness.hpp"
#include "adadqa/pipeline.hpp"
#include "adadqa/plot.hpp"

namespace fs = std::filesystem;
using namespace adadqa;

namespace {

struct RunDirs {
    fs::path root;
    fs::path config, metrics, logs, plots, checkpoint;
};

RunDirs make_run_dirs(const std::string& out_root, const std::string& run_id) {
    RunDirs d;
    d.root = fs::path(out_root) / run_id;
    d.config = d.root / "config";
    d.metrics = d.root / "metrics";
    d.logs = d.root / "logs";
    d.plots = d.root / "plots";
    d.checkpoint = d.root / "checkpoint";
    for (const fs::path& p : {d.config, d.metrics, d.logs, d.plots, d.checkpoint})
        fs::create_directories(p);
    return d;
}

TrainConfig resolve_config(const std::string& config_path, const std::string& dataset_dir) {
    if (!config_path.empty()) return load_train_config(config_path);
    if (!dataset_dir.empty()) {
        const fs::path suggested = fs::path(dataset_dir) / "suggested.cfg";
        if (fs::exists(suggested)) return load_train_config(suggested.string());
    }
    return validate_config(TrainConfig{});
}

// A config whose sampling geometry fits the given dataset clips.
TrainConfig suggested_config(const SynthDatasetSpec& spec) {
    TrainConfig cfg;
    cfg.frame_count = std::min(8, spec.t);
    cfg.frame_interval = 2;
    cfg.crop_size = std::max(32, std::min(spec.h, spec.w) - 8);
    cfg.epochs = 30;
    cfg.warmup_epochs = 2;
    return validate_config(cfg);
}

ExtractorPool resolve_pool(const std::string& feature_cache_path) {
    if (feature_cache_path.empty()) return build_toy_bank();
    auto cache = std::make_shared<FeatureCache>(load_feature_cache(feature_cache_path));
    ExtractorPool pool;
    for (const auto& [name, dim] : cache->extractor_table()) {
        ExtractorDescriptor desc;
        desc.name = name;
        desc.out_dim = dim;
        pool.extractors.push_back(make_cached_extractor(cache, name, desc));
    }
    return pool;
}

int short_side_of(const SynthDataset& ds) {
    return ds.clips.empty() ? 256 : std::min(ds.clips[0].h, ds.clips[0].w);
}

void print_eval(const EvalResult& r) {
    std::cout << "dataset=" << r.dataset_id << " split_seed=" << r.split_seed
              << " srcc=" << r.srcc << " plcc=" << r.plcc << " mean=" << r.mean << "\n";
}

void save_report(const RunDirs& dirs, const std::string& name, const AblationReport& report) {
    {
        std::ofstream out(dirs.metrics / (name + ".records"));
        write_report(out, report);
    }
    {
        std::ofstream out(dirs.metrics / (name + ".table"));
        render_report(out, report);
    }
    render_report(std::cout, report);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive gated feature aggregation for video quality assessment"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir = "results", dataset_dir, checkpoint_path, run_id;
    std::string feature_cache_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "training config file")->capture_default_str();
    app.add_option("--seed", seed, "seed override")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--out", out_dir, "results root directory")->capture_default_str();
    app.add_option("--dataset", dataset_dir, "dataset directory");
    app.add_option("--checkpoint", checkpoint_path, "checkpoint file");
    app.add_option("--run-id", run_id, "run directory name (default derived)");
    app.add_option("--feature-cache", feature_cache_path,
                   "use cached features instead of the built-in extractors");

    // synth-gen
    auto* synth = app.add_subcommand("synth-gen", "generate a synthetic labeled dataset");
    int gen_n = 100, gen_t = 16, gen_h = 64, gen_w = 64;
    bool gen_mixed = false;
    synth->add_option("--n", gen_n, "number of clips")->capture_default_str();
    synth->add_option("--frames", gen_t, "frames per clip")->capture_default_str();
    synth->add_option("--height", gen_h, "frame height")->capture_default_str();
    synth->add_option("--width", gen_w, "frame width")->capture_default_str();
    synth->add_flag("--mixed", gen_mixed,
                    "half blockiness-dominated, half motion-blur-dominated");

    // train
    auto* train = app.add_subcommand("train", "train the teacher and student jointly");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset test split");
    int eval_scale = 0;
    eval_cmd->add_option("--scale", eval_scale,
                         "short-side rescale before cropping (default: clip short side)");

    // repeat
    auto* repeat = app.add_subcommand("repeat", "repeated-split training and evaluation");
    int n_repeats = 10;
    repeat->add_option("--repeats", n_repeats, "number of repeats")->capture_default_str();

    // ablate
    auto* ablate = app.add_subcommand("ablate", "run one of the ablation protocols");
    std::string table;
    ablate->add_option("table", table, "table3|table4|table5|table6|table7")->required();

    // fig3
    auto* fig3 = app.add_subcommand("fig3", "distortion-response analysis of the extractor pool");

    // inspect-gates
    auto* inspect = app.add_subcommand("inspect-gates", "gating-weight statistics by MOS group");
    double threshold = 3.5;
    inspect->add_option("--threshold", threshold, "LQ/HQ MOS threshold")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            if (dataset_dir.empty()) throw std::runtime_error("synth-gen needs --dataset DIR");
            SynthDatasetSpec spec;
            spec.n = gen_n;
            spec.seed = seed;
            spec.t = gen_t;
            spec.h = gen_h;
            spec.w = gen_w;
            spec.mixed_blockiness_motion = gen_mixed;
            const SynthDataset ds = make_dataset(spec);
            save_dataset(dataset_dir, ds);
            save_train_config((fs::path(dataset_dir) / "suggested.cfg").string(),
                              suggested_config(spec));
            std::cout << "wrote " << ds.size() << " clips to " << dataset_dir << " ("
                      << ds.train_indices.size() << " train / " << ds.test_indices.size()
                      << " test)\n";
            return 0;
        }

        if (train->parsed()) {
            if (dataset_dir.empty()) throw std::runtime_error("train needs --dataset DIR");
            TrainConfig cfg = resolve_config(config_path, dataset_dir);
            if (seed_set) cfg.seed = seed;
            SynthDataset ds = load_dataset(dataset_dir);
            ExtractorPool pool = resolve_pool(feature_cache_path);
            cfg.n_extractors = pool.size();
            const RunDirs dirs =
                make_run_dirs(out_dir, run_id.empty() ? "train-seed" + std::to_string(cfg.seed)
                                                      : run_id);
            save_train_config((dirs.config / "train.cfg").string(), cfg);

            Trainer trainer(cfg, ds, std::move(pool));
            trainer.train();
            {
                std::ofstream log(dirs.logs / "train.log");
                write_loss_log(log, trainer.loss_log());
            }
            trainer.save_checkpoint((dirs.checkpoint / "final.ckpt").string());

            const EvalResult r =
                evaluate(trainer.student(), ds, ds.test_indices,
                         make_view_plan(cfg, short_side_of(ds)), make_sampling_plan(cfg));
            {
                std::ofstream metrics(dirs.metrics / "eval.txt");
                metrics << "dataset=" << r.dataset_id << " split_seed=" << r.split_seed
                        << " srcc=" << r.srcc << " plcc=" << r.plcc << " mean=" << r.mean
                        << "\n";
            }
            print_eval(r);
            std::cout << "run directory: " << dirs.root.string() << "\n";
            return 0;
        }

        if (eval_cmd->parsed()) {
            if (dataset_dir.empty() || checkpoint_path.empty())
                throw std::runtime_error("eval needs --dataset DIR and --checkpoint PATH");
            SynthDataset ds = load_dataset(dataset_dir);
            auto trainer =
                Trainer::load_checkpoint(checkpoint_path, ds, resolve_pool(feature_cache_path));
            const int scale = eval_scale > 0 ? eval_scale : short_side_of(ds);
            const EvalResult r =
                evaluate(trainer->student(), ds, ds.test_indices,
                         make_view_plan(trainer->config(), scale),
                         make_sampling_plan(trainer->config()));
            print_eval(r);
            return 0;
        }

        if (repeat->parsed()) {
            if (dataset_dir.empty()) throw std::runtime_error("repeat needs --dataset DIR");
            TrainConfig cfg = resolve_config(config_path, dataset_dir);
            if (seed_set) cfg.seed = seed;
            SynthDataset ds = load_dataset(dataset_dir);
            ExtractorPool pool = resolve_pool(feature_cache_path);
            cfg.n_extractors = pool.size();
            const RunDirs dirs = make_run_dirs(
                out_dir, run_id.empty() ? "repeat-seed" + std::to_string(cfg.seed) : run_id);
            save_train_config((dirs.config / "train.cfg").string(), cfg);

            const RepeatOutcome outcome =
                run_repeated(cfg, ds, pool, n_repeats, short_side_of(ds));
            std::ofstream metrics(dirs.metrics / "repeat.txt");
            for (const EvalResult& r : outcome.results) {
                metrics << "split_seed=" << r.split_seed << " srcc=" << r.srcc
                        << " plcc=" << r.plcc << " mean=" << r.mean << "\n";
                print_eval(r);
            }
            metrics << "mean_srcc=" << outcome.summary.mean_srcc
                    << " std_srcc=" << outcome.summary.std_srcc
                    << " mean_plcc=" << outcome.summary.mean_plcc
                    << " std_plcc=" << outcome.summary.std_plcc << "\n";
            std::cout << "mean srcc " << outcome.summary.mean_srcc << " +- "
                      << outcome.summary.std_srcc << ", mean plcc "
                      << outcome.summary.mean_plcc << " +- " << outcome.summary.std_plcc
                      << " over " << outcome.summary.n_runs << " runs\n";
            return 0;
        }

        if (ablate->parsed()) {
            if (dataset_dir.empty()) throw std::runtime_error("ablate needs --dataset DIR");
            TrainConfig cfg = resolve_config(config_path, dataset_dir);
            if (seed_set) cfg.seed = seed;
            SynthDataset ds = load_dataset(dataset_dir);
            const ExtractorPool pool = resolve_pool(feature_cache_path);
            cfg.n_extractors = pool.size();
            const RunDirs dirs = make_run_dirs(
                out_dir, run_id.empty() ? "ablate-" + table + "-seed" + std::to_string(cfg.seed)
                                        : run_id);
            save_train_config((dirs.config / "train.cfg").string(), cfg);
            const int scale = short_side_of(ds);

            if (table == "table3") {
                std::vector<int> counts;
                for (int c = 3; c <= pool.size(); ++c) counts.push_back(c);
                save_report(dirs, "extractor_count",
                            ablate_extractor_count(cfg, ds, pool, counts, {false, true}, scale));
            } else if (table == "table4") {
                save_report(dirs, "single_extractor",
                            ablate_single_extractor(cfg, ds, pool, scale));
            } else if (table == "table5") {
                save_report(dirs, "distill_loss", ablate_distill_loss(cfg, ds, pool, scale));
            } else if (table == "table6") {
                const auto [gammas, lambdas] = ablate_hyperparams(
                    cfg, ds, pool, {0.1, 0.2, 0.5, 1.0}, {0.2, 0.5, 0.8, 1.0}, scale);
                save_report(dirs, "gamma_sweep", gammas);
                save_report(dirs, "lambda_sweep", lambdas);
            } else if (table == "table7") {
                if (checkpoint_path.empty())
                    throw std::runtime_error("ablate table7 needs --checkpoint PATH");
                auto trainer = Trainer::load_checkpoint(checkpoint_path, ds,
                                                        resolve_pool(feature_cache_path));
                save_report(dirs, "gating_stats", gating_stats(*trainer, ds, threshold));
            } else {
                throw std::runtime_error("unknown ablation table '" + table + "'");
            }
            std::cout << "run directory: " << dirs.root.string() << "\n";
            return 0;
        }

        if (fig3->parsed()) {
            const RunDirs dirs = make_run_dirs(out_dir, run_id.empty() ? "fig3" : run_id);
            const ExtractorPool pool = resolve_pool(feature_cache_path);
            const std::vector<DistortionKind> kinds(kAllDistortionKinds.begin(),
                                                    kAllDistortionKinds.end());
            const AblationReport report = fig3_analysis(
                pool, kinds, {0.0, 0.25, 0.5, 0.75, 1.0}, dirs.plots.string());
            save_report(dirs, "fig3_matrix", report);
            std::cout << "plots under " << dirs.plots.string() << "\n";
            return 0;
        }

        if (inspect->parsed()) {
            if (dataset_dir.empty() || checkpoint_path.empty())
                throw std::runtime_error("inspect-gates needs --dataset DIR and --checkpoint PATH");
            SynthDataset ds = load_dataset(dataset_dir);
            auto trainer =
                Trainer::load_checkpoint(checkpoint_path, ds, resolve_pool(feature_cache_path));
            render_report(std::cout, gating_stats(*trainer, ds, threshold));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
