#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "adadqa/harness.hpp"

using namespace adadqa;

namespace {

TrainConfig micro_cfg(int epochs = 1) {
    TrainConfig cfg;
    cfg.n_extractors = 7;
    cfg.d = 8;
    cfg.epochs = epochs;
    cfg.warmup_epochs = epochs > 1 ? 1 : 0;
    cfg.frame_count = 4;
    cfg.frame_interval = 2;
    cfg.crop_size = 40;
    cfg.seed = 5;
    return cfg;
}

SynthDataset micro_dataset(int n = 12, std::uint64_t seed = 3) {
    SynthDatasetSpec spec;
    spec.n = n;
    spec.seed = seed;
    spec.t = 8;
    spec.h = 48;
    spec.w = 48;
    return make_dataset(spec);
}

}  // namespace

TEST_CASE("five_crop anchors") {
    VideoClip clip = make_clip(2, 256, 256, "c");
    for (int k = 0; k < 2; ++k)
        for (int y = 0; y < 256; ++y)
            for (int x = 0; x < 256; ++x)
                clip.at(k, y, x, 0) = static_cast<float>((y * 256 + x) % 97) / 96.0f;

    const std::vector<VideoClip> crops = five_crop(clip, 224);
    REQUIRE(crops.size() == 5);
    // corners at offsets {0, 32}^2, center at (16, 16)
    const std::vector<std::pair<int, int>> anchors{{0, 0}, {0, 32}, {32, 0}, {32, 32}, {16, 16}};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(crops[i].h == 224);
        CHECK(crops[i].at(0, 0, 0, 0) == clip.at(0, anchors[i].first, anchors[i].second, 0));
        CHECK(crops[i].at(1, 223, 223, 0) ==
              clip.at(1, anchors[i].first + 223, anchors[i].second + 223, 0));
    }
}

TEST_CASE("five_crop degenerates to five copies when the frame equals the crop") {
    VideoClip clip = make_clip(1, 64, 64, "c");
    for (std::size_t i = 0; i < clip.pixels.size(); ++i)
        clip.pixels[i] = static_cast<float>(i % 251) / 250.0f;
    const auto crops = five_crop(clip, 64);
    for (const VideoClip& crop : crops) CHECK(crop.pixels == clip.pixels);
}

TEST_CASE("five_crop on a 300x224 frame: corner pairs coincide columnwise") {
    VideoClip clip = make_clip(1, 300, 224, "c");
    for (int y = 0; y < 300; ++y)
        for (int x = 0; x < 224; ++x) clip.at(0, y, x, 0) = static_cast<float>(y % 2);
    const auto crops = five_crop(clip, 224);
    // W - s = 0: top-left == top-right and bottom-left == bottom-right
    CHECK(crops[0].pixels == crops[1].pixels);
    CHECK(crops[2].pixels == crops[3].pixels);
    CHECK_THROWS_AS(five_crop(make_clip(1, 100, 100), 224), std::invalid_argument);
}

TEST_CASE("resize_short_side is an identity when dimensions already match") {
    VideoClip clip = make_clip(2, 64, 80, "c");
    for (std::size_t i = 0; i < clip.pixels.size(); ++i)
        clip.pixels[i] = static_cast<float>((i * 31) % 255) / 254.0f;
    const VideoClip same = resize_short_side(clip, 64);
    CHECK(same.pixels == clip.pixels);

    const VideoClip half = resize_short_side(clip, 32);
    CHECK(half.h == 32);
    CHECK(half.w == 40);
    const VideoClip grown = resize_short_side(clip, 128);
    CHECK(grown.h == 128);
    CHECK(grown.w == 160);
}

TEST_CASE("multi_view_inference issues exactly n_clips * n_crops scorer calls") {
    const SynthDataset ds = micro_dataset();
    ViewPlan plan;
    plan.n_clips = 4;
    plan.n_crops = 5;
    plan.scale_short_side = 48;
    plan.crop_size = 40;
    SamplingPlan sampling;
    sampling.frame_count = 4;
    sampling.frame_interval = 2;

    long long forwards = 0;
    const double score = multi_view_inference([](const VideoClip&) { return 2.5; }, ds.clips[0],
                                              plan, sampling, &forwards);
    CHECK(forwards == 20);
    // constant scorer: the mean of identical scores is that constant
    CHECK(score == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("multi-view collapses to a single forward for a 1x1 plan on an exact-size video") {
    TrainConfig cfg = micro_cfg();
    SynthDatasetSpec spec;
    spec.n = 10;
    spec.seed = 8;
    spec.t = 8;
    spec.h = 40;
    spec.w = 40;  // exactly scale and crop size
    const SynthDataset ds = make_dataset(spec);

    StudentModel<float> model(StudentConfig::make_default(cfg.d, cfg.frame_count, cfg.crop_size));
    Rng rng(17);
    model.init(rng);

    ViewPlan plan;
    plan.n_clips = 1;
    plan.n_crops = 1;
    plan.scale_short_side = 40;
    plan.crop_size = 40;
    const SamplingPlan sampling = make_sampling_plan(cfg);

    const double multi = multi_view_inference(model, ds.clips[0], plan, sampling);
    const VideoClip view = sample_frames(ds.clips[0], sampling, 0);
    CHECK(multi == doctest::Approx(model.forward(view).second).epsilon(1e-12));
}

TEST_CASE("evaluate: oracle and anti-oracle scorers") {
    const SynthDataset ds = micro_dataset(15, 11);
    std::map<std::string, double> mos_by_id;
    for (const QualityRecord& r : ds.records) mos_by_id[r.source_id] = r.mos;

    ViewPlan plan;
    plan.n_clips = 2;
    plan.n_crops = 1;
    plan.scale_short_side = 48;
    plan.crop_size = 40;
    SamplingPlan sampling;
    sampling.frame_count = 4;
    sampling.frame_interval = 2;

    const EvalResult oracle = evaluate(
        [&](const VideoClip& view) { return mos_by_id.at(view.source_id); }, ds,
        ds.test_indices, plan, sampling);
    CHECK(oracle.srcc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(oracle.plcc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(oracle.mean == doctest::Approx(1.0).epsilon(1e-12));

    const EvalResult anti = evaluate(
        [&](const VideoClip& view) { return -mos_by_id.at(view.source_id); }, ds,
        ds.test_indices, plan, sampling);
    CHECK(anti.srcc == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("evaluate propagates metric errors and rejects empty splits") {
    const SynthDataset ds = micro_dataset();
    ViewPlan plan;
    plan.n_clips = 1;
    plan.n_crops = 1;
    plan.scale_short_side = 48;
    plan.crop_size = 40;
    SamplingPlan sampling;
    sampling.frame_count = 4;
    CHECK_THROWS_AS(
        evaluate([](const VideoClip&) { return 1.0; }, ds, ds.test_indices, plan, sampling),
        std::invalid_argument);
    CHECK_THROWS_AS(evaluate([](const VideoClip&) { return 1.0; }, ds, {}, plan, sampling),
                    std::invalid_argument);
}

TEST_CASE("run_repeated: distinct split seeds, deterministic summaries") {
    SynthDataset ds = micro_dataset(10, 19);
    const TrainConfig cfg = micro_cfg(1);
    const ExtractorPool pool = build_toy_bank();

    RepeatOutcome a = run_repeated(cfg, ds, pool, 2, 48);
    REQUIRE(a.results.size() == 2);
    CHECK(a.results[0].split_seed != a.results[1].split_seed);

    RepeatOutcome b = run_repeated(cfg, ds, pool, 2, 48);
    CHECK(a.summary.mean_srcc == b.summary.mean_srcc);
    CHECK(a.summary.std_srcc == b.summary.std_srcc);

    RepeatOutcome single = run_repeated(cfg, ds, pool, 1, 48);
    CHECK(single.summary.std_srcc == 0.0);
    CHECK(single.summary.n_runs == 1);
}

TEST_CASE("ablation: extractor count schema") {
    SynthDataset ds = micro_dataset(10, 23);
    const AblationReport report = ablate_extractor_count(micro_cfg(1), ds, build_toy_bank(),
                                                         {1, 2}, {false, true}, 48);
    REQUIRE(report.rows.size() == 4);
    CHECK(report.table_id == AblationTable::kExtractorCount);
    CHECK(report.rows[0].condition == "1 no-sparsity");
    CHECK(report.rows[3].condition == "2 with-sparsity");
    for (const AblationRow& row : report.rows) {
        CHECK(row.values[0].first == "srcc");
        CHECK(std::abs(row.values[0].second) <= 1.0);
    }
    CHECK_THROWS_AS(
        ablate_extractor_count(micro_cfg(1), ds, build_toy_bank(), {9}, {true}, 48),
        std::invalid_argument);
}

TEST_CASE("ablation: single extractor schema has one row per meter plus the w/o baseline") {
    SynthDataset ds = micro_dataset(10, 29);
    const AblationReport report = ablate_single_extractor(micro_cfg(1), ds, build_toy_bank(), 48);
    REQUIRE(report.rows.size() == 8);
    CHECK(report.rows[0].condition == "w/o");
    CHECK(report.rows[1].condition == "blockiness-meter");
    CHECK(report.rows[7].condition == "temporal-flicker");
}

TEST_CASE("ablation: distill loss grid and hyperparameter sweeps") {
    SynthDataset ds = micro_dataset(10, 37);
    const AblationReport distill = ablate_distill_loss(micro_cfg(1), ds, build_toy_bank(), 48);
    REQUIRE(distill.rows.size() == 3);
    CHECK(distill.rows[0].condition == "l2");
    CHECK(distill.rows[1].condition == "l1");
    CHECK(distill.rows[2].condition == "js");

    const auto [gammas, lambdas] =
        ablate_hyperparams(micro_cfg(1), ds, build_toy_bank(), {0.1, 0.5}, {0.8}, 48);
    CHECK(gammas.rows.size() == 2);
    CHECK(gammas.table_id == AblationTable::kGammaSweep);
    CHECK(lambdas.rows.size() == 1);
    CHECK(lambdas.table_id == AblationTable::kLambdaSweep);
}

TEST_CASE("gating stats: alpha ranges and empty-group marking") {
    SynthDataset ds = micro_dataset(10, 41);
    Trainer trainer(micro_cfg(1), ds, build_toy_bank());
    trainer.train();

    const AblationReport stats = gating_stats(trainer, ds, 3.5);
    REQUIRE(stats.rows.size() == 7);
    for (const AblationRow& row : stats.rows)
        for (const auto& [key, value] : row.values)
            if (!std::isnan(value)) {
                CHECK(value > 0.0);
                CHECK(value < 1.0);
            }

    // all-HQ dataset: the LQ column is empty-marked
    SynthDataset hq = ds;
    for (QualityRecord& r : hq.records) r.mos = 4.5;
    const AblationReport empty_lq = gating_stats(trainer, hq, 3.5);
    for (const AblationRow& row : empty_lq.rows) {
        CHECK(std::isnan(row.values[0].second));   // alpha_lq
        CHECK(!std::isnan(row.values[1].second));  // alpha_hq
    }
}

TEST_CASE("fig3 analysis: full matrix and plot emission") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "adadqa_fig3_test";
    fs::remove_all(dir);

    const ExtractorPool pool = build_toy_bank();
    const std::vector<DistortionKind> kinds(kAllDistortionKinds.begin(),
                                            kAllDistortionKinds.end());
    const AblationReport report =
        fig3_analysis(pool, kinds, {0.0, 0.25, 0.5, 0.75, 1.0}, dir.string());

    REQUIRE(report.rows.size() == 7);
    for (const AblationRow& row : report.rows) REQUIRE(row.values.size() == 4);
    CHECK(report.rows[0].condition == "blockiness-meter");
    CHECK(report.rows[0].values[0].first == "compression_blockiness");
    CHECK(report.rows[0].values[0].second == doctest::Approx(1.0).epsilon(1e-12));

    for (DistortionKind kind : kinds)
        CHECK(fs::exists(dir / ("fig3_" + to_string(kind) + ".bmp")));
    fs::remove_all(dir);
}

TEST_CASE("report writers: records and rendered tables") {
    AblationReport report{AblationTable::kDistillLoss, {}};
    report.rows.push_back({"l2", {{"srcc", 0.9}, {"plcc", 0.92}}});
    report.rows.push_back({"js", {{"srcc", std::nan("")}, {"plcc", 0.5}}});

    std::ostringstream records;
    write_report(records, report);
    CHECK(records.str().find("table=distill_loss") != std::string::npos);
    CHECK(records.str().find("condition=\"l2\"") != std::string::npos);
    CHECK(records.str().find("srcc=0.9") != std::string::npos);
    CHECK(records.str().find("srcc=-") != std::string::npos);

    std::ostringstream table;
    render_report(table, report);
    CHECK(table.str().find("condition") != std::string::npos);
    CHECK(table.str().find("0.9000") != std::string::npos);
    CHECK(table.str().find("-") != std::string::npos);
}
