#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "adadqa/extractors.hpp"
#include "adadqa/rng.hpp"
#include "adadqa/synthdata.hpp"

using namespace adadqa;

namespace {

bool clips_equal(const VideoClip& a, const VideoClip& b) {
    return a.t == b.t && a.h == b.h && a.w == b.w && a.pixels == b.pixels;
}

double frame_mean(const VideoClip& clip, int k) {
    double sum = 0.0;
    for (int y = 0; y < clip.h; ++y)
        for (int x = 0; x < clip.w; ++x)
            for (int c = 0; c < kChannels; ++c) sum += clip.at(k, y, x, c);
    return sum / (static_cast<double>(clip.h) * clip.w * kChannels);
}

}  // namespace

TEST_CASE("generate_clip is deterministic") {
    SynthClipSpec spec;
    spec.seed = 7;
    spec.motion_speed = 1.5;
    for (BasePattern p : {BasePattern::kMovingGradient, BasePattern::kTexturedNoiseField,
                          BasePattern::kCheckerPan}) {
        spec.base_pattern = p;
        CHECK(clips_equal(generate_clip(spec), generate_clip(spec)));
    }
}

TEST_CASE("degree-0 distortions are bitwise identities") {
    SynthClipSpec spec;
    spec.seed = 3;
    const VideoClip pristine = generate_clip(spec);
    spec.distortions = {{DistortionKind::kCompressionBlockiness, 0.0},
                        {DistortionKind::kGaussianBlur, 0.0},
                        {DistortionKind::kMotionBlur, 0.0},
                        {DistortionKind::kAdditiveNoise, 0.0}};
    CHECK(clips_equal(generate_clip(spec), pristine));
    for (DistortionKind k : kAllDistortionKinds)
        CHECK(clips_equal(apply_distortion(pristine, {k, 0.0}), pristine));
}

TEST_CASE("checker_pan frames are wrapped shifts of frame 0") {
    SynthClipSpec spec;
    spec.base_pattern = BasePattern::kCheckerPan;
    spec.motion_speed = 2.0;
    spec.seed = 11;
    const VideoClip clip = generate_clip(spec);
    for (int k = 1; k < clip.t; ++k) {
        const int shift = 2 * k;
        for (int y = 0; y < clip.h; ++y)
            for (int x = 0; x < clip.w; ++x)
                for (int c = 0; c < kChannels; ++c)
                    CHECK(clip.at(k, y, x, c) == clip.at(0, y, (x + shift) % clip.w, c));
    }
}

TEST_CASE("blockiness leaves constant-color clips untouched") {
    VideoClip clip = make_clip(2, 16, 16);
    for (float& p : clip.pixels) p = 0.25f;
    const VideoClip out = apply_distortion(clip, {DistortionKind::kCompressionBlockiness, 0.7});
    CHECK(clips_equal(out, clip));
}

TEST_CASE("full blockiness replaces each 8x8 block by its mean") {
    // two-tone 16x16 frame with the tone edge straddling the left blocks
    VideoClip clip = make_clip(1, 16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < kChannels; ++c) clip.at(0, y, x, c) = x < 7 ? 0.2f : 0.8f;

    const VideoClip out = apply_distortion(clip, {DistortionKind::kCompressionBlockiness, 1.0});
    for (int by = 0; by < 16; by += 8)
        for (int bx = 0; bx < 16; bx += 8) {
            // hand-computed block mean
            double mean = 0.0;
            for (int y = by; y < by + 8; ++y)
                for (int x = bx; x < bx + 8; ++x) mean += clip.at(0, y, x, 0);
            mean /= 64.0;
            for (int y = by; y < by + 8; ++y)
                for (int x = bx; x < bx + 8; ++x)
                    CHECK(out.at(0, y, x, 0) == doctest::Approx(mean).epsilon(1e-6));
        }
}

TEST_CASE("blur kernels preserve frame means") {
    SUBCASE("gaussian blur preserves every frame mean on any content") {
        SynthClipSpec spec;
        spec.base_pattern = BasePattern::kTexturedNoiseField;
        spec.seed = 21;
        spec.t = 4;
        const VideoClip clip = generate_clip(spec);
        const VideoClip out = apply_distortion(clip, {DistortionKind::kGaussianBlur, 0.6});
        for (int k = 0; k < clip.t; ++k)
            CHECK(frame_mean(out, k) == doctest::Approx(frame_mean(clip, k)).epsilon(1e-6));
    }
    SUBCASE("motion blur preserves frame means on translating content") {
        for (BasePattern p : {BasePattern::kMovingGradient, BasePattern::kCheckerPan}) {
            SynthClipSpec spec;
            spec.base_pattern = p;
            spec.motion_speed = 2.0;
            spec.seed = 5;
            const VideoClip clip = generate_clip(spec);
            const VideoClip out = apply_distortion(clip, {DistortionKind::kMotionBlur, 1.0});
            for (int k = 0; k < clip.t; ++k)
                CHECK(frame_mean(out, k) == doctest::Approx(frame_mean(clip, k)).epsilon(1e-6));
        }
    }
}

TEST_CASE("additive noise stays in range and reuses the same realization per clip") {
    SynthClipSpec spec;
    spec.seed = 13;
    const VideoClip clip = generate_clip(spec);
    const VideoClip a = apply_distortion(clip, {DistortionKind::kAdditiveNoise, 0.5});
    const VideoClip b = apply_distortion(clip, {DistortionKind::kAdditiveNoise, 0.5});
    CHECK(clips_equal(a, b));
    for (float p : a.pixels) {
        CHECK(p >= 0.0f);
        CHECK(p <= 1.0f);
    }
    // same normal field scaled: unclipped residuals at two degrees are proportional
    const VideoClip half = apply_distortion(clip, {DistortionKind::kAdditiveNoise, 0.25});
    bool proportional = true;
    for (std::size_t i = 0; i < clip.pixels.size(); i += 97) {
        const double r_full = a.pixels[i] - clip.pixels[i];
        const double r_half = half.pixels[i] - clip.pixels[i];
        if (a.pixels[i] > 0.001f && a.pixels[i] < 0.999f && std::abs(r_full) > 1e-6 &&
            std::abs(r_half * 2.0 - r_full) > 1e-5)
            proportional = false;
    }
    CHECK(proportional);
}

TEST_CASE("synth_mos formula") {
    CHECK(synth_mos({}) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(synth_mos({{DistortionKind::kGaussianBlur, 1.0}}) ==
          doctest::Approx(1.6).epsilon(1e-12));
    CHECK(synth_mos({{DistortionKind::kGaussianBlur, 1.0},
                     {DistortionKind::kAdditiveNoise, 1.0}}) ==
          doctest::Approx(1.09).epsilon(1e-12));
}

TEST_CASE("synth_mos strictly decreases when any degree increases") {
    Rng rng(42);
    for (int iter = 0; iter < 200; ++iter) {
        const int n = 1 + static_cast<int>(rng.integer(3));
        std::vector<DistortionSpec> stack;
        for (int i = 0; i < n; ++i)
            stack.push_back({kAllDistortionKinds[rng.integer(4)], rng.uniform(0.0, 0.95)});
        const double before = synth_mos(stack);
        const std::size_t j = rng.integer(static_cast<std::uint64_t>(n));
        stack[j].degree += rng.uniform(0.001, 1.0 - stack[j].degree);
        CHECK(synth_mos(stack) < before);
    }
}

TEST_CASE("make_dataset splits 80/20 and is deterministic") {
    const SynthDataset ds = make_dataset(10, 3);
    CHECK(ds.size() == 10);
    CHECK(ds.train_indices.size() == 8);
    CHECK(ds.test_indices.size() == 2);

    const SynthDataset again = make_dataset(10, 3);
    CHECK(again.train_indices == ds.train_indices);
    CHECK(again.test_indices == ds.test_indices);
    for (int i = 0; i < ds.size(); ++i) {
        CHECK(clips_equal(again.clips[i], ds.clips[i]));
        CHECK(again.records[i].mos == ds.records[i].mos);
    }
}

TEST_CASE("different split seeds permute the same items differently") {
    SynthDataset ds = make_dataset(50, 9);
    const std::vector<int> first = ds.train_indices;
    split_dataset(ds, 999);
    CHECK(ds.train_indices != first);
    // the union of train and test is always the full index set
    std::set<int> all(ds.train_indices.begin(), ds.train_indices.end());
    all.insert(ds.test_indices.begin(), ds.test_indices.end());
    CHECK(static_cast<int>(all.size()) == ds.size());
}

TEST_CASE("make_dataset labels agree with the oracle applied to the recorded truth") {
    const SynthDataset ds = make_dataset(20, 17);
    for (const QualityRecord& rec : ds.records) {
        std::vector<DistortionSpec> stack;
        for (const auto& [kind, degree] : rec.synth_truth)
            stack.push_back({distortion_kind_from_string(kind), degree});
        CHECK(rec.mos == doctest::Approx(synth_mos(stack)).epsilon(1e-12));
        CHECK(rec.mos >= 1.0);
        CHECK(rec.mos <= 5.0);
    }
}

TEST_CASE("dataset round trips through its directory format") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "adadqa_ds_test";
    fs::remove_all(dir);
    const SynthDataset ds = make_dataset(12, 5);
    save_dataset(dir.string(), ds);
    const SynthDataset back = load_dataset(dir.string());
    REQUIRE(back.size() == ds.size());
    for (int i = 0; i < ds.size(); ++i) {
        CHECK(clips_equal(back.clips[i], ds.clips[i]));
        CHECK(back.records[i].source_id == ds.records[i].source_id);
        CHECK(back.records[i].mos == ds.records[i].mos);
        CHECK(back.records[i].synth_truth == ds.records[i].synth_truth);
    }
    CHECK(back.train_indices == ds.train_indices);
    CHECK(back.test_indices == ds.test_indices);
    CHECK(back.dataset_id == ds.dataset_id);
    fs::remove_all(dir);
}

TEST_CASE("clip file rejects a wrong magic") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "bogus.clip";
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTACLIPxxxxxxxxxxxxxxxx";
    }
    CHECK_THROWS_AS(load_clip(path.string()), std::runtime_error);
    fs::remove(path);
}

TEST_CASE("response curve needs at least 3 distinct degrees") {
    const ExtractorPool pool = build_toy_bank();
    CHECK_THROWS_AS(
        distortion_response_curve(pool.at(0), DistortionKind::kGaussianBlur, {0.0, 1.0}),
        std::invalid_argument);
    CHECK_THROWS_AS(
        distortion_response_curve(pool.at(0), DistortionKind::kGaussianBlur, {0.0, 1.0, 1.0, 0.0}),
        std::invalid_argument);
}

TEST_CASE("blockiness meter tracks its matched distortion perfectly") {
    const ExtractorPool pool = build_toy_bank();
    const std::vector<double> degrees{0.0, 0.25, 0.5, 0.75, 1.0};
    const double rho =
        distortion_response_curve(pool.at(0), DistortionKind::kCompressionBlockiness, degrees);
    CHECK(rho == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("blockiness meter does not track unmatched gaussian blur perfectly") {
    const ExtractorPool pool = build_toy_bank();
    const std::vector<double> degrees{0.0, 0.25, 0.5, 0.75, 1.0};
    CHECK(std::abs(distortion_response_curve(pool.at(0), DistortionKind::kGaussianBlur,
                                             degrees)) < 1.0);
}
