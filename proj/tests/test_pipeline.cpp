#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "adadqa/losses.hpp"
#include "adadqa/optim.hpp"
#include "adadqa/pipeline.hpp"
#include "adadqa/synthdata.hpp"

using namespace adadqa;

namespace {

// Small geometry shared by the trainer tests: 8-frame 48x48 clips, 4x40x40
// student inputs.
TrainConfig tiny_cfg(int epochs = 2) {
    TrainConfig cfg;
    cfg.n_extractors = 7;
    cfg.d = 8;
    cfg.epochs = epochs;
    cfg.warmup_epochs = epochs > 1 ? 1 : 0;
    cfg.frame_count = 4;
    cfg.frame_interval = 2;
    cfg.crop_size = 40;
    cfg.seed = 99;
    return cfg;
}

SynthDataset tiny_dataset(int n = 10, std::uint64_t seed = 7) {
    SynthDatasetSpec spec;
    spec.n = n;
    spec.seed = seed;
    spec.t = 8;
    spec.h = 48;
    spec.w = 48;
    return make_dataset(spec);
}

bool params_equal(ParamRefs<float>& a, ParamRefs<float>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i]->value.data != b[i]->value.data) return false;
    return true;
}

}  // namespace

TEST_CASE("sample_frames index arithmetic") {
    VideoClip video = make_clip(240, 32, 32, "v");
    for (int k = 0; k < video.t; ++k) video.at(k, 0, 0, 0) = static_cast<float>(k) / 255.0f;

    SamplingPlan plan;
    plan.frame_count = 16;
    plan.frame_interval = 2;
    const VideoClip clip = sample_frames(video, plan, 0);
    REQUIRE(clip.t == 16);
    for (int k = 0; k < 16; ++k) CHECK(clip.at(k, 0, 0, 0) == video.at(2 * k, 0, 0, 0));

    SamplingPlan single;
    single.frame_count = 1;
    single.frame_interval = 2;
    CHECK(sample_frames(video, single, 5).at(0, 0, 0, 0) == video.at(5, 0, 0, 0));
}

TEST_CASE("sample_frames wraps modulo the video length") {
    VideoClip video = make_clip(10, 32, 32, "v");
    for (int k = 0; k < video.t; ++k) video.at(k, 0, 0, 0) = static_cast<float>(k) / 255.0f;
    SamplingPlan plan;
    plan.frame_count = 8;
    plan.frame_interval = 2;
    const VideoClip clip = sample_frames(video, plan, 0);
    const std::vector<int> expected{0, 2, 4, 6, 8, 0, 2, 4};
    for (int k = 0; k < 8; ++k) CHECK(clip.at(k, 0, 0, 0) == video.at(expected[k], 0, 0, 0));
}

TEST_CASE("sample_frames rejects empty videos") {
    VideoClip empty;
    empty.h = empty.w = 32;
    SamplingPlan plan;
    CHECK_THROWS_AS(sample_frames(empty, plan, 0), std::invalid_argument);
}

TEST_CASE("center_crop window arithmetic") {
    VideoClip clip = make_clip(1, 256, 256, "c");
    for (int y = 0; y < 256; ++y)
        for (int x = 0; x < 256; ++x) clip.at(0, y, x, 0) = static_cast<float>(y % 2);
    const VideoClip cropped = center_crop(clip, 224);
    CHECK(cropped.h == 224);
    CHECK(cropped.w == 224);
    // window starts at (16, 16)
    CHECK(cropped.at(0, 0, 0, 0) == clip.at(0, 16, 16, 0));
    CHECK(cropped.at(0, 223, 223, 0) == clip.at(0, 239, 239, 0));

    const VideoClip same = center_crop(cropped, 224);
    CHECK(same.pixels == cropped.pixels);

    VideoClip small = make_clip(1, 100, 100);
    CHECK_THROWS_AS(center_crop(small, 224), std::invalid_argument);
}

TEST_CASE("lr schedule: warmup peak, cosine midpoint, zero endpoint") {
    const long long total = 1000, warmup = 100;
    const double lr0 = 1e-3;
    CHECK(lr_at(warmup, total, warmup, lr0) == doctest::Approx(lr0).epsilon(1e-15));
    CHECK(lr_at(total, total, warmup, lr0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(lr_at(warmup + (total - warmup) / 2, total, warmup, lr0) ==
          doctest::Approx(lr0 / 2).epsilon(1e-12));
    CHECK(lr_at(0, total, warmup, lr0) == 0.0);

    // continuous, peaks at lr0, non-increasing after warmup
    double prev = lr_at(warmup, total, warmup, lr0);
    for (long long s = warmup + 1; s <= total; ++s) {
        const double lr = lr_at(s, total, warmup, lr0);
        CHECK(lr <= prev);
        CHECK(lr <= lr0);
        CHECK(std::abs(lr - prev) < lr0 * 0.01);
        prev = lr;
    }
    for (long long s = 1; s <= warmup; ++s)
        CHECK(lr_at(s, total, warmup, lr0) >= lr_at(s - 1, total, warmup, lr0));
}

TEST_CASE("optimizer: no signal means no update") {
    Param<float> p("p", {3});
    p.value.data = {1.0f, -2.0f, 0.5f};
    AdamW<float> opt(0.9, 0.999, 1e-8, 0.0);
    opt.attach({&p});
    p.zero_grad();
    opt.step(0.1);
    CHECK(p.value.data == std::vector<float>{1.0f, -2.0f, 0.5f});
}

TEST_CASE("optimizer: degenerate betas reduce to a sign-scaled step") {
    Param<float> p("p", {1});
    p.value.data = {1.0f};
    p.grad.data = {1.0f};
    AdamW<float> opt(0.0, 0.0, 0.0, 0.0);
    opt.attach({&p});
    opt.step(0.1);
    CHECK(p.value.data[0] == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("optimizer: decoupled weight decay acts without gradient") {
    Param<float> p("p", {1});
    p.value.data = {1.0f};
    p.grad.data = {0.0f};
    AdamW<float> opt(0.9, 0.999, 1e-8, 2e-2);
    opt.attach({&p});
    opt.step(0.1);
    CHECK(p.value.data[0] == doctest::Approx(0.998).epsilon(1e-6));
}

TEST_CASE("optimizer: non-finite gradients are rejected with the parameter name") {
    Param<float> p("qam.w1", {1});
    p.grad.data = {std::numeric_limits<float>::quiet_NaN()};
    AdamW<float> opt;
    opt.attach({&p});
    try {
        opt.step(0.1);
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("qam.w1") != std::string::npos);
    }
}

TEST_CASE("trainer: step counter equals epochs times train size at batch 1") {
    const SynthDataset ds = tiny_dataset();
    Trainer trainer(tiny_cfg(2), ds, build_toy_bank());
    trainer.train();
    CHECK(trainer.global_step() ==
          static_cast<long long>(2) * static_cast<long long>(ds.train_indices.size()));
    CHECK(trainer.loss_log().size() == static_cast<std::size_t>(trainer.global_step()));
}

TEST_CASE("trainer: fixed seed reproduces identical parameters") {
    const SynthDataset ds = tiny_dataset();
    Trainer a(tiny_cfg(1), ds, build_toy_bank());
    Trainer b(tiny_cfg(1), ds, build_toy_bank());
    a.train();
    b.train();
    CHECK(params_equal(a.params(), b.params()));
    REQUIRE(a.loss_log().size() == b.loss_log().size());
    for (std::size_t i = 0; i < a.loss_log().size(); ++i)
        CHECK(a.loss_log()[i].total == b.loss_log()[i].total);
}

TEST_CASE("trainer: gamma=0 and lambda=0 leave the teacher untouched") {
    const SynthDataset ds = tiny_dataset();
    TrainConfig cfg = tiny_cfg(1);
    cfg.gamma = 0.0;
    cfg.lambda_ = 0.0;
    // weight decay off so the only parameter-moving force is the gradient
    cfg.weight_decay = 0.0;
    Trainer trainer(cfg, ds, build_toy_bank());

    std::vector<std::vector<float>> teacher_before;
    for (Param<float>* p : trainer.params())
        if (p->name.rfind("student", 0) != 0) teacher_before.push_back(p->value.data);

    trainer.train();

    std::size_t i = 0;
    bool student_moved = false;
    for (Param<float>* p : trainer.params()) {
        if (p->name.rfind("student", 0) != 0) {
            CHECK(p->value.data == teacher_before[i++]);
            // last iteration's accumulated gradient is exactly zero
            for (float g : p->grad.data) CHECK(g == 0.0f);
        } else {
            for (float g : p->grad.data)
                if (g != 0.0f) student_moved = true;
        }
    }
    CHECK(student_moved);
}

TEST_CASE("trainer: extractor outputs on a probe clip are unchanged by training") {
    const SynthDataset ds = tiny_dataset();
    const ExtractorPool pool = build_toy_bank();
    const VideoClip& probe = ds.clips[0];
    const auto before = extract_all(pool, probe);
    Trainer trainer(tiny_cfg(1), ds, pool);
    trainer.train();
    const auto after = extract_all(pool, probe);
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i].values == after[i].values);
}

TEST_CASE("trainer rejects mismatched pool sizes and empty splits") {
    const SynthDataset ds = tiny_dataset();
    TrainConfig cfg = tiny_cfg(1);
    cfg.n_extractors = 3;
    CHECK_THROWS_AS(Trainer(cfg, ds, build_toy_bank()), std::invalid_argument);
}

TEST_CASE("checkpoint round trip is bit-exact and resume matches uninterrupted training") {
    namespace fs = std::filesystem;
    const SynthDataset ds = tiny_dataset();
    const fs::path path = fs::temp_directory_path() / "adadqa_ckpt_test.bin";

    // uninterrupted: k+1 steps
    Trainer full(tiny_cfg(2), ds, build_toy_bank());
    for (int i = 0; i < 6; ++i) full.step();

    // interrupted: k steps, save, load, one more step
    Trainer partial(tiny_cfg(2), ds, build_toy_bank());
    for (int i = 0; i < 5; ++i) partial.step();
    partial.save_checkpoint(path.string());

    auto resumed = Trainer::load_checkpoint(path.string(), ds, build_toy_bank());
    CHECK(resumed->global_step() == 5);

    // loaded state matches the saved trainer exactly
    CHECK(params_equal(partial.params(), resumed->params()));

    resumed->step();
    CHECK(resumed->global_step() == 6);
    CHECK(params_equal(full.params(), resumed->params()));
    CHECK(resumed->loss_log().back().total == full.loss_log().back().total);

    fs::remove(path);
}

TEST_CASE("checkpoint loader rejects wrong magic") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "adadqa_bogus_ckpt.bin";
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTACKPTxxxxxxxxxxxx";
    }
    const SynthDataset ds = tiny_dataset();
    CHECK_THROWS_AS(Trainer::load_checkpoint(path.string(), ds, build_toy_bank()),
                    std::runtime_error);
    fs::remove(path);
}

TEST_CASE("training loss decreases between the first and tenth epoch") {
    SynthDatasetSpec spec;
    spec.n = 50;
    spec.seed = 31;
    spec.t = 8;
    spec.h = 48;
    spec.w = 48;
    const SynthDataset ds = make_dataset(spec);
    TrainConfig cfg = tiny_cfg(10);
    Trainer trainer(cfg, ds, build_toy_bank());
    trainer.train();

    const int per_epoch = trainer.iterations_per_epoch();
    auto epoch_mean = [&](int epoch) {
        double acc = 0.0;
        for (int i = 0; i < per_epoch; ++i)
            acc += trainer.loss_log()[static_cast<std::size_t>(epoch * per_epoch + i)].total;
        return acc / per_epoch;
    };
    CHECK(epoch_mean(9) < epoch_mean(0));
}

TEST_CASE("loss log records are well formed") {
    const SynthDataset ds = tiny_dataset();
    TrainConfig cfg = tiny_cfg(1);
    Trainer trainer(cfg, ds, build_toy_bank());
    trainer.train();
    std::ostringstream os;
    write_loss_log(os, trainer.loss_log());
    std::istringstream is(os.str());
    std::string line;
    int count = 0;
    while (std::getline(is, line)) {
        CHECK(line.find("step=") == 0);
        for (const char* key : {"reg_s=", "reg_t=", "kd=", "sparse=", "total=", "lr="})
            CHECK(line.find(key) != std::string::npos);
        ++count;
    }
    CHECK(count == static_cast<int>(trainer.loss_log().size()));
}
