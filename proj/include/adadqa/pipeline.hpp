#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adadqa/core.hpp"
#include "adadqa/extractors.hpp"
#include "adadqa/optim.hpp"
#include "adadqa/qam.hpp"
#include "adadqa/rng.hpp"
#include "adadqa/student.hpp"
#include "adadqa/synthdata.hpp"

namespace adadqa {

struct SamplingPlan {
    int frame_count = 16;
    int frame_interval = 2;
    enum class Crop { kCenter, kNone };
    Crop crop = Crop::kCenter;
    int crop_size = 224;
};

// Frames at offset, offset+interval, ...; indices wrap modulo the source
// length (the video loops when the plan overruns it).
VideoClip sample_frames(const VideoClip& video, const SamplingPlan& plan, int offset);

// Spatial window of side `size` anchored at the frame center. No resizing,
// no color transforms.
VideoClip center_crop(const VideoClip& clip, int size);

struct LossRecord {
    long long step = 0;
    double reg_s = 0.0;
    double reg_t = 0.0;
    double kd = 0.0;
    double sparse = 0.0;
    double total = 0.0;
    double lr = 0.0;
};

void write_loss_log(std::ostream& out, const std::vector<LossRecord>& log);

// Joint training of the QAM teacher and the lightweight student under the
// combined objective. Extractors stay frozen; the trainer owns all trainable
// parameters and optimizer state. Per-iteration randomness (item order,
// temporal offsets) is derived statelessly from (seed, step) so a resumed
// run reproduces an uninterrupted one bit for bit.
class Trainer {
public:
    Trainer(const TrainConfig& cfg, const SynthDataset& dataset, ExtractorPool pool,
            std::optional<StudentConfig> student_cfg = std::nullopt);

    // One optimizer iteration; returns false once all epochs have run.
    bool step();
    // Runs to completion (the remaining epochs).
    void train();

    long long global_step() const { return global_step_; }
    long long total_steps() const { return total_steps_; }
    int iterations_per_epoch() const { return iters_per_epoch_; }
    const std::vector<LossRecord>& loss_log() const { return loss_log_; }
    const TrainConfig& config() const { return cfg_; }
    const ExtractorPool& pool() const { return pool_; }
    bool has_teacher() const { return qam_ != nullptr; }

    StudentModel<float>& student() { return *student_; }
    const StudentModel<float>& student() const { return *student_; }
    Qam<float>& qam() { return *qam_; }
    ParamRefs<float>& params() { return params_; }

    // The deterministic clip view used at evaluation time (offset 0).
    VideoClip inference_view(const VideoClip& video) const;
    // Gating weights for one video under the inference view.
    std::vector<double> gate_weights(const VideoClip& video) const;

    void save_checkpoint(const std::string& path) const;
    // Rebuilds a trainer from a checkpoint; dataset and pool must match the
    // ones used originally (the pool's dimensions are verified).
    static std::unique_ptr<Trainer> load_checkpoint(const std::string& path,
                                                    const SynthDataset& dataset,
                                                    ExtractorPool pool);

private:
    void init_models(std::optional<StudentConfig> student_cfg);
    VideoClip training_view(const VideoClip& video, long long step) const;
    std::vector<std::vector<float>> frozen_features(const VideoClip& view) const;

    TrainConfig cfg_;
    const SynthDataset* dataset_;
    ExtractorPool pool_;
    SamplingPlan plan_;
    std::unique_ptr<Qam<float>> qam_;
    std::unique_ptr<StudentModel<float>> student_;
    ParamRefs<float> params_;
    AdamW<float> optimizer_;
    Rng rng_;
    long long global_step_ = 0;
    long long total_steps_ = 0;
    int iters_per_epoch_ = 0;
    std::vector<LossRecord> loss_log_;
};

}  // namespace adadqa
