#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace adadqa {

inline constexpr int kChannels = 3;

// A decoded video clip: T frames of H x W RGB pixels in [0, 1], stored
// t-major with interleaved channels. Pixels stay in [0, 1]; any model-side
// normalization is the consumer's business.
struct VideoClip {
    int t = 0;
    int h = 0;
    int w = 0;
    double frame_rate = 24.0;
    std::string source_id;
    std::vector<float> pixels;  // t * h * w * 3

    float& at(int ti, int y, int x, int c) {
        return pixels[(((static_cast<std::size_t>(ti) * h + y) * w + x) * kChannels) + c];
    }
    float at(int ti, int y, int x, int c) const {
        return pixels[(((static_cast<std::size_t>(ti) * h + y) * w + x) * kChannels) + c];
    }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(t) * h * w * kChannels;
    }

    // Model-input invariants: T >= 1, H and W >= 32, pixels in [0, 1].
    // Intermediate processing buffers may be smaller; this is checked at the
    // points where clips enter extractors or models.
    void validate() const;
};

VideoClip make_clip(int t, int h, int w, std::string source_id = "", double frame_rate = 24.0);

// One labeled video: the normalized MOS plus the raw label it came from and,
// for synthetic data, the ground-truth distortion degrees.
struct QualityRecord {
    std::string source_id;
    double mos = 0.0;      // normalized to [1, 5]
    double raw_mos = 0.0;  // as labeled on the source scale
    double raw_lo = 1.0;
    double raw_hi = 5.0;
    std::map<std::string, double> synth_truth;  // distortion kind -> degree
};

// Linear map of a raw label onto the [1, 5] scale. Endpoints map exactly to
// 1 and 5 so the smooth-L1 transition at |residual| = 1 means the same thing
// on every dataset.
double normalize_mos(double raw, double raw_lo, double raw_hi);

enum class DistillLossKind { kL2, kL1, kJs };

std::string to_string(DistillLossKind kind);
DistillLossKind distill_loss_from_string(const std::string& s);

struct TrainConfig {
    int n_extractors = 7;
    int d = 32;
    double gamma = 0.1;
    double lambda_ = 0.8;
    int epochs = 60;
    int warmup_epochs = 2;
    double lr_init = 1e-3;
    double weight_decay = 2e-2;
    int batch_size = 1;
    int frame_count = 16;
    int frame_interval = 2;
    int crop_size = 224;
    std::uint64_t seed = 0;
    bool sparsity_enabled = true;
    DistillLossKind distill_loss_kind = DistillLossKind::kL2;

    bool operator==(const TrainConfig&) const = default;
};

// Returns the config unchanged when every invariant holds, otherwise throws
// std::invalid_argument naming the offending field. Idempotent.
TrainConfig validate_config(const TrainConfig& cfg);

// Flat text format: `key = value` lines grouped under bracketed section
// headers. Unknown sections or keys are an error.
TrainConfig parse_train_config(std::istream& in);
TrainConfig load_train_config(const std::string& path);
void write_train_config(std::ostream& out, const TrainConfig& cfg);
void save_train_config(const std::string& path, const TrainConfig& cfg);

struct EvalResult {
    double srcc = 0.0;
    double plcc = 0.0;
    double mean = 0.0;
    std::uint64_t split_seed = 0;
    std::string dataset_id;
};

}  // namespace adadqa
