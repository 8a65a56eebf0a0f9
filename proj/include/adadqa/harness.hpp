#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "adadqa/core.hpp"
#include "adadqa/metrics.hpp"
#include "adadqa/pipeline.hpp"

namespace adadqa {

struct ViewPlan {
    int n_clips = 4;           // temporal views
    int n_crops = 5;           // spatial views: 5 (corners + center) or 1 (center)
    int scale_short_side = 256;
    int crop_size = 224;
};

// Crops anchored at the four corners and the center, applied frame-wise to
// the whole clip.
std::vector<VideoClip> five_crop(const VideoClip& clip, int crop_size);

// Bilinear rescale so the shorter spatial side equals `short_side`;
// dimensions already matching return the clip unchanged.
VideoClip resize_short_side(const VideoClip& clip, int short_side);

// A scorer maps one prepared view clip to a quality score.
using ClipScorer = std::function<double(const VideoClip&)>;

// Uniform temporal segmentation into n_clips, one sampled clip per segment,
// scale + crop views per clip, one scorer call per view, mean of all scores.
double multi_view_inference(const ClipScorer& scorer, const VideoClip& video,
                            const ViewPlan& plan, const SamplingPlan& sampling,
                            long long* forward_count = nullptr);
double multi_view_inference(const StudentModel<float>& model, const VideoClip& video,
                            const ViewPlan& plan, const SamplingPlan& sampling,
                            long long* forward_count = nullptr);

EvalResult evaluate(const ClipScorer& scorer, const SynthDataset& dataset,
                    const std::vector<int>& test_indices, const ViewPlan& plan,
                    const SamplingPlan& sampling);
EvalResult evaluate(const StudentModel<float>& model, const SynthDataset& dataset,
                    const std::vector<int>& test_indices, const ViewPlan& plan,
                    const SamplingPlan& sampling);

// View plan matched to a training config at a given dataset scale.
ViewPlan make_view_plan(const TrainConfig& cfg, int scale_short_side);
SamplingPlan make_sampling_plan(const TrainConfig& cfg);

struct RepeatOutcome {
    std::vector<EvalResult> results;
    RepeatSummary summary;
};

// Repeated-split protocol: per repeat a fresh seeded 80/20 split, a full
// training run, and one evaluation. The dataset's split is mutated per
// repeat.
RepeatOutcome run_repeated(const TrainConfig& cfg, SynthDataset& dataset,
                           const ExtractorPool& pool, int n_repeats, int scale_short_side);

enum class AblationTable {
    kExtractorCount,
    kSingleExtractor,
    kDistillLoss,
    kGammaSweep,
    kLambdaSweep,
    kGatingStats,
};

std::string to_string(AblationTable t);

struct AblationRow {
    std::string condition;
    // insertion-ordered column names alongside the value map
    std::vector<std::pair<std::string, double>> values;
};

struct AblationReport {
    AblationTable table_id;
    std::vector<AblationRow> rows;
};

// One machine-readable record per row.
void write_report(std::ostream& out, const AblationReport& report);
// Human-readable aligned table.
void render_report(std::ostream& out, const AblationReport& report);

// Extractor-count ablation: for each count and sparsity flag, trains on a
// seeded random subset of the pool and reports test SRCC.
AblationReport ablate_extractor_count(const TrainConfig& cfg, SynthDataset& dataset,
                                      const ExtractorPool& pool, const std::vector<int>& counts,
                                      const std::vector<bool>& sparsity_flags,
                                      int scale_short_side);

// One run per single extractor plus a no-teacher baseline row ("w/o").
AblationReport ablate_single_extractor(const TrainConfig& cfg, SynthDataset& dataset,
                                       const ExtractorPool& pool, int scale_short_side);

AblationReport ablate_distill_loss(const TrainConfig& cfg, SynthDataset& dataset,
                                   const ExtractorPool& pool, int scale_short_side);

std::pair<AblationReport, AblationReport> ablate_hyperparams(
    const TrainConfig& cfg, SynthDataset& dataset, const ExtractorPool& pool,
    const std::vector<double>& gammas, const std::vector<double>& lambdas,
    int scale_short_side);

// Mean gating weight per extractor over the low-quality (MOS < threshold)
// and high-quality (MOS > threshold) groups. Empty groups yield NaN, which
// renders as "-".
AblationReport gating_stats(const Trainer& trainer, const SynthDataset& dataset,
                            double mos_threshold = 3.5);

// Distortion-response SRCC matrix over (extractor, kind) plus one line-plot
// image per distortion kind under out_dir (empty string skips the plots).
AblationReport fig3_analysis(const ExtractorPool& pool,
                             const std::vector<DistortionKind>& kinds,
                             const std::vector<double>& degrees, const std::string& out_dir);

}  // namespace adadqa
