#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "adadqa/core.hpp"

namespace adadqa {

class Extractor;

enum class DistortionKind {
    kCompressionBlockiness,
    kGaussianBlur,
    kMotionBlur,
    kAdditiveNoise,
};

inline constexpr std::array<DistortionKind, 4> kAllDistortionKinds = {
    DistortionKind::kCompressionBlockiness,
    DistortionKind::kGaussianBlur,
    DistortionKind::kMotionBlur,
    DistortionKind::kAdditiveNoise,
};

std::string to_string(DistortionKind kind);
DistortionKind distortion_kind_from_string(const std::string& s);

struct DistortionSpec {
    DistortionKind kind = DistortionKind::kGaussianBlur;
    double degree = 0.0;  // 0 = pristine, 1 = severe
};

enum class BasePattern { kMovingGradient, kTexturedNoiseField, kCheckerPan };

struct SynthClipSpec {
    BasePattern base_pattern = BasePattern::kTexturedNoiseField;
    double motion_speed = 1.0;  // pixels/frame
    std::vector<DistortionSpec> distortions;
    int t = 16;
    int h = 64;
    int w = 64;
    std::uint64_t seed = 0;
};

// Renders the base pattern frame by frame, then applies the distortions in
// listed order. Pure function of the spec.
VideoClip generate_clip(const SynthClipSpec& spec);

// Applies one distortion. Degree 0 is a bitwise identity. The additive-noise
// realization is derived from a hash of the input clip, so the call is a pure
// function of (clip, spec) and the realization does not change with degree.
VideoClip apply_distortion(const VideoClip& clip, const DistortionSpec& d);

// Ground-truth quality oracle: 1 + 4 * prod_k (1 - 0.85 * degree_k).
// Strictly decreasing in every degree; 5.0 when pristine.
double synth_mos(const std::vector<DistortionSpec>& distortions);

struct SynthDatasetSpec {
    int n = 0;
    std::uint64_t seed = 0;
    int t = 16;
    int h = 64;
    int w = 64;
    // Mixed mode: even items carry a dominant compression-blockiness
    // distortion, odd items a dominant motion blur (gating-analysis probe).
    bool mixed_blockiness_motion = false;
};

struct SynthDataset {
    std::vector<VideoClip> clips;
    std::vector<QualityRecord> records;
    std::vector<int> train_indices;
    std::vector<int> test_indices;
    std::uint64_t split_seed = 0;
    std::string dataset_id;

    int size() const { return static_cast<int>(clips.size()); }
};

SynthDataset make_dataset(const SynthDatasetSpec& spec);
SynthDataset make_dataset(int n, std::uint64_t seed);
SynthDataset make_mixed_dataset(int n, std::uint64_t seed);

// Re-splits into ceil(0.8 n) training items via a seeded permutation.
void split_dataset(SynthDataset& ds, std::uint64_t split_seed);

// Directory layout: clips/<source_id>.clip + manifest.txt + split.txt.
void save_dataset(const std::string& dir, const SynthDataset& ds);
SynthDataset load_dataset(const std::string& dir);

// Clip file format: magic "ADQACLIP", then t, h, w, c as u32 little-endian,
// then fp32 little-endian pixels.
void save_clip(const std::string& path, const VideoClip& clip);
VideoClip load_clip(const std::string& path, std::string source_id = "");

// The fixed pristine clip used for distortion-response analysis, plus the
// parametrized renderer behind it (exposed for probe-content tests).
VideoClip make_probe_clip();
VideoClip make_probe_clip(std::uint64_t seed);

// Extractor responses (declared response channel, orientation applied) to the
// probe clip distorted at each degree.
std::vector<double> distortion_response_values(const Extractor& extractor, DistortionKind kind,
                                               const std::vector<double>& degrees);

// SRCC between degrees and responses. Requires >= 3 distinct degrees; a
// constant response propagates the undefined-correlation error from srcc.
double distortion_response_curve(const Extractor& extractor, DistortionKind kind,
                                 const std::vector<double>& degrees);

}  // namespace adadqa
