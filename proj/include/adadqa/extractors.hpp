#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "adadqa/core.hpp"

namespace adadqa {

enum class Modality { kFrameWise, kClipWise };
enum class Sensitivity { kContent, kDistortion, kMotion };

std::string to_string(Modality m);
std::string to_string(Sensitivity s);

struct ExtractorDescriptor {
    std::string name;
    Modality modality = Modality::kFrameWise;
    int out_dim = 1;
    Sensitivity sensitivity = Sensitivity::kContent;
    // Scalar used for distortion-response analysis: feature[response_channel]
    // read with response_sign orientation (+1 when the channel grows as the
    // matched distortion intensifies, -1 when it shrinks).
    int response_channel = 0;
    double response_sign = 1.0;
    std::string matched_distortion;
    int min_frames = 1;
};

struct FeatureVector {
    std::string extractor_name;
    std::vector<double> values;

    int dim() const { return static_cast<int>(values.size()); }
};

// A frozen feature extractor. Extraction is const and referentially
// transparent; frame-wise extractors emit per-frame features that extract()
// averages over time, clip-wise extractors consume the whole clip at once.
class Extractor {
public:
    virtual ~Extractor() = default;

    const ExtractorDescriptor& descriptor() const { return desc_; }
    const std::string& name() const { return desc_.name; }

    FeatureVector extract(const VideoClip& clip) const;

    // Per-frame feature of a frame-wise extractor; throws for clip-wise ones.
    virtual std::vector<double> frame_feature(const VideoClip& clip, int frame) const;

protected:
    explicit Extractor(ExtractorDescriptor desc) : desc_(std::move(desc)) {}

    virtual std::vector<double> clip_feature(const VideoClip& clip) const;

    ExtractorDescriptor desc_;
};

struct ExtractorPool {
    std::vector<std::shared_ptr<const Extractor>> extractors;

    int size() const { return static_cast<int>(extractors.size()); }
    const Extractor& at(int i) const { return *extractors[static_cast<std::size_t>(i)]; }
    int total_dim() const;
    std::vector<std::string> names() const;
    ExtractorPool subset(const std::vector<int>& indices) const;
};

// The seven deterministic toy extractors standing in for the pretrained-model
// pool: blockiness, sharpness and noise meters, luminance histogram, color
// statistics, motion energy, and temporal flicker.
ExtractorPool build_toy_bank();

// Features in pool order; per-extractor failures are rethrown with the
// extractor name attached.
std::vector<FeatureVector> extract_all(const ExtractorPool& pool, const VideoClip& clip);

// Feature cache file: magic "ADQAFEAT", version u32, extractor table
// (name, dim), then one record per clip (clip_id, fp32 vectors in table
// order). Lets externally computed features stand in for the toy bank.
class FeatureCache {
public:
    void put(const std::string& clip_id, const std::vector<FeatureVector>& features);
    const FeatureVector& get(const std::string& clip_id, const std::string& extractor_name) const;
    bool contains(const std::string& clip_id) const;
    int clip_count() const { return static_cast<int>(records_.size()); }
    const std::vector<std::pair<std::string, int>>& extractor_table() const { return table_; }

    void save(const std::string& path) const;
    static FeatureCache load(const std::string& path);

private:
    std::vector<std::pair<std::string, int>> table_;  // (extractor name, dim)
    std::map<std::string, std::vector<FeatureVector>> records_;
};

void save_feature_cache(const std::string& path, const FeatureCache& cache);
FeatureCache load_feature_cache(const std::string& path);

// Wraps one cache column as an Extractor so cached features flow through the
// same pipeline as computed ones. Lookup is by clip source_id.
std::shared_ptr<const Extractor> make_cached_extractor(std::shared_ptr<const FeatureCache> cache,
                                                       const std::string& extractor_name,
                                                       const ExtractorDescriptor& desc);

}  // namespace adadqa
