#include "adadqa/extractors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "adadqa/io.hpp"

namespace adadqa {

std::string to_string(Modality m) {
    return m == Modality::kFrameWise ? "frame_wise" : "clip_wise";
}

std::string to_string(Sensitivity s) {
    switch (s) {
        case Sensitivity::kContent: return "content";
        case Sensitivity::kDistortion: return "distortion";
        case Sensitivity::kMotion: return "motion";
    }
    throw std::logic_error("unreachable");
}

std::vector<double> Extractor::frame_feature(const VideoClip&, int) const {
    throw std::logic_error(desc_.name + ": not a frame-wise extractor");
}

std::vector<double> Extractor::clip_feature(const VideoClip&) const {
    throw std::logic_error(desc_.name + ": not a clip-wise extractor");
}

FeatureVector Extractor::extract(const VideoClip& clip) const {
    clip.validate();
    if (clip.t < desc_.min_frames)
        throw std::invalid_argument(desc_.name + ": clip has " + std::to_string(clip.t) +
                                    " frames, needs >= " + std::to_string(desc_.min_frames));
    FeatureVector out;
    out.extractor_name = desc_.name;
    if (desc_.modality == Modality::kFrameWise) {
        out.values.assign(static_cast<std::size_t>(desc_.out_dim), 0.0);
        for (int k = 0; k < clip.t; ++k) {
            const std::vector<double> f = frame_feature(clip, k);
            for (int i = 0; i < desc_.out_dim; ++i)
                out.values[static_cast<std::size_t>(i)] += f[static_cast<std::size_t>(i)];
        }
        for (double& v : out.values) v /= clip.t;
    } else {
        out.values = clip_feature(clip);
    }
    if (static_cast<int>(out.values.size()) != desc_.out_dim)
        throw std::logic_error(desc_.name + ": feature dimension mismatch");
    for (double v : out.values)
        if (!std::isfinite(v)) throw std::runtime_error(desc_.name + ": non-finite feature value");
    return out;
}

namespace {

double luminance(const VideoClip& clip, int t, int y, int x) {
    return (clip.at(t, y, x, 0) + clip.at(t, y, x, 1) + clip.at(t, y, x, 2)) / 3.0;
}

constexpr int kBlockSize = 8;

// Absolute contrast between the mean luminance step across 8x8 block
// boundaries and the mean step inside blocks. Grows as content is quantized
// toward block means.
class BlockinessMeter final : public Extractor {
public:
    BlockinessMeter()
        : Extractor({.name = "blockiness-meter",
                     .modality = Modality::kFrameWise,
                     .out_dim = 1,
                     .sensitivity = Sensitivity::kDistortion,
                     .response_channel = 0,
                     .response_sign = 1.0,
                     .matched_distortion = "compression_blockiness"}) {}

    std::vector<double> frame_feature(const VideoClip& clip, int k) const override {
        double boundary = 0.0, interior = 0.0;
        long long nb = 0, ni = 0;
        for (int y = 0; y < clip.h; ++y)
            for (int x = 0; x + 1 < clip.w; ++x) {
                const double d = std::abs(luminance(clip, k, y, x + 1) - luminance(clip, k, y, x));
                if ((x + 1) % kBlockSize == 0) {
                    boundary += d;
                    ++nb;
                } else {
                    interior += d;
                    ++ni;
                }
            }
        for (int y = 0; y + 1 < clip.h; ++y)
            for (int x = 0; x < clip.w; ++x) {
                const double d = std::abs(luminance(clip, k, y + 1, x) - luminance(clip, k, y, x));
                if ((y + 1) % kBlockSize == 0) {
                    boundary += d;
                    ++nb;
                } else {
                    interior += d;
                    ++ni;
                }
            }
        const double b = nb > 0 ? boundary / static_cast<double>(nb) : 0.0;
        const double i = ni > 0 ? interior / static_cast<double>(ni) : 0.0;
        return {std::abs(b - i)};
    }
};

// [mean gradient magnitude, gradient anisotropy]; the magnitude shrinks
// under blur (negative orientation), the anisotropy reads directional smear
// normalized by overall detail.
class SharpnessMeter final : public Extractor {
public:
    SharpnessMeter()
        : Extractor({.name = "sharpness-meter",
                     .modality = Modality::kFrameWise,
                     .out_dim = 2,
                     .sensitivity = Sensitivity::kDistortion,
                     .response_channel = 0,
                     .response_sign = -1.0,
                     .matched_distortion = "gaussian_blur"}) {}

    std::vector<double> frame_feature(const VideoClip& clip, int k) const override {
        double sum = 0.0, sum_x = 0.0, sum_y = 0.0;
        long long n = 0;
        for (int y = 0; y + 1 < clip.h; ++y)
            for (int x = 0; x + 1 < clip.w; ++x) {
                const double l = luminance(clip, k, y, x);
                const double gx = luminance(clip, k, y, x + 1) - l;
                const double gy = luminance(clip, k, y + 1, x) - l;
                sum += std::abs(gx) + std::abs(gy);
                sum_x += std::abs(gx);
                sum_y += std::abs(gy);
                ++n;
            }
        const double dn = static_cast<double>(n);
        return {sum / dn, (sum_y - sum_x) / (sum_y + sum_x + 1e-12)};
    }
};

// High-frequency residual against a 3x3 box mean, interior pixels only:
// [rms, mean abs, max abs].
class NoiseMeter final : public Extractor {
public:
    NoiseMeter()
        : Extractor({.name = "noise-meter",
                     .modality = Modality::kFrameWise,
                     .out_dim = 3,
                     .sensitivity = Sensitivity::kDistortion,
                     .response_channel = 0,
                     .response_sign = 1.0,
                     .matched_distortion = "additive_noise"}) {}

    std::vector<double> frame_feature(const VideoClip& clip, int k) const override {
        double sum_sq = 0.0, sum_abs = 0.0, max_abs = 0.0;
        long long n = 0;
        for (int y = 1; y + 1 < clip.h; ++y)
            for (int x = 1; x + 1 < clip.w; ++x) {
                double acc = 0.0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) acc += luminance(clip, k, y + dy, x + dx);
                const double r = luminance(clip, k, y, x) - acc / 9.0;
                sum_sq += r * r;
                sum_abs += std::abs(r);
                max_abs = std::max(max_abs, std::abs(r));
                ++n;
            }
        const double dn = static_cast<double>(n);
        return {std::sqrt(sum_sq / dn), sum_abs / dn, max_abs};
    }
};

// 8-bin luminance histogram (fractions). Quantization toward block means
// concentrates brightness around the coarse structure, so the upper-mode bin
// gains mass strictly with blockiness degree.
class LuminanceContentMeter final : public Extractor {
public:
    LuminanceContentMeter()
        : Extractor({.name = "luminance-content",
                     .modality = Modality::kFrameWise,
                     .out_dim = 8,
                     .sensitivity = Sensitivity::kContent,
                     .response_channel = 5,
                     .response_sign = 1.0,
                     .matched_distortion = "compression_blockiness"}) {}

    std::vector<double> frame_feature(const VideoClip& clip, int k) const override {
        std::vector<double> bins(8, 0.0);
        for (int y = 0; y < clip.h; ++y)
            for (int x = 0; x < clip.w; ++x) {
                const int b = std::min(7, static_cast<int>(luminance(clip, k, y, x) * 8.0));
                bins[static_cast<std::size_t>(b)] += 1.0;
            }
        const double n = static_cast<double>(clip.h) * clip.w;
        for (double& v : bins) v /= n;
        return bins;
    }
};

// Per-channel mean and variance: [mean r,g,b, var r,g,b]. Additive noise
// inflates the variances, so var_r (channel 3) is the response channel.
class ColorStatsMeter final : public Extractor {
public:
    ColorStatsMeter()
        : Extractor({.name = "color-stats",
                     .modality = Modality::kFrameWise,
                     .out_dim = 6,
                     .sensitivity = Sensitivity::kContent,
                     .response_channel = 3,
                     .response_sign = 1.0,
                     .matched_distortion = "additive_noise"}) {}

    std::vector<double> frame_feature(const VideoClip& clip, int k) const override {
        std::vector<double> out(6, 0.0);
        const double n = static_cast<double>(clip.h) * clip.w;
        for (int c = 0; c < kChannels; ++c) {
            double sum = 0.0, sum_sq = 0.0;
            for (int y = 0; y < clip.h; ++y)
                for (int x = 0; x < clip.w; ++x) {
                    const double v = clip.at(k, y, x, c);
                    sum += v;
                    sum_sq += v * v;
                }
            const double mean = sum / n;
            out[static_cast<std::size_t>(c)] = mean;
            out[static_cast<std::size_t>(3 + c)] = std::max(0.0, sum_sq / n - mean * mean);
        }
        return out;
    }
};

// [mean abs frame-to-frame luminance difference, max per-pair mean]. Additive
// noise reads as apparent motion, so the mean difference grows strictly with
// noise degree.
class MotionEnergyMeter final : public Extractor {
public:
    MotionEnergyMeter()
        : Extractor({.name = "motion-energy",
                     .modality = Modality::kClipWise,
                     .out_dim = 2,
                     .sensitivity = Sensitivity::kMotion,
                     .response_channel = 0,
                     .response_sign = 1.0,
                     .matched_distortion = "additive_noise",
                     .min_frames = 2}) {}

protected:
    std::vector<double> clip_feature(const VideoClip& clip) const override {
        double total = 0.0, max_pair = 0.0;
        const double per_frame = static_cast<double>(clip.h) * clip.w;
        for (int k = 0; k + 1 < clip.t; ++k) {
            double pair = 0.0;
            for (int y = 0; y < clip.h; ++y)
                for (int x = 0; x < clip.w; ++x)
                    pair += std::abs(luminance(clip, k + 1, y, x) - luminance(clip, k, y, x));
            pair /= per_frame;
            total += pair;
            max_pair = std::max(max_pair, pair);
        }
        return {total / (clip.t - 1), max_pair};
    }
};

// Population variance of per-frame mean luminance.
class TemporalFlickerMeter final : public Extractor {
public:
    TemporalFlickerMeter()
        : Extractor({.name = "temporal-flicker",
                     .modality = Modality::kClipWise,
                     .out_dim = 1,
                     .sensitivity = Sensitivity::kMotion,
                     .response_channel = 0,
                     .response_sign = -1.0,
                     .matched_distortion = "motion_blur",
                     .min_frames = 2}) {}

protected:
    std::vector<double> clip_feature(const VideoClip& clip) const override {
        std::vector<double> means(static_cast<std::size_t>(clip.t), 0.0);
        const double per_frame = static_cast<double>(clip.h) * clip.w;
        for (int k = 0; k < clip.t; ++k) {
            double sum = 0.0;
            for (int y = 0; y < clip.h; ++y)
                for (int x = 0; x < clip.w; ++x) sum += luminance(clip, k, y, x);
            means[static_cast<std::size_t>(k)] = sum / per_frame;
        }
        double mu = 0.0;
        for (double m : means) mu += m;
        mu /= clip.t;
        double var = 0.0;
        for (double m : means) var += (m - mu) * (m - mu);
        return {var / clip.t};
    }
};

}  // namespace

int ExtractorPool::total_dim() const {
    int n = 0;
    for (const auto& e : extractors) n += e->descriptor().out_dim;
    return n;
}

std::vector<std::string> ExtractorPool::names() const {
    std::vector<std::string> out;
    out.reserve(extractors.size());
    for (const auto& e : extractors) out.push_back(e->name());
    return out;
}

ExtractorPool ExtractorPool::subset(const std::vector<int>& indices) const {
    ExtractorPool out;
    for (int i : indices) {
        if (i < 0 || i >= size()) throw std::out_of_range("extractor index out of range");
        out.extractors.push_back(extractors[static_cast<std::size_t>(i)]);
    }
    return out;
}

ExtractorPool build_toy_bank() {
    ExtractorPool pool;
    pool.extractors = {
        std::make_shared<BlockinessMeter>(),     std::make_shared<SharpnessMeter>(),
        std::make_shared<NoiseMeter>(),          std::make_shared<LuminanceContentMeter>(),
        std::make_shared<ColorStatsMeter>(),     std::make_shared<MotionEnergyMeter>(),
        std::make_shared<TemporalFlickerMeter>(),
    };
    return pool;
}

std::vector<FeatureVector> extract_all(const ExtractorPool& pool, const VideoClip& clip) {
    if (pool.size() == 0) throw std::invalid_argument("extract_all: empty pool");
    std::vector<FeatureVector> out;
    out.reserve(pool.extractors.size());
    for (const auto& e : pool.extractors) {
        try {
            out.push_back(e->extract(clip));
        } catch (const std::exception& ex) {
            throw std::runtime_error("extractor '" + e->name() + "': " + ex.what());
        }
    }
    return out;
}

void FeatureCache::put(const std::string& clip_id, const std::vector<FeatureVector>& features) {
    if (table_.empty()) {
        for (const FeatureVector& f : features) table_.emplace_back(f.extractor_name, f.dim());
    } else {
        if (features.size() != table_.size())
            throw std::invalid_argument("feature cache: extractor count mismatch for " + clip_id);
        for (std::size_t i = 0; i < table_.size(); ++i) {
            if (features[i].extractor_name != table_[i].first ||
                features[i].dim() != table_[i].second)
                throw std::invalid_argument("feature cache: extractor table mismatch for " +
                                            clip_id);
        }
    }
    records_[clip_id] = features;
}

const FeatureVector& FeatureCache::get(const std::string& clip_id,
                                       const std::string& extractor_name) const {
    const auto it = records_.find(clip_id);
    if (it == records_.end())
        throw std::out_of_range("feature cache: no record for clip '" + clip_id + "'");
    for (const FeatureVector& f : it->second)
        if (f.extractor_name == extractor_name) return f;
    throw std::out_of_range("feature cache: no extractor '" + extractor_name + "'");
}

bool FeatureCache::contains(const std::string& clip_id) const {
    return records_.count(clip_id) > 0;
}

void FeatureCache::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write feature cache: " + path);
    io::write_magic(out, "ADQAFEAT");
    io::write_u32(out, 1);  // version
    io::write_u32(out, static_cast<std::uint32_t>(table_.size()));
    for (const auto& [name, dim] : table_) {
        io::write_string(out, name);
        io::write_u32(out, static_cast<std::uint32_t>(dim));
    }
    io::write_u32(out, static_cast<std::uint32_t>(records_.size()));
    for (const auto& [clip_id, features] : records_) {
        io::write_string(out, clip_id);
        for (const FeatureVector& f : features)
            for (double v : f.values) io::write_f32(out, static_cast<float>(v));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

FeatureCache FeatureCache::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open feature cache: " + path);
    if (!io::check_magic(in, "ADQAFEAT")) throw std::runtime_error("not a feature cache: " + path);
    const std::uint32_t version = io::read_u32(in);
    if (version != 1)
        throw std::runtime_error("unsupported feature cache version " + std::to_string(version));
    FeatureCache cache;
    const std::uint32_t n_extractors = io::read_u32(in);
    for (std::uint32_t i = 0; i < n_extractors; ++i) {
        const std::string name = io::read_string(in);
        const int dim = static_cast<int>(io::read_u32(in));
        cache.table_.emplace_back(name, dim);
    }
    const std::uint32_t n_clips = io::read_u32(in);
    for (std::uint32_t i = 0; i < n_clips; ++i) {
        const std::string clip_id = io::read_string(in);
        std::vector<FeatureVector> features;
        features.reserve(cache.table_.size());
        for (const auto& [name, dim] : cache.table_) {
            FeatureVector f;
            f.extractor_name = name;
            f.values.resize(static_cast<std::size_t>(dim));
            for (double& v : f.values) v = io::read_f32(in);
            features.push_back(std::move(f));
        }
        cache.records_[clip_id] = std::move(features);
    }
    return cache;
}

void save_feature_cache(const std::string& path, const FeatureCache& cache) { cache.save(path); }

FeatureCache load_feature_cache(const std::string& path) { return FeatureCache::load(path); }

namespace {

class CachedExtractor final : public Extractor {
public:
    CachedExtractor(std::shared_ptr<const FeatureCache> cache, std::string extractor_name,
                    ExtractorDescriptor desc)
        : Extractor(std::move(desc)), cache_(std::move(cache)), key_(std::move(extractor_name)) {}

    std::vector<double> frame_feature(const VideoClip&, int) const override {
        throw std::logic_error(desc_.name + ": cached features have no per-frame form");
    }

protected:
    std::vector<double> clip_feature(const VideoClip& clip) const override {
        return cache_->get(clip.source_id, key_).values;
    }

private:
    std::shared_ptr<const FeatureCache> cache_;
    std::string key_;
};

}  // namespace

std::shared_ptr<const Extractor> make_cached_extractor(std::shared_ptr<const FeatureCache> cache,
                                                       const std::string& extractor_name,
                                                       const ExtractorDescriptor& desc) {
    ExtractorDescriptor d = desc;
    d.modality = Modality::kClipWise;  // lookup consumes the clip as a whole
    return std::make_shared<CachedExtractor>(std::move(cache), extractor_name, std::move(d));
}

}  // namespace adadqa
