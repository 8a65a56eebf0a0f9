#include "adadqa/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "adadqa/extractors.hpp"
#include "adadqa/io.hpp"
#include "adadqa/metrics.hpp"
#include "adadqa/rng.hpp"

namespace adadqa {

namespace fs = std::filesystem;

std::string to_string(DistortionKind kind) {
    switch (kind) {
        case DistortionKind::kCompressionBlockiness: return "compression_blockiness";
        case DistortionKind::kGaussianBlur: return "gaussian_blur";
        case DistortionKind::kMotionBlur: return "motion_blur";
        case DistortionKind::kAdditiveNoise: return "additive_noise";
    }
    throw std::logic_error("unreachable");
}

DistortionKind distortion_kind_from_string(const std::string& s) {
    for (DistortionKind k : kAllDistortionKinds)
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown distortion kind '" + s + "'");
}

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kBlockSize = 8;

int wrap_index(int i, int n) {
    i %= n;
    return i < 0 ? i + n : i;
}

// Bilinear sample of a single-channel field at real coordinates, wrapping at
// the edges.
double sample_wrap(const std::vector<double>& field, int h, int w, double y, double x) {
    const double fy = std::floor(y);
    const double fx = std::floor(x);
    const int y0 = wrap_index(static_cast<int>(fy), h);
    const int x0 = wrap_index(static_cast<int>(fx), w);
    const int y1 = wrap_index(y0 + 1, h);
    const int x1 = wrap_index(x0 + 1, w);
    const double wy = y - fy;
    const double wx = x - fx;
    return field[static_cast<std::size_t>(y0) * w + x0] * (1 - wy) * (1 - wx) +
           field[static_cast<std::size_t>(y0) * w + x1] * (1 - wy) * wx +
           field[static_cast<std::size_t>(y1) * w + x0] * wy * (1 - wx) +
           field[static_cast<std::size_t>(y1) * w + x1] * wy * wx;
}

// Fine static texture in [0, 1] used to give smooth patterns visible
// high-frequency detail (distortions must be observable on every pattern).
std::vector<double> make_detail_field(int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> field(static_cast<std::size_t>(h) * w);
    for (double& v : field) v = rng.uniform();
    return field;
}

// Coarse texture (structure at the `scale`-pixel level): bilinear upsample of
// a low-resolution noise grid. Coarse structure survives short motion smears
// but not long ones, which makes smear length readable.
std::vector<double> make_coarse_field(int h, int w, int scale, std::uint64_t seed) {
    Rng rng(seed);
    const int gh = std::max(2, h / scale), gw = std::max(2, w / scale);
    std::vector<double> grid(static_cast<std::size_t>(gh) * gw);
    for (double& v : grid) v = rng.uniform();
    std::vector<double> field(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            field[static_cast<std::size_t>(y) * w + x] =
                sample_wrap(grid, gh, gw, static_cast<double>(y) * gh / h,
                            static_cast<double>(x) * gw / w);
    return field;
}

void render_moving_gradient(VideoClip& clip, const SynthClipSpec& spec) {
    Rng rng(Rng::mix(spec.seed, 1));
    const int cx = 1 + static_cast<int>(rng.integer(2));  // horizontal cycles
    const int cy = 1 + static_cast<int>(rng.integer(2));  // vertical cycles
    double phase[kChannels];
    for (double& p : phase) p = rng.uniform(0.0, 2.0 * kPi);
    const std::vector<double> detail = make_detail_field(clip.h, clip.w, Rng::mix(spec.seed, 11));
    const std::vector<double> coarse =
        make_coarse_field(clip.h, clip.w, 8, Rng::mix(spec.seed, 12));
    for (int k = 0; k < clip.t; ++k) {
        const double shift = spec.motion_speed * k;
        for (int y = 0; y < clip.h; ++y)
            for (int x = 0; x < clip.w; ++x) {
                const double arg = 2.0 * kPi * (static_cast<double>(cx) * (x + shift) / clip.w +
                                                static_cast<double>(cy) * y / clip.h);
                const double grain =
                    sample_wrap(detail, clip.h, clip.w, y, x + shift) - 0.5;
                const double mid = sample_wrap(coarse, clip.h, clip.w, y, x + shift) - 0.5;
                for (int c = 0; c < kChannels; ++c)
                    clip.at(k, y, x, c) = static_cast<float>(
                        0.5 + 0.26 * std::sin(arg + phase[c]) + 0.18 * mid + 0.12 * grain);
            }
    }
}

void render_checker_pan(VideoClip& clip, const SynthClipSpec& spec) {
    Rng rng(Rng::mix(spec.seed, 2));
    // cell 4 keeps frame means translation-invariant (2*cell divides the
    // width) and stays visible under 8x8 block quantization
    const int cell = 4;
    double tone_a[kChannels], tone_b[kChannels];
    for (int c = 0; c < kChannels; ++c) {
        tone_a[c] = rng.uniform(0.30, 0.40);
        tone_b[c] = rng.uniform(0.60, 0.70);
    }
    const std::vector<double> coarse =
        make_coarse_field(clip.h, clip.w, 8, Rng::mix(spec.seed, 13));
    for (int k = 0; k < clip.t; ++k) {
        // integer shift so each frame is an exact permutation of frame 0
        const int shift = static_cast<int>(std::llround(spec.motion_speed * k));
        for (int y = 0; y < clip.h; ++y)
            for (int x = 0; x < clip.w; ++x) {
                const int xs = wrap_index(x + shift, clip.w);
                const bool a = ((xs / cell) + (y / cell)) % 2 == 0;
                const double mid =
                    0.2 * (coarse[static_cast<std::size_t>(y) * clip.w + xs] - 0.5);
                for (int c = 0; c < kChannels; ++c)
                    clip.at(k, y, x, c) =
                        static_cast<float>((a ? tone_a[c] : tone_b[c]) + mid);
            }
    }
}

void render_textured_noise_field(VideoClip& clip, const SynthClipSpec& spec) {
    const int h = clip.h, w = clip.w;
    // static texture: smoothed white noise stretched to full range
    std::vector<double> base(static_cast<std::size_t>(h) * w * kChannels);
    {
        Rng rng(Rng::mix(spec.seed, 3));
        std::vector<double> white(base.size());
        for (double& v : white) v = rng.uniform();
        for (int c = 0; c < kChannels; ++c) {
            double lo = 1.0, hi = 0.0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double acc = 0.0;
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx)
                            acc += white[(static_cast<std::size_t>(wrap_index(y + dy, h)) * w +
                                          wrap_index(x + dx, w)) *
                                             kChannels +
                                         c];
                    const double v = acc / 9.0;
                    base[(static_cast<std::size_t>(y) * w + x) * kChannels + c] = v;
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            const double scale = hi > lo ? 1.0 / (hi - lo) : 1.0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double& v = base[(static_cast<std::size_t>(y) * w + x) * kChannels + c];
                    v = (v - lo) * scale;
                }
        }
    }
    Rng wobble_rng(Rng::mix(spec.seed, 4));
    const double wobble_phase = wobble_rng.uniform(0.0, 2.0 * kPi);
    const std::vector<double> coarse = make_coarse_field(h, w, 8, Rng::mix(spec.seed, 14));
    std::vector<double> channel(static_cast<std::size_t>(h) * w);
    for (int k = 0; k < clip.t; ++k) {
        Rng fresh(Rng::mix(spec.seed, 1000 + k));
        // global brightness wobble gives the clip a per-frame-mean signal
        const double wobble =
            0.5 + 0.5 * std::sin(2.0 * kPi * k / clip.t + wobble_phase);
        const double shift = spec.motion_speed * k;
        for (int c = 0; c < kChannels; ++c) {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    channel[static_cast<std::size_t>(y) * w + x] =
                        base[(static_cast<std::size_t>(y) * w + x) * kChannels + c];
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double tex = sample_wrap(channel, h, w, y, x + shift);
                    const double mid = sample_wrap(coarse, h, w, y, x + shift);
                    const double grain = fresh.uniform();
                    clip.at(k, y, x, c) = static_cast<float>(0.54 * tex + 0.40 * mid +
                                                             0.03 * grain + 0.03 * wobble);
                }
        }
    }
}

VideoClip blockiness(const VideoClip& clip, double degree) {
    VideoClip out = clip;
    const float lam = static_cast<float>(degree);
    for (int k = 0; k < clip.t; ++k)
        for (int by = 0; by < clip.h; by += kBlockSize)
            for (int bx = 0; bx < clip.w; bx += kBlockSize) {
                const int ey = std::min(by + kBlockSize, clip.h);
                const int ex = std::min(bx + kBlockSize, clip.w);
                const float count = static_cast<float>((ey - by) * (ex - bx));
                for (int c = 0; c < kChannels; ++c) {
                    float sum = 0.0f;
                    for (int y = by; y < ey; ++y)
                        for (int x = bx; x < ex; ++x) sum += clip.at(k, y, x, c);
                    const float mean = sum / count;
                    for (int y = by; y < ey; ++y)
                        for (int x = bx; x < ex; ++x)
                            out.at(k, y, x, c) = (1.0f - lam) * clip.at(k, y, x, c) + lam * mean;
                }
            }
    return out;
}

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable spatial Gaussian with circular wrap; a normalized wrap kernel
// preserves each frame's mean exactly.
VideoClip gaussian_blur(const VideoClip& clip, double degree) {
    const double sigma = 4.0 * degree;
    const std::vector<double> kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    VideoClip out = clip;
    std::vector<double> tmp(static_cast<std::size_t>(clip.h) * clip.w);
    std::vector<double> pass(static_cast<std::size_t>(clip.h) * clip.w);
    for (int k = 0; k < clip.t; ++k)
        for (int c = 0; c < kChannels; ++c) {
            for (int y = 0; y < clip.h; ++y)
                for (int x = 0; x < clip.w; ++x)
                    tmp[static_cast<std::size_t>(y) * clip.w + x] = clip.at(k, y, x, c);
            for (int y = 0; y < clip.h; ++y)
                for (int x = 0; x < clip.w; ++x) {
                    double acc = 0.0;
                    for (int i = -radius; i <= radius; ++i)
                        acc += kernel[static_cast<std::size_t>(i + radius)] *
                               tmp[static_cast<std::size_t>(y) * clip.w + wrap_index(x + i, clip.w)];
                    pass[static_cast<std::size_t>(y) * clip.w + x] = acc;
                }
            for (int y = 0; y < clip.h; ++y)
                for (int x = 0; x < clip.w; ++x) {
                    double acc = 0.0;
                    for (int i = -radius; i <= radius; ++i)
                        acc += kernel[static_cast<std::size_t>(i + radius)] *
                               pass[static_cast<std::size_t>(wrap_index(y + i, clip.h)) * clip.w + x];
                    out.at(k, y, x, c) = static_cast<float>(acc);
                }
        }
    return out;
}

// Temporal box average over a trailing circular window of 1 + floor(6*degree)
// frames.
VideoClip motion_blur(const VideoClip& clip, double degree) {
    const int window = 1 + static_cast<int>(std::floor(6.0 * degree));
    VideoClip out = clip;
    const std::size_t frame_size = static_cast<std::size_t>(clip.h) * clip.w * kChannels;
    for (int k = 0; k < clip.t; ++k) {
        float* dst = out.pixels.data() + static_cast<std::size_t>(k) * frame_size;
        std::vector<double> acc(frame_size, 0.0);
        for (int j = 0; j < window; ++j) {
            const float* src =
                clip.pixels.data() + static_cast<std::size_t>(wrap_index(k + j, clip.t)) * frame_size;
            for (std::size_t i = 0; i < frame_size; ++i) acc[i] += src[i];
        }
        for (std::size_t i = 0; i < frame_size; ++i)
            dst[i] = static_cast<float>(acc[i] / window);
    }
    return out;
}

// Hash of the clip contents; seeds the noise realization so the same clip
// always receives the same underlying normal field, scaled by sigma.
std::uint64_t clip_content_seed(const VideoClip& clip) {
    std::uint64_t hash = 1469598103934665603ULL;
    auto absorb = [&hash](std::uint64_t v) {
        hash ^= v;
        hash *= 1099511628211ULL;
    };
    absorb(static_cast<std::uint64_t>(clip.t));
    absorb(static_cast<std::uint64_t>(clip.h));
    absorb(static_cast<std::uint64_t>(clip.w));
    const std::size_t n = clip.pixels.size();
    const std::size_t stride = std::max<std::size_t>(1, n / 1024);
    for (std::size_t i = 0; i < n; i += stride) {
        std::uint32_t bits;
        std::memcpy(&bits, &clip.pixels[i], 4);
        absorb(bits);
    }
    return hash;
}

VideoClip additive_noise(const VideoClip& clip, double degree) {
    const double sigma = 0.2 * degree;
    Rng rng(clip_content_seed(clip));
    VideoClip out = clip;
    for (float& p : out.pixels) {
        const double v = p + sigma * rng.normal();
        p = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
}

}  // namespace

VideoClip apply_distortion(const VideoClip& clip, const DistortionSpec& d) {
    if (d.degree < 0.0 || d.degree > 1.0)
        throw std::invalid_argument("distortion degree must lie in [0, 1]");
    if (d.degree == 0.0) return clip;
    switch (d.kind) {
        case DistortionKind::kCompressionBlockiness: return blockiness(clip, d.degree);
        case DistortionKind::kGaussianBlur: return gaussian_blur(clip, d.degree);
        case DistortionKind::kMotionBlur: return motion_blur(clip, d.degree);
        case DistortionKind::kAdditiveNoise: return additive_noise(clip, d.degree);
    }
    throw std::logic_error("unreachable");
}

namespace {

// Pristine clips are standardized to a fixed luminance spread so that
// distortion severity, not content contrast, dominates the statistics the
// models see.
void standardize_contrast(VideoClip& clip) {
    constexpr double kTargetStd = 0.18;
    double mean = 0.0;
    for (float p : clip.pixels) mean += p;
    mean /= static_cast<double>(clip.pixels.size());
    double var = 0.0;
    for (float p : clip.pixels) var += (p - mean) * (p - mean);
    var /= static_cast<double>(clip.pixels.size());
    const double sd = std::sqrt(var);
    if (sd < 1e-9) return;
    const double gain = kTargetStd / sd;
    for (float& p : clip.pixels)
        p = static_cast<float>(std::clamp(0.5 + (p - mean) * gain, 0.0, 1.0));
}

}  // namespace

VideoClip generate_clip(const SynthClipSpec& spec) {
    if (spec.t < 1 || spec.h < 8 || spec.w < 8)
        throw std::invalid_argument("generate_clip: unrenderable dimensions");
    VideoClip clip = make_clip(spec.t, spec.h, spec.w);
    switch (spec.base_pattern) {
        case BasePattern::kMovingGradient: render_moving_gradient(clip, spec); break;
        case BasePattern::kTexturedNoiseField: render_textured_noise_field(clip, spec); break;
        case BasePattern::kCheckerPan: render_checker_pan(clip, spec); break;
    }
    standardize_contrast(clip);
    for (const DistortionSpec& d : spec.distortions) clip = apply_distortion(clip, d);
    return clip;
}

double synth_mos(const std::vector<DistortionSpec>& distortions) {
    double quality = 1.0;
    for (const DistortionSpec& d : distortions) {
        if (d.degree < 0.0 || d.degree > 1.0)
            throw std::invalid_argument("distortion degree must lie in [0, 1]");
        quality *= 1.0 - 0.85 * d.degree;
    }
    return 1.0 + 4.0 * quality;
}

namespace {

std::string clip_name(int index) {
    std::ostringstream os;
    os << "clip_" << std::setw(6) << std::setfill('0') << index;
    return os.str();
}

}  // namespace

SynthDataset make_dataset(const SynthDatasetSpec& spec) {
    if (spec.n < 10) throw std::invalid_argument("make_dataset: need n >= 10");
    SynthDataset ds;
    ds.clips.reserve(spec.n);
    ds.records.reserve(spec.n);
    {
        std::ostringstream id;
        id << (spec.mixed_blockiness_motion ? "mixed" : "synth") << "-n" << spec.n << "-seed"
           << spec.seed;
        ds.dataset_id = id.str();
    }
    for (int i = 0; i < spec.n; ++i) {
        Rng rng(Rng::mix(spec.seed, static_cast<std::uint64_t>(i)));
        SynthClipSpec cs;
        cs.t = spec.t;
        cs.h = spec.h;
        cs.w = spec.w;
        cs.seed = Rng::mix(spec.seed, 0x5eed0000ULL + static_cast<std::uint64_t>(i));
        const int pattern = static_cast<int>(rng.integer(3));
        cs.base_pattern = pattern == 0   ? BasePattern::kMovingGradient
                          : pattern == 1 ? BasePattern::kTexturedNoiseField
                                         : BasePattern::kCheckerPan;
        cs.motion_speed = rng.uniform(2.0, 3.0);
        if (spec.mixed_blockiness_motion) {
            DistortionSpec d;
            d.kind = (i % 2 == 0) ? DistortionKind::kCompressionBlockiness
                                  : DistortionKind::kMotionBlur;
            d.degree = rng.uniform(0.55, 1.0);
            cs.distortions.push_back(d);
        } else {
            // 20% pristine, 50% single distortion, 30% a dominant distortion
            // with a mild secondary one. Severities are drawn from discrete
            // levels, the way graded distortion datasets are built; every
            // level has a visible pixel effect (a level-0.2 motion blur is
            // already past the first temporal window step).
            static constexpr double kLevels[] = {0.2, 0.4, 0.6, 0.8, 1.0};
            const int draw = static_cast<int>(rng.integer(10));
            const int stack = draw < 2 ? 0 : (draw < 7 ? 1 : 2);
            std::vector<DistortionKind> kinds(kAllDistortionKinds.begin(),
                                              kAllDistortionKinds.end());
            rng.shuffle(kinds);
            if (stack >= 1) cs.distortions.push_back({kinds[0], kLevels[rng.integer(5)]});
            if (stack >= 2) cs.distortions.push_back({kinds[1], kLevels[rng.integer(2)]});
        }
        VideoClip clip = generate_clip(cs);
        clip.source_id = clip_name(i);

        QualityRecord rec;
        rec.source_id = clip.source_id;
        rec.mos = synth_mos(cs.distortions);
        rec.raw_mos = rec.mos;
        rec.raw_lo = 1.0;
        rec.raw_hi = 5.0;
        for (const DistortionSpec& d : cs.distortions) rec.synth_truth[to_string(d.kind)] = d.degree;

        ds.clips.push_back(std::move(clip));
        ds.records.push_back(std::move(rec));
    }
    split_dataset(ds, spec.seed);
    return ds;
}

SynthDataset make_dataset(int n, std::uint64_t seed) {
    SynthDatasetSpec spec;
    spec.n = n;
    spec.seed = seed;
    return make_dataset(spec);
}

SynthDataset make_mixed_dataset(int n, std::uint64_t seed) {
    SynthDatasetSpec spec;
    spec.n = n;
    spec.seed = seed;
    spec.mixed_blockiness_motion = true;
    return make_dataset(spec);
}

void split_dataset(SynthDataset& ds, std::uint64_t split_seed) {
    const int n = ds.size();
    Rng rng(Rng::mix(split_seed, 0xabcdULL));
    const std::vector<int> perm = rng.permutation(n);
    const int n_train = static_cast<int>(std::ceil(0.8 * n));
    ds.train_indices.assign(perm.begin(), perm.begin() + n_train);
    ds.test_indices.assign(perm.begin() + n_train, perm.end());
    ds.split_seed = split_seed;
}

void save_clip(const std::string& path, const VideoClip& clip) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write clip file: " + path);
    io::write_magic(out, "ADQACLIP");
    io::write_u32(out, static_cast<std::uint32_t>(clip.t));
    io::write_u32(out, static_cast<std::uint32_t>(clip.h));
    io::write_u32(out, static_cast<std::uint32_t>(clip.w));
    io::write_u32(out, kChannels);
    io::write_f32_array(out, clip.pixels.data(), clip.pixels.size());
    if (!out) throw std::runtime_error("write failed: " + path);
}

VideoClip load_clip(const std::string& path, std::string source_id) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open clip file: " + path);
    if (!io::check_magic(in, "ADQACLIP")) throw std::runtime_error("not a clip file: " + path);
    const int t = static_cast<int>(io::read_u32(in));
    const int h = static_cast<int>(io::read_u32(in));
    const int w = static_cast<int>(io::read_u32(in));
    const int c = static_cast<int>(io::read_u32(in));
    if (c != kChannels) throw std::runtime_error("clip file must have 3 channels: " + path);
    VideoClip clip = make_clip(t, h, w, std::move(source_id));
    io::read_f32_array(in, clip.pixels.data(), clip.pixels.size());
    if (!in) throw std::runtime_error("truncated clip file: " + path);
    return clip;
}

void save_dataset(const std::string& dir, const SynthDataset& ds) {
    fs::create_directories(fs::path(dir) / "clips");
    for (int i = 0; i < ds.size(); ++i)
        save_clip((fs::path(dir) / "clips" / (ds.records[static_cast<std::size_t>(i)].source_id + ".clip"))
                      .string(),
                  ds.clips[static_cast<std::size_t>(i)]);

    std::ofstream manifest((fs::path(dir) / "manifest.txt").string());
    if (!manifest) throw std::runtime_error("cannot write manifest in " + dir);
    manifest << std::setprecision(17);
    manifest << "# dataset_id " << ds.dataset_id << "\n";
    for (const QualityRecord& rec : ds.records) {
        manifest << rec.source_id << " mos=" << rec.mos << " raw=" << rec.raw_mos
                 << " lo=" << rec.raw_lo << " hi=" << rec.raw_hi;
        if (!rec.synth_truth.empty()) {
            manifest << " truth=";
            bool first = true;
            for (const auto& [kind, degree] : rec.synth_truth) {
                if (!first) manifest << ",";
                manifest << kind << ":" << degree;
                first = false;
            }
        }
        manifest << "\n";
    }

    std::ofstream split((fs::path(dir) / "split.txt").string());
    split << "seed " << ds.split_seed << "\ntrain";
    for (int i : ds.train_indices) split << " " << i;
    split << "\ntest";
    for (int i : ds.test_indices) split << " " << i;
    split << "\n";
}

SynthDataset load_dataset(const std::string& dir) {
    std::ifstream manifest((fs::path(dir) / "manifest.txt").string());
    if (!manifest) throw std::runtime_error("cannot open manifest in " + dir);
    SynthDataset ds;
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        if (line.rfind("# dataset_id ", 0) == 0) {
            ds.dataset_id = line.substr(13);
            continue;
        }
        std::istringstream is(line);
        QualityRecord rec;
        is >> rec.source_id;
        std::string token;
        while (is >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("malformed manifest line: " + line);
            const std::string key = token.substr(0, eq);
            const std::string value = token.substr(eq + 1);
            if (key == "mos") rec.mos = std::stod(value);
            else if (key == "raw") rec.raw_mos = std::stod(value);
            else if (key == "lo") rec.raw_lo = std::stod(value);
            else if (key == "hi") rec.raw_hi = std::stod(value);
            else if (key == "truth") {
                std::istringstream ts(value);
                std::string item;
                while (std::getline(ts, item, ',')) {
                    const auto colon = item.find(':');
                    if (colon == std::string::npos)
                        throw std::runtime_error("malformed truth entry: " + item);
                    rec.synth_truth[item.substr(0, colon)] = std::stod(item.substr(colon + 1));
                }
            } else {
                throw std::runtime_error("unknown manifest key '" + key + "'");
            }
        }
        ds.records.push_back(std::move(rec));
    }
    for (const QualityRecord& rec : ds.records)
        ds.clips.push_back(
            load_clip((fs::path(dir) / "clips" / (rec.source_id + ".clip")).string(), rec.source_id));

    std::ifstream split((fs::path(dir) / "split.txt").string());
    if (split) {
        std::string word;
        while (split >> word) {
            if (word == "seed") split >> ds.split_seed;
            else if (word == "train") {
                std::getline(split, line);
                std::istringstream is(line);
                int idx;
                while (is >> idx) ds.train_indices.push_back(idx);
            } else if (word == "test") {
                std::getline(split, line);
                std::istringstream is(line);
                int idx;
                while (is >> idx) ds.test_indices.push_back(idx);
            }
        }
    }
    return ds;
}

// The probe mixes components the four distortions act on differently: a fine
// moving grating in red (period 4 px, 1 px/frame, so temporal box windows of
// 1/2/4/5/7 frames scale it by the non-monotone Dirichlet factors
// 1/.71/0/.20/.14 — motion blur both removes and restores it), a slow
// low-frequency sinusoid in green/blue carrying the block-scale structure, a
// global brightness wobble spanning the clip, and fresh per-frame grain. The
// grating phase advances per row so block boundaries sample all phases.
VideoClip make_probe_clip(std::uint64_t seed) {
    constexpr int t = 16, h = 64, w = 64;
    constexpr double a_fine = 0.25, a_slow = 0.30, a_wobble = 0.04, a_grain = 0.03;
    VideoClip clip = make_clip(t, h, w, "probe");
    Rng phase_rng(Rng::mix(seed, 1));
    const double phi_fine = phase_rng.uniform(0.0, 2.0 * kPi);
    const double phi_slow = phase_rng.uniform(0.0, 2.0 * kPi);
    const double phi_wobble = phase_rng.uniform(0.0, 2.0 * kPi);
    for (int k = 0; k < t; ++k) {
        Rng grain(Rng::mix(seed, 2000 + static_cast<std::uint64_t>(k)));
        const double wobble = a_wobble * std::sin(2.0 * kPi * k / t + phi_wobble);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double fine = a_fine * std::sin(2.0 * kPi * (x - 1.0 * k) / 4.0 +
                                                      0.37 * y + phi_fine);
                const double slow =
                    a_slow * std::sin(2.0 * kPi * (x - 2.0 * k) / 64.0 + phi_slow);
                clip.at(k, y, x, 0) = static_cast<float>(
                    0.5 + fine + wobble + a_grain * (grain.uniform() - 0.5));
                clip.at(k, y, x, 1) = static_cast<float>(
                    0.5 + slow + wobble + a_grain * (grain.uniform() - 0.5));
                clip.at(k, y, x, 2) = static_cast<float>(
                    0.5 + slow + wobble + a_grain * (grain.uniform() - 0.5));
            }
    }
    return clip;
}

VideoClip make_probe_clip() { return make_probe_clip(1); }

std::vector<double> distortion_response_values(const Extractor& extractor, DistortionKind kind,
                                               const std::vector<double>& degrees) {
    const VideoClip probe = make_probe_clip();
    const ExtractorDescriptor& desc = extractor.descriptor();
    std::vector<double> responses;
    responses.reserve(degrees.size());
    for (double degree : degrees) {
        const VideoClip distorted = apply_distortion(probe, {kind, degree});
        const FeatureVector f = extractor.extract(distorted);
        responses.push_back(desc.response_sign *
                            f.values[static_cast<std::size_t>(desc.response_channel)]);
    }
    return responses;
}

double distortion_response_curve(const Extractor& extractor, DistortionKind kind,
                                 const std::vector<double>& degrees) {
    std::vector<double> distinct = degrees;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3)
        throw std::invalid_argument("distortion_response_curve: need >= 3 distinct degrees");
    return srcc(degrees, distortion_response_values(extractor, kind, degrees));
}

}  // namespace adadqa
