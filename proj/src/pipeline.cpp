#include "adadqa/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "adadqa/io.hpp"
#include "adadqa/losses.hpp"

namespace adadqa {

VideoClip sample_frames(const VideoClip& video, const SamplingPlan& plan, int offset) {
    if (video.t < 1) throw std::invalid_argument("sample_frames: empty video");
    if (offset < 0) throw std::invalid_argument("sample_frames: negative offset");
    VideoClip out = make_clip(plan.frame_count, video.h, video.w, video.source_id,
                              video.frame_rate);
    const std::size_t frame = static_cast<std::size_t>(video.h) * video.w * kChannels;
    for (int k = 0; k < plan.frame_count; ++k) {
        const int src = (offset + k * plan.frame_interval) % video.t;
        std::copy(video.pixels.begin() + static_cast<std::size_t>(src) * frame,
                  video.pixels.begin() + static_cast<std::size_t>(src + 1) * frame,
                  out.pixels.begin() + static_cast<std::size_t>(k) * frame);
    }
    return out;
}

VideoClip center_crop(const VideoClip& clip, int size) {
    if (clip.h < size || clip.w < size)
        throw std::invalid_argument("center_crop: frame " + std::to_string(clip.h) + "x" +
                                    std::to_string(clip.w) + " smaller than crop " +
                                    std::to_string(size));
    if (clip.h == size && clip.w == size) return clip;
    const int y0 = (clip.h - size) / 2;
    const int x0 = (clip.w - size) / 2;
    VideoClip out = make_clip(clip.t, size, size, clip.source_id, clip.frame_rate);
    for (int k = 0; k < clip.t; ++k)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                for (int c = 0; c < kChannels; ++c)
                    out.at(k, y, x, c) = clip.at(k, y0 + y, x0 + x, c);
    return out;
}

void write_loss_log(std::ostream& out, const std::vector<LossRecord>& log) {
    out << std::setprecision(10);
    for (const LossRecord& r : log)
        out << "step=" << r.step << " reg_s=" << r.reg_s << " reg_t=" << r.reg_t
            << " kd=" << r.kd << " sparse=" << r.sparse << " total=" << r.total
            << " lr=" << r.lr << "\n";
}

Trainer::Trainer(const TrainConfig& cfg, const SynthDataset& dataset, ExtractorPool pool,
                 std::optional<StudentConfig> student_cfg)
    : cfg_(validate_config(cfg)),
      dataset_(&dataset),
      pool_(std::move(pool)),
      optimizer_(0.9, 0.999, 1e-8, cfg.weight_decay),
      rng_(cfg.seed) {
    if (dataset_->train_indices.empty())
        throw std::invalid_argument("trainer: empty training split");
    if (pool_.size() > 0 && pool_.size() != cfg_.n_extractors)
        throw std::invalid_argument("trainer: pool size " + std::to_string(pool_.size()) +
                                    " does not match n_extractors " +
                                    std::to_string(cfg_.n_extractors));
    plan_.frame_count = cfg_.frame_count;
    plan_.frame_interval = cfg_.frame_interval;
    plan_.crop = SamplingPlan::Crop::kCenter;
    plan_.crop_size = cfg_.crop_size;

    const int samples = static_cast<int>(dataset_->train_indices.size());
    iters_per_epoch_ = (samples + cfg_.batch_size - 1) / cfg_.batch_size;
    total_steps_ = static_cast<long long>(cfg_.epochs) * iters_per_epoch_;

    init_models(std::move(student_cfg));
}

void Trainer::init_models(std::optional<StudentConfig> student_cfg) {
    if (pool_.size() > 0) {
        std::vector<int> in_dims;
        for (int i = 0; i < pool_.size(); ++i)
            in_dims.push_back(pool_.at(i).descriptor().out_dim);
        qam_ = std::make_unique<Qam<float>>(in_dims, cfg_.d);
        qam_->init(rng_);
    }
    StudentConfig scfg = student_cfg.value_or(
        StudentConfig::make_default(cfg_.d, cfg_.frame_count, cfg_.crop_size));
    if (scfg.d() != cfg_.d)
        throw std::invalid_argument("trainer: student output dim must equal d");
    scfg.frame_count = cfg_.frame_count;
    scfg.crop_size = cfg_.crop_size;
    student_ = std::make_unique<StudentModel<float>>(scfg);
    student_->init(rng_);

    params_.clear();
    if (qam_) qam_->collect(params_);
    student_->collect(params_);
    optimizer_.attach(params_);
}

VideoClip Trainer::training_view(const VideoClip& video, long long step) const {
    Rng r(Rng::mix(Rng::mix(cfg_.seed, 0xFF5E70000ULL + static_cast<std::uint64_t>(step)), 1));
    const int offset = static_cast<int>(r.integer(static_cast<std::uint64_t>(video.t)));
    VideoClip sampled = sample_frames(video, plan_, offset);
    return plan_.crop == SamplingPlan::Crop::kCenter ? center_crop(sampled, plan_.crop_size)
                                                     : sampled;
}

VideoClip Trainer::inference_view(const VideoClip& video) const {
    VideoClip sampled = sample_frames(video, plan_, 0);
    return plan_.crop == SamplingPlan::Crop::kCenter ? center_crop(sampled, plan_.crop_size)
                                                     : sampled;
}

std::vector<std::vector<float>> Trainer::frozen_features(const VideoClip& view) const {
    const std::vector<FeatureVector> features = extract_all(pool_, view);
    std::vector<std::vector<float>> out(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        out[i].reserve(features[i].values.size());
        for (double v : features[i].values) out[i].push_back(static_cast<float>(v));
    }
    return out;
}

std::vector<double> Trainer::gate_weights(const VideoClip& video) const {
    if (!qam_) throw std::logic_error("gate_weights: trainer has no teacher");
    const VideoClip view = inference_view(video);
    typename Qam<float>::Ctx ctx;
    qam_->forward(frozen_features(view), ctx);
    return std::vector<double>(ctx.alpha.begin(), ctx.alpha.end());
}

bool Trainer::step() {
    if (global_step_ >= total_steps_) return false;

    const int samples = static_cast<int>(dataset_->train_indices.size());
    const long long epoch = global_step_ / iters_per_epoch_;
    const long long iter_in_epoch = global_step_ % iters_per_epoch_;

    // per-epoch item order, derived statelessly so resume replays it
    Rng order_rng(Rng::mix(cfg_.seed, 0xE90C40000ULL + static_cast<std::uint64_t>(epoch)));
    const std::vector<int> order = order_rng.permutation(samples);

    const double lambda_eff = cfg_.sparsity_enabled ? cfg_.lambda_ : 0.0;
    const double lr = lr_at(global_step_, total_steps_,
                            static_cast<long long>(cfg_.warmup_epochs) * iters_per_epoch_,
                            cfg_.lr_init);

    for (Param<float>* p : params_) p->zero_grad();

    LossRecord rec;
    rec.step = global_step_;
    rec.lr = lr;

    const int lo = static_cast<int>(iter_in_epoch) * cfg_.batch_size;
    const int hi = std::min(samples, lo + cfg_.batch_size);
    const int batch = hi - lo;
    const float inv_batch = 1.0f / static_cast<float>(batch);

    for (int b = lo; b < hi; ++b) {
        const int item = dataset_->train_indices[static_cast<std::size_t>(
            order[static_cast<std::size_t>(b)])];
        const VideoClip& video = dataset_->clips[static_cast<std::size_t>(item)];
        const float mos =
            static_cast<float>(dataset_->records[static_cast<std::size_t>(item)].mos);

        const VideoClip view = training_view(
            video, global_step_ * static_cast<long long>(dataset_->size() + 1) + b);

        typename StudentModel<float>::Ctx sctx;
        const auto [h, y_s] = student_->forward(view, sctx);

        float reg_t = 0.0f, kd = 0.0f, sparse = 0.0f;
        typename Qam<float>::Ctx tctx;
        if (qam_) {
            qam_->forward(frozen_features(view), tctx);
            reg_t = smooth_l1(mos, tctx.y_t);
            kd = kd_loss(tctx.g, h, cfg_.distill_loss_kind);
            sparse = sparsity_loss(tctx.alpha);
        }
        const float reg_s = smooth_l1(mos, y_s);
        const LossBreakdown breakdown =
            total_loss(reg_s, reg_t, kd, sparse, cfg_.gamma, lambda_eff);
        if (!std::isfinite(breakdown.total))
            throw std::runtime_error("non-finite loss at step " + std::to_string(global_step_));

        rec.reg_s += breakdown.reg_s * inv_batch;
        rec.reg_t += breakdown.reg_t * inv_batch;
        rec.kd += breakdown.kd * inv_batch;
        rec.sparse += breakdown.sparse * inv_batch;
        rec.total += breakdown.total * inv_batch;

        // gradients, scaled so the step sees the batch mean
        const float dy_s = inv_batch * smooth_l1_grad(mos, y_s);
        std::vector<float> dh;
        if (qam_) {
            const float dy_t =
                inv_batch * static_cast<float>(cfg_.gamma) * smooth_l1_grad(mos, tctx.y_t);
            std::vector<float> dg;
            kd_loss_backward(tctx.g, h, cfg_.distill_loss_kind,
                             inv_batch * static_cast<float>(cfg_.gamma), dg, dh);
            std::vector<float> dalpha(static_cast<std::size_t>(qam_->n()),
                                      inv_batch * static_cast<float>(lambda_eff));
            qam_->backward(tctx, dy_t, std::move(dg), std::move(dalpha));
        }
        student_->backward(sctx, std::move(dh), dy_s);
    }

    optimizer_.step(lr);
    loss_log_.push_back(rec);
    ++global_step_;
    return true;
}

void Trainer::train() {
    while (step()) {
    }
}

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
}

void Trainer::save_checkpoint(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    io::write_magic(out, "ADQACKPT");
    io::write_u32(out, kCheckpointVersion);

    std::ostringstream cfg_text;
    write_train_config(cfg_text, cfg_);
    io::write_string(out, cfg_text.str());

    io::write_u32(out, static_cast<std::uint32_t>(pool_.size()));
    for (int i = 0; i < pool_.size(); ++i)
        io::write_u32(out, static_cast<std::uint32_t>(pool_.at(i).descriptor().out_dim));

    io::write_u32(out, static_cast<std::uint32_t>(params_.size()));
    for (const Param<float>* p : params_) {
        io::write_string(out, p->name);
        io::write_u32(out, static_cast<std::uint32_t>(p->value.shape.size()));
        for (int d : p->value.shape) io::write_u32(out, static_cast<std::uint32_t>(d));
        io::write_f32_array(out, p->value.ptr(), p->value.data.size());
    }

    // optimizer state: step counters then moment tensors in parameter order
    io::write_u64(out, static_cast<std::uint64_t>(global_step_));
    io::write_u64(out, static_cast<std::uint64_t>(const_cast<AdamW<float>&>(optimizer_).step_count()));
    auto& opt = const_cast<AdamW<float>&>(optimizer_);
    for (int i = 0; i < opt.param_count(); ++i) {
        io::write_f32_array(out, opt.first_moment(i).ptr(), opt.first_moment(i).data.size());
        io::write_f32_array(out, opt.second_moment(i).ptr(), opt.second_moment(i).data.size());
    }

    io::write_string(out, rng_.serialize());
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

std::unique_ptr<Trainer> Trainer::load_checkpoint(const std::string& path,
                                                  const SynthDataset& dataset,
                                                  ExtractorPool pool) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    if (!io::check_magic(in, "ADQACKPT"))
        throw std::runtime_error("not a checkpoint file: " + path);
    const std::uint32_t version = io::read_u32(in);
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

    std::istringstream cfg_text(io::read_string(in));
    const TrainConfig cfg = parse_train_config(cfg_text);

    const std::uint32_t pool_size = io::read_u32(in);
    if (static_cast<int>(pool_size) != pool.size())
        throw std::runtime_error("checkpoint expects a pool of " + std::to_string(pool_size) +
                                 " extractors");
    for (std::uint32_t i = 0; i < pool_size; ++i) {
        const std::uint32_t dim = io::read_u32(in);
        if (static_cast<int>(dim) != pool.at(static_cast<int>(i)).descriptor().out_dim)
            throw std::runtime_error("checkpoint extractor dims do not match the pool");
    }

    auto trainer = std::make_unique<Trainer>(cfg, dataset, std::move(pool));

    const std::uint32_t n_params = io::read_u32(in);
    if (n_params != trainer->params_.size())
        throw std::runtime_error("checkpoint parameter count mismatch");
    for (std::uint32_t i = 0; i < n_params; ++i) {
        Param<float>* p = trainer->params_[i];
        const std::string name = io::read_string(in);
        if (name != p->name)
            throw std::runtime_error("checkpoint parameter order mismatch at '" + name + "'");
        const std::uint32_t ndim = io::read_u32(in);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(io::read_u32(in));
        if (shape != p->value.shape)
            throw std::runtime_error("checkpoint shape mismatch for '" + name + "'");
        io::read_f32_array(in, p->value.ptr(), p->value.data.size());
    }

    trainer->global_step_ = static_cast<long long>(io::read_u64(in));
    trainer->optimizer_.set_step_count(static_cast<long long>(io::read_u64(in)));
    for (int i = 0; i < trainer->optimizer_.param_count(); ++i) {
        io::read_f32_array(in, trainer->optimizer_.first_moment(i).ptr(),
                           trainer->optimizer_.first_moment(i).data.size());
        io::read_f32_array(in, trainer->optimizer_.second_moment(i).ptr(),
                           trainer->optimizer_.second_moment(i).data.size());
    }
    trainer->rng_.deserialize(io::read_string(in));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return trainer;
}

}  // namespace adadqa
