#include "adadqa/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "adadqa/plot.hpp"

namespace adadqa {

namespace fs = std::filesystem;

std::vector<VideoClip> five_crop(const VideoClip& clip, int crop_size) {
    if (clip.h < crop_size || clip.w < crop_size)
        throw std::invalid_argument("five_crop: frame smaller than crop size");
    const int s = crop_size;
    const std::vector<std::pair<int, int>> anchors{
        {0, 0},
        {0, clip.w - s},
        {clip.h - s, 0},
        {clip.h - s, clip.w - s},
        {(clip.h - s) / 2, (clip.w - s) / 2},
    };
    std::vector<VideoClip> crops;
    crops.reserve(anchors.size());
    for (const auto& [y0, x0] : anchors) {
        VideoClip out = make_clip(clip.t, s, s, clip.source_id, clip.frame_rate);
        for (int k = 0; k < clip.t; ++k)
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x)
                    for (int c = 0; c < kChannels; ++c)
                        out.at(k, y, x, c) = clip.at(k, y0 + y, x0 + x, c);
        crops.push_back(std::move(out));
    }
    return crops;
}

VideoClip resize_short_side(const VideoClip& clip, int short_side) {
    const int cur_short = std::min(clip.h, clip.w);
    if (cur_short == short_side) return clip;
    const double scale = static_cast<double>(short_side) / cur_short;
    const int nh = clip.h <= clip.w ? short_side
                                    : static_cast<int>(std::lround(clip.h * scale));
    const int nw = clip.w <= clip.h ? short_side
                                    : static_cast<int>(std::lround(clip.w * scale));
    VideoClip out = make_clip(clip.t, nh, nw, clip.source_id, clip.frame_rate);
    for (int k = 0; k < clip.t; ++k)
        for (int y = 0; y < nh; ++y) {
            const double sy = std::clamp((y + 0.5) / (static_cast<double>(nh) / clip.h) - 0.5,
                                         0.0, static_cast<double>(clip.h - 1));
            const int y0 = static_cast<int>(sy);
            const int y1 = std::min(y0 + 1, clip.h - 1);
            const double wy = sy - y0;
            for (int x = 0; x < nw; ++x) {
                const double sx = std::clamp((x + 0.5) / (static_cast<double>(nw) / clip.w) - 0.5,
                                             0.0, static_cast<double>(clip.w - 1));
                const int x0 = static_cast<int>(sx);
                const int x1 = std::min(x0 + 1, clip.w - 1);
                const double wx = sx - x0;
                for (int c = 0; c < kChannels; ++c) {
                    const double v = clip.at(k, y0, x0, c) * (1 - wy) * (1 - wx) +
                                     clip.at(k, y0, x1, c) * (1 - wy) * wx +
                                     clip.at(k, y1, x0, c) * wy * (1 - wx) +
                                     clip.at(k, y1, x1, c) * wy * wx;
                    out.at(k, y, x, c) = static_cast<float>(v);
                }
            }
        }
    return out;
}

double multi_view_inference(const ClipScorer& scorer, const VideoClip& video,
                            const ViewPlan& plan, const SamplingPlan& sampling,
                            long long* forward_count) {
    if (plan.n_clips < 1) throw std::invalid_argument("multi_view_inference: n_clips < 1");
    if (plan.n_crops != 1 && plan.n_crops != 5)
        throw std::invalid_argument("multi_view_inference: n_crops must be 1 or 5");
    double total = 0.0;
    long long views = 0;
    for (int s = 0; s < plan.n_clips; ++s) {
        const int offset = static_cast<int>(static_cast<long long>(s) * video.t / plan.n_clips);
        const VideoClip sampled = sample_frames(video, sampling, offset);
        const VideoClip scaled = resize_short_side(sampled, plan.scale_short_side);
        std::vector<VideoClip> crops;
        if (plan.n_crops == 5) {
            crops = five_crop(scaled, plan.crop_size);
        } else {
            crops.push_back(center_crop(scaled, plan.crop_size));
        }
        for (const VideoClip& crop : crops) {
            total += scorer(crop);
            ++views;
        }
    }
    if (forward_count) *forward_count += views;
    return total / static_cast<double>(views);
}

double multi_view_inference(const StudentModel<float>& model, const VideoClip& video,
                            const ViewPlan& plan, const SamplingPlan& sampling,
                            long long* forward_count) {
    return multi_view_inference(
        [&model](const VideoClip& view) { return static_cast<double>(model.forward(view).second); },
        video, plan, sampling, forward_count);
}

EvalResult evaluate(const ClipScorer& scorer, const SynthDataset& dataset,
                    const std::vector<int>& test_indices, const ViewPlan& plan,
                    const SamplingPlan& sampling) {
    if (test_indices.empty()) throw std::invalid_argument("evaluate: empty test split");
    std::vector<double> predicted, labels;
    predicted.reserve(test_indices.size());
    labels.reserve(test_indices.size());
    for (int i : test_indices) {
        predicted.push_back(multi_view_inference(
            scorer, dataset.clips[static_cast<std::size_t>(i)], plan, sampling));
        labels.push_back(dataset.records[static_cast<std::size_t>(i)].mos);
    }
    EvalResult r;
    r.srcc = srcc(predicted, labels);
    r.plcc = plcc(predicted, labels);
    r.mean = mean_metric(r.srcc, r.plcc);
    r.split_seed = dataset.split_seed;
    r.dataset_id = dataset.dataset_id;
    return r;
}

EvalResult evaluate(const StudentModel<float>& model, const SynthDataset& dataset,
                    const std::vector<int>& test_indices, const ViewPlan& plan,
                    const SamplingPlan& sampling) {
    return evaluate(
        [&model](const VideoClip& view) { return static_cast<double>(model.forward(view).second); },
        dataset, test_indices, plan, sampling);
}

ViewPlan make_view_plan(const TrainConfig& cfg, int scale_short_side) {
    ViewPlan plan;
    plan.scale_short_side = scale_short_side;
    plan.crop_size = cfg.crop_size;
    return plan;
}

SamplingPlan make_sampling_plan(const TrainConfig& cfg) {
    SamplingPlan plan;
    plan.frame_count = cfg.frame_count;
    plan.frame_interval = cfg.frame_interval;
    plan.crop = SamplingPlan::Crop::kNone;  // the view plan does the cropping
    plan.crop_size = cfg.crop_size;
    return plan;
}

namespace {

EvalResult train_and_evaluate(const TrainConfig& cfg, SynthDataset& dataset,
                              const ExtractorPool& pool, int scale_short_side) {
    Trainer trainer(cfg, dataset, pool);
    trainer.train();
    return evaluate(trainer.student(), dataset, dataset.test_indices,
                    make_view_plan(cfg, scale_short_side), make_sampling_plan(cfg));
}

}  // namespace

RepeatOutcome run_repeated(const TrainConfig& cfg, SynthDataset& dataset,
                           const ExtractorPool& pool, int n_repeats, int scale_short_side) {
    if (n_repeats < 1) throw std::invalid_argument("run_repeated: n_repeats < 1");
    RepeatOutcome out;
    for (int r = 0; r < n_repeats; ++r) {
        const std::uint64_t split_seed = Rng::mix(cfg.seed, 0x2000ULL + static_cast<std::uint64_t>(r));
        split_dataset(dataset, split_seed);
        TrainConfig run_cfg = cfg;
        run_cfg.seed = Rng::mix(cfg.seed, 0x1000ULL + static_cast<std::uint64_t>(r));
        try {
            out.results.push_back(train_and_evaluate(run_cfg, dataset, pool, scale_short_side));
        } catch (const std::exception& e) {
            throw std::runtime_error("repeat " + std::to_string(r) + " failed: " + e.what());
        }
    }
    out.summary = aggregate_repeats(out.results);
    return out;
}

std::string to_string(AblationTable t) {
    switch (t) {
        case AblationTable::kExtractorCount: return "extractor_count";
        case AblationTable::kSingleExtractor: return "single_extractor";
        case AblationTable::kDistillLoss: return "distill_loss";
        case AblationTable::kGammaSweep: return "gamma_sweep";
        case AblationTable::kLambdaSweep: return "lambda_sweep";
        case AblationTable::kGatingStats: return "gating_stats";
    }
    throw std::logic_error("unreachable");
}

void write_report(std::ostream& out, const AblationReport& report) {
    out << std::setprecision(10);
    for (const AblationRow& row : report.rows) {
        out << "table=" << to_string(report.table_id) << " condition=\"" << row.condition
            << "\"";
        for (const auto& [key, value] : row.values) {
            out << " " << key << "=";
            if (std::isnan(value)) out << "-";
            else out << value;
        }
        out << "\n";
    }
}

void render_report(std::ostream& out, const AblationReport& report) {
    std::vector<std::string> columns;
    for (const AblationRow& row : report.rows)
        for (const auto& [key, _] : row.values)
            if (std::find(columns.begin(), columns.end(), key) == columns.end())
                columns.push_back(key);

    std::size_t cond_width = 9;
    for (const AblationRow& row : report.rows)
        cond_width = std::max(cond_width, row.condition.size());

    out << "# " << to_string(report.table_id) << "\n";
    out << std::left << std::setw(static_cast<int>(cond_width) + 2) << "condition";
    for (const std::string& c : columns) out << std::right << std::setw(12) << c;
    out << "\n";
    for (const AblationRow& row : report.rows) {
        out << std::left << std::setw(static_cast<int>(cond_width) + 2) << row.condition;
        for (const std::string& c : columns) {
            const auto it = std::find_if(row.values.begin(), row.values.end(),
                                         [&](const auto& kv) { return kv.first == c; });
            if (it == row.values.end() || std::isnan(it->second))
                out << std::right << std::setw(12) << "-";
            else
                out << std::right << std::setw(12) << std::fixed << std::setprecision(4)
                    << it->second << std::defaultfloat;
        }
        out << "\n";
    }
}

AblationReport ablate_extractor_count(const TrainConfig& cfg, SynthDataset& dataset,
                                      const ExtractorPool& pool, const std::vector<int>& counts,
                                      const std::vector<bool>& sparsity_flags,
                                      int scale_short_side) {
    AblationReport report{AblationTable::kExtractorCount, {}};
    for (bool sparsity : sparsity_flags) {
        for (int count : counts) {
            if (count < 1 || count > pool.size())
                throw std::invalid_argument("ablate_extractor_count: count " +
                                            std::to_string(count) + " exceeds the pool");
            // seeded random subset: remove pool.size()-count extractors
            Rng rng(Rng::mix(cfg.seed, 0xAB1A7E0000ULL + static_cast<std::uint64_t>(count) * 2 +
                                           (sparsity ? 1 : 0)));
            std::vector<int> indices = rng.permutation(pool.size());
            indices.resize(static_cast<std::size_t>(count));
            std::sort(indices.begin(), indices.end());  // keep pool order

            TrainConfig run_cfg = cfg;
            run_cfg.n_extractors = count;
            run_cfg.sparsity_enabled = sparsity;
            const EvalResult r =
                train_and_evaluate(run_cfg, dataset, pool.subset(indices), scale_short_side);

            AblationRow row;
            std::ostringstream cond;
            cond << count << (sparsity ? " with-sparsity" : " no-sparsity");
            row.condition = cond.str();
            row.values = {{"srcc", r.srcc}, {"plcc", r.plcc}};
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

AblationReport ablate_single_extractor(const TrainConfig& cfg, SynthDataset& dataset,
                                       const ExtractorPool& pool, int scale_short_side) {
    AblationReport report{AblationTable::kSingleExtractor, {}};
    {
        // no-teacher baseline: gamma = 0, no sparsity, empty pool
        TrainConfig run_cfg = cfg;
        run_cfg.gamma = 0.0;
        run_cfg.sparsity_enabled = false;
        const EvalResult r =
            train_and_evaluate(run_cfg, dataset, ExtractorPool{}, scale_short_side);
        report.rows.push_back({"w/o", {{"srcc", r.srcc}, {"plcc", r.plcc}}});
    }
    for (int i = 0; i < pool.size(); ++i) {
        TrainConfig run_cfg = cfg;
        run_cfg.n_extractors = 1;
        const EvalResult r =
            train_and_evaluate(run_cfg, dataset, pool.subset({i}), scale_short_side);
        report.rows.push_back({pool.at(i).name(), {{"srcc", r.srcc}, {"plcc", r.plcc}}});
    }
    return report;
}

AblationReport ablate_distill_loss(const TrainConfig& cfg, SynthDataset& dataset,
                                   const ExtractorPool& pool, int scale_short_side) {
    AblationReport report{AblationTable::kDistillLoss, {}};
    for (DistillLossKind kind :
         {DistillLossKind::kL2, DistillLossKind::kL1, DistillLossKind::kJs}) {
        TrainConfig run_cfg = cfg;
        run_cfg.distill_loss_kind = kind;
        const EvalResult r = train_and_evaluate(run_cfg, dataset, pool, scale_short_side);
        report.rows.push_back({to_string(kind), {{"srcc", r.srcc}, {"plcc", r.plcc}}});
    }
    return report;
}

std::pair<AblationReport, AblationReport> ablate_hyperparams(
    const TrainConfig& cfg, SynthDataset& dataset, const ExtractorPool& pool,
    const std::vector<double>& gammas, const std::vector<double>& lambdas,
    int scale_short_side) {
    AblationReport gamma_report{AblationTable::kGammaSweep, {}};
    for (double gamma : gammas) {
        TrainConfig run_cfg = cfg;
        run_cfg.gamma = gamma;
        const EvalResult r = train_and_evaluate(run_cfg, dataset, pool, scale_short_side);
        std::ostringstream cond;
        cond << "gamma=" << gamma;
        gamma_report.rows.push_back({cond.str(), {{"srcc", r.srcc}, {"plcc", r.plcc}}});
    }
    AblationReport lambda_report{AblationTable::kLambdaSweep, {}};
    for (double lambda : lambdas) {
        TrainConfig run_cfg = cfg;
        run_cfg.lambda_ = lambda;
        const EvalResult r = train_and_evaluate(run_cfg, dataset, pool, scale_short_side);
        std::ostringstream cond;
        cond << "lambda=" << lambda;
        lambda_report.rows.push_back({cond.str(), {{"srcc", r.srcc}, {"plcc", r.plcc}}});
    }
    return {std::move(gamma_report), std::move(lambda_report)};
}

AblationReport gating_stats(const Trainer& trainer, const SynthDataset& dataset,
                            double mos_threshold) {
    if (!trainer.has_teacher())
        throw std::invalid_argument("gating_stats: the trainer has no gating network");
    const int n = trainer.pool().size();
    std::vector<double> lq_sum(static_cast<std::size_t>(n), 0.0);
    std::vector<double> hq_sum(static_cast<std::size_t>(n), 0.0);
    int lq_count = 0, hq_count = 0;
    for (int i = 0; i < dataset.size(); ++i) {
        const double mos = dataset.records[static_cast<std::size_t>(i)].mos;
        const std::vector<double> alpha =
            trainer.gate_weights(dataset.clips[static_cast<std::size_t>(i)]);
        if (mos < mos_threshold) {
            for (int j = 0; j < n; ++j) lq_sum[static_cast<std::size_t>(j)] += alpha[static_cast<std::size_t>(j)];
            ++lq_count;
        } else if (mos > mos_threshold) {
            for (int j = 0; j < n; ++j) hq_sum[static_cast<std::size_t>(j)] += alpha[static_cast<std::size_t>(j)];
            ++hq_count;
        }
    }
    AblationReport report{AblationTable::kGatingStats, {}};
    for (int j = 0; j < n; ++j) {
        AblationRow row;
        row.condition = trainer.pool().at(j).name();
        row.values = {
            {"alpha_lq", lq_count > 0 ? lq_sum[static_cast<std::size_t>(j)] / lq_count
                                      : std::nan("")},
            {"alpha_hq", hq_count > 0 ? hq_sum[static_cast<std::size_t>(j)] / hq_count
                                      : std::nan("")},
        };
        report.rows.push_back(std::move(row));
    }
    return report;
}

AblationReport fig3_analysis(const ExtractorPool& pool,
                             const std::vector<DistortionKind>& kinds,
                             const std::vector<double>& degrees, const std::string& out_dir) {
    AblationReport out{AblationTable::kExtractorCount, {}};
    std::map<DistortionKind, std::vector<PlotSeries>> plots;
    for (int i = 0; i < pool.size(); ++i) {
        const Extractor& e = pool.at(i);
        AblationRow row;
        row.condition = e.name();
        for (DistortionKind kind : kinds) {
            double rho;
            const std::vector<double> responses = distortion_response_values(e, kind, degrees);
            try {
                rho = distortion_response_curve(e, kind, degrees);
            } catch (const std::invalid_argument&) {
                rho = std::nan("");
            }
            row.values.emplace_back(to_string(kind), rho);

            // normalized response curve for the per-kind plot
            double lo = responses[0], hi = responses[0];
            for (double v : responses) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            PlotSeries series;
            series.name = e.name();
            for (double v : responses)
                series.y.push_back(hi > lo ? (v - lo) / (hi - lo) : 0.5);
            plots[kind].push_back(std::move(series));
        }
        out.rows.push_back(std::move(row));
    }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        for (const auto& [kind, series] : plots)
            write_line_plot((fs::path(out_dir) / ("fig3_" + to_string(kind) + ".bmp")).string(),
                            degrees, series);
    }
    return out;
}

}  // namespace adadqa
