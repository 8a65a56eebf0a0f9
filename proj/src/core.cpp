#include "adadqa/core.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace adadqa {

void VideoClip::validate() const {
    if (t < 1) throw std::invalid_argument("VideoClip: t must be >= 1");
    if (h < 32 || w < 32) throw std::invalid_argument("VideoClip: h and w must be >= 32");
    if (pixels.size() != pixel_count())
        throw std::invalid_argument("VideoClip: pixel buffer size does not match t*h*w*3");
    for (float p : pixels) {
        if (!(p >= 0.0f && p <= 1.0f))
            throw std::invalid_argument("VideoClip: pixel values must lie in [0, 1]");
    }
}

VideoClip make_clip(int t, int h, int w, std::string source_id, double frame_rate) {
    if (t < 1 || h < 1 || w < 1) throw std::invalid_argument("make_clip: nonpositive dimensions");
    VideoClip clip;
    clip.t = t;
    clip.h = h;
    clip.w = w;
    clip.frame_rate = frame_rate;
    clip.source_id = std::move(source_id);
    clip.pixels.assign(clip.pixel_count(), 0.0f);
    return clip;
}

double normalize_mos(double raw, double raw_lo, double raw_hi) {
    if (!(raw_lo < raw_hi)) throw std::invalid_argument("normalize_mos: raw_lo must be < raw_hi");
    if (raw < raw_lo || raw > raw_hi)
        throw std::invalid_argument("normalize_mos: raw score outside its declared range");
    return 1.0 + 4.0 * (raw - raw_lo) / (raw_hi - raw_lo);
}

std::string to_string(DistillLossKind kind) {
    switch (kind) {
        case DistillLossKind::kL2: return "l2";
        case DistillLossKind::kL1: return "l1";
        case DistillLossKind::kJs: return "js";
    }
    throw std::logic_error("unreachable");
}

DistillLossKind distill_loss_from_string(const std::string& s) {
    if (s == "l2") return DistillLossKind::kL2;
    if (s == "l1") return DistillLossKind::kL1;
    if (s == "js") return DistillLossKind::kJs;
    throw std::invalid_argument("distill_loss must be one of l2|l1|js, got '" + s + "'");
}

TrainConfig validate_config(const TrainConfig& cfg) {
    if (cfg.gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
    if (cfg.lambda_ < 0.0) throw std::invalid_argument("lambda must be >= 0");
    if (cfg.d < 1) throw std::invalid_argument("d must be >= 1");
    if (cfg.n_extractors < 1) throw std::invalid_argument("n_extractors must be >= 1");
    if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (cfg.warmup_epochs < 0) throw std::invalid_argument("warmup_epochs must be >= 0");
    if (cfg.warmup_epochs >= cfg.epochs)
        throw std::invalid_argument("warmup_epochs must be < epochs");
    if (cfg.lr_init <= 0.0) throw std::invalid_argument("lr_init must be > 0");
    if (cfg.weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (cfg.frame_count < 1) throw std::invalid_argument("frame_count must be >= 1");
    if (cfg.frame_interval < 1) throw std::invalid_argument("frame_interval must be >= 1");
    if (cfg.crop_size < 32) throw std::invalid_argument("crop_size must be >= 32");
    return cfg;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': expected integer, got '" + v + "'");
    }
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': expected number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': expected unsigned integer, got '" +
                                    v + "'");
    }
}

}  // namespace

TrainConfig parse_train_config(std::istream& in) {
    TrainConfig cfg;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section != "model" && section != "loss" && section != "optim" &&
                section != "sampling")
                throw std::invalid_argument("unknown config section '" + section + "'");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        const std::string qual = section.empty() ? key : section + "." + key;

        if (qual == "model.n_extractors") cfg.n_extractors = parse_int(qual, value);
        else if (qual == "model.d") cfg.d = parse_int(qual, value);
        else if (qual == "loss.gamma") cfg.gamma = parse_real(qual, value);
        else if (qual == "loss.lambda") cfg.lambda_ = parse_real(qual, value);
        else if (qual == "loss.sparsity_enabled") cfg.sparsity_enabled = parse_bool(qual, value);
        else if (qual == "loss.distill_loss") cfg.distill_loss_kind = distill_loss_from_string(value);
        else if (qual == "optim.epochs") cfg.epochs = parse_int(qual, value);
        else if (qual == "optim.warmup_epochs") cfg.warmup_epochs = parse_int(qual, value);
        else if (qual == "optim.lr_init") cfg.lr_init = parse_real(qual, value);
        else if (qual == "optim.weight_decay") cfg.weight_decay = parse_real(qual, value);
        else if (qual == "optim.batch_size") cfg.batch_size = parse_int(qual, value);
        else if (qual == "optim.seed") cfg.seed = parse_u64(qual, value);
        else if (qual == "sampling.frame_count") cfg.frame_count = parse_int(qual, value);
        else if (qual == "sampling.frame_interval") cfg.frame_interval = parse_int(qual, value);
        else if (qual == "sampling.crop_size") cfg.crop_size = parse_int(qual, value);
        else throw std::invalid_argument("unknown config key '" + qual + "'");
    }
    return validate_config(cfg);
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse_train_config(in);
}

void write_train_config(std::ostream& out, const TrainConfig& cfg) {
    out << std::setprecision(17);
    out << "[model]\n";
    out << "n_extractors = " << cfg.n_extractors << "\n";
    out << "d = " << cfg.d << "\n";
    out << "[loss]\n";
    out << "gamma = " << cfg.gamma << "\n";
    out << "lambda = " << cfg.lambda_ << "\n";
    out << "sparsity_enabled = " << (cfg.sparsity_enabled ? "true" : "false") << "\n";
    out << "distill_loss = " << to_string(cfg.distill_loss_kind) << "\n";
    out << "[optim]\n";
    out << "epochs = " << cfg.epochs << "\n";
    out << "warmup_epochs = " << cfg.warmup_epochs << "\n";
    out << "lr_init = " << cfg.lr_init << "\n";
    out << "weight_decay = " << cfg.weight_decay << "\n";
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "[sampling]\n";
    out << "frame_count = " << cfg.frame_count << "\n";
    out << "frame_interval = " << cfg.frame_interval << "\n";
    out << "crop_size = " << cfg.crop_size << "\n";
}

void save_train_config(const std::string& path, const TrainConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config file: " + path);
    write_train_config(out, cfg);
}

}  // namespace adadqa
