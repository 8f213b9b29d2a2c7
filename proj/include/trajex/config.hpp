#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "trajex/errors.hpp"

namespace trajex {

struct BackendConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model_id = "gpt-4o";
    double timeout_s = 60.0;
    int max_retries = 3;
    int retry_base_ms = 500;
    int max_keypoints = 32;
};

// Every pipeline tunable. Defaults for resize/window/stride follow the
// experimental protocol this tool implements; tracker defaults are standard
// pyramidal least-squares practice.
struct PipelineConfig {
    int resize_w = 256;
    int resize_h = 256;
    int window_size = 64;
    int stride = 1;  // fixed at 1 in v1

    int win_radius = 7;
    int pyramid_levels = 3;
    int max_iters = 30;
    double epsilon = 0.01;   // px
    double min_eig = 1e-4;   // per-pixel structure tensor eigenvalue gate

    double fb_threshold = 2.0;         // px
    double min_reliable_fraction = 0.5;
    int max_gap = 5;                   // frames
    int smooth_radius = 0;             // 0 = smoothing disabled
    int resample_count = 64;
    int trail_len = 12;                // overlay trail length, frames

    int seed_probe_stride = 4;
    std::optional<int> seed_frame_override;

    std::string prompt_template = "grasp_v1";
    std::string task = "manipulation task";
    std::string wrist_label = "wrist";

    BackendConfig backend;

    void check_invariants() const {
        auto bad = [](const std::string& key, const std::string& why) {
            throw Error(ErrorCode::InvalidValue, key + ": " + why);
        };
        if (resize_w < 32 || resize_h < 32) bad("resize_w/resize_h", "must be >= 32");
        if (window_size < 1) bad("window_size", "must be >= 1");
        if (stride != 1) bad("stride", "only stride 1 is supported in v1");
        if (win_radius < 1) bad("win_radius", "must be >= 1");
        if (pyramid_levels < 1) bad("pyramid_levels", "must be >= 1");
        if (max_iters < 1) bad("max_iters", "must be >= 1");
        if (!(epsilon > 0.0)) bad("epsilon", "must be > 0");
        if (min_eig < 0.0) bad("min_eig", "must be >= 0");
        if (fb_threshold < 0.0) bad("fb_threshold", "must be >= 0");
        if (min_reliable_fraction < 0.0 || min_reliable_fraction > 1.0)
            bad("min_reliable_fraction", "must be in [0,1]");
        if (max_gap < 0) bad("max_gap", "must be >= 0");
        if (smooth_radius < 0) bad("smooth_radius", "must be >= 0");
        if (resample_count < 2) bad("resample_count", "must be >= 2");
        if (trail_len < 1) bad("trail_len", "must be >= 1");
        if (seed_probe_stride < 1) bad("seed_probe_stride", "must be >= 1");
        if (seed_frame_override && *seed_frame_override < 0)
            bad("seed_frame_override", "must be >= 0");
        if (wrist_label.empty()) bad("wrist_label", "must be non-empty");
        if (backend.timeout_s <= 0.0) bad("backend.timeout_s", "must be > 0");
        if (backend.max_retries < 0) bad("backend.max_retries", "must be >= 0");
        if (backend.retry_base_ms < 0) bad("backend.retry_base_ms", "must be >= 0");
        if (backend.max_keypoints < 1) bad("backend.max_keypoints", "must be >= 1");
    }
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// Canonical text form: fixed key order, 17-significant-digit floats.
// Input to config_hash and to the bundle provenance block.
inline std::string canonical_config_string(const PipelineConfig& c) {
    std::ostringstream s;
    using detail::fmt_double;
    s << "resize_w=" << c.resize_w << "\n"
      << "resize_h=" << c.resize_h << "\n"
      << "window_size=" << c.window_size << "\n"
      << "stride=" << c.stride << "\n"
      << "win_radius=" << c.win_radius << "\n"
      << "pyramid_levels=" << c.pyramid_levels << "\n"
      << "max_iters=" << c.max_iters << "\n"
      << "epsilon=" << fmt_double(c.epsilon) << "\n"
      << "min_eig=" << fmt_double(c.min_eig) << "\n"
      << "fb_threshold=" << fmt_double(c.fb_threshold) << "\n"
      << "min_reliable_fraction=" << fmt_double(c.min_reliable_fraction) << "\n"
      << "max_gap=" << c.max_gap << "\n"
      << "smooth_radius=" << c.smooth_radius << "\n"
      << "resample_count=" << c.resample_count << "\n"
      << "trail_len=" << c.trail_len << "\n"
      << "seed_probe_stride=" << c.seed_probe_stride << "\n"
      << "seed_frame_override="
      << (c.seed_frame_override ? std::to_string(*c.seed_frame_override) : "none") << "\n"
      << "prompt_template=" << c.prompt_template << "\n"
      << "task=" << c.task << "\n"
      << "wrist_label=" << c.wrist_label << "\n"
      << "backend.base_url=" << c.backend.base_url << "\n"
      << "backend.model_id=" << c.backend.model_id << "\n"
      << "backend.timeout_s=" << fmt_double(c.backend.timeout_s) << "\n"
      << "backend.max_retries=" << c.backend.max_retries << "\n"
      << "backend.retry_base_ms=" << c.backend.retry_base_ms << "\n"
      << "backend.max_keypoints=" << c.backend.max_keypoints << "\n";
    return s.str();
}

inline std::string config_hash(const PipelineConfig& c) {
    // FNV-1a 64 over the canonical form.
    uint64_t h = 1469598103934665603ULL;
    for (char ch : canonical_config_string(c)) {
        h ^= static_cast<uint8_t>(ch);
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

inline std::string strip(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

inline int parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        int r = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidValue, key + ": expected integer, got '" + v + "'");
    }
}

inline double parse_dbl(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidValue, key + ": expected number, got '" + v + "'");
    }
}

}  // namespace detail

// key = value lines, '#' comments, one optional [backend] section.
// Unknown keys are rejected; missing keys keep defaults.
inline PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::strip(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw Error(ErrorCode::ConfigParse,
                            "line " + std::to_string(lineno) + ": unterminated section header");
            section = detail::strip(line.substr(1, line.size() - 2));
            if (section != "backend")
                throw Error(ErrorCode::UnknownKey, "section [" + section + "]");
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ConfigParse,
                        "line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::strip(line.substr(0, eq));
        std::string val = detail::unquote(detail::strip(line.substr(eq + 1)));
        std::string full = section.empty() ? key : section + "." + key;
        using detail::parse_dbl;
        using detail::parse_int;
        if (full == "resize_w") cfg.resize_w = parse_int(full, val);
        else if (full == "resize_h") cfg.resize_h = parse_int(full, val);
        else if (full == "window_size") cfg.window_size = parse_int(full, val);
        else if (full == "stride") cfg.stride = parse_int(full, val);
        else if (full == "win_radius") cfg.win_radius = parse_int(full, val);
        else if (full == "pyramid_levels") cfg.pyramid_levels = parse_int(full, val);
        else if (full == "max_iters") cfg.max_iters = parse_int(full, val);
        else if (full == "epsilon") cfg.epsilon = parse_dbl(full, val);
        else if (full == "min_eig") cfg.min_eig = parse_dbl(full, val);
        else if (full == "fb_threshold") cfg.fb_threshold = parse_dbl(full, val);
        else if (full == "min_reliable_fraction") cfg.min_reliable_fraction = parse_dbl(full, val);
        else if (full == "max_gap") cfg.max_gap = parse_int(full, val);
        else if (full == "smooth_radius") cfg.smooth_radius = parse_int(full, val);
        else if (full == "resample_count") cfg.resample_count = parse_int(full, val);
        else if (full == "trail_len") cfg.trail_len = parse_int(full, val);
        else if (full == "seed_probe_stride") cfg.seed_probe_stride = parse_int(full, val);
        else if (full == "seed_frame_override") cfg.seed_frame_override = parse_int(full, val);
        else if (full == "prompt_template") cfg.prompt_template = val;
        else if (full == "task") cfg.task = val;
        else if (full == "wrist_label") cfg.wrist_label = val;
        else if (full == "backend.base_url") cfg.backend.base_url = val;
        else if (full == "backend.model_id") cfg.backend.model_id = val;
        else if (full == "backend.timeout_s") cfg.backend.timeout_s = parse_dbl(full, val);
        else if (full == "backend.max_retries") cfg.backend.max_retries = parse_int(full, val);
        else if (full == "backend.retry_base_ms") cfg.backend.retry_base_ms = parse_int(full, val);
        else if (full == "backend.max_keypoints") cfg.backend.max_keypoints = parse_int(full, val);
        else throw Error(ErrorCode::UnknownKey, full);
    }
    cfg.check_invariants();
    return cfg;
}

inline PipelineConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, path + ": cannot open config");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace trajex
