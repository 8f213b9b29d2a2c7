#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajex/bidi.hpp"
#include "trajex/config.hpp"
#include "trajex/errors.hpp"
#include "trajex/image_io.hpp"
#include "trajex/parallel.hpp"
#include "trajex/postprocess.hpp"
#include "trajex/tracker.hpp"

namespace trajex {

constexpr int kBundleSchemaVersion = 1;

// Per-track cycle-consistency summary carried in the bundle provenance
// block. Infinite per-frame errors are summarized as hidden-frame counts so
// the document stays strictly JSON.
struct CycleSummary {
    std::string label;
    double reliable_fraction = 0.0;
    double mean_fb_error = 0.0;  // over finite errors
    double max_fb_error = 0.0;
    int unreliable_frames = 0;
};

struct ErrorReport {
    std::string stage;
    std::string code;
    std::string message;
};

struct TrajectoryBundle {
    int schema_version = kBundleSchemaVersion;
    std::string source_id;
    int width = 0;
    int height = 0;
    int frame_count = 0;
    std::optional<double> fps;
    ProposalResult proposal;
    std::vector<Track> tracks;
    std::vector<CycleSummary> cycle_report;
    std::optional<EndEffectorTrajectory> end_effector;
    std::string config_hash;
    std::vector<std::string> stages;
    std::optional<ErrorReport> error;

    void check_invariants() const {
        if (schema_version != kBundleSchemaVersion)
            throw Error(ErrorCode::SchemaVersionUnsupported, std::to_string(schema_version));
        for (const auto& t : tracks) t.check_invariants(frame_count);
        if (end_effector) end_effector->check_invariants();
    }
};

inline std::vector<CycleSummary> summarize_cycle_report(const CycleReport& report) {
    std::vector<CycleSummary> out;
    for (const auto& t : report.tracks) {
        CycleSummary s;
        s.label = t.label;
        s.reliable_fraction = t.reliable_fraction;
        double sum = 0.0;
        int finite = 0;
        for (size_t i = 0; i < t.fb_error.size(); ++i) {
            if (std::isfinite(t.fb_error[i])) {
                sum += t.fb_error[i];
                s.max_fb_error = std::max(s.max_fb_error, t.fb_error[i]);
                ++finite;
            }
            if (!t.reliable[i]) ++s.unreliable_frames;
        }
        s.mean_fb_error = finite > 0 ? sum / finite : 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

namespace detail {

// Canonical dump: nlohmann's object_t is std::map, so keys come out sorted;
// floats are written with 17 significant digits to round-trip binary64.
inline void canonical_dump(const nlohmann::json& j, std::string& out) {
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            out.push_back('{');
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out.push_back(',');
                first = false;
                out += nlohmann::json(it.key()).dump();
                out.push_back(':');
                canonical_dump(it.value(), out);
            }
            out.push_back('}');
            break;
        }
        case nlohmann::json::value_t::array: {
            out.push_back('[');
            bool first = true;
            for (const auto& v : j) {
                if (!first) out.push_back(',');
                first = false;
                canonical_dump(v, out);
            }
            out.push_back(']');
            break;
        }
        case nlohmann::json::value_t::number_float: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", j.get<double>());
            out += buf;
            break;
        }
        default:
            out += j.dump();
    }
}

inline nlohmann::json keypoint_to_json(const Keypoint& kp) {
    return {{"label", kp.label},
            {"category", category_name(kp.category)},
            {"x", kp.pos.x},
            {"y", kp.pos.y},
            {"confidence", kp.confidence}};
}

inline nlohmann::json track_to_json(const Track& t) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : t.points)
        points.push_back({{"x", p.pos.x},
                          {"y", p.pos.y},
                          {"visible", p.visible},
                          {"confidence", p.confidence},
                          {"residual", p.residual},
                          {"source", track_source_name(p.source)}});
    return {{"label", t.label},
            {"category", category_name(t.category)},
            {"seed_frame", t.seed_frame},
            {"dropped", t.dropped},
            {"drop_reason", t.drop_reason},
            {"points", std::move(points)}};
}

}  // namespace detail

inline nlohmann::json bundle_to_json(const TrajectoryBundle& b) {
    nlohmann::json kps = nlohmann::json::array();
    for (const auto& kp : b.proposal.keypoints) kps.push_back(detail::keypoint_to_json(kp));
    nlohmann::json tracks = nlohmann::json::array();
    for (const auto& t : b.tracks) tracks.push_back(detail::track_to_json(t));
    nlohmann::json report = nlohmann::json::array();
    for (const auto& s : b.cycle_report)
        report.push_back({{"label", s.label},
                          {"reliable_fraction", s.reliable_fraction},
                          {"mean_fb_error", s.mean_fb_error},
                          {"max_fb_error", s.max_fb_error},
                          {"unreliable_frames", s.unreliable_frames}});
    nlohmann::json j = {
        {"schema_version", b.schema_version},
        {"source_id", b.source_id},
        {"width", b.width},
        {"height", b.height},
        {"frame_count", b.frame_count},
        {"fps", b.fps ? nlohmann::json(*b.fps) : nlohmann::json(nullptr)},
        {"proposal",
         {{"frame_index", b.proposal.frame_index},
          {"model_id", b.proposal.model_id},
          {"prompt_id", b.proposal.prompt_id},
          {"raw_response", b.proposal.raw_response},
          {"keypoints", std::move(kps)}}},
        {"tracks", std::move(tracks)},
        {"cycle_report", std::move(report)},
        {"config_hash", b.config_hash},
        {"stages", b.stages},
    };
    if (b.end_effector) {
        nlohmann::json samples = nlohmann::json::array();
        for (const auto& s : b.end_effector->samples)
            samples.push_back({{"t_norm", s.t_norm},
                               {"x_norm", s.x_norm},
                               {"y_norm", s.y_norm},
                               {"visible", s.visible}});
        j["end_effector"] = {{"source_label", b.end_effector->source_label},
                             {"samples", std::move(samples)}};
    } else {
        j["end_effector"] = nullptr;
    }
    if (b.error) {
        j["error"] = {{"stage", b.error->stage},
                      {"code", b.error->code},
                      {"message", b.error->message}};
    } else {
        j["error"] = nullptr;
    }
    return j;
}

inline TrajectoryBundle bundle_from_json(const nlohmann::json& j) {
    TrajectoryBundle b;
    try {
        b.schema_version = j.at("schema_version").get<int>();
        if (b.schema_version != kBundleSchemaVersion)
            throw Error(ErrorCode::SchemaVersionUnsupported, std::to_string(b.schema_version));
        b.source_id = j.at("source_id").get<std::string>();
        b.width = j.at("width").get<int>();
        b.height = j.at("height").get<int>();
        b.frame_count = j.at("frame_count").get<int>();
        if (!j.at("fps").is_null()) b.fps = j.at("fps").get<double>();
        const auto& pj = j.at("proposal");
        b.proposal.frame_index = pj.at("frame_index").get<int>();
        b.proposal.model_id = pj.at("model_id").get<std::string>();
        b.proposal.prompt_id = pj.at("prompt_id").get<std::string>();
        b.proposal.raw_response = pj.at("raw_response").get<std::string>();
        for (const auto& kj : pj.at("keypoints")) {
            Keypoint kp;
            kp.label = kj.at("label").get<std::string>();
            kp.category = category_from_name(kj.at("category").get<std::string>());
            kp.pos = {kj.at("x").get<double>(), kj.at("y").get<double>()};
            kp.confidence = kj.at("confidence").get<double>();
            b.proposal.keypoints.push_back(std::move(kp));
        }
        for (const auto& tj : j.at("tracks")) {
            Track t;
            t.label = tj.at("label").get<std::string>();
            t.category = category_from_name(tj.at("category").get<std::string>());
            t.seed_frame = tj.at("seed_frame").get<int>();
            t.dropped = tj.at("dropped").get<bool>();
            t.drop_reason = tj.at("drop_reason").get<std::string>();
            int f = 0;
            for (const auto& pjt : tj.at("points")) {
                TrackPoint p;
                p.frame_index = f++;
                p.pos = {pjt.at("x").get<double>(), pjt.at("y").get<double>()};
                p.visible = pjt.at("visible").get<bool>();
                p.confidence = pjt.at("confidence").get<double>();
                p.residual = pjt.at("residual").get<double>();
                p.source = track_source_from_name(pjt.at("source").get<std::string>());
                t.points.push_back(p);
            }
            b.tracks.push_back(std::move(t));
        }
        for (const auto& sj : j.at("cycle_report")) {
            CycleSummary s;
            s.label = sj.at("label").get<std::string>();
            s.reliable_fraction = sj.at("reliable_fraction").get<double>();
            s.mean_fb_error = sj.at("mean_fb_error").get<double>();
            s.max_fb_error = sj.at("max_fb_error").get<double>();
            s.unreliable_frames = sj.at("unreliable_frames").get<int>();
            b.cycle_report.push_back(std::move(s));
        }
        if (!j.at("end_effector").is_null()) {
            EndEffectorTrajectory ee;
            ee.source_label = j.at("end_effector").at("source_label").get<std::string>();
            for (const auto& sj : j.at("end_effector").at("samples")) {
                EndEffectorSample s;
                s.t_norm = sj.at("t_norm").get<double>();
                s.x_norm = sj.at("x_norm").get<double>();
                s.y_norm = sj.at("y_norm").get<double>();
                s.visible = sj.at("visible").get<bool>();
                ee.samples.push_back(s);
            }
            b.end_effector = std::move(ee);
        }
        if (!j.at("error").is_null()) {
            ErrorReport e;
            e.stage = j.at("error").at("stage").get<std::string>();
            e.code = j.at("error").at("code").get<std::string>();
            e.message = j.at("error").at("message").get<std::string>();
            b.error = std::move(e);
        }
        b.config_hash = j.at("config_hash").get<std::string>();
        b.stages = j.at("stages").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvariantViolation, std::string("bundle document: ") + e.what());
    }
    b.check_invariants();
    return b;
}

inline std::string serialize_bundle(const TrajectoryBundle& b) {
    std::string out;
    detail::canonical_dump(bundle_to_json(b), out);
    out.push_back('\n');
    return out;
}

inline void save_bundle(const TrajectoryBundle& b, const std::string& path) {
    b.check_invariants();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, path + ": cannot open for write");
    std::string doc = serialize_bundle(b);
    out.write(doc.data(), static_cast<std::streamsize>(doc.size()));
    if (!out) throw Error(ErrorCode::Io, path + ": short write");
}

inline TrajectoryBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, path + ": cannot open");
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw Error(ErrorCode::InvariantViolation, path + ": not valid JSON");
    return bundle_from_json(j);
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// One row per (track, frame), RFC 4180.
inline void export_csv(const TrajectoryBundle& b, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, path + ": cannot open for write");
    out << "label,category,frame,x,y,visible,source,confidence\r\n";
    for (const auto& t : b.tracks) {
        for (const auto& p : t.points) {
            out << detail::csv_field(t.label) << ',' << category_name(t.category) << ','
                << p.frame_index << ',' << detail::csv_double(p.pos.x) << ','
                << detail::csv_double(p.pos.y) << ',' << (p.visible ? "true" : "false") << ','
                << track_source_name(p.source) << ',' << detail::csv_double(p.confidence)
                << "\r\n";
        }
    }
    if (!out) throw Error(ErrorCode::Io, path + ": short write");
}

inline void export_end_effector_csv(const EndEffectorTrajectory& traj, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, path + ": cannot open for write");
    out << "t_norm,x_norm,y_norm,visible\r\n";
    for (const auto& s : traj.samples)
        out << detail::csv_double(s.t_norm) << ',' << detail::csv_double(s.x_norm) << ','
            << detail::csv_double(s.y_norm) << ',' << (s.visible ? "true" : "false") << "\r\n";
    if (!out) throw Error(ErrorCode::Io, path + ": short write");
}

namespace detail {

struct Rgb {
    float r, g, b;
};

inline Rgb category_color(Category c) {
    switch (c) {
        case Category::Hand: return {1.0f, 0.0f, 0.0f};
        case Category::Tool: return {0.0f, 0.0f, 1.0f};
        case Category::Object: return {0.0f, 1.0f, 0.0f};
    }
    return {1.0f, 1.0f, 1.0f};
}

inline void blend_px(Frame& img, int x, int y, Rgb c, float alpha) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    size_t i = (static_cast<size_t>(y) * img.width + x) * 3;
    img.rgb[i] = img.rgb[i] * (1.0f - alpha) + c.r * alpha;
    img.rgb[i + 1] = img.rgb[i + 1] * (1.0f - alpha) + c.g * alpha;
    img.rgb[i + 2] = img.rgb[i + 2] * (1.0f - alpha) + c.b * alpha;
}

inline void draw_disc(Frame& img, double cx, double cy, int radius, Rgb c) {
    int x0 = static_cast<int>(std::floor(cx)) - radius, x1 = static_cast<int>(std::ceil(cx)) + radius;
    int y0 = static_cast<int>(std::floor(cy)) - radius, y1 = static_cast<int>(std::ceil(cy)) + radius;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius)
                blend_px(img, x, y, c, 1.0f);
}

inline void draw_ring(Frame& img, double cx, double cy, int radius, Rgb c) {
    double lo = (radius - 1.0) * (radius - 1.0), hi = (radius + 0.5) * (radius + 0.5);
    int x0 = static_cast<int>(std::floor(cx)) - radius - 1,
        x1 = static_cast<int>(std::ceil(cx)) + radius + 1;
    int y0 = static_cast<int>(std::floor(cy)) - radius - 1,
        y1 = static_cast<int>(std::ceil(cy)) + radius + 1;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            if (d2 >= lo && d2 <= hi) blend_px(img, x, y, c, 1.0f);
        }
}

inline void draw_line(Frame& img, Vec2 a, Vec2 b, Rgb c, float alpha) {
    double len = (b - a).norm();
    int steps = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
    for (int s = 0; s <= steps; ++s) {
        double u = static_cast<double>(s) / steps;
        blend_px(img, static_cast<int>(std::lround(a.x + (b.x - a.x) * u)),
                 static_cast<int>(std::lround(a.y + (b.y - a.y) * u)), c, alpha);
    }
}

}  // namespace detail

// One PPM per frame: filled discs for visible tracked/seed points, hollow
// rings for interpolated ones, a fading polyline trail over the last
// cfg.trail_len frames. Dropped tracks are not drawn.
inline int render_overlay(const FrameSequence& seq, const TrajectoryBundle& b,
                          const std::string& out_dir, const PipelineConfig& cfg,
                          int threads = 0) {
    if (seq.size() != b.frame_count || seq.width() != b.width || seq.height() != b.height)
        throw Error(ErrorCode::DimensionMismatch,
                    "sequence geometry does not match bundle");
    std::filesystem::create_directories(out_dir);
    parallel_for(seq.frames.size(), threads, [&](size_t fi) {
        Frame img = seq.frames[fi];
        if (!img.has_rgb()) {
            img.rgb.resize(static_cast<size_t>(img.width) * img.height * 3);
            for (size_t i = 0; i < img.gray.size(); ++i)
                img.rgb[3 * i] = img.rgb[3 * i + 1] = img.rgb[3 * i + 2] = img.gray[i];
        }
        int f = static_cast<int>(fi);
        for (const auto& t : b.tracks) {
            if (t.dropped) continue;
            detail::Rgb color = detail::category_color(t.category);
            // Trail first so the disc center stays the exact palette color.
            int start = std::max(0, f - cfg.trail_len);
            for (int g = start; g < f; ++g) {
                if (!t.points[g].visible || !t.points[g + 1].visible) continue;
                float age = static_cast<float>(f - g) / static_cast<float>(cfg.trail_len + 1);
                detail::draw_line(img, t.points[g].pos, t.points[g + 1].pos, color,
                                  0.8f * (1.0f - age));
            }
            const TrackPoint& p = t.points[f];
            if (!p.visible) continue;
            if (p.source == TrackSource::Interpolated)
                detail::draw_ring(img, p.pos.x, p.pos.y, 3, color);
            else
                detail::draw_disc(img, p.pos.x, p.pos.y, 3, color);
        }
        char name[32];
        std::snprintf(name, sizeof(name), "%06d.ppm", f);
        write_ppm(img, (std::filesystem::path(out_dir) / name).string());
    });
    return seq.size();
}

// Wrist retargeting lifted to the bundle: finds the configured wrist track,
// rejects dropped ones, and normalizes by the bundle geometry.
inline EndEffectorTrajectory retarget_wrist(const TrajectoryBundle& b, const PipelineConfig& cfg) {
    for (const auto& t : b.tracks) {
        if (t.label != cfg.wrist_label) continue;
        if (t.dropped)
            throw Error(ErrorCode::WristTrackDropped,
                        "'" + cfg.wrist_label + "' was dropped: " + t.drop_reason);
        return retarget_wrist_track(t, b.width, b.height);
    }
    throw Error(ErrorCode::WristTrackMissing, "no track labeled '" + cfg.wrist_label + "'");
}

}  // namespace trajex
