#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trajex/bidi.hpp"
#include "trajex/config.hpp"
#include "trajex/errors.hpp"
#include "trajex/frame_io.hpp"
#include "trajex/postprocess.hpp"
#include "trajex/proposal.hpp"
#include "trajex/tracker.hpp"
#include "trajex/trajstore.hpp"

namespace trajex {

// Stage helpers shared by run_pipeline and the per-stage CLI subcommands.
// run_pipeline is exactly the composition of these, so chaining subcommands
// manually reproduces its bundle.

inline TrajectoryBundle make_proposal_bundle(const FrameSequence& raw, int seed_frame,
                                             const ProposalResult& proposal,
                                             const PipelineConfig& cfg) {
    TrajectoryBundle b;
    b.source_id = raw.source_id;
    b.width = cfg.resize_w;
    b.height = cfg.resize_h;
    b.frame_count = raw.size();
    b.fps = raw.fps;
    b.proposal = proposal;
    b.proposal.frame_index = seed_frame;
    b.config_hash = config_hash(cfg);
    b.stages = {"load", "select_seed", "propose"};
    return b;
}

// Bidirectional tracking; forward tracks land in the bundle, backward tracks
// are returned for the filter stage.
inline std::vector<Track> stage_track(TrajectoryBundle& b, const FrameSequence& resized,
                                      const PipelineConfig& cfg, int threads = 0) {
    if (resized.size() != b.frame_count || resized.width() != b.width ||
        resized.height() != b.height)
        throw Error(ErrorCode::DimensionMismatch, "sequence does not match bundle geometry");
    BidiResult bidi = track_bidirectional(resized, b.proposal, cfg, threads);
    b.tracks = std::move(bidi.forward);
    b.stages.push_back("track");
    return std::move(bidi.backward);
}

inline void stage_filter(TrajectoryBundle& b, const std::vector<Track>& backward,
                         const PipelineConfig& cfg) {
    FilterResult fr = filter_tracks(b.tracks, backward, cfg);
    b.tracks = std::move(fr.tracks);
    b.cycle_report = summarize_cycle_report(fr.report);
    b.stages.push_back("filter");
}

inline void stage_interpolate(TrajectoryBundle& b, const PipelineConfig& cfg) {
    for (auto& t : b.tracks) {
        if (t.dropped) continue;
        t = interpolate_gaps(t, cfg.max_gap);
        if (cfg.smooth_radius > 0) t = smooth_track(t, cfg.smooth_radius);
    }
    b.stages.push_back("interpolate");
}

inline void stage_retarget(TrajectoryBundle& b, const PipelineConfig& cfg) {
    EndEffectorTrajectory traj = retarget_wrist(b, cfg);
    b.end_effector = resample_uniform(traj, cfg.resample_count);
    b.stages.push_back("retarget");
}

struct PipelineOutcome {
    int exit_code = 0;
    std::string bundle_path;  // empty when no bundle was written
};

// Full pipeline: load, seed selection, proposal, bidirectional tracking,
// consistency filtering, gap interpolation, wrist retargeting, save. The
// proposal runs on the pre-resize seed frame; tracking runs at cfg
// resolution. A failure after the proposal still writes a partial bundle
// with an error report.
inline PipelineOutcome run_pipeline(const std::string& input_dir, const PipelineConfig& cfg,
                                    const std::string& out_dir, VlmBackend& backend,
                                    int threads = 0) {
    std::filesystem::create_directories(out_dir);
    std::string bundle_path = (std::filesystem::path(out_dir) / "bundle.json").string();

    FrameSequence raw = load_sequence_raw(input_dir, threads);
    raw.check_invariants();
    int seed = select_seed_frame(raw, backend, cfg);

    const Frame& seed_frame = raw.frames[seed];
    std::string prompt = build_prompt(get_template(cfg.prompt_template), cfg.task,
                                      seed_frame.width, seed_frame.height);
    ProposalResult proposal =
        propose_keypoints(backend, seed_frame, prompt, cfg.prompt_template,
                          {cfg.resize_w, cfg.resize_h}, cfg);

    TrajectoryBundle b = make_proposal_bundle(raw, seed, proposal, cfg);
    std::string current = "track";
    try {
        FrameSequence resized = resize_sequence(raw, cfg.resize_w, cfg.resize_h, threads);
        std::vector<Track> backward = stage_track(b, resized, cfg, threads);
        current = "filter";
        stage_filter(b, backward, cfg);
        current = "interpolate";
        stage_interpolate(b, cfg);
        current = "retarget";
        stage_retarget(b, cfg);
        current = "save";
        save_bundle(b, bundle_path);
        return {0, bundle_path};
    } catch (const Error& e) {
        b.error = ErrorReport{current, error_code_name(e.code()), e.what()};
        save_bundle(b, bundle_path);
        return {exit_code_for(e.code()), bundle_path};
    }
}

}  // namespace trajex
