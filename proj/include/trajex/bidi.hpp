#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "trajex/config.hpp"
#include "trajex/errors.hpp"
#include "trajex/tracker.hpp"

namespace trajex {

// Forward-backward cycle consistency report for one filtered track set.
struct CycleReport {
    struct TrackEntry {
        std::string label;
        std::vector<double> fb_error;  // per frame; infinity when a side is invisible
        std::vector<bool> reliable;    // fb_error <= threshold and both sides visible
        double reliable_fraction = 0.0;
    };
    std::vector<TrackEntry> tracks;
};

// Euclidean forward-backward distance at one frame; infinite when either
// side is invisible (an invisible frame can never be reliable).
inline double cycle_error(const TrackPoint& fwd, const TrackPoint& bwd) {
    if (fwd.frame_index != bwd.frame_index)
        throw Error(ErrorCode::FrameMismatch,
                    std::to_string(fwd.frame_index) + " vs " + std::to_string(bwd.frame_index));
    if (!fwd.visible || !bwd.visible) return std::numeric_limits<double>::infinity();
    return (fwd.pos - bwd.pos).norm();
}

struct BidiResult {
    std::vector<Track> forward;
    std::vector<Track> backward;
};

// Forward pass: two directed runs from the seed frame (to the end, to the
// start) merged into one all-frame track. Backward pass: each point is
// re-seeded at its forward terminal position on the last visible frame and
// tracked in reverse to the seed frame.
inline BidiResult track_bidirectional(const FrameSequence& seq, const ProposalResult& proposal,
                                      const PipelineConfig& cfg, int threads = 0) {
    seq.check_invariants();
    int n = seq.size();
    if (proposal.frame_index < 0 || proposal.frame_index >= n)
        throw Error(ErrorCode::SeedFrameOutOfRange, std::to_string(proposal.frame_index));
    int seed = proposal.frame_index;
    auto pyramids = detail::build_pyramids(seq, cfg, threads);

    BidiResult res;
    for (const auto& kp : proposal.keypoints) {
        res.forward.push_back(detail::make_seeded_track(kp, seed, n, cfg.win_radius, seq.width(),
                                                        seq.height()));
        res.backward.push_back(detail::make_seeded_track(kp, seed, n, cfg.win_radius, seq.width(),
                                                         seq.height()));
    }

    parallel_for(res.forward.size(), threads, [&](size_t i) {
        Track& fwd = res.forward[i];
        if (seed < n - 1) detail::chain_point(pyramids, fwd, seed, n - 1, cfg);
        if (seed > 0) detail::chain_point(pyramids, fwd, seed, 0, cfg);

        // Forward terminal: last visible frame at or after the seed.
        int last_visible = -1;
        for (int f = n - 1; f >= seed; --f) {
            if (fwd.points[f].visible) {
                last_visible = f;
                break;
            }
        }
        Track& bwd = res.backward[i];
        for (auto& tp : bwd.points) {
            tp.visible = false;
            tp.source = TrackSource::Tracked;
        }
        if (last_visible < 0) {
            bwd.points[seed].source = TrackSource::Seed;
            return;  // nothing to verify
        }
        bwd.seed_frame = last_visible;
        auto& entry = bwd.points[last_visible];
        entry.pos = fwd.points[last_visible].pos;
        entry.visible = true;
        entry.residual = fwd.points[last_visible].residual;
        entry.confidence = fwd.points[last_visible].confidence;
        entry.source = TrackSource::Seed;
        if (last_visible > seed) detail::chain_point(pyramids, bwd, last_visible, seed, cfg);
    });
    return res;
}

struct FilterResult {
    std::vector<Track> tracks;  // forward positions, unreliable frames hidden
    CycleReport report;
};

// Hide frames whose cycle error exceeds cfg.fb_threshold; drop whole tracks
// whose reliable fraction falls below cfg.min_reliable_fraction. Positions
// are never modified, only flags.
inline FilterResult filter_tracks(const std::vector<Track>& fwd, const std::vector<Track>& bwd,
                                  const PipelineConfig& cfg) {
    if (fwd.size() != bwd.size())
        throw Error(ErrorCode::TrackSetMismatch, "track count differs");
    FilterResult res;
    for (size_t i = 0; i < fwd.size(); ++i) {
        const Track& f = fwd[i];
        const Track& b = bwd[i];
        if (f.label != b.label || f.points.size() != b.points.size())
            throw Error(ErrorCode::TrackSetMismatch, "track '" + f.label + "' does not match");

        Track out = f;
        CycleReport::TrackEntry entry;
        entry.label = f.label;
        entry.fb_error.resize(f.points.size());
        entry.reliable.resize(f.points.size());
        int fwd_visible = 0, reliable = 0;
        for (size_t t = 0; t < f.points.size(); ++t) {
            double err = cycle_error(f.points[t], b.points[t]);
            bool ok = err <= cfg.fb_threshold;  // infinity always fails
            entry.fb_error[t] = err;
            entry.reliable[t] = ok;
            if (f.points[t].visible) {
                ++fwd_visible;
                if (ok) ++reliable;
                else out.points[t].visible = false;
            }
        }
        entry.reliable_fraction =
            fwd_visible > 0 ? static_cast<double>(reliable) / fwd_visible : 0.0;
        if (entry.reliable_fraction < cfg.min_reliable_fraction) {
            out.dropped = true;
            out.drop_reason = "fb_consistency";
        }
        res.tracks.push_back(std::move(out));
        res.report.tracks.push_back(std::move(entry));
    }
    return res;
}

}  // namespace trajex
