#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trajex/config.hpp"
#include "trajex/errors.hpp"
#include "trajex/tracker.hpp"

namespace trajex {

// Fill every maximal invisible run of length <= max_gap that is bounded by
// visible frames on both sides, by linear interpolation between the bounding
// positions. Runs touching a sequence edge are left alone.
inline Track interpolate_gaps(const Track& t, int max_gap) {
    Track out = t;
    int n = static_cast<int>(out.points.size());
    int i = 0;
    while (i < n) {
        if (out.points[i].visible) {
            ++i;
            continue;
        }
        int start = i;
        while (i < n && !out.points[i].visible) ++i;
        int end = i;  // run is [start, end)
        if (start == 0 || end == n) continue;  // unbounded at a sequence edge
        int len = end - start;
        if (len > max_gap) continue;
        const TrackPoint& a = out.points[start - 1];
        const TrackPoint& b = out.points[end];
        for (int f = start; f < end; ++f) {
            double u = static_cast<double>(f - (start - 1)) / (end - (start - 1));
            TrackPoint& p = out.points[f];
            p.pos = {a.pos.x + (b.pos.x - a.pos.x) * u, a.pos.y + (b.pos.y - a.pos.y) * u};
            p.visible = true;
            p.source = TrackSource::Interpolated;
            p.confidence = std::min(a.confidence, b.confidence);
        }
    }
    return out;
}

// Centered moving average over visible points, window truncated at
// visibility boundaries. radius 0 is the identity. Seed and interpolated
// source tags are preserved; only positions move.
inline Track smooth_track(const Track& t, int radius) {
    if (radius < 0) throw Error(ErrorCode::InvalidValue, "smooth radius must be >= 0");
    if (radius == 0) return t;
    Track out = t;
    int n = static_cast<int>(t.points.size());
    for (int f = 0; f < n; ++f) {
        if (!t.points[f].visible) continue;
        double sx = 0.0, sy = 0.0;
        int count = 0;
        for (int d = -radius; d <= radius; ++d) {
            int g = f + d;
            if (g < 0 || g >= n) continue;
            if (!t.points[g].visible) {
                if (d < 0) { sx = sy = 0.0; count = 0; }  // truncate left side
                else break;                               // truncate right side
                continue;
            }
            sx += t.points[g].pos.x;
            sy += t.points[g].pos.y;
            ++count;
        }
        if (count > 0) out.points[f].pos = {sx / count, sy / count};
    }
    return out;
}

struct EndEffectorSample {
    double t_norm = 0.0;
    double x_norm = 0.0;
    double y_norm = 0.0;
    bool visible = true;
};

struct EndEffectorTrajectory {
    std::vector<EndEffectorSample> samples;
    std::string source_label = "wrist";

    void check_invariants() const {
        for (size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            if (s.t_norm < 0.0 || s.t_norm > 1.0 || s.x_norm < 0.0 || s.x_norm > 1.0 ||
                s.y_norm < 0.0 || s.y_norm > 1.0)
                throw Error(ErrorCode::InvariantViolation, "end-effector sample outside [0,1]");
            if (i > 0 && samples[i].t_norm <= samples[i - 1].t_norm)
                throw Error(ErrorCode::InvariantViolation, "t_norm not strictly increasing");
        }
    }
};

// Map a wrist track to a normalized end-effector trajectory: positions
// divided by (dim-1), time normalized to [0,1] over the span between the
// first and last visible-or-interpolated frames. Invisible frames inside
// that span are carried with visible=false.
inline EndEffectorTrajectory retarget_wrist_track(const Track& wrist, int width, int height) {
    int n = static_cast<int>(wrist.points.size());
    int first = -1, last = -1;
    for (int f = 0; f < n; ++f) {
        if (wrist.points[f].visible) {
            if (first < 0) first = f;
            last = f;
        }
    }
    if (first < 0 || last == first)
        throw Error(ErrorCode::TooFewVisibleSamples,
                    "wrist track has fewer than 2 visible frames");
    EndEffectorTrajectory traj;
    traj.source_label = wrist.label;
    for (int f = first; f <= last; ++f) {
        const TrackPoint& p = wrist.points[f];
        EndEffectorSample s;
        s.t_norm = static_cast<double>(f - first) / (last - first);
        s.x_norm = std::clamp(p.pos.x / (width - 1), 0.0, 1.0);
        s.y_norm = std::clamp(p.pos.y / (height - 1), 0.0, 1.0);
        s.visible = p.visible;
        traj.samples.push_back(s);
    }
    traj.check_invariants();
    return traj;
}

// Resample to n uniform timestamps. Positions interpolate linearly between
// neighboring visible samples; a resampled point landing inside an invisible
// span takes the nearest span-boundary position with visible=false.
inline EndEffectorTrajectory resample_uniform(const EndEffectorTrajectory& traj, int n) {
    if (n < 2) throw Error(ErrorCode::InvalidValue, "resample count must be >= 2");
    std::vector<int> vis;
    for (size_t i = 0; i < traj.samples.size(); ++i)
        if (traj.samples[i].visible) vis.push_back(static_cast<int>(i));
    if (vis.size() < 2)
        throw Error(ErrorCode::TooFewVisibleSamples, "need >= 2 visible samples");

    EndEffectorTrajectory out;
    out.source_label = traj.source_label;
    out.samples.reserve(n);
    for (int k = 0; k < n; ++k) {
        double t = static_cast<double>(k) / (n - 1);
        // Bracketing visible samples: lo = last visible with t_norm <= t,
        // hi = first visible with t_norm >= t.
        int lo = -1, hi = -1;
        for (int idx : vis) {
            if (traj.samples[idx].t_norm <= t) lo = idx;
            if (hi < 0 && traj.samples[idx].t_norm >= t) hi = idx;
        }
        EndEffectorSample s;
        s.t_norm = t;
        if (lo < 0) {  // before the first visible sample
            s.x_norm = traj.samples[hi].x_norm;
            s.y_norm = traj.samples[hi].y_norm;
            s.visible = false;
        } else if (hi < 0) {  // after the last visible sample
            s.x_norm = traj.samples[lo].x_norm;
            s.y_norm = traj.samples[lo].y_norm;
            s.visible = false;
        } else if (lo == hi) {
            s.x_norm = traj.samples[lo].x_norm;
            s.y_norm = traj.samples[lo].y_norm;
            s.visible = true;
        } else {
            const auto& a = traj.samples[lo];
            const auto& b = traj.samples[hi];
            if (hi - lo > 1) {
                // t overlaps an invisible span: nearest boundary, hidden.
                const auto& near = (t - a.t_norm <= b.t_norm - t) ? a : b;
                s.x_norm = near.x_norm;
                s.y_norm = near.y_norm;
                s.visible = false;
            } else {
                double u = (t - a.t_norm) / (b.t_norm - a.t_norm);
                s.x_norm = a.x_norm + (b.x_norm - a.x_norm) * u;
                s.y_norm = a.y_norm + (b.y_norm - a.y_norm) * u;
                s.visible = true;
            }
        }
        out.samples.push_back(s);
    }
    // Exact endpoint preservation when the originals are visible.
    if (traj.samples.front().visible) {
        out.samples.front().x_norm = traj.samples.front().x_norm;
        out.samples.front().y_norm = traj.samples.front().y_norm;
    }
    if (traj.samples.back().visible) {
        out.samples.back().x_norm = traj.samples.back().x_norm;
        out.samples.back().y_norm = traj.samples.back().y_norm;
    }
    out.check_invariants();
    return out;
}

}  // namespace trajex
