#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trajex/config.hpp"
#include "trajex/errors.hpp"
#include "trajex/image.hpp"
#include "trajex/parallel.hpp"
#include "trajex/proposal.hpp"

namespace trajex {

// Image pyramid: level 0 is full resolution, each coarser level the 2x2
// box-filtered 2-subsampled parent. Construction stops before either
// dimension would fall below 8.
struct Pyramid {
    struct Level {
        int width = 0;
        int height = 0;
        std::vector<float> data;
    };
    std::vector<Level> levels;

    int level_count() const { return static_cast<int>(levels.size()); }
};

inline Pyramid build_pyramid(const Frame& f, int max_levels) {
    if (f.width < 8 || f.height < 8)
        throw Error(ErrorCode::FrameTooSmall,
                    std::to_string(f.width) + "x" + std::to_string(f.height));
    Pyramid p;
    p.levels.push_back({f.width, f.height, f.gray});
    while (p.level_count() < max_levels) {
        const auto& fine = p.levels.back();
        int w = fine.width / 2;
        int h = fine.height / 2;
        if (w < 8 || h < 8) break;
        Pyramid::Level coarse{w, h, std::vector<float>(static_cast<size_t>(w) * h)};
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const float* r0 = &fine.data[static_cast<size_t>(2 * y) * fine.width + 2 * x];
                const float* r1 = r0 + fine.width;
                coarse.data[static_cast<size_t>(y) * w + x] =
                    0.25f * (r0[0] + r0[1] + r1[0] + r1[1]);
            }
        }
        p.levels.push_back(std::move(coarse));
    }
    return p;
}

enum class TrackSource { Tracked, Seed, Interpolated };

inline const char* track_source_name(TrackSource s) {
    switch (s) {
        case TrackSource::Tracked: return "tracked";
        case TrackSource::Seed: return "seed";
        case TrackSource::Interpolated: return "interpolated";
    }
    return "?";
}

inline TrackSource track_source_from_name(const std::string& s) {
    if (s == "tracked") return TrackSource::Tracked;
    if (s == "seed") return TrackSource::Seed;
    if (s == "interpolated") return TrackSource::Interpolated;
    throw Error(ErrorCode::InvariantViolation, "unknown track source '" + s + "'");
}

struct TrackPoint {
    int frame_index = 0;
    Vec2 pos;
    bool visible = false;
    double confidence = 0.0;
    double residual = 0.0;
    TrackSource source = TrackSource::Tracked;
};

struct Track {
    std::string label;
    Category category = Category::Object;
    int seed_frame = 0;
    std::vector<TrackPoint> points;  // one per frame, ordered
    bool dropped = false;
    std::string drop_reason;

    void check_invariants(int frame_count) const {
        if (static_cast<int>(points.size()) != frame_count)
            throw Error(ErrorCode::InvariantViolation,
                        "track '" + label + "' does not cover every frame");
        for (int i = 0; i < frame_count; ++i) {
            if (points[i].frame_index != i)
                throw Error(ErrorCode::InvariantViolation, "track point frame index mismatch");
            if (points[i].source == TrackSource::Seed && i != seed_frame)
                throw Error(ErrorCode::InvariantViolation, "seed source off the seed frame");
        }
        if (points[seed_frame].source != TrackSource::Seed)
            throw Error(ErrorCode::InvariantViolation, "seed frame point not marked seed");
    }
};

struct StepResult {
    Vec2 pos;
    double residual = 0.0;
    bool converged = false;
};

namespace detail {

// Smallest eigenvalue of the symmetric 2x2 [[gxx,gxy],[gxy,gyy]].
inline double min_eigenvalue(double gxx, double gxy, double gyy) {
    double tr = gxx + gyy;
    double disc = std::sqrt((gxx - gyy) * (gxx - gyy) + 4.0 * gxy * gxy);
    return 0.5 * (tr - disc);
}

inline bool in_margin(const Pyramid::Level& lvl, const Vec2& p, int radius) {
    double m = radius + 2;  // window + central-difference + bilinear support
    return p.x >= m && p.y >= m && p.x <= lvl.width - 1 - m && p.y <= lvl.height - 1 - m;
}

}  // namespace detail

// One frame-to-frame alignment step: coarse-to-fine iterative solution of
// the 2x2 normal equations G d = b over a (2r+1)^2 window, bilinear
// sub-pixel sampling throughout. A point that leaves the valid region
// mid-iteration is returned at its last valid position, not converged.
inline StepResult track_point_step(const Pyramid& prev, const Pyramid& next, Vec2 pos,
                                   const PipelineConfig& cfg) {
    const int r = cfg.win_radius;
    const int n_win = (2 * r + 1) * (2 * r + 1);
    const int top = std::min(prev.level_count(), next.level_count()) - 1;

    Vec2 disp{0.0, 0.0};  // displacement, level-0 units
    bool level0_converged = false;
    bool out_of_bounds = false;
    double min_eig0 = 0.0;

    std::vector<double> tmpl(n_win), gx(n_win), gy(n_win);

    for (int L = top; L >= 0; --L) {
        const auto& pl = prev.levels[L];
        const auto& nl = next.levels[L];
        double scale = static_cast<double>(1 << L);
        Vec2 p{pos.x / scale, pos.y / scale};
        Vec2 g{disp.x / scale, disp.y / scale};

        if (!detail::in_margin(pl, p, r)) {
            if (L == 0) out_of_bounds = true;
            continue;  // window does not fit at this level
        }

        // Template values and gradients are fixed per level.
        double gxx = 0.0, gxy = 0.0, gyy = 0.0;
        int idx = 0;
        for (int dy = -r; dy <= r; ++dy) {
            for (int dx = -r; dx <= r; ++dx, ++idx) {
                double x = p.x + dx, y = p.y + dy;
                tmpl[idx] = bilinear_sample(pl.data, pl.width, pl.height, x, y);
                double ix = 0.5 * (bilinear_sample(pl.data, pl.width, pl.height, x + 1, y) -
                                   bilinear_sample(pl.data, pl.width, pl.height, x - 1, y));
                double iy = 0.5 * (bilinear_sample(pl.data, pl.width, pl.height, x, y + 1) -
                                   bilinear_sample(pl.data, pl.width, pl.height, x, y - 1));
                gx[idx] = ix;
                gy[idx] = iy;
                gxx += ix * ix;
                gxy += ix * iy;
                gyy += iy * iy;
            }
        }
        if (L == 0) min_eig0 = detail::min_eigenvalue(gxx, gxy, gyy) / n_win;

        double det = gxx * gyy - gxy * gxy;
        if (det <= 1e-12) {
            if (L == 0) level0_converged = false;
            continue;  // untextured; nothing to solve
        }

        // An out-of-bounds excursion at a coarse level only ends refinement
        // there; the finer levels still have margin to work with. Only
        // level 0 decides visibility.
        bool converged_here = false;
        bool oob_here = false;
        for (int it = 0; it < cfg.max_iters; ++it) {
            Vec2 target{p.x + g.x, p.y + g.y};
            if (!detail::in_margin(nl, target, r)) {
                oob_here = true;
                break;
            }
            double bx = 0.0, by = 0.0;
            idx = 0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx, ++idx) {
                    double diff = tmpl[idx] - bilinear_sample(nl.data, nl.width, nl.height,
                                                              target.x + dx, target.y + dy);
                    bx += diff * gx[idx];
                    by += diff * gy[idx];
                }
            }
            Vec2 d{(gyy * bx - gxy * by) / det, (gxx * by - gxy * bx) / det};
            Vec2 cand{g.x + d.x, g.y + d.y};
            if (!detail::in_margin(nl, {p.x + cand.x, p.y + cand.y}, r)) {
                oob_here = true;
                break;  // keep last valid g
            }
            g = cand;
            if (d.norm() < cfg.epsilon) {
                converged_here = true;
                break;
            }
        }
        if (L == 0) {
            level0_converged = converged_here;
            out_of_bounds = oob_here;
        }
        disp = {g.x * scale, g.y * scale};
    }

    StepResult res;
    res.pos = {pos.x + disp.x, pos.y + disp.y};

    const auto& pl0 = prev.levels[0];
    const auto& nl0 = next.levels[0];
    if (detail::in_margin(pl0, pos, r) && detail::in_margin(nl0, res.pos, r)) {
        double sum = 0.0;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                sum += std::abs(
                    bilinear_sample(pl0.data, pl0.width, pl0.height, pos.x + dx, pos.y + dy) -
                    bilinear_sample(nl0.data, nl0.width, nl0.height, res.pos.x + dx,
                                    res.pos.y + dy));
        res.residual = sum / n_win;
    } else {
        res.residual = 1.0;
        out_of_bounds = true;
    }

    res.converged = level0_converged && !out_of_bounds && min_eig0 >= cfg.min_eig;
    return res;
}

struct WindowPoint {
    Vec2 pos;
    bool visible = true;
    double residual = 0.0;
};

// Chain track_point_step across a slice of consecutive frames (processing
// order; reverse the span for backward tracking). frames[0] is the entry
// frame whose positions are given. A point that fails convergence is frozen
// at its last position and hidden for the rest of the window.
inline std::vector<std::vector<WindowPoint>> track_window(
    const std::vector<const Pyramid*>& frames, const std::vector<WindowPoint>& entry,
    const PipelineConfig& cfg, int threads = 0) {
    if (static_cast<int>(frames.size()) > cfg.window_size + 1)
        throw Error(ErrorCode::InvalidValue, "window slice exceeds window_size");
    size_t m = frames.size();
    size_t k = entry.size();
    std::vector<std::vector<WindowPoint>> out(m, std::vector<WindowPoint>(k));
    if (m == 0) return out;
    out[0] = entry;
    parallel_for(k, threads, [&](size_t pi) {
        WindowPoint st = entry[pi];
        for (size_t fi = 1; fi < m; ++fi) {
            if (st.visible) {
                StepResult step = track_point_step(*frames[fi - 1], *frames[fi], st.pos, cfg);
                if (step.converged) {
                    st.pos = step.pos;
                    st.residual = step.residual;
                } else {
                    st.visible = false;  // freeze-and-hide
                    st.residual = step.residual;
                }
            }
            out[fi][pi] = st;
        }
    });
    return out;
}

namespace detail {

// Chain one point across pyramids[from..to] (either direction), writing into
// track.points. Entry state at `from` must already be set.
inline void chain_point(const std::vector<Pyramid>& pyramids, Track& tr, int from, int to,
                        const PipelineConfig& cfg) {
    int dir = (to >= from) ? 1 : -1;
    WindowPoint st{tr.points[from].pos, tr.points[from].visible, tr.points[from].residual};
    for (int f = from + dir; f != to + dir; f += dir) {
        if (st.visible) {
            StepResult step = track_point_step(pyramids[f - dir], pyramids[f], st.pos, cfg);
            if (step.converged) {
                st.pos = step.pos;
                st.residual = step.residual;
            } else {
                st.visible = false;
                st.residual = step.residual;
            }
        }
        auto& tp = tr.points[f];
        tp.pos = st.pos;
        tp.visible = st.visible;
        tp.residual = st.residual;
        tp.confidence = st.visible ? std::clamp(1.0 - st.residual, 0.0, 1.0) : 0.0;
        tp.source = TrackSource::Tracked;
    }
}

inline std::vector<Pyramid> build_pyramids(const FrameSequence& seq, const PipelineConfig& cfg,
                                           int threads) {
    std::vector<Pyramid> pyr(seq.frames.size());
    parallel_for(seq.frames.size(), threads, [&](size_t i) {
        pyr[i] = build_pyramid(seq.frames[i], cfg.pyramid_levels);
    });
    return pyr;
}

inline Track make_seeded_track(const Keypoint& kp, int seed_frame, int frame_count, int radius,
                               int w, int h) {
    Track tr;
    tr.label = kp.label;
    tr.category = kp.category;
    tr.seed_frame = seed_frame;
    tr.points.resize(frame_count);
    for (int f = 0; f < frame_count; ++f) {
        tr.points[f].frame_index = f;
        tr.points[f].pos = kp.pos;
        tr.points[f].visible = false;
        tr.points[f].source = TrackSource::Tracked;
    }
    auto& seed = tr.points[seed_frame];
    seed.source = TrackSource::Seed;
    seed.confidence = kp.confidence;
    double m = radius + 2;
    seed.visible = kp.pos.x >= m && kp.pos.y >= m && kp.pos.x <= w - 1 - m && kp.pos.y <= h - 1 - m;
    return tr;
}

}  // namespace detail

enum class Direction { Forward, Backward };

// Propagate every proposed keypoint from the seed frame toward one end of
// the sequence, processed in window_size blocks with exit positions carried
// into the next block. Frames on the untracked side stay invisible.
inline std::vector<Track> track_sequence(const FrameSequence& seq, const ProposalResult& proposal,
                                         Direction dir, const PipelineConfig& cfg,
                                         int threads = 0) {
    seq.check_invariants();
    int n = seq.size();
    if (proposal.frame_index < 0 || proposal.frame_index >= n)
        throw Error(ErrorCode::SeedFrameOutOfRange, std::to_string(proposal.frame_index));
    auto pyramids = detail::build_pyramids(seq, cfg, threads);
    int seed = proposal.frame_index;
    int goal = (dir == Direction::Forward) ? n - 1 : 0;

    std::vector<Track> tracks;
    tracks.reserve(proposal.keypoints.size());
    for (const auto& kp : proposal.keypoints)
        tracks.push_back(detail::make_seeded_track(kp, seed, n, cfg.win_radius, seq.width(),
                                                   seq.height()));

    // Window blocks are bookkeeping over a continuous chain; results are
    // identical to per-point chaining, so parallelize across points.
    parallel_for(tracks.size(), threads, [&](size_t i) {
        detail::chain_point(pyramids, tracks[i], seed, goal, cfg);
    });
    return tracks;
}

}  // namespace trajex
