#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "synthetic.hpp"
#include "trajex/bidi.hpp"

using namespace trajex;

namespace {

TrackPoint tp(int frame, double x, double y, bool visible = true) {
    TrackPoint p;
    p.frame_index = frame;
    p.pos = {x, y};
    p.visible = visible;
    return p;
}

// A hand-built track pair with controlled per-frame forward-backward gaps.
std::pair<Track, Track> track_pair(const std::vector<double>& gaps) {
    Track fwd, bwd;
    fwd.label = bwd.label = "p";
    fwd.seed_frame = bwd.seed_frame = 0;
    for (size_t f = 0; f < gaps.size(); ++f) {
        fwd.points.push_back(tp(static_cast<int>(f), 10.0 + f, 20.0));
        bwd.points.push_back(tp(static_cast<int>(f), 10.0 + f + gaps[f], 20.0));
    }
    fwd.points[0].source = TrackSource::Seed;
    bwd.points[0].source = TrackSource::Seed;
    return {fwd, bwd};
}

ProposalResult proposal_at(int frame, const std::vector<Vec2>& pts) {
    ProposalResult p;
    p.frame_index = frame;
    for (size_t i = 0; i < pts.size(); ++i)
        p.keypoints.push_back({"p" + std::to_string(i), Category::Hand, pts[i], 1.0});
    return p;
}

}  // namespace

TEST_CASE("cycle_error is the Euclidean gap") {
    CHECK(cycle_error(tp(3, 10, 10), tp(3, 10.6, 10.8)) == Catch::Approx(1.0));
    CHECK(cycle_error(tp(3, 5, 5), tp(3, 5, 5)) == 0.0);
    CHECK(std::isinf(cycle_error(tp(3, 5, 5), tp(3, 5, 5, false))));
    CHECK(std::isinf(cycle_error(tp(3, 5, 5, false), tp(3, 5, 5))));
    CHECK_THROWS_AS(cycle_error(tp(3, 5, 5), tp(4, 5, 5)), Error);
}

TEST_CASE("static sequence is cycle-consistent everywhere") {
    PipelineConfig cfg;
    auto seq = testutil::make_static_sequence(21, 96, 96, 24);
    auto prop = proposal_at(0, testutil::scatter_points(22, 4, 96, 96, 15.0));
    auto bidi = track_bidirectional(seq, prop, cfg);
    REQUIRE(bidi.forward.size() == 4);
    for (size_t i = 0; i < bidi.forward.size(); ++i)
        for (int f = 0; f < 24; ++f) {
            double err = cycle_error(bidi.forward[i].points[f], bidi.backward[i].points[f]);
            CHECK(err < 1e-3);
        }
    auto fr = filter_tracks(bidi.forward, bidi.backward, cfg);
    for (const auto& t : fr.tracks) {
        CHECK_FALSE(t.dropped);
        for (const auto& p : t.points) CHECK(p.visible);
    }
    for (const auto& e : fr.report.tracks) CHECK(e.reliable_fraction == 1.0);
}

TEST_CASE("backward pass re-seeds at the forward terminal") {
    PipelineConfig cfg;
    // Point exits the frame partway through; the backward pass must start
    // from the last frame the forward pass still considered visible.
    auto seq = testutil::make_translating_sequence(23, 96, 96, 30, -3.0, 0.0);
    auto prop = proposal_at(0, {{20, 48}});
    auto bidi = track_bidirectional(seq, prop, cfg);
    const Track& fwd = bidi.forward[0];
    const Track& bwd = bidi.backward[0];
    int last_vis = -1;
    for (int f = 29; f >= 0; --f)
        if (fwd.points[f].visible) {
            last_vis = f;
            break;
        }
    REQUIRE(last_vis >= 0);
    REQUIRE(last_vis < 29);
    CHECK(bwd.seed_frame == last_vis);
    CHECK(bwd.points[last_vis].pos.x == fwd.points[last_vis].pos.x);
    CHECK(bwd.points[last_vis].source == TrackSource::Seed);
    for (int f = last_vis + 1; f < 30; ++f) CHECK_FALSE(bwd.points[f].visible);
}

TEST_CASE("back-and-forth motion closes the cycle") {
    PipelineConfig cfg;
    testutil::SineTexture tex = testutil::SineTexture::make(24);
    FrameSequence seq;
    seq.source_id = "synthetic";
    // Out 1 px/frame for 10 frames, then back.
    for (int t = 0; t < 21; ++t) {
        double shift = t <= 10 ? t : 20 - t;
        seq.frames.push_back(testutil::render_texture(tex, 96, 96, shift, 0, t));
    }
    auto prop = proposal_at(0, {{48, 48}, {30, 60}});
    auto bidi = track_bidirectional(seq, prop, cfg);
    for (size_t i = 0; i < bidi.forward.size(); ++i)
        for (int f = 0; f < 21; ++f)
            CHECK(cycle_error(bidi.forward[i].points[f], bidi.backward[i].points[f]) < 0.3);
}

TEST_CASE("threshold rule hides frames but keeps the track") {
    auto [fwd, bwd] = track_pair({0.2, 1.5, 0.3});
    PipelineConfig cfg;
    cfg.fb_threshold = 1.0;
    cfg.min_reliable_fraction = 0.5;
    auto fr = filter_tracks({fwd}, {bwd}, cfg);
    REQUIRE(fr.tracks.size() == 1);
    CHECK_FALSE(fr.tracks[0].dropped);
    CHECK(fr.tracks[0].points[0].visible);
    CHECK_FALSE(fr.tracks[0].points[1].visible);
    CHECK(fr.tracks[0].points[2].visible);
    CHECK(fr.report.tracks[0].reliable_fraction == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("track with no reliable frames is dropped with a reason") {
    auto [fwd, bwd] = track_pair({5.0, 6.0, 7.0});
    PipelineConfig cfg;  // threshold 2.0
    auto fr = filter_tracks({fwd}, {bwd}, cfg);
    CHECK(fr.tracks[0].dropped);
    CHECK(fr.tracks[0].drop_reason == "fb_consistency");
}

TEST_CASE("filter only toggles flags, never positions") {
    auto [fwd, bwd] = track_pair({0.0, 3.0, 0.0, 4.0, 0.1});
    PipelineConfig cfg;
    auto fr = filter_tracks({fwd}, {bwd}, cfg);
    for (size_t f = 0; f < fwd.points.size(); ++f) {
        CHECK(fr.tracks[0].points[f].pos.x == fwd.points[f].pos.x);
        CHECK(fr.tracks[0].points[f].pos.y == fwd.points[f].pos.y);
    }
}

TEST_CASE("drop rule is exactly the reliable-fraction comparison") {
    PipelineConfig cfg;
    cfg.fb_threshold = 1.0;
    for (double frac_target : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        std::vector<double> gaps(8, 0.1);
        int bad = static_cast<int>((1.0 - frac_target) * 8 + 0.5);
        for (int i = 0; i < bad; ++i) gaps[i] = 3.0;
        auto [fwd, bwd] = track_pair(gaps);
        auto fr = filter_tracks({fwd}, {bwd}, cfg);
        bool expect_drop = fr.report.tracks[0].reliable_fraction < cfg.min_reliable_fraction;
        CHECK(fr.tracks[0].dropped == expect_drop);
    }
}

TEST_CASE("raising the threshold never lowers reliable fractions") {
    auto [fwd, bwd] = track_pair({0.1, 0.8, 1.7, 2.6, 3.5, 0.4, 1.2, 2.9});
    double prev = -1.0;
    for (double thr : {0.5, 1.0, 1.5, 2.0, 3.0, 4.0}) {
        PipelineConfig cfg;
        cfg.fb_threshold = thr;
        auto fr = filter_tracks({fwd}, {bwd}, cfg);
        CHECK(fr.report.tracks[0].reliable_fraction >= prev);
        prev = fr.report.tracks[0].reliable_fraction;
    }
}

TEST_CASE("mismatched track sets are rejected") {
    auto [fwd, bwd] = track_pair({0.0, 0.0});
    PipelineConfig cfg;
    CHECK_THROWS_AS(filter_tracks({fwd}, {}, cfg), Error);
    Track renamed = bwd;
    renamed.label = "other";
    CHECK_THROWS_AS(filter_tracks({fwd}, {renamed}, cfg), Error);
}
