#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "bundle_gen.hpp"
#include "fixture_util.hpp"
#include "synthetic.hpp"
#include "trajex/trajstore.hpp"

using namespace trajex;
using testutil::TempDir;

TEST_CASE("bundle save/load round trip is field-wise exact") {
    TempDir dir("roundtrip");
    for (uint64_t seed : {1ULL, 2ULL, 3ULL, 40ULL, 500ULL}) {
        TrajectoryBundle b = testutil::random_bundle(seed);
        std::string path = (dir.path() / "b.json").string();
        save_bundle(b, path);
        TrajectoryBundle loaded = load_bundle(path);
        CHECK(testutil::bundle_deep_equal(b, loaded));
    }
}

TEST_CASE("two saves of the same bundle are byte-identical") {
    TempDir dir("canon");
    TrajectoryBundle b = testutil::random_bundle(7);
    std::string p1 = (dir.path() / "a.json").string();
    std::string p2 = (dir.path() / "b.json").string();
    save_bundle(b, p1);
    save_bundle(b, p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK_FALSE(s1.empty());
}

TEST_CASE("unwritable path is IoError") {
    TrajectoryBundle b = testutil::random_bundle(8);
    try {
        save_bundle(b, "/nonexistent_dir/sub/b.json");
        FAIL("expected IoError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Io);
    }
}

TEST_CASE("unsupported schema version is rejected") {
    TempDir dir("schema");
    TrajectoryBundle b = testutil::random_bundle(9);
    std::string path = (dir.path() / "b.json").string();
    nlohmann::json j = bundle_to_json(b);
    j["schema_version"] = 99;
    std::ofstream(path) << j.dump();
    try {
        load_bundle(path);
        FAIL("expected SchemaVersionUnsupported");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SchemaVersionUnsupported);
    }
}

TEST_CASE("track with wrong point count fails invariants") {
    TempDir dir("badtrack");
    TrajectoryBundle b = testutil::random_bundle(10);
    REQUIRE(!b.tracks.empty());
    std::string path = (dir.path() / "b.json").string();
    nlohmann::json j = bundle_to_json(b);
    j["tracks"][0]["points"].erase(0);
    std::ofstream(path) << j.dump();
    try {
        load_bundle(path);
        FAIL("expected InvariantViolation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvariantViolation);
    }
}

TEST_CASE("csv export row count and quoting") {
    TempDir dir("csv");
    TrajectoryBundle b;
    b.source_id = "s";
    b.width = b.height = 64;
    b.frame_count = 3;
    b.config_hash = "deadbeefdeadbeef";
    b.proposal.keypoints.push_back({"a,b", Category::Hand, {1, 1}, 1.0});
    for (const char* label : {"a,b", "plain"}) {
        Track t;
        t.label = label;
        t.category = Category::Hand;
        t.seed_frame = 0;
        for (int f = 0; f < 3; ++f) {
            TrackPoint p;
            p.frame_index = f;
            p.pos = {1.0 * f, 2.0 * f};
            p.visible = true;
            p.source = f == 0 ? TrackSource::Seed : TrackSource::Tracked;
            t.points.push_back(p);
        }
        b.tracks.push_back(t);
    }
    std::string path = (dir.path() / "t.csv").string();
    export_csv(b, path);
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 7);  // header + 2 tracks x 3 frames
    CHECK(lines[0].rfind("label,category,frame,x,y,visible,source,confidence", 0) == 0);
    CHECK(lines[1].rfind("\"a,b\",hand,0,", 0) == 0);

    SECTION("empty track list leaves only the header") {
        b.tracks.clear();
        export_csv(b, path);
        std::ifstream in2(path, std::ios::binary);
        int count = 0;
        while (std::getline(in2, line)) ++count;
        CHECK(count == 1);
    }
}

TEST_CASE("overlay rendering writes numbered frames with exact disc colors") {
    TempDir dir("overlay");
    PipelineConfig cfg;
    cfg.resize_w = cfg.resize_h = 64;
    cfg.trail_len = 0;  // no trail: lets us assert exact per-frame pixels
    testutil::SineTexture tex = testutil::SineTexture::make(31);
    FrameSequence seq;
    seq.source_id = "s";
    for (int i = 0; i < 10; ++i)
        seq.frames.push_back(testutil::render_texture(tex, 64, 64, 0, 0, i));

    TrajectoryBundle b;
    b.source_id = "s";
    b.width = b.height = 64;
    b.frame_count = 10;
    b.config_hash = "deadbeefdeadbeef";
    Track t;
    t.label = "wrist";
    t.category = Category::Hand;
    t.seed_frame = 0;
    for (int f = 0; f < 10; ++f) {
        TrackPoint p;
        p.frame_index = f;
        p.pos = {20.0, 30.0};
        p.visible = f != 4;  // one hidden frame
        p.source = f == 0 ? TrackSource::Seed : TrackSource::Tracked;
        t.points.push_back(p);
    }
    b.tracks.push_back(t);

    std::string out = (dir.path() / "overlay").string();
    int n = render_overlay(seq, b, out, cfg);
    CHECK(n == 10);
    for (int i = 0; i < 10; ++i)
        CHECK(std::filesystem::exists(std::filesystem::path(out) / testutil::frame_name(i, ".ppm")));

    Frame f0 = read_pnm((std::filesystem::path(out) / "000000.ppm").string());
    REQUIRE(f0.has_rgb());
    size_t center = (30 * 64 + 20) * 3;
    CHECK(f0.rgb[center] == 1.0f);       // hand palette: red
    CHECK(f0.rgb[center + 1] == 0.0f);
    CHECK(f0.rgb[center + 2] == 0.0f);

    Frame f4 = read_pnm((std::filesystem::path(out) / "000004.ppm").string());
    // hidden frame: no red disc at the point
    CHECK(f4.rgb[center] != 1.0f);

    SECTION("mismatched frame count is DimensionMismatch") {
        b.frame_count = 9;
        b.tracks[0].points.pop_back();
        CHECK_THROWS_AS(render_overlay(seq, b, out, cfg), Error);
    }
}

TEST_CASE("retarget_wrist on bundles resolves labels and drop state") {
    PipelineConfig cfg;
    TrajectoryBundle b;
    b.width = b.height = 64;
    b.frame_count = 2;
    Track t;
    t.label = "wrist";
    t.category = Category::Hand;
    t.seed_frame = 0;
    for (int f = 0; f < 2; ++f) {
        TrackPoint p;
        p.frame_index = f;
        p.pos = {10.0 + f, 20.0};
        p.visible = true;
        p.source = f == 0 ? TrackSource::Seed : TrackSource::Tracked;
        t.points.push_back(p);
    }
    b.tracks.push_back(t);
    CHECK(retarget_wrist(b, cfg).samples.size() == 2);

    SECTION("dropped wrist") {
        b.tracks[0].dropped = true;
        b.tracks[0].drop_reason = "fb_consistency";
        try {
            retarget_wrist(b, cfg);
            FAIL("expected WristTrackDropped");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::WristTrackDropped);
        }
    }

    SECTION("missing wrist") {
        b.tracks[0].label = "elbow";
        try {
            retarget_wrist(b, cfg);
            FAIL("expected WristTrackMissing");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::WristTrackMissing);
        }
    }
}
