#pragma once

// Temp-dir and fixture helpers shared across test files.

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <json.hpp>

#include "synthetic.hpp"
#include "trajex/image_io.hpp"

namespace testutil {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        static std::atomic<int> counter{0};
        path_ = base / ("trajex_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    std::filesystem::path path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string frame_name(int i, const char* ext = ".pgm") {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06d%s", i, ext);
    return buf;
}

// The fixture video used by pipeline/golden tests: a deterministic textured
// scene translating at (1.0, 0.5) source px/frame, written as 8-bit PGM.
inline void write_fixture_video(const std::string& dir, int w = 320, int h = 240, int n = 20) {
    std::filesystem::create_directories(dir);
    SineTexture tex = SineTexture::make(424242);
    for (int t = 0; t < n; ++t) {
        trajex::Frame f = render_texture(tex, w, h, 1.0 * t, 0.5 * t, t);
        trajex::write_pgm(f, (std::filesystem::path(dir) / frame_name(t)).string());
    }
}

inline std::string fixture_dir() { return TRAJEX_FIXTURE_DIR; }

inline std::string mock_fixture_path() {
    return (std::filesystem::path(TRAJEX_FIXTURE_DIR) / "mock_backend.json").string();
}

// Write a minimal mock fixture: hand presence turns affirmative at
// `hand_from`, proposal response served on that frame.
inline std::string write_mock_fixture(const std::string& path, int hand_from, int n_frames,
                                      const std::string& proposal_response) {
    nlohmann::json doc;
    doc["version"] = 1;
    doc["defaults"] = {{"hand_presence_v1", "no"}};
    doc["entries"] = nlohmann::json::array();
    for (int f = hand_from; f < n_frames; ++f)
        doc["entries"].push_back(
            {{"frame_index", f}, {"prompt_id", "hand_presence_v1"}, {"response", "yes"}});
    for (int f = 0; f < n_frames; ++f)
        doc["entries"].push_back(
            {{"frame_index", f}, {"prompt_id", "grasp_v1"}, {"response", proposal_response}});
    std::ofstream out(path);
    out << doc.dump(2);
    return path;
}

inline std::string default_proposal_response() {
    return R"(Here are the keypoints I found.
{"keypoints": [
  {"label": "wrist", "category": "hand", "x": 0.40, "y": 0.45, "confidence": 0.9},
  {"label": "tool_tip", "category": "tool", "x": 0.60, "y": 0.50, "confidence": 0.8},
  {"label": "object_center", "category": "object", "x": 0.50, "y": 0.58, "confidence": 0.85}
]}
Let me know if you need more.)";
}

}  // namespace testutil
