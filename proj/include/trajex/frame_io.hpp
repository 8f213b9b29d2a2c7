#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "trajex/config.hpp"
#include "trajex/errors.hpp"
#include "trajex/image.hpp"
#include "trajex/image_io.hpp"
#include "trajex/parallel.hpp"
#include "trajex/proposal.hpp"

namespace trajex {

namespace detail {

struct NumberedFile {
    long number;
    std::string path;
    std::string basename;
};

inline std::vector<NumberedFile> list_numbered_frames(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw Error(ErrorCode::MissingDirectory, dir);
    std::vector<NumberedFile> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        for (char& c : ext) c = static_cast<char>(std::tolower(c));
        if (ext != ".pgm" && ext != ".ppm" && ext != ".png") continue;
        std::string stem = e.path().stem().string();
        if (stem.empty() || !std::all_of(stem.begin(), stem.end(),
                                         [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            continue;
        files.push_back({std::stol(stem), e.path().string(), e.path().filename().string()});
    }
    std::sort(files.begin(), files.end(), [](const NumberedFile& a, const NumberedFile& b) {
        if (a.number != b.number) return a.number < b.number;
        return a.basename < b.basename;  // tie break lexicographically
    });
    return files;
}

}  // namespace detail

// Decode all numbered frames in `dir` at native resolution, sorted by the
// numeric value of the basename. No resizing; indices reassigned 0..n-1.
inline FrameSequence load_sequence_raw(const std::string& dir, int threads = 0) {
    auto files = detail::list_numbered_frames(dir);
    if (files.size() < 2)
        throw Error(ErrorCode::TooFewFrames,
                    dir + ": found " + std::to_string(files.size()) + " frame files, need >= 2");
    FrameSequence seq;
    seq.source_id = dir;
    seq.frames.resize(files.size());
    std::exception_ptr first_error;
    std::mutex err_mu;
    parallel_for(files.size(), threads, [&](size_t i) {
        try {
            Frame f = decode_image(files[i].path);
            f.index = static_cast<int>(i);
            seq.frames[i] = std::move(f);
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!first_error) first_error = std::current_exception();
        }
    });
    if (first_error) std::rethrow_exception(first_error);
    return seq;
}

inline FrameSequence resize_sequence(const FrameSequence& raw, int w, int h, int threads = 0) {
    FrameSequence out;
    out.fps = raw.fps;
    out.source_id = raw.source_id;
    out.frames.resize(raw.frames.size());
    parallel_for(raw.frames.size(), threads, [&](size_t i) {
        out.frames[i] = resize_bilinear(raw.frames[i], w, h);
        out.frames[i].index = static_cast<int>(i);
    });
    return out;
}

// Decode + resize to cfg dimensions. Mixed input resolutions are fine; the
// resize normalizes them.
inline FrameSequence load_sequence(const std::string& dir, const PipelineConfig& cfg,
                                   int threads = 0) {
    return resize_sequence(load_sequence_raw(dir, threads), cfg.resize_w, cfg.resize_h, threads);
}

// First frame with clear hand presence, per the proposal backend. Probes
// every cfg.seed_probe_stride-th frame (plus the last), then backtracks
// linearly to the first affirmative. Backend calls are strictly sequential.
inline int select_seed_frame(const FrameSequence& seq, VlmBackend& backend,
                             const PipelineConfig& cfg) {
    int n = seq.size();
    if (cfg.seed_frame_override) {
        int s = *cfg.seed_frame_override;
        if (s < 0 || s >= n)
            throw Error(ErrorCode::SeedFrameOutOfRange,
                        "seed_frame_override " + std::to_string(s) + " not in [0," +
                            std::to_string(n) + ")");
        return s;
    }
    std::vector<char> asked(n, 0), answer(n, 0);
    auto query = [&](int t) {
        if (!asked[t]) {
            answer[t] = query_hand_presence(backend, seq.frames[t], cfg) ? 1 : 0;
            asked[t] = 1;
        }
        return answer[t] != 0;
    };
    int stride = cfg.seed_probe_stride;
    int prev_probe = -1;
    for (int t = 0; t < n; t += stride) {
        if (query(t)) {
            for (int j = prev_probe + 1; j < t; ++j)
                if (query(j)) return j;
            return t;
        }
        prev_probe = t;
    }
    // No strided probe was affirmative; sweep whatever was skipped.
    for (int t = 0; t < n; ++t)
        if (query(t)) return t;
    throw Error(ErrorCode::NoHandFrameFound, seq.source_id);
}

}  // namespace trajex
