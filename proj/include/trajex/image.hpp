#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "trajex/errors.hpp"

namespace trajex {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::hypot(x, y); }
};

// One decoded video frame. gray is row-major luminance in [0,1]; rgb, when
// present, is interleaved r,g,b per pixel, also in [0,1].
struct Frame {
    int index = 0;
    int width = 0;
    int height = 0;
    std::vector<float> gray;
    std::vector<float> rgb;

    bool has_rgb() const { return !rgb.empty(); }
    float at(int x, int y) const { return gray[static_cast<size_t>(y) * width + x]; }
    float& at(int x, int y) { return gray[static_cast<size_t>(y) * width + x]; }

    void check_invariants() const {
        if (width < 2 || height < 2)
            throw Error(ErrorCode::InvariantViolation, "frame dimensions below 2x2");
        if (gray.size() != static_cast<size_t>(width) * height)
            throw Error(ErrorCode::InvariantViolation, "gray size != width*height");
        if (!rgb.empty() && rgb.size() != static_cast<size_t>(width) * height * 3)
            throw Error(ErrorCode::InvariantViolation, "rgb size != 3*width*height");
        for (float v : gray)
            if (!(v >= 0.0f && v <= 1.0f))
                throw Error(ErrorCode::InvariantViolation, "gray value outside [0,1]");
        for (float v : rgb)
            if (!(v >= 0.0f && v <= 1.0f))
                throw Error(ErrorCode::InvariantViolation, "rgb value outside [0,1]");
    }
};

struct FrameSequence {
    std::vector<Frame> frames;
    std::optional<double> fps;
    std::string source_id;

    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    int size() const { return static_cast<int>(frames.size()); }

    void check_invariants() const {
        if (frames.size() < 2)
            throw Error(ErrorCode::InvariantViolation, "sequence shorter than 2 frames");
        for (size_t i = 0; i < frames.size(); ++i) {
            if (frames[i].index != static_cast<int>(i))
                throw Error(ErrorCode::InvariantViolation, "frame index mismatch");
            if (frames[i].width != width() || frames[i].height != height())
                throw Error(ErrorCode::InvariantViolation, "non-uniform frame dimensions");
        }
    }
};

// Rec.601 luma.
inline float luminance(float r, float g, float b) {
    return 0.299f * r + 0.587f * g + 0.114f * b;
}

// rgb: interleaved triples, 3*n entries -> n luminance values.
inline std::vector<float> to_grayscale(const std::vector<float>& rgb) {
    std::vector<float> out(rgb.size() / 3);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = luminance(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
    return out;
}

// Bilinear sample with edge clamp. (x,y) in pixel-center coordinates:
// (0,0) is the center of the top-left pixel.
inline double bilinear_sample(const std::vector<float>& grid, int w, int h, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    int x0 = static_cast<int>(x);
    int y0 = static_cast<int>(y);
    int x1 = std::min(x0 + 1, w - 1);
    int y1 = std::min(y0 + 1, h - 1);
    double fx = x - x0;
    double fy = y - y0;
    double top = grid[static_cast<size_t>(y0) * w + x0] * (1.0 - fx) +
                 grid[static_cast<size_t>(y0) * w + x1] * fx;
    double bot = grid[static_cast<size_t>(y1) * w + x0] * (1.0 - fx) +
                 grid[static_cast<size_t>(y1) * w + x1] * fx;
    return top * (1.0 - fy) + bot * fy;
}

namespace detail {

inline std::vector<float> resize_plane(const std::vector<float>& src, int sw, int sh,
                                       int dw, int dh, int channels) {
    std::vector<float> dst(static_cast<size_t>(dw) * dh * channels);
    double sx_scale = static_cast<double>(sw) / dw;
    double sy_scale = static_cast<double>(sh) / dh;
    for (int y = 0; y < dh; ++y) {
        // Pixel-center alignment: sample at (d+0.5)*scale - 0.5.
        double sy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, static_cast<double>(sh - 1));
        int y0 = static_cast<int>(sy);
        int y1 = std::min(y0 + 1, sh - 1);
        double fy = sy - y0;
        for (int x = 0; x < dw; ++x) {
            double sx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, static_cast<double>(sw - 1));
            int x0 = static_cast<int>(sx);
            int x1 = std::min(x0 + 1, sw - 1);
            double fx = sx - x0;
            for (int c = 0; c < channels; ++c) {
                auto px = [&](int xx, int yy) {
                    return src[(static_cast<size_t>(yy) * sw + xx) * channels + c];
                };
                double top = px(x0, y0) * (1.0 - fx) + px(x1, y0) * fx;
                double bot = px(x0, y1) * (1.0 - fx) + px(x1, y1) * fx;
                double v = top * (1.0 - fy) + bot * fy;
                dst[(static_cast<size_t>(y) * dw + x) * channels + c] =
                    static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return dst;
}

}  // namespace detail

inline Frame resize_bilinear(const Frame& f, int w, int h) {
    if (w < 2 || h < 2)
        throw Error(ErrorCode::BadDimensions, "resize target below 2x2");
    if (w == f.width && h == f.height) return f;
    Frame out;
    out.index = f.index;
    out.width = w;
    out.height = h;
    out.gray = detail::resize_plane(f.gray, f.width, f.height, w, h, 1);
    if (f.has_rgb()) out.rgb = detail::resize_plane(f.rgb, f.width, f.height, w, h, 3);
    return out;
}

}  // namespace trajex
