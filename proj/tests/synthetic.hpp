#pragma once

// Procedural test sequences with analytic ground truth. Textures are sums of
// random band-limited sinusoids, so a sub-pixel translation is an exact phase
// shift and every frame samples the same continuous function.

#include <cmath>
#include <random>
#include <vector>

#include "trajex/image.hpp"

namespace testutil {

struct SineTexture {
    struct Component {
        double fx, fy, phase, amp;
    };
    std::vector<Component> components;

    static SineTexture make(unsigned seed, int n_components = 12) {
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> freq(0.015, 0.09);   // cycles/px
        std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
        std::uniform_real_distribution<double> amp(0.5, 1.0);
        SineTexture t;
        double energy = 0.0;
        for (int i = 0; i < n_components; ++i) {
            double f = freq(rng), a = angle(rng);
            SineTexture::Component c{f * std::cos(a), f * std::sin(a), angle(rng), amp(rng)};
            energy += c.amp * c.amp / 2.0;  // sin RMS power
            t.components.push_back(c);
        }
        // Normalize to RMS contrast 0.15: strong gradients everywhere while
        // staying inside [0,1] except for rare (~3 sigma) clipped pixels.
        for (auto& c : t.components) c.amp *= 0.15 / std::sqrt(energy);
        return t;
    }

    double operator()(double x, double y) const {
        double v = 0.5;
        for (const auto& c : components)
            v += c.amp * std::sin(2.0 * M_PI * (c.fx * x + c.fy * y) + c.phase);
        return std::clamp(v, 0.0, 1.0);
    }
};

inline trajex::Frame render_texture(const SineTexture& tex, int w, int h, double shift_x,
                                    double shift_y, int index = 0) {
    trajex::Frame f;
    f.index = index;
    f.width = w;
    f.height = h;
    f.gray.resize(static_cast<size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            f.gray[static_cast<size_t>(y) * w + x] =
                static_cast<float>(tex(x - shift_x, y - shift_y));
    return f;
}

// n frames translating at (vx, vy) px/frame. A point at p in frame 0 sits at
// p + t*(vx,vy) in frame t.
inline trajex::FrameSequence make_translating_sequence(unsigned seed, int w, int h, int n,
                                                       double vx, double vy) {
    SineTexture tex = SineTexture::make(seed);
    trajex::FrameSequence seq;
    seq.source_id = "synthetic";
    for (int t = 0; t < n; ++t)
        seq.frames.push_back(render_texture(tex, w, h, vx * t, vy * t, t));
    return seq;
}

inline trajex::FrameSequence make_static_sequence(unsigned seed, int w, int h, int n) {
    return make_translating_sequence(seed, w, h, n, 0.0, 0.0);
}

// Exhaustive integer-displacement normalized-cross-correlation search:
// the brute-force oracle the tracker is checked against.
inline trajex::Vec2 ncc_argmax(const trajex::Frame& a, const trajex::Frame& b, trajex::Vec2 p,
                               int radius, int search) {
    int n = (2 * radius + 1) * (2 * radius + 1);
    std::vector<double> tmpl(n);
    double tmean = 0.0;
    int idx = 0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx, ++idx) {
            tmpl[idx] = trajex::bilinear_sample(a.gray, a.width, a.height, p.x + dx, p.y + dy);
            tmean += tmpl[idx];
        }
    tmean /= n;
    double tvar = 0.0;
    for (double v : tmpl) tvar += (v - tmean) * (v - tmean);

    double best = -2.0;
    trajex::Vec2 best_d{0.0, 0.0};
    for (int sy = -search; sy <= search; ++sy) {
        for (int sx = -search; sx <= search; ++sx) {
            double mean = 0.0;
            std::vector<double> win(n);
            idx = 0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx, ++idx) {
                    win[idx] = trajex::bilinear_sample(b.gray, b.width, b.height,
                                                       p.x + sx + dx, p.y + sy + dy);
                    mean += win[idx];
                }
            mean /= n;
            double cov = 0.0, var = 0.0;
            for (int i = 0; i < n; ++i) {
                cov += (tmpl[i] - tmean) * (win[i] - mean);
                var += (win[i] - mean) * (win[i] - mean);
            }
            double denom = std::sqrt(tvar * var);
            double score = denom > 1e-12 ? cov / denom : -2.0;
            if (score > best) {
                best = score;
                best_d = {static_cast<double>(sx), static_cast<double>(sy)};
            }
        }
    }
    return best_d;
}

// Seed points away from borders with known ground truth across the motion.
inline std::vector<trajex::Vec2> scatter_points(unsigned seed, int count, int w, int h,
                                                double margin) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ux(margin, w - 1 - margin);
    std::uniform_real_distribution<double> uy(margin, h - 1 - margin);
    std::vector<trajex::Vec2> pts;
    for (int i = 0; i < count; ++i) pts.push_back({ux(rng), uy(rng)});
    return pts;
}

}  // namespace testutil
