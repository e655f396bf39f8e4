#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trajpred/eval.hpp"
#include "trajpred/geometry.hpp"
#include "trajpred/image.hpp"

namespace trajpred {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{20, 20, 20};
inline constexpr Rgb kBlue{40, 80, 220};   // ground truth
inline constexpr Rgb kRed{220, 50, 40};    // predictions
inline constexpr Rgb kGray{180, 180, 180};

/// Minimal software canvas for static plot rendering.
class Canvas {
public:
    Canvas(std::size_t width, std::size_t height, Rgb bg = kWhite)
        : width_(width), height_(height), rgb_(width * height * 3) {
        for (std::size_t i = 0; i < width_ * height_; ++i) {
            rgb_[i * 3] = bg.r;
            rgb_[i * 3 + 1] = bg.g;
            rgb_[i * 3 + 2] = bg.b;
        }
    }

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }

    void set(long x, long y, Rgb c) {
        if (x < 0 || y < 0 || x >= static_cast<long>(width_) || y >= static_cast<long>(height_)) {
            return;
        }
        const std::size_t i = (static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x)) * 3;
        rgb_[i] = c.r;
        rgb_[i + 1] = c.g;
        rgb_[i + 2] = c.b;
    }

    void line(double x0, double y0, double x1, double y1, Rgb c) {
        const double dx = x1 - x0, dy = y1 - y0;
        const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(dx),
                                                                          std::abs(dy)))));
        for (int k = 0; k <= steps; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(steps);
            set(std::lround(x0 + dx * t), std::lround(y0 + dy * t), c);
        }
    }

    void disc(double cx, double cy, double radius, Rgb c) {
        const long r = std::max(1L, std::lround(radius));
        for (long dy = -r; dy <= r; ++dy) {
            for (long dx = -r; dx <= r; ++dx) {
                if (dx * dx + dy * dy <= r * r) {
                    set(std::lround(cx) + dx, std::lround(cy) + dy, c);
                }
            }
        }
    }

    void fill_rect(long x0, long y0, long x1, long y1, Rgb c) {
        for (long y = std::min(y0, y1); y <= std::max(y0, y1); ++y) {
            for (long x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
        }
    }

    void save_png(const std::string& path) const {
        write_png(path, height_, width_, rgb_.data());
    }

    const std::vector<std::uint8_t>& bytes() const { return rgb_; }

private:
    std::size_t width_, height_;
    std::vector<std::uint8_t> rgb_;
};

/// World-to-canvas mapping with uniform scale and a pixel margin. Canvas y
/// grows downward while world y grows upward, so y is flipped.
class ViewBox {
public:
    ViewBox(double x0, double x1, double y0, double y1, std::size_t canvas_w,
            std::size_t canvas_h, double margin = 24.0)
        : x0_(x0), y0_(y0), margin_(margin) {
        const double span_x = std::max(x1 - x0, 1e-9);
        const double span_y = std::max(y1 - y0, 1e-9);
        scale_ = std::min((static_cast<double>(canvas_w) - 2 * margin) / span_x,
                          (static_cast<double>(canvas_h) - 2 * margin) / span_y);
        canvas_h_ = static_cast<double>(canvas_h);
    }

    static ViewBox fit(const std::vector<Vec2>& points, std::size_t w, std::size_t h) {
        double x0 = points.front().x, x1 = x0, y0 = points.front().y, y1 = y0;
        for (const Vec2& p : points) {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
        return ViewBox(x0, x1, y0, y1, w, h);
    }

    std::pair<double, double> map(Vec2 p) const {
        return {margin_ + (p.x - x0_) * scale_,
                canvas_h_ - margin_ - (p.y - y0_) * scale_};
    }

private:
    double x0_, y0_, margin_, scale_, canvas_h_;
};

inline void draw_polyline(Canvas& canvas, const ViewBox& view, const std::vector<Vec2>& pts,
                          Rgb color, double dot_radius = 2.0) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto [x, y] = view.map(pts[i]);
        if (i > 0) {
            const auto [px, py] = view.map(pts[i - 1]);
            canvas.line(px, py, x, y, color);
        }
        canvas.disc(x, y, dot_radius, color);
    }
}

/// Trajectory overlay: ground truth (observed + future) in blue, the
/// prediction in red.
inline Canvas plot_scene_overlay(const Scene& scene, const std::vector<Vec2>& world_prediction,
                                 std::size_t size = 480) {
    std::vector<Vec2> all = scene.observed_positions();
    const auto future = scene.future_positions();
    all.insert(all.end(), future.begin(), future.end());
    all.insert(all.end(), world_prediction.begin(), world_prediction.end());
    Canvas canvas(size, size);
    ViewBox view = ViewBox::fit(all, size, size);
    for (const auto& n : scene.neighbors) {
        std::vector<Vec2> pts;
        for (std::size_t k = 0; k < n.points.size(); ++k) {
            if (n.valid[k]) pts.push_back(n.points[k].pos);
        }
        draw_polyline(canvas, view, pts, kGray, 1.5);
    }
    std::vector<Vec2> gt = scene.observed_positions();
    gt.insert(gt.end(), future.begin(), future.end());
    draw_polyline(canvas, view, gt, kBlue);
    draw_polyline(canvas, view, world_prediction, kRed);
    return canvas;
}

/// Bar histogram of final displacement errors with a median marker.
inline Canvas plot_histogram(const ErrorDistribution& dist, std::size_t width = 560,
                             std::size_t height = 360) {
    Canvas canvas(width, height);
    const double margin = 30.0;
    const std::size_t bins = dist.hist_counts.size();
    std::size_t peak = 1;
    for (auto c : dist.hist_counts) peak = std::max(peak, c);
    const double bar_w = (static_cast<double>(width) - 2 * margin) / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        const double h = (static_cast<double>(height) - 2 * margin) *
                         static_cast<double>(dist.hist_counts[b]) / static_cast<double>(peak);
        const long x0 = std::lround(margin + bar_w * static_cast<double>(b)) + 1;
        const long x1 = std::lround(margin + bar_w * static_cast<double>(b + 1)) - 1;
        const long y1 = std::lround(static_cast<double>(height) - margin);
        canvas.fill_rect(x0, std::lround(static_cast<double>(height) - margin - h), x1, y1,
                         kBlue);
    }
    // axis + median marker
    canvas.line(margin, height - margin, width - margin, height - margin, kBlack);
    const double span = std::max(dist.hist_max - dist.hist_min, 1e-12);
    const double mx =
        margin + (dist.median - dist.hist_min) / span * (static_cast<double>(width) - 2 * margin);
    canvas.line(mx, margin, mx, height - margin, kRed);
    return canvas;
}

namespace detail {

/// Marching-squares segments of one iso-level on a row-major grid.
inline void draw_iso_contour(Canvas& canvas, const std::vector<double>& grid, std::size_t n,
                             double x0, double x1, double y0, double y1, double level,
                             const ViewBox& view, Rgb color) {
    auto grid_world = [&](double gx, double gy) -> Vec2 {
        return {x0 + (x1 - x0) * (gx + 0.5) / static_cast<double>(n),
                y0 + (y1 - y0) * (gy + 0.5) / static_cast<double>(n)};
    };
    auto lerp = [&](double a, double b) {
        const double d = b - a;
        return std::abs(d) < 1e-300 ? 0.5 : (level - a) / d;
    };
    for (std::size_t gy = 0; gy + 1 < n; ++gy) {
        for (std::size_t gx = 0; gx + 1 < n; ++gx) {
            const double v00 = grid[gy * n + gx];
            const double v10 = grid[gy * n + gx + 1];
            const double v01 = grid[(gy + 1) * n + gx];
            const double v11 = grid[(gy + 1) * n + gx + 1];
            int c = 0;
            if (v00 >= level) c |= 1;
            if (v10 >= level) c |= 2;
            if (v11 >= level) c |= 4;
            if (v01 >= level) c |= 8;
            if (c == 0 || c == 15) continue;
            const double fx = static_cast<double>(gx), fy = static_cast<double>(gy);
            const Vec2 top = grid_world(fx + lerp(v00, v10), fy);
            const Vec2 bottom = grid_world(fx + lerp(v01, v11), fy + 1);
            const Vec2 left = grid_world(fx, fy + lerp(v00, v01));
            const Vec2 right = grid_world(fx + 1, fy + lerp(v10, v11));
            auto segment = [&](Vec2 a, Vec2 b) {
                const auto [ax, ay] = view.map(a);
                const auto [bx, by] = view.map(b);
                canvas.line(ax, ay, bx, by, color);
            };
            switch (c) {
                case 1: case 14: segment(left, top); break;
                case 2: case 13: segment(top, right); break;
                case 3: case 12: segment(left, right); break;
                case 4: case 11: segment(right, bottom); break;
                case 6: case 9: segment(top, bottom); break;
                case 7: case 8: segment(left, bottom); break;
                case 5: segment(left, top); segment(right, bottom); break;
                case 10: segment(top, right); segment(left, bottom); break;
                default: break;
            }
        }
    }
}

} // namespace detail

/// 2-D final-error point cloud with density iso-contours.
inline Canvas plot_error_cloud(const ErrorDistribution& dist, std::size_t size = 560) {
    Canvas canvas(size, size);
    ViewBox view(dist.x0, dist.x1, dist.y0, dist.y1, size, size);
    // axes through the origin
    const auto [ox, oy] = view.map({0, 0});
    canvas.line(0, oy, static_cast<double>(size), oy, kGray);
    canvas.line(ox, 0, ox, static_cast<double>(size), kGray);
    for (const Vec2& p : dist.points) {
        const auto [x, y] = view.map(p);
        canvas.disc(x, y, 1.5, kBlue);
    }
    for (double level : dist.contour_levels) {
        detail::draw_iso_contour(canvas, dist.density, dist.grid_n, dist.x0, dist.x1, dist.y0,
                                 dist.y1, level, view, kRed);
    }
    return canvas;
}

} // namespace trajpred
