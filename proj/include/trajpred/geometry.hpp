#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "trajpred/errors.hpp"

namespace trajpred {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }

    // plain sqrt form, matching scalar-loop oracles bit for bit
    double norm() const { return std::sqrt(x * x + y * y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Proper rigid motion p -> R p + t. Used as the agent-centric
/// normalization: it carries dataset coordinates into the frame whose origin
/// is the agent's last observed position and whose +x axis is its heading.
class RigidTransform2D {
public:
    RigidTransform2D() : r_{1.0, 0.0, 0.0, 1.0}, t_{0.0, 0.0} {}

    RigidTransform2D(const std::array<double, 4>& rotation, Vec2 translation)
        : r_(rotation), t_(translation) {}

    static RigidTransform2D identity() { return RigidTransform2D(); }

    static RigidTransform2D rotation_angle(double radians, Vec2 translation = {}) {
        const double c = std::cos(radians), s = std::sin(radians);
        return RigidTransform2D({c, -s, s, c}, translation);
    }

    Vec2 apply(Vec2 p) const {
        return {r_[0] * p.x + r_[1] * p.y + t_.x, r_[2] * p.x + r_[3] * p.y + t_.y};
    }

    RigidTransform2D inverse() const {
        // R orthonormal: inverse rotation is the transpose.
        const std::array<double, 4> rt{r_[0], r_[2], r_[1], r_[3]};
        const Vec2 ti{-(rt[0] * t_.x + rt[1] * t_.y), -(rt[2] * t_.x + rt[3] * t_.y)};
        return RigidTransform2D(rt, ti);
    }

    /// Composition: apply `other` first, then this.
    RigidTransform2D compose(const RigidTransform2D& other) const {
        std::array<double, 4> r{
            r_[0] * other.r_[0] + r_[1] * other.r_[2],
            r_[0] * other.r_[1] + r_[1] * other.r_[3],
            r_[2] * other.r_[0] + r_[3] * other.r_[2],
            r_[2] * other.r_[1] + r_[3] * other.r_[3],
        };
        return RigidTransform2D(r, apply(other.t_));
    }

    const std::array<double, 4>& rotation() const { return r_; }
    Vec2 translation() const { return t_; }

    double determinant() const { return r_[0] * r_[3] - r_[1] * r_[2]; }

    bool is_orthonormal(double tol = 1e-9) const {
        const double c0 = r_[0] * r_[0] + r_[2] * r_[2];
        const double c1 = r_[1] * r_[1] + r_[3] * r_[3];
        const double dot = r_[0] * r_[1] + r_[2] * r_[3];
        return std::abs(c0 - 1.0) < tol && std::abs(c1 - 1.0) < tol && std::abs(dot) < tol &&
               std::abs(determinant() - 1.0) < tol;
    }

private:
    std::array<double, 4> r_; // row-major 2x2
    Vec2 t_;
};

/// Transform that sends the last observed point to the origin and the last
/// displacement onto the +x axis. A degenerate (zero) final displacement
/// falls back to the most recent nonzero displacement in the window; a fully
/// static window keeps the identity rotation.
inline RigidTransform2D heading_transform(std::span<const Vec2> observed,
                                          double eps = 1e-12) {
    if (observed.size() < 2) {
        throw ContractError("heading_transform: need at least 2 observed points, got " +
                            std::to_string(observed.size()));
    }
    Vec2 heading{0.0, 0.0};
    for (std::size_t i = observed.size(); i-- > 1;) {
        const Vec2 d = observed[i] - observed[i - 1];
        if (d.norm() > eps) {
            heading = d;
            break;
        }
    }
    std::array<double, 4> rot{1.0, 0.0, 0.0, 1.0};
    if (heading.norm() > eps) {
        const double theta = std::atan2(heading.y, heading.x);
        const double c = std::cos(theta), s = std::sin(theta);
        // rotate by -theta: maps the heading onto +x
        rot = {c, s, -s, c};
    }
    const Vec2 last = observed.back();
    const Vec2 t{-(rot[0] * last.x + rot[1] * last.y), -(rot[2] * last.x + rot[3] * last.y)};
    return RigidTransform2D(rot, t);
}

inline std::vector<Vec2> apply_transform(const RigidTransform2D& t,
                                         std::span<const Vec2> points) {
    std::vector<Vec2> out;
    out.reserve(points.size());
    for (Vec2 p : points) out.push_back(t.apply(p));
    return out;
}

} // namespace trajpred
