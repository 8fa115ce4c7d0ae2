#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "arcset.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "polygon.hpp"
#include "vec2.hpp"

namespace fraccurv {

/// Footpoint region B. Regions are closed; `dilated_j_complement` is the set of points at
/// distance more than c * eps from the complement of J (J shrunk by c * eps).
class RegionFilter {
public:
    enum class Kind { all, ball, half_plane, polygon, dilated_j_complement };

    static RegionFilter all() { return RegionFilter(Kind::all); }
    static RegionFilter ball(Vec2 center, double radius) {
        if (!(radius > 0.0)) throw InputError("ball radius must be positive");
        RegionFilter r(Kind::ball);
        r.center_ = center;
        r.radius_ = radius;
        return r;
    }
    /// {x : n.x <= b}; n need not be normalized.
    static RegionFilter half_plane(Vec2 n, double b) {
        const double l = norm(n);
        if (!(l > 0.0)) throw InputError("half-plane normal must be nonzero");
        RegionFilter r(Kind::half_plane);
        r.hp_ = {(1.0 / l) * n, b / l};
        return r;
    }
    static RegionFilter polygon(ConvexPolygon p) {
        RegionFilter r(Kind::polygon);
        r.poly_ = std::move(p);  // the constructor already rejected non-convex input
        r.hps_ = r.poly_.halfplanes();
        return r;
    }
    static RegionFilter away_from_boundary(ConvexPolygon J, double c) {
        if (!(c > 0.0)) throw InputError("boundary distance factor must be positive");
        RegionFilter r(Kind::dilated_j_complement);
        r.poly_ = std::move(J);
        r.factor_ = c;
        return r;
    }

    Kind kind() const noexcept { return kind_; }
    Vec2 center() const noexcept { return center_; }
    double radius() const noexcept { return radius_; }
    const HalfPlane& half_plane_data() const noexcept { return hp_; }

    /// Concrete convex region for disk radius eps (polygon kinds only).
    ConvexPolygon polygon_for(double eps) const {
        if (kind_ == Kind::dilated_j_complement) return poly_.inset(factor_ * eps);
        return poly_;
    }

    /// The region for a fixed eps, with the shrunken-J kind turned into a plain polygon.
    RegionFilter resolve(double eps) const {
        if (kind_ != Kind::dilated_j_complement) return *this;
        return polygon(polygon_for(eps));
    }

    bool contains(Vec2 p, double eps) const {
        switch (kind_) {
            case Kind::all: return true;
            case Kind::ball: return norm2(p - center_) <= radius_ * radius_;
            case Kind::half_plane: return hp_.slack(p) >= 0.0;
            case Kind::polygon: return poly_.contains(p);
            case Kind::dilated_j_complement: {
                return poly_.distance_to_complement(p) > factor_ * eps;
            }
        }
        return false;
    }

    /// Angles theta with c + eps * unit(theta) inside the region.
    DirectionSet circle_angles(Vec2 c, double eps) const {
        switch (kind_) {
            case Kind::all: return DirectionSet::full();
            case Kind::ball: return ball_angles(c, eps, center_, radius_);
            case Kind::half_plane: return half_plane_angles(c, eps, hp_);
            case Kind::polygon: {
                if (poly_.empty()) return DirectionSet::empty();
                DirectionSet s = DirectionSet::full();
                for (std::size_t i = 0; i < hps_.size() && !s.is_empty(); ++i)
                    s = s.intersect(half_plane_angles(c, eps, hps_[i]));
                return s;
            }
            case Kind::dilated_j_complement: return resolve(eps).circle_angles(c, eps);
        }
        return DirectionSet::empty();
    }

    /// Quick rejection: can the circle of radius eps around c meet the region?
    bool may_touch(Vec2 c, double eps) const {
        switch (kind_) {
            case Kind::all: return true;
            case Kind::ball: return dist(c, center_) <= radius_ + eps;
            case Kind::half_plane: return hp_.slack(c) >= -eps;
            case Kind::polygon:  // outside a convex polygon the margin is at least minus the distance
                return !poly_.empty() && poly_.margin(c) >= -2.0 * eps;
            case Kind::dilated_j_complement: return resolve(eps).may_touch(c, eps);
        }
        return false;
    }

    static DirectionSet ball_angles(Vec2 c, double eps, Vec2 x, double rho) {
        const Vec2 v = x - c;
        const double d = norm(v);
        if (d == 0.0) return eps <= rho ? DirectionSet::full() : DirectionSet::empty();
        const double k = (eps * eps + d * d - rho * rho) / (2.0 * eps * d);
        if (k <= -1.0) return DirectionSet::full();
        if (k > 1.0) return DirectionSet::empty();
        const double w = std::acos(k);
        return DirectionSet::interval(polar_angle(v) - w, 2.0 * w);
    }

    static DirectionSet half_plane_angles(Vec2 c, double eps, const HalfPlane& h) {
        const double k = h.slack(c) / eps;
        if (k >= 1.0) return DirectionSet::full();
        if (k < -1.0) return DirectionSet::empty();
        const double w = std::acos(k);
        return DirectionSet::interval(polar_angle(h.n) + w, kTwoPi - 2.0 * w);
    }

private:
    explicit RegionFilter(Kind k) : kind_(k) {}

    Kind kind_;
    Vec2 center_{};
    double radius_ = 0.0;
    HalfPlane hp_{};
    ConvexPolygon poly_{};
    std::vector<HalfPlane> hps_;
    double factor_ = 0.0;
};

namespace detail {

/// Green term 1/2 int (x dy - y dx) along the ccw circle arc of radius e around c.
inline double green_arc(Vec2 c, double e, double t1, double len) {
    const double t2 = t1 + len;
    return 0.5 * (e * (c.x * (std::sin(t2) - std::sin(t1)) - c.y * (std::cos(t2) - std::cos(t1))) + e * e * len);
}

/// Union of closed parameter intervals, returned sorted and merged.
inline std::vector<std::pair<double, double>> merge_intervals(std::vector<std::pair<double, double>> v) {
    std::sort(v.begin(), v.end());
    std::vector<std::pair<double, double>> out;
    for (const auto& iv : v) {
        if (!out.empty() && iv.first <= out.back().second)
            out.back().second = std::max(out.back().second, iv.second);
        else
            out.push_back(iv);
    }
    return out;
}

/// Green term of the parts of segment [p, q] covered by the disk union.
inline double green_segment_covered(const DiskUnion& du, Vec2 p, Vec2 q) {
    const double e = du.radius();
    const Vec2 d = q - p;
    const double L2 = norm2(d);
    if (L2 == 0.0) return 0.0;
    std::vector<std::pair<double, double>> ivs;
    for (const auto& c : du.centers()) {
        // |p + s d - c|^2 <= e^2
        const Vec2 w = p - c;
        const double B = dot(w, d) / L2;
        const double C = (norm2(w) - e * e) / L2;
        const double disc = B * B - C;
        if (disc <= 0.0) continue;
        const double r = std::sqrt(disc);
        const double s1 = std::max(0.0, -B - r), s2 = std::min(1.0, -B + r);
        if (s2 > s1) ivs.push_back({s1, s2});
    }
    double g = 0.0;
    for (const auto& [s1, s2] : merge_intervals(std::move(ivs))) {
        const Vec2 a = p + s1 * d, b = p + s2 * d;
        g += 0.5 * cross(a, b);
    }
    return g;
}

}  // namespace detail

/// Exact area of (disk union) intersected with the region, by Green's theorem on
/// (boundary of union inside B) plus (boundary of B inside union).
inline double region_area(const DiskUnion& du, const ArcBoundary& ab, const RegionFilter& region) {
    if (region.kind() == RegionFilter::Kind::all) return union_area(ab);
    const double e = du.radius();
    const RegionFilter B = region.resolve(e);
    double g = 0.0;
    for (const auto& a : ab.arcs) {
        if (!B.may_touch(a.c, e)) continue;
        const DirectionSet in = B.circle_angles(a.c, e);
        for (const auto& piece : in.clip({a.t1, a.len})) g += detail::green_arc(a.c, e, piece.start, piece.length);
    }
    switch (B.kind()) {
        case RegionFilter::Kind::ball: {
            const Vec2 x = B.center();
            const double rho = B.radius();
            DirectionSet covered;
            bool inside_one = false;
            du.for_each_near(x, rho + e, [&](std::uint32_t j) {
                const Vec2 c = du.centers()[j];
                const double d = dist(c, x);
                if (d + rho <= e) { inside_one = true; return true; }
                if (d < rho + e && d > std::abs(rho - e)) {
                    // Angles on circle(x, rho) inside disk(c, e).
                    covered = covered.unite(RegionFilter::ball_angles(x, rho, c, e));
                }
                return false;
            });
            if (inside_one) covered = DirectionSet::full();
            for (const auto& p : covered.pieces()) g += detail::green_arc(x, rho, p.lo, p.hi - p.lo);
            break;
        }
        case RegionFilter::Kind::half_plane: {
            const HalfPlane& h = B.half_plane_data();
            const Vec2 t{-h.n.y, h.n.x};
            const Vec2 foot = h.b * h.n;
            double lo = INFINITY, hi = -INFINITY;
            for (const auto& c : du.centers()) {
                const double s = dot(c - foot, t);
                lo = std::min(lo, s - e);
                hi = std::max(hi, s + e);
            }
            g += detail::green_segment_covered(du, foot + lo * t, foot + hi * t);
            break;
        }
        case RegionFilter::Kind::polygon:
        case RegionFilter::Kind::dilated_j_complement: {
            const ConvexPolygon P = B.polygon_for(e);
            for (std::size_t i = 0; i < P.size(); ++i) g += detail::green_segment_covered(du, P[i], P[i + 1]);
            break;
        }
        case RegionFilter::Kind::all: break;
    }
    return g;
}

}  // namespace fraccurv
