#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "arcset.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "polygon.hpp"
#include "region.hpp"
#include "vec2.hpp"

namespace fraccurv {

/// Signed measure on the circle of directions: histogram (positive and negative parts kept
/// apart) plus exact atoms. A direction filter R may be attached; every mass added afterwards
/// is clipped to R exactly.
class DirectionMeasure {
public:
    struct Atom {
        double angle;
        double mass;
    };

    explicit DirectionMeasure(int n_bins = 720, DirectionSet filter = DirectionSet::full())
        : pos_(n_bins, 0.0), neg_(n_bins, 0.0), filter_(std::move(filter)) {
        if (n_bins < 1) throw InputError("n_bins must be positive");
    }

    int n_bins() const noexcept { return static_cast<int>(pos_.size()); }
    double bin_width() const noexcept { return kTwoPi / n_bins(); }
    double bin_center(int b) const noexcept { return (b + 0.5) * bin_width(); }
    const DirectionSet& filter() const noexcept { return filter_; }
    const std::vector<double>& pos_bins() const noexcept { return pos_; }
    const std::vector<double>& neg_bins() const noexcept { return neg_; }
    const std::vector<Atom>& atoms() const noexcept { return atoms_; }

    std::vector<double> bins() const {
        std::vector<double> b(pos_.size());
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = pos_[i] - neg_[i];
        return b;
    }

    /// Histogram with atoms folded into their bins (for comparisons at bin resolution).
    std::vector<double> binned() const {
        auto b = bins();
        for (const auto& a : atoms_) b[bin_of(a.angle)] += a.mass;
        return b;
    }

    double total_pos() const {
        double s = 0.0;
        for (double v : pos_) s += v;
        for (const auto& a : atoms_) if (a.mass > 0.0) s += a.mass;
        return s;
    }
    double total_neg() const {
        double s = 0.0;
        for (double v : neg_) s += v;
        for (const auto& a : atoms_) if (a.mass < 0.0) s -= a.mass;
        return s;
    }
    double total() const { return total_pos() - total_neg(); }
    double variation() const { return total_pos() + total_neg(); }

    int bin_of(double theta) const {
        const int b = static_cast<int>(wrap_2pi(theta) / bin_width());
        return std::min(b, n_bins() - 1);
    }

    /// Mass spread uniformly over [iv.start, iv.start + iv.length) (before filtering).
    void add_uniform(AngularInterval iv, double mass) {
        if (mass == 0.0) return;
        if (iv.length <= 0.0) {
            add_atom(iv.start, mass);
            return;
        }
        const double density = mass / iv.length;
        auto& dst = mass > 0.0 ? pos_ : neg_;
        const double dens = std::abs(density);
        if (filter_.is_full()) {
            spread(dst, iv.start, iv.length, dens);
        } else {
            for (const auto& p : filter_.clip(iv)) spread(dst, p.start, p.length, dens);
        }
    }

    void add_atom(double theta, double mass) {
        if (mass == 0.0 || !filter_.contains(theta)) return;
        const double t = wrap_2pi(theta);
        for (auto& a : atoms_)
            if (a.angle == t) { a.mass += mass; return; }
        atoms_.push_back({t, mass});
    }

    DirectionMeasure& operator+=(const DirectionMeasure& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < pos_.size(); ++i) {
            pos_[i] += o.pos_[i];
            neg_[i] += o.neg_[i];
        }
        for (const auto& a : o.atoms_) add_atom_unfiltered(a.angle, a.mass);
        return *this;
    }

    DirectionMeasure scaled(double s) const {
        DirectionMeasure r = *this;
        if (s < 0.0) std::swap(r.pos_, r.neg_);
        for (auto& v : r.pos_) v *= std::abs(s);
        for (auto& v : r.neg_) v *= std::abs(s);
        for (auto& a : r.atoms_) a.mass *= s;
        return r;
    }

    /// Image under rotation by phi. Bins shift exactly when phi is a multiple of the bin width,
    /// otherwise each bin is split linearly between its two target bins.
    DirectionMeasure rotated(double phi) const {
        DirectionMeasure r(n_bins(), filter_.rotated(phi));
        const double shift = wrap_2pi(phi) / bin_width();
        const double whole = std::round(shift);
        const int n = n_bins();
        if (std::abs(shift - whole) < 1e-9) {
            const int k = static_cast<int>(whole) % n;
            for (int b = 0; b < n; ++b) {
                r.pos_[(b + k) % n] = pos_[b];
                r.neg_[(b + k) % n] = neg_[b];
            }
        } else {
            const int k = static_cast<int>(std::floor(shift));
            const double f = shift - k;
            for (int b = 0; b < n; ++b) {
                r.pos_[(b + k) % n] += (1.0 - f) * pos_[b];
                r.pos_[(b + k + 1) % n] += f * pos_[b];
                r.neg_[(b + k) % n] += (1.0 - f) * neg_[b];
                r.neg_[(b + k + 1) % n] += f * neg_[b];
            }
        }
        for (const auto& a : atoms_) r.atoms_.push_back({wrap_2pi(a.angle + phi), a.mass});
        return r;
    }

    /// Restriction to R: bins by proportional overlap, atoms by left-closed membership.
    DirectionMeasure restricted(const DirectionSet& R) const {
        DirectionMeasure r(n_bins(), filter_.intersect(R));
        const double w = bin_width();
        for (int b = 0; b < n_bins(); ++b) {
            const double f = R.overlap({b * w, w}) / w;
            r.pos_[b] = f * pos_[b];
            r.neg_[b] = f * neg_[b];
        }
        for (const auto& a : atoms_)
            if (R.contains(a.angle)) r.atoms_.push_back(a);
        return r;
    }

    /// Mass in the closed arc [from, from + len] at bin resolution (partial bins pro rata, atoms exact).
    double mass_in(double from, double len) const {
        const DirectionSet R = DirectionSet::interval(from, len);
        double s = 0.0;
        const double w = bin_width();
        for (int b = 0; b < n_bins(); ++b) {
            const double f = R.overlap({b * w, w}) / w;
            s += f * (pos_[b] - neg_[b]);
        }
        for (const auto& a : atoms_)
            if (R.contains(a.angle) || std::abs(wrap_pi(a.angle - from - len)) < 1e-15) s += a.mass;
        return s;
    }

private:
    void check_compatible(const DirectionMeasure& o) const {
        if (o.n_bins() != n_bins()) throw InputError("direction measures with different binning");
    }

    void add_atom_unfiltered(double theta, double mass) {
        const double t = wrap_2pi(theta);
        for (auto& a : atoms_)
            if (a.angle == t) { a.mass += mass; return; }
        atoms_.push_back({t, mass});
    }

    void spread(std::vector<double>& dst, double start, double len, double density) {
        const double w = bin_width();
        const int n = n_bins();
        double a = wrap_2pi(start);
        double remaining = len;
        int b = std::min(static_cast<int>(a / w), n - 1);
        // Walk bin by bin; the list index wraps at 2pi.
        while (remaining > 0.0) {
            const double bin_end = (b + 1) * w;
            const double take = std::min(remaining, std::max(0.0, bin_end - a));
            dst[b] += take * density;
            remaining -= take;
            a = bin_end;
            if (++b == n) {
                b = 0;
                a = 0.0;
            }
        }
    }

    std::vector<double> pos_;
    std::vector<double> neg_;
    std::vector<Atom> atoms_;
    DirectionSet filter_;
};

struct MeasureOptions {
    int n_bins = 720;
    DirectionSet R = DirectionSet::full();
};

/// C_1: half the boundary length, carried by the outward normals.
inline DirectionMeasure c1_measure(const ArcBoundary& ab, const RegionFilter& region = RegionFilter::all(),
                                   const MeasureOptions& opt = {}) {
    DirectionMeasure m(opt.n_bins, opt.R);
    const double e = ab.eps;
    const RegionFilter B = region.resolve(e);
    for (const auto& a : ab.arcs) {
        if (B.kind() == RegionFilter::Kind::all) {
            m.add_uniform({a.t1, a.len}, 0.5 * e * a.len);
            continue;
        }
        if (!B.may_touch(a.c, e)) continue;
        for (const auto& p : B.circle_angles(a.c, e).clip({a.t1, a.len})) m.add_uniform(p, 0.5 * e * p.length);
    }
    return m;
}

/// C_0: arcs carry their turning angle / 2pi, reflex vertices a negative wedge of the same kind.
inline DirectionMeasure c0_measure(const ArcBoundary& ab, const RegionFilter& region = RegionFilter::all(),
                                   const MeasureOptions& opt = {}) {
    DirectionMeasure m(opt.n_bins, opt.R);
    const double e = ab.eps;
    const RegionFilter B = region.resolve(e);
    const bool all = B.kind() == RegionFilter::Kind::all;
    for (const auto& a : ab.arcs) {
        if (all) {
            m.add_uniform({a.t1, a.len}, a.len / kTwoPi);
            continue;
        }
        if (!B.may_touch(a.c, e)) continue;
        for (const auto& p : B.circle_angles(a.c, e).clip({a.t1, a.len})) m.add_uniform(p, p.length / kTwoPi);
    }
    for (const auto& v : ab.vertices) {
        if (!all && !B.contains(v.p, e)) continue;
        const double w = -v.turn();
        m.add_uniform({wrap_2pi(v.n_out), w}, -w / kTwoPi);
    }
    return m;
}

/// C_2: area of the union inside the region, with uniform direction.
inline DirectionMeasure c2_measure(const DiskUnion& du, const ArcBoundary& ab,
                                   const RegionFilter& region = RegionFilter::all(), const MeasureOptions& opt = {}) {
    DirectionMeasure m(opt.n_bins, opt.R);
    m.add_uniform({0.0, kTwoPi}, region_area(du, ab, region));
    return m;
}

inline DirectionMeasure curvature_measure(int k, const DiskUnion& du, const ArcBoundary& ab,
                                          const RegionFilter& region = RegionFilter::all(),
                                          const MeasureOptions& opt = {}) {
    switch (k) {
        case 0: return c0_measure(ab, region, opt);
        case 1: return c1_measure(ab, region, opt);
        case 2: return c2_measure(du, ab, region, opt);
        default: throw InputError("curvature index must be 0, 1 or 2");
    }
}

inline DirectionMeasure restrict_direction(const DirectionMeasure& m, const DirectionSet& R) { return m.restricted(R); }

/// Classical curvature-direction measures of the parallel body P(eps) of a convex polygon.
inline DirectionMeasure convex_polygon_measures(const ConvexPolygon& P, double eps, int k,
                                                const MeasureOptions& opt = {}) {
    if (P.empty()) throw InputError("empty polygon");
    // Re-run the convexity check in case the polygon was built without validation.
    ConvexPolygon checked(P.vertices());
    if (!(eps > 0.0)) throw InputError("eps must be positive");
    DirectionMeasure m(opt.n_bins, opt.R);
    const std::size_t n = checked.size();
    std::vector<double> normal(n), length(n);
    for (std::size_t i = 0; i < n; ++i) {
        normal[i] = wrap_2pi(polar_angle(checked.edge_halfplane(i).n));
        length[i] = dist(checked[i], checked[i + 1]);
    }
    if (k == 2) {
        m.add_uniform({0.0, kTwoPi}, checked.area() + checked.perimeter() * eps + kPi * eps * eps);
        return m;
    }
    for (std::size_t i = 0; i < n; ++i) {
        // Corner at vertex i sits between edge i-1 and edge i.
        const double from = normal[(i + n - 1) % n];
        const double ext = wrap_2pi(normal[i] - from);
        if (k == 1) {
            m.add_atom(normal[i], 0.5 * length[i]);
            m.add_uniform({from, ext}, 0.5 * eps * ext);
        } else if (k == 0) {
            m.add_uniform({from, ext}, ext / kTwoPi);
        } else {
            throw InputError("curvature index must be 0, 1 or 2");
        }
    }
    return m;
}

}  // namespace fraccurv
