#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "vec2.hpp"

namespace fraccurv {

/// Closed half-plane {x : n.x <= b} with unit normal n.
struct HalfPlane {
    Vec2 n;
    double b = 0.0;

    double slack(Vec2 x) const { return b - dot(n, x); }
};

/// Convex polygon with counterclockwise vertices. May be empty (no vertices) after clipping.
class ConvexPolygon {
public:
    ConvexPolygon() = default;
    explicit ConvexPolygon(std::vector<Vec2> vertices, bool validate = true)
        : v_(std::move(vertices)) {
        if (validate) check();
    }

    static ConvexPolygon box(Vec2 lo, Vec2 hi) {
        return ConvexPolygon({{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}});
    }

    const std::vector<Vec2>& vertices() const noexcept { return v_; }
    std::size_t size() const noexcept { return v_.size(); }
    bool empty() const noexcept { return v_.size() < 3; }
    Vec2 operator[](std::size_t i) const { return v_[i % v_.size()]; }

    double area() const {
        double a = 0.0;
        for (std::size_t i = 0; i < v_.size(); ++i) a += cross(v_[i], (*this)[i + 1]);
        return 0.5 * a;
    }

    double perimeter() const {
        double p = 0.0;
        for (std::size_t i = 0; i < v_.size(); ++i) p += dist(v_[i], (*this)[i + 1]);
        return p;
    }

    double diameter() const {
        double d = 0.0;
        for (std::size_t i = 0; i < v_.size(); ++i)
            for (std::size_t j = i + 1; j < v_.size(); ++j) d = std::max(d, dist(v_[i], v_[j]));
        return d;
    }

    /// Edge i runs from vertex i to vertex i+1; its outward half-plane.
    HalfPlane edge_halfplane(std::size_t i) const {
        const Vec2 a = v_[i], b = (*this)[i + 1];
        const Vec2 e = b - a;
        const double len = norm(e);
        const Vec2 n{e.y / len, -e.x / len};
        return {n, dot(n, a)};
    }

    std::vector<HalfPlane> halfplanes() const {
        std::vector<HalfPlane> h;
        h.reserve(v_.size());
        for (std::size_t i = 0; i < v_.size(); ++i) h.push_back(edge_halfplane(i));
        return h;
    }

    /// Signed distance to the boundary: positive inside, negative outside (lower bound outside).
    double margin(Vec2 x) const {
        double m = INFINITY;
        for (std::size_t i = 0; i < v_.size(); ++i) m = std::min(m, edge_halfplane(i).slack(x));
        return m;
    }

    bool contains(Vec2 x, double tol = 0.0) const { return !empty() && margin(x) >= -tol; }

    /// d(x, P^c): zero unless x is interior.
    double distance_to_complement(Vec2 x) const {
        if (empty()) return 0.0;
        const double m = margin(x);
        return m > 0.0 ? m : 0.0;
    }

    ConvexPolygon clip(const HalfPlane& h) const {
        std::vector<Vec2> out;
        out.reserve(v_.size() + 1);
        for (std::size_t i = 0; i < v_.size(); ++i) {
            const Vec2 a = v_[i], b = (*this)[i + 1];
            const double sa = h.slack(a), sb = h.slack(b);
            if (sa >= 0.0) out.push_back(a);
            if ((sa >= 0.0) != (sb >= 0.0)) {
                const double t = sa / (sa - sb);
                out.push_back(a + t * (b - a));
            }
        }
        if (out.size() < 3) out.clear();
        return ConvexPolygon(std::move(out), false);
    }

    ConvexPolygon intersect(const ConvexPolygon& o) const {
        ConvexPolygon r = *this;
        for (std::size_t i = 0; i < o.size() && !r.empty(); ++i) r = r.clip(o.edge_halfplane(i));
        return r;
    }

    /// The set {x in P : d(x, P^c) >= d}.
    ConvexPolygon inset(double d) const {
        ConvexPolygon r = *this;
        for (std::size_t i = 0; i < v_.size() && !r.empty(); ++i) {
            HalfPlane h = edge_halfplane(i);
            h.b -= d;
            r = r.clip(h);
        }
        return r;
    }

    /// Center of the largest inscribed disk. When the optimum is not unique the tied LP vertices
    /// are averaged, which gives the symmetric choice for rectangles.
    Vec2 chebyshev_center(double* radius = nullptr) const {
        const auto h = halfplanes();
        const std::size_t m = h.size();
        double best = -INFINITY;
        Vec2 acc{};
        int ties = 0;
        const double tol = 1e-12 * std::max(1.0, diameter());
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                for (std::size_t k = j + 1; k < m; ++k) {
                    // Solve n.x + r = b for the three constraints.
                    const std::array<const HalfPlane*, 3> c{&h[i], &h[j], &h[k]};
                    const double a11 = c[0]->n.x, a12 = c[0]->n.y;
                    const double a21 = c[1]->n.x, a22 = c[1]->n.y;
                    const double a31 = c[2]->n.x, a32 = c[2]->n.y;
                    const double det = a11 * (a22 - a32) - a12 * (a21 - a31) + (a21 * a32 - a22 * a31);
                    if (std::abs(det) < 1e-14) continue;
                    const double b1 = c[0]->b, b2 = c[1]->b, b3 = c[2]->b;
                    const double x = (b1 * (a22 - a32) - a12 * (b2 - b3) + (b2 * a32 - a22 * b3)) / det;
                    const double y = (a11 * (b2 - b3) - b1 * (a21 - a31) + (a21 * b3 - b2 * a31)) / det;
                    const double r = (a11 * (a22 * b3 - b2 * a32) - a12 * (a21 * b3 - b2 * a31) +
                                      b1 * (a21 * a32 - a22 * a31)) / det;
                    bool feasible = true;
                    for (const auto& hp : h)
                        if (dot(hp.n, {x, y}) + r > hp.b + tol) { feasible = false; break; }
                    if (!feasible) continue;
                    if (r > best + tol) {
                        best = r;
                        acc = {x, y};
                        ties = 1;
                    } else if (r > best - tol) {
                        acc += Vec2{x, y};
                        ++ties;
                    }
                }
        if (ties == 0) throw InputError("polygon has no interior");
        if (radius) *radius = best;
        return (1.0 / ties) * acc;
    }

    template <class F>
    ConvexPolygon mapped(F&& f) const {
        std::vector<Vec2> w;
        w.reserve(v_.size());
        for (const auto& p : v_) w.push_back(f(p));
        return ConvexPolygon(std::move(w), false);
    }

private:
    void check() const {
        if (v_.size() < 3) throw InputError("polygon needs at least 3 vertices");
        const double scale = std::max(1e-300, diameter());
        for (std::size_t i = 0; i < v_.size(); ++i) {
            const double c = cross((*this)[i + 1] - v_[i], (*this)[i + 2] - (*this)[i + 1]);
            if (c < -1e-12 * scale * scale) throw InputError("polygon is not convex or not counterclockwise");
        }
        if (area() <= 1e-14 * scale * scale) throw InputError("polygon is degenerate");
    }

    std::vector<Vec2> v_;
};

}  // namespace fraccurv
