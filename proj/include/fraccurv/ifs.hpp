#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "angle.hpp"
#include "errors.hpp"
#include "polygon.hpp"
#include "random.hpp"
#include "vec2.hpp"

namespace fraccurv {

/// Letters are 0-based internally; configs and reports use 1-based labels.
using Word = std::vector<int>;

/// x -> ratio * R(angle) x + translation.
class Similarity {
public:
    Similarity() = default;  // identity
    Similarity(double ratio, Angle angle, Vec2 translation)
        : ratio_(ratio), angle_(angle), t_(translation), identity_(false) {
        if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("similarity ratio must lie in (0,1)");
        set_trig();
    }

    static Similarity identity() { return {}; }

    double ratio() const noexcept { return ratio_; }
    const Angle& angle() const noexcept { return angle_; }
    Vec2 translation() const noexcept { return t_; }
    bool is_identity() const noexcept { return identity_; }

    Vec2 linear(Vec2 x) const { return ratio_ * Vec2{c_ * x.x - s_ * x.y, s_ * x.x + c_ * x.y}; }
    Vec2 operator()(Vec2 x) const { return linear(x) + t_; }

    Vec2 inverse(Vec2 y) const {
        const Vec2 d = y - t_;
        return (1.0 / ratio_) * Vec2{c_ * d.x + s_ * d.y, -s_ * d.x + c_ * d.y};
    }

    /// (this o o)(x) = this(o(x)).
    Similarity then_after(const Similarity& o) const {
        if (identity_) return o;
        if (o.identity_) return *this;
        Similarity r;
        r.identity_ = false;
        r.ratio_ = ratio_ * o.ratio_;
        r.angle_ = angle_ + o.angle_;
        r.t_ = linear(o.t_) + t_;
        r.c_ = c_ * o.c_ - s_ * o.s_;
        r.s_ = s_ * o.c_ + c_ * o.s_;
        return r;
    }

private:
    void set_trig() {
        if (angle_.is_exact()) {
            // Quarter turns get exact trigonometry so axis-aligned data stays axis-aligned.
            const Turns t = angle_.turns();
            if (4 % t.den() == 0) {
                static constexpr double cs[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
                const auto q = t.num() * (4 / t.den());
                c_ = cs[q][0];
                s_ = cs[q][1];
                return;
            }
        }
        c_ = std::cos(angle_.radians());
        s_ = std::sin(angle_.radians());
    }

    double ratio_ = 1.0;
    Angle angle_{};
    Vec2 t_{};
    bool identity_ = true;
    double c_ = 1.0, s_ = 0.0;
};

/// Iterated function system with feasible set J.
class IFS {
public:
    IFS(std::vector<Similarity> maps, ConvexPolygon J) : maps_(std::move(maps)), J_(std::move(J)) {
        if (maps_.size() < 2) throw InputError("an IFS needs at least two maps");
        diam_ = J_.diameter();
        const double tol = 1e-9 * diam_;
        for (std::size_t j = 0; j < maps_.size(); ++j) {
            if (maps_[j].is_identity()) throw InputError("identity map in IFS");
            for (const auto& v : J_.vertices())
                if (!J_.contains(maps_[j](v), tol))
                    throw InputError("feasible set is not mapped into itself by map " + std::to_string(j + 1));
        }
        anchor_ = J_.chebyshev_center();
    }

    std::size_t size() const noexcept { return maps_.size(); }
    const Similarity& map(std::size_t j) const { return maps_.at(j); }
    const std::vector<Similarity>& maps() const noexcept { return maps_; }
    const ConvexPolygon& feasible_set() const noexcept { return J_; }
    double diameter() const noexcept { return diam_; }
    Vec2 anchor() const noexcept { return anchor_; }

    std::vector<double> ratios() const {
        std::vector<double> r;
        for (const auto& m : maps_) r.push_back(m.ratio());
        return r;
    }
    std::vector<Angle> angles() const {
        std::vector<Angle> a;
        for (const auto& m : maps_) a.push_back(m.angle());
        return a;
    }

    /// Conjugate by the rigid motion g(x) = R(rot) x + shift: the attractor of the result is g(F).
    IFS moved(double rot, Vec2 shift) const {
        std::vector<Similarity> ms;
        for (const auto& m : maps_)
            ms.emplace_back(m.ratio(), m.angle(), rotate(m.translation(), rot) + shift - m.linear(shift));
        return IFS(std::move(ms), J_.mapped([&](Vec2 p) { return rotate(p, rot) + shift; }));
    }

private:
    std::vector<Similarity> maps_;
    ConvexPolygon J_;
    double diam_ = 0.0;
    Vec2 anchor_{};
};

inline Similarity compose_word(const IFS& ifs, const Word& w) {
    Similarity s;
    for (const int letter : w) {
        if (letter < 0 || static_cast<std::size_t>(letter) >= ifs.size())
            throw InputError("word letter out of range: " + std::to_string(letter + 1));
        s = s.then_after(ifs.map(letter));
    }
    return s;
}

struct DimensionResult {
    double D = 0.0;
    double residual = 0.0;
    bool exceeds_ambient = false;
};

/// Root of sum r_j^s = 1 by bisection.
inline DimensionResult similarity_dimension(const std::vector<double>& ratios, int ambient = 2) {
    if (ratios.empty()) throw InputError("no ratios");
    for (double r : ratios)
        if (!(r > 0.0 && r < 1.0)) throw InputError("ratio outside (0,1)");
    auto f = [&](double s) {
        double acc = 0.0;
        for (double r : ratios) acc += std::pow(r, s);
        return acc;
    };
    DimensionResult res;
    double lo = 0.0, hi = static_cast<double>(ambient);
    if (f(hi) > 1.0) {
        res.exceeds_ambient = true;
        while (f(hi) > 1.0) hi *= 2.0;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 1.0 ? lo : hi) = mid;
    }
    res.D = 0.5 * (lo + hi);
    res.residual = f(res.D) - 1.0;
    return res;
}

struct GroupDescriptor {
    enum class Kind { finite_cyclic, dense };
    Kind kind = Kind::finite_cyclic;
    std::int64_t order = 1;

    bool finite() const noexcept { return kind == Kind::finite_cyclic; }
    Turns generator() const { return Turns(1, order); }
    std::string str() const {
        return finite() ? "finite-cyclic(order " + std::to_string(order) + ")" : "dense";
    }
};

namespace detail {

/// Smallest q <= max_den with |turns - p/q| < tol, or 0.
inline std::int64_t near_rational(double turns, double tol, std::int64_t max_den) {
    for (std::int64_t q = 1; q <= max_den; ++q) {
        const double p = std::round(turns * static_cast<double>(q));
        if (std::abs(turns - p / static_cast<double>(q)) < tol) return q;
    }
    return 0;
}

}  // namespace detail

inline GroupDescriptor rotation_group_closure(const std::vector<Angle>& angles) {
    if (angles.empty()) throw InputError("rotation group of an empty angle list");
    GroupDescriptor g;
    bool dense = false;
    for (const auto& a : angles) {
        if (a.is_exact()) {
            g.order = std::lcm(g.order, a.turns().den());
            continue;
        }
        const double t = a.radians() / kTwoPi;
        if (const auto q = detail::near_rational(t, 1e-12, 1000); q != 0)
            throw InputError("ambiguous rationality: angle " + a.str() + " is within 1e-12 turn of a rational with denominator " +
                             std::to_string(q) + "; declare it exact or choose a clearly irrational value");
        // An inexact angle that is exactly zero generates nothing.
        if (a.radians() != 0.0) dense = true;
    }
    if (dense) {
        g.kind = GroupDescriptor::Kind::dense;
        g.order = 0;
    }
    return g;
}

inline Angle haar_sample(const GroupDescriptor& g, Rng& rng) {
    if (g.finite()) return Angle::exact(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(g.order))), g.order);
    return Angle::inexact(kTwoPi * rng.uniform());
}

struct OscReport {
    struct Pair {
        int j, l;
        double area;
    };
    std::vector<Pair> pair_areas;
    std::vector<double> containment_margin;  // min over vertices of S_j(J) of the signed distance inside J
    bool pairwise_disjoint = true;
    bool witness_found = false;
    Word witness;
};

inline OscReport check_osc(const IFS& ifs, int max_len = 6) {
    OscReport rep;
    const auto& J = ifs.feasible_set();
    const double areaJ = J.area();
    std::vector<ConvexPolygon> cells;
    for (const auto& m : ifs.maps()) cells.push_back(J.mapped(m));
    for (std::size_t j = 0; j < cells.size(); ++j) {
        double mg = INFINITY;
        for (const auto& v : cells[j].vertices()) mg = std::min(mg, J.margin(v));
        rep.containment_margin.push_back(mg);
        for (std::size_t l = j + 1; l < cells.size(); ++l) {
            const double a = cells[j].intersect(cells[l]).area();
            rep.pair_areas.push_back({static_cast<int>(j), static_cast<int>(l), a});
            if (a >= 1e-12 * areaJ) rep.pairwise_disjoint = false;
        }
    }
    // Breadth-first over words, shortest witness first.
    std::vector<Word> level{Word{}};
    const double tol = 1e-12 * ifs.diameter();
    for (int len = 1; len <= max_len && !rep.witness_found; ++len) {
        std::vector<Word> next;
        for (const auto& w : level)
            for (std::size_t j = 0; j < ifs.size(); ++j) {
                Word u = w;
                u.push_back(static_cast<int>(j));
                next.push_back(u);
            }
        for (const auto& w : next) {
            const Similarity s = compose_word(ifs, w);
            bool inside = true;
            for (const auto& v : J.vertices())
                if (J.margin(s(v)) <= tol) { inside = false; break; }
            if (inside) {
                rep.witness_found = true;
                rep.witness = w;
                break;
            }
        }
        level = std::move(next);
    }
    return rep;
}

inline double distance_to_complement(const ConvexPolygon& J, Vec2 x) { return J.distance_to_complement(x); }

}  // namespace fraccurv
