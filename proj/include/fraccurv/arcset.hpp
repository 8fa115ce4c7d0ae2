#pragma once

#include <algorithm>
#include <vector>

#include "vec2.hpp"

namespace fraccurv {

/// Counterclockwise angular interval [start, start + length); start in [0, 2pi), length in [0, 2pi].
struct AngularInterval {
    double start = 0.0;
    double length = 0.0;

    double end() const noexcept { return start + length; }
    static AngularInterval between(double from, double to) {
        const double s = wrap_2pi(from);
        double len = wrap_2pi(to - from);
        return {s, len};
    }
};

/// Finite union of half-open angular intervals on the circle, stored as sorted disjoint
/// pieces [lo, hi) inside [0, 2pi).
class DirectionSet {
public:
    struct Piece {
        double lo;
        double hi;
    };

    DirectionSet() = default;

    static DirectionSet full() {
        DirectionSet s;
        s.pieces_.push_back({0.0, kTwoPi});
        return s;
    }
    static DirectionSet empty() { return {}; }
    static DirectionSet interval(double start, double length) {
        DirectionSet s;
        s.add(AngularInterval{wrap_2pi(start), std::clamp(length, 0.0, kTwoPi)});
        return s;
    }
    static DirectionSet from_intervals(const std::vector<AngularInterval>& ivs) {
        DirectionSet s;
        for (const auto& iv : ivs) s.add(iv);
        return s;
    }

    const std::vector<Piece>& pieces() const noexcept { return pieces_; }
    bool is_empty() const noexcept { return pieces_.empty(); }
    bool is_full() const noexcept {
        return pieces_.size() == 1 && pieces_[0].lo <= 0.0 && pieces_[0].hi >= kTwoPi;
    }

    double measure() const {
        double m = 0.0;
        for (const auto& p : pieces_) m += p.hi - p.lo;
        return m;
    }

    /// Left-closed membership.
    bool contains(double theta) const {
        const double t = wrap_2pi(theta);
        for (const auto& p : pieces_)
            if (t >= p.lo && t < p.hi) return true;
        return false;
    }

    void add(AngularInterval iv) {
        if (iv.length <= 0.0) return;
        if (iv.length >= kTwoPi) {
            pieces_.assign(1, {0.0, kTwoPi});
            return;
        }
        const double s = wrap_2pi(iv.start);
        const double e = s + iv.length;
        if (e <= kTwoPi) {
            insert({s, e});
        } else {
            insert({s, kTwoPi});
            insert({0.0, e - kTwoPi});
        }
    }

    DirectionSet complement() const {
        DirectionSet out;
        double cur = 0.0;
        for (const auto& p : pieces_) {
            if (p.lo > cur) out.pieces_.push_back({cur, p.lo});
            cur = p.hi;
        }
        if (cur < kTwoPi) out.pieces_.push_back({cur, kTwoPi});
        return out;
    }

    DirectionSet intersect(const DirectionSet& o) const {
        DirectionSet out;
        std::size_t i = 0, j = 0;
        while (i < pieces_.size() && j < o.pieces_.size()) {
            const double lo = std::max(pieces_[i].lo, o.pieces_[j].lo);
            const double hi = std::min(pieces_[i].hi, o.pieces_[j].hi);
            if (hi > lo) out.pieces_.push_back({lo, hi});
            if (pieces_[i].hi < o.pieces_[j].hi) ++i; else ++j;
        }
        return out;
    }

    DirectionSet unite(const DirectionSet& o) const {
        DirectionSet out = *this;
        for (const auto& p : o.pieces_) out.insert(p);
        return out;
    }

    DirectionSet rotated(double phi) const {
        DirectionSet out;
        if (is_full()) return *this;
        for (const auto& p : pieces_) out.add({p.lo + phi, p.hi - p.lo});
        return out;
    }

    /// Length of the overlap between this set and a (possibly wrapping) interval.
    double overlap(AngularInterval iv) const {
        if (iv.length <= 0.0) return 0.0;
        if (iv.length >= kTwoPi) return measure();
        const double s = wrap_2pi(iv.start);
        const double e = s + iv.length;
        auto part = [this](double lo, double hi) {
            double m = 0.0;
            for (const auto& p : pieces_) {
                const double a = std::max(lo, p.lo), b = std::min(hi, p.hi);
                if (b > a) m += b - a;
            }
            return m;
        };
        if (e <= kTwoPi) return part(s, e);
        return part(s, kTwoPi) + part(0.0, e - kTwoPi);
    }

    /// Pieces of a (possibly wrapping) interval lying inside this set, as intervals.
    std::vector<AngularInterval> clip(AngularInterval iv) const {
        std::vector<AngularInterval> out;
        if (iv.length <= 0.0) return out;
        if (is_full()) {
            out.push_back(iv);
            return out;
        }
        const double s = wrap_2pi(iv.start);
        const double e = s + std::min(iv.length, kTwoPi);
        auto part = [&](double lo, double hi, double offset) {
            for (const auto& p : pieces_) {
                const double a = std::max(lo, p.lo), b = std::min(hi, p.hi);
                if (b > a) out.push_back({a + offset, b - a});
            }
        };
        part(s, std::min(e, kTwoPi), 0.0);
        if (e > kTwoPi) part(0.0, e - kTwoPi, kTwoPi);
        for (auto& o : out) o.start = wrap_2pi(o.start);
        // Rejoin the piece broken at angle 0.
        if (out.size() >= 2) {
            auto& last = out.back();
            auto& first = out.front();
            if (std::abs(wrap_2pi(last.start + last.length) - first.start) < 1e-15 &&
                first.start == 0.0 && s + iv.length > kTwoPi) {
                last.length += first.length;
                out.erase(out.begin());
            }
        }
        return out;
    }

private:
    void insert(Piece p) {
        if (p.hi <= p.lo) return;
        std::vector<Piece> merged;
        merged.reserve(pieces_.size() + 1);
        bool placed = false;
        for (const auto& q : pieces_) {
            if (q.hi < p.lo) {
                merged.push_back(q);
            } else if (q.lo > p.hi) {
                if (!placed) { merged.push_back(p); placed = true; }
                merged.push_back(q);
            } else {
                p.lo = std::min(p.lo, q.lo);
                p.hi = std::max(p.hi, q.hi);
            }
        }
        if (!placed) merged.push_back(p);
        pieces_ = std::move(merged);
    }

    std::vector<Piece> pieces_;
};

}  // namespace fraccurv
