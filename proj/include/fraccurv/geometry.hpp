#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "vec2.hpp"

namespace fraccurv {

/// Union of closed disks of common radius around `centers`, with a uniform bucket grid.
class DiskUnion {
public:
    DiskUnion(std::vector<Vec2> centers, double radius) : c_(std::move(centers)), eps_(radius) {
        if (!(radius > 0.0)) throw InputError("disk radius must be positive");
        if (c_.empty()) throw InputError("disk union needs at least one center");
        build_grid();
    }

    const std::vector<Vec2>& centers() const noexcept { return c_; }
    double radius() const noexcept { return eps_; }
    std::size_t size() const noexcept { return c_.size(); }

    bool contains(Vec2 p) const {
        bool hit = false;
        for_each_near(p, eps_, [&](std::uint32_t j) {
            if (norm2(c_[j] - p) <= eps_ * eps_) hit = true;
            return hit;
        });
        return hit;
    }

    /// Calls f(j) for candidate centers within distance r of p (superset); stops when f returns true.
    template <class F>
    void for_each_near(Vec2 p, double r, F&& f) const {
        const int ci = cell_x(p.x), cj = cell_y(p.y);
        const int R = static_cast<int>(std::ceil(r / cell_)) + 1;
        for (int dj = -R; dj <= R; ++dj) {
            const int y = cj + dj;
            if (y < 0 || y >= ny_) continue;
            for (int di = -R; di <= R; ++di) {
                const int x = ci + di;
                if (x < 0 || x >= nx_) continue;
                const std::size_t cell = static_cast<std::size_t>(y) * nx_ + x;
                for (std::uint32_t k = start_[cell]; k < start_[cell + 1]; ++k)
                    if (f(idx_[k])) return;
            }
        }
    }

    // Grid internals used by the boundary extractor.
    double cell() const noexcept { return cell_; }
    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    int cell_x(double x) const { return std::clamp(static_cast<int>(std::floor((x - origin_.x) / cell_)), 0, nx_ - 1); }
    int cell_y(double y) const { return std::clamp(static_cast<int>(std::floor((y - origin_.y) / cell_)), 0, ny_ - 1); }
    Vec2 cell_center(int x, int y) const { return origin_ + cell_ * Vec2{x + 0.5, y + 0.5}; }
    const std::vector<std::uint32_t>& cell_start() const noexcept { return start_; }
    const std::vector<std::uint32_t>& cell_items() const noexcept { return idx_; }
    /// Cell offsets that can hold a center within 2 eps of a center in the base cell, nearest first.
    const std::vector<std::pair<int, int>>& neighbour_offsets() const noexcept { return offsets_; }

private:
    void build_grid() {
        Vec2 lo = c_[0], hi = c_[0];
        for (const auto& p : c_) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
        }
        // Half-radius cells keep the candidate lists short; coarsen when the box is sparse.
        cell_ = 0.5 * eps_;
        const double w = hi.x - lo.x, h = hi.y - lo.y;
        const double max_cells = std::max<double>(1 << 20, 4.0 * static_cast<double>(c_.size()));
        while ((w / cell_ + 1.0) * (h / cell_ + 1.0) > max_cells) cell_ *= 2.0;
        origin_ = lo;
        nx_ = static_cast<int>(w / cell_) + 1;
        ny_ = static_cast<int>(h / cell_) + 1;
        const std::size_t ncell = static_cast<std::size_t>(nx_) * ny_;
        start_.assign(ncell + 1, 0);
        std::vector<std::uint32_t> cell_of(c_.size());
        for (std::size_t i = 0; i < c_.size(); ++i) {
            cell_of[i] = static_cast<std::uint32_t>(static_cast<std::size_t>(cell_y(c_[i].y)) * nx_ + cell_x(c_[i].x));
            ++start_[cell_of[i] + 1];
        }
        for (std::size_t k = 0; k < ncell; ++k) start_[k + 1] += start_[k];
        idx_.resize(c_.size());
        std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < c_.size(); ++i) idx_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);

        const int R = static_cast<int>(std::ceil(2.0 * eps_ / cell_));
        for (int dj = -R; dj <= R; ++dj)
            for (int di = -R; di <= R; ++di) {
                const double gx = std::max(std::abs(di) - 1, 0), gy = std::max(std::abs(dj) - 1, 0);
                if ((gx * gx + gy * gy) * cell_ * cell_ < 4.0 * eps_ * eps_) offsets_.push_back({di, dj});
            }
        std::stable_sort(offsets_.begin(), offsets_.end(), [](auto a, auto b) {
            return a.first * a.first + a.second * a.second < b.first * b.first + b.second * b.second;
        });
    }

    std::vector<Vec2> c_;
    double eps_;
    double cell_ = 1.0;
    Vec2 origin_{};
    int nx_ = 1, ny_ = 1;
    std::vector<std::uint32_t> start_;
    std::vector<std::uint32_t> idx_;
    std::vector<std::pair<int, int>> offsets_;
};

inline constexpr std::uint32_t kNoDisk = std::numeric_limits<std::uint32_t>::max();

/// Boundary arc on the circle of `disk`: angles [t1, t1 + len) counterclockwise. The angular
/// position is also the outward unit normal there.
struct Arc {
    Vec2 c;
    double t1 = 0.0;
    double len = 0.0;
    std::uint32_t disk = 0;

    double t2() const { return t1 + len; }
};

/// Reflex corner where the boundary leaves the circle of disk_in (normal n_in) and continues on
/// the circle of disk_out (normal n_out). The normal wedge runs from n_out up to n_in.
struct Vertex {
    Vec2 p;
    double n_in = 0.0;
    double n_out = 0.0;
    std::uint32_t disk_in = 0;
    std::uint32_t disk_out = 0;
    std::uint32_t arc_in = 0;

    double turn() const { return wrap_pi(n_out - n_in); }
};

struct Loop {
    std::vector<std::uint32_t> arcs;
    int orientation = 1;  // +1 outer, -1 hole
};

struct ArcBoundary {
    double eps = 0.0;
    std::vector<Arc> arcs;
    std::vector<Vertex> vertices;  // vertices[k] closes arcs[vertices[k].arc_in]
    std::vector<Loop> loops;
    bool stitched = false;
    bool partial = false;  // only a subset of the disks was processed
};

struct BoundaryOptions {
    bool stitch = true;
    unsigned workers = 1;
    /// Process only disks whose circle meets this ball (local computations).
    std::optional<Vec2> near_center;
    double near_radius = 0.0;
};

namespace detail {

inline constexpr int kSectors = 64;
inline constexpr double kSectorWidth = kTwoPi / kSectors;
inline constexpr double kTangentTol = 1e-9;

inline std::uint64_t run_mask(int first, int count) {
    if (count <= 0) return 0;
    if (count >= kSectors) return ~std::uint64_t{0};
    const std::uint64_t run = (std::uint64_t{1} << count) - 1;
    return std::rotl(run, ((first % kSectors) + kSectors) % kSectors);
}

/// Sectors lying strictly inside the open interval (a, a + len).
inline std::uint64_t inner_sectors(double a, double len) {
    const int lo = static_cast<int>(std::ceil((a + 1e-12) / kSectorWidth));
    const int hi = static_cast<int>(std::floor((a + len - 1e-12) / kSectorWidth));
    return run_mask(lo, hi - lo);
}

/// Sectors meeting the closed interval [a, a + len].
inline std::uint64_t touched_sectors(double a, double len) {
    const int lo = static_cast<int>(std::floor(a / kSectorWidth));
    const int hi = static_cast<int>(std::floor((a + len) / kSectorWidth));
    return run_mask(lo, hi - lo + 1);
}

/// Covering interval of circle i by disk j, written so both circle's computations agree bit for bit.
struct Cover {
    double a;    // start in [0, 2pi)
    double len;  // 2 beta
};

inline Cover cover_of(Vec2 ci, Vec2 cj, double eps) {
    const Vec2 v = cj - ci;
    const double d = std::sqrt(norm2(v));
    const double beta = std::acos(std::min(1.0, d / (2.0 * eps)));
    return {wrap_2pi(std::atan2(v.y, v.x) - beta), 2.0 * beta};
}

inline double cover_end(const Cover& c) { return wrap_2pi(c.a + c.len); }

struct Interval {
    double a;
    double len;
    std::uint32_t j;
};

struct Gap {
    double start;
    double len;
    std::uint32_t next;  // disk whose covering interval begins at the gap end, kNoDisk for a full circle
    double next_a;       // that interval's start on this circle
};

struct Block {
    double lo, hi;
    std::uint32_t owner;  // interval starting the block
    double owner_a;
};

// Cheap angle approximations for the sector pre-pass; both stay within 1e-4 rad.
inline double approx_atan2(double y, double x) {
    const double ax = std::abs(x), ay = std::abs(y);
    const double mx = std::max(ax, ay);
    if (mx == 0.0) return 0.0;
    const double t = std::min(ax, ay) / mx, t2 = t * t;
    double r = t * (0.9998660 + t2 * (-0.3302995 + t2 * (0.1801410 + t2 * (-0.0851330 + t2 * 0.0208351))));
    if (ay > ax) r = 0.5 * kPi - r;
    if (x < 0.0) r = kPi - r;
    return y < 0.0 ? -r : r;
}

inline double approx_acos01(double x) {
    return std::sqrt(1.0 - x) * (1.5707288 + x * (-0.2121144 + x * (0.0742610 - 0.0187293 * x)));
}

inline constexpr double kApproxMargin = 1e-3;

struct Candidate {
    std::uint32_t j;
    float a, len;  // approximate cover, for sector bookkeeping only
};

/// Uncovered arcs of circle i. A pass with approximate covers finds the sectors that may stay
/// open; exact covers are then computed only for neighbours reaching those sectors.
inline void disk_gaps(const DiskUnion& du, std::uint32_t i, std::vector<Candidate>& cands, std::vector<Interval>& ivs,
                      std::vector<Block>& blocks, std::vector<Gap>& out) {
    out.clear();
    ivs.clear();
    cands.clear();
    const auto& c = du.centers();
    const double eps = du.radius();
    const double four_eps2 = 4.0 * eps * eps;
    const double inv_2eps = 0.5 / eps;
    const double dup2 = 1e-24 * eps * eps;
    const Vec2 ci = c[i];
    const int gx = du.cell_x(ci.x), gy = du.cell_y(ci.y);
    const auto& start = du.cell_start();
    const auto& items = du.cell_items();
    std::uint64_t covered = 0;
    // One disk per cell is already enough to bury most interior circles; a subset covering
    // the circle proves the full set does.
    for (const auto& [di, dj] : du.neighbour_offsets()) {
        const int x = gx + di, y = gy + dj;
        if (x < 0 || y < 0 || x >= du.nx() || y >= du.ny()) continue;
        const std::size_t cell = static_cast<std::size_t>(y) * du.nx() + x;
        if (start[cell] == start[cell + 1]) continue;
        const Vec2 v = c[items[start[cell]]] - ci;
        const double d2 = norm2(v);
        if (d2 >= four_eps2 || d2 <= dup2) continue;
        const double beta = approx_acos01(std::min(1.0, std::sqrt(d2) * inv_2eps));
        double a = approx_atan2(v.y, v.x) - beta;
        if (a < 0.0) a += kTwoPi;
        const double inner = 2.0 * beta - 2.0 * kApproxMargin;
        if (inner <= 0.0) continue;
        covered |= inner_sectors(a + kApproxMargin, inner);
        if (covered == ~std::uint64_t{0}) return;
    }
    // Those sectors stay covered. A cell whose disks can only cover arcs inside them adds
    // nothing: every cover lies in the cell's angular window widened by the largest beta.
    const double half_diag = du.cell() * 0.7072;
    for (const auto& [di, dj] : du.neighbour_offsets()) {
        const int x = gx + di, y = gy + dj;
        if (x < 0 || y < 0 || x >= du.nx() || y >= du.ny()) continue;
        const std::size_t cell = static_cast<std::size_t>(y) * du.nx() + x;
        if (start[cell] == start[cell + 1]) continue;
        const Vec2 mid = du.cell_center(x, y) - ci;
        const double dm = std::sqrt(norm2(mid));
        if (dm > 2.0 * half_diag) {
            if (dm - half_diag >= 2.0 * eps) continue;
            const double spread = std::asin(half_diag / dm) + std::acos((dm - half_diag) * inv_2eps);
            const double w = 2.0 * (spread + kApproxMargin);
            if (w < kTwoPi) {
                double a0 = std::atan2(mid.y, mid.x) - 0.5 * w;
                if (a0 < 0.0) a0 += kTwoPi;
                const std::uint64_t need = touched_sectors(a0, w);
                if ((need & covered) == need) continue;
            }
        }
        for (std::uint32_t k = start[cell]; k < start[cell + 1]; ++k) {
            const std::uint32_t j = items[k];
            if (j == i) continue;
            const Vec2 v = c[j] - ci;
            const double d2 = norm2(v);
            if (d2 >= four_eps2) continue;
            if (d2 <= dup2) {
                if (j < i) return;  // duplicate of an earlier disk
                continue;
            }
            const double beta = approx_acos01(std::min(1.0, std::sqrt(d2) * inv_2eps));
            double a = approx_atan2(v.y, v.x) - beta;
            if (a < 0.0) a += kTwoPi;
            cands.push_back({j, static_cast<float>(a), static_cast<float>(2.0 * beta)});
            const double inner = 2.0 * beta - 2.0 * kApproxMargin;
            if (inner <= 0.0) continue;
            covered |= inner_sectors(a + kApproxMargin, inner);
            if (covered == ~std::uint64_t{0}) return;
        }
    }
    const std::uint64_t open = ~covered;
    for (const auto& cd : cands) {
        if (!(touched_sectors(cd.a - kApproxMargin, cd.len + 2.0 * kApproxMargin) & open)) continue;
        const Cover cv = cover_of(ci, c[cd.j], eps);
        if (cv.len < kTangentTol) continue;
        ivs.push_back({cv.a, cv.len, cd.j});
    }
    if (ivs.empty()) {
        out.push_back({0.0, kTwoPi, kNoDisk, 0.0});
        return;
    }
    std::sort(ivs.begin(), ivs.end(), [](const Interval& p, const Interval& q) {
        return p.a < q.a || (p.a == q.a && p.j < q.j);
    });
    blocks.clear();
    for (const auto& iv : ivs) {
        if (!blocks.empty() && iv.a <= blocks.back().hi) {
            blocks.back().hi = std::max(blocks.back().hi, iv.a + iv.len);
        } else {
            blocks.push_back({iv.a, iv.a + iv.len, iv.j, iv.a});
        }
    }
    // Close the circle: the last block may reach past 2pi into the first ones.
    while (blocks.size() > 1 && blocks.back().hi >= blocks.front().lo + kTwoPi) {
        Block last = blocks.back();
        blocks.pop_back();
        Block& first = blocks.front();
        first.hi = std::max(first.hi, last.hi - kTwoPi);
        first.lo = last.lo - kTwoPi;
        first.owner = last.owner;
        first.owner_a = last.owner_a;
        while (blocks.size() > 1 && blocks[1].lo <= blocks[0].hi) {
            blocks[0].hi = std::max(blocks[0].hi, blocks[1].hi);
            blocks.erase(blocks.begin() + 1);
        }
    }
    if (blocks.size() == 1 && blocks[0].hi - blocks[0].lo >= kTwoPi) return;
    const std::size_t nb = blocks.size();
    for (std::size_t b = 0; b < nb; ++b) {
        const Block& cur = blocks[b];
        const Block& nxt = blocks[(b + 1) % nb];
        const double end = (b + 1 < nb) ? nxt.lo : nxt.lo + kTwoPi;
        const double len = end - cur.hi;
        if (len < kTangentTol) continue;
        const double mid = wrap_2pi(cur.hi + 0.5 * len);
        const int sector = std::min(kSectors - 1, static_cast<int>(mid / kSectorWidth));
        if (!((open >> sector) & 1u)) continue;
        out.push_back({wrap_2pi(cur.hi), len, nxt.owner, nxt.owner_a});
    }
}

}  // namespace detail

/// Exact boundary of the disk union: uncovered arcs, reflex vertices and (optionally) loops.
inline ArcBoundary boundary_arcs(const DiskUnion& du, const BoundaryOptions& opt = {}) {
    const auto& c = du.centers();
    const double eps = du.radius();
    std::vector<std::uint32_t> todo;
    if (opt.near_center) {
        const double r = opt.near_radius + eps;
        du.for_each_near(*opt.near_center, r, [&](std::uint32_t j) {
            if (norm2(c[j] - *opt.near_center) <= r * r) todo.push_back(j);
            return false;
        });
        std::sort(todo.begin(), todo.end());
    } else {
        todo.resize(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) todo[i] = static_cast<std::uint32_t>(i);
    }

    const std::size_t chunk = 2048;
    const std::size_t nchunks = (todo.size() + chunk - 1) / chunk;
    std::vector<std::vector<Arc>> arc_parts(nchunks);
    std::vector<std::vector<Vertex>> vert_parts(nchunks);
    parallel_for(nchunks, opt.workers, [&](std::size_t ch) {
        std::vector<detail::Candidate> cands;
        std::vector<detail::Interval> ivs;
        std::vector<detail::Block> blocks;
        std::vector<detail::Gap> gaps;
        auto& arcs = arc_parts[ch];
        auto& verts = vert_parts[ch];
        const std::size_t end = std::min(todo.size(), (ch + 1) * chunk);
        for (std::size_t t = ch * chunk; t < end; ++t) {
            const std::uint32_t i = todo[t];
            detail::disk_gaps(du, i, cands, ivs, blocks, gaps);
            for (const auto& g : gaps) {
                arcs.push_back({c[i], g.start, g.len, i});
                if (g.next == kNoDisk) continue;
                Vertex v;
                v.p = c[i] + eps * unit(g.next_a);
                v.n_in = wrap_2pi(g.next_a);
                v.n_out = detail::cover_end(detail::cover_of(c[g.next], c[i], eps));
                v.disk_in = i;
                v.disk_out = g.next;
                v.arc_in = static_cast<std::uint32_t>(arcs.size() - 1);
                verts.push_back(v);
            }
        }
    });

    ArcBoundary ab;
    ab.eps = eps;
    ab.partial = opt.near_center.has_value();
    for (std::size_t ch = 0; ch < nchunks; ++ch) {
        const auto base = static_cast<std::uint32_t>(ab.arcs.size());
        ab.arcs.insert(ab.arcs.end(), arc_parts[ch].begin(), arc_parts[ch].end());
        for (auto v : vert_parts[ch]) {
            v.arc_in += base;
            ab.vertices.push_back(v);
        }
    }
    if (!opt.stitch || ab.partial) return ab;

    // Loop stitching: the arc after a vertex starts on disk_out at angle n_out.
    const std::size_t na = ab.arcs.size();
    std::vector<std::uint32_t> first_arc(c.size() + 1, 0);
    for (const auto& a : ab.arcs) ++first_arc[a.disk + 1];
    for (std::size_t k = 0; k < c.size(); ++k) first_arc[k + 1] += first_arc[k];
    // Arcs come out grouped by disk in increasing disk order, so first_arc indexes them directly.
    std::vector<std::uint32_t> next(na, kNoDisk);
    std::vector<std::uint32_t> vert_of_arc(na, kNoDisk);
    for (std::uint32_t k = 0; k < ab.vertices.size(); ++k) {
        const auto& v = ab.vertices[k];
        vert_of_arc[v.arc_in] = k;
        std::uint32_t best = kNoDisk;
        double best_err = 1e-9;
        for (std::uint32_t a = first_arc[v.disk_out]; a < first_arc[v.disk_out + 1]; ++a) {
            const double e = std::abs(wrap_pi(ab.arcs[a].t1 - v.n_out));
            if (e < best_err) { best_err = e; best = a; }
        }
        if (best == kNoDisk)
            throw GeometryError("boundary stitching failed: no arc leaves vertex on disk " + std::to_string(v.disk_out), 1.0);
        next[v.arc_in] = best;
        const Vec2 q = ab.arcs[best].c + eps * unit(ab.arcs[best].t1);
        if (dist(q, v.p) > 1e-9 * eps)
            throw GeometryError("boundary loop does not close at a vertex", dist(q, v.p) / eps);
    }
    std::vector<char> seen(na, 0);
    for (std::uint32_t s = 0; s < na; ++s) {
        if (seen[s]) continue;
        Loop loop;
        double total = 0.0;
        std::uint32_t a = s;
        while (!seen[a]) {
            seen[a] = 1;
            loop.arcs.push_back(a);
            total += ab.arcs[a].len;
            if (next[a] == kNoDisk) break;  // full circle
            total += ab.vertices[vert_of_arc[a]].turn();
            a = next[a];
        }
        if (next[loop.arcs.back()] != kNoDisk && a != s)
            throw GeometryError("boundary loop does not return to its first arc", 1.0);
        loop.orientation = total > 0.0 ? 1 : -1;
        ab.loops.push_back(std::move(loop));
    }
    ab.stitched = true;
    return ab;
}

/// Area of the union by Green's theorem over the boundary arcs (holes enter with negative sign).
inline double union_area(const ArcBoundary& ab) {
    if (ab.partial) throw InputError("union_area needs the full boundary");
    const double e = ab.eps;
    double s = 0.0;
    for (const auto& a : ab.arcs) {
        const double t1 = a.t1, t2 = a.t2();
        s += e * (a.c.x * (std::sin(t2) - std::sin(t1)) - a.c.y * (std::cos(t2) - std::cos(t1))) + e * e * a.len;
    }
    return 0.5 * s;
}

struct EulerResult {
    int chi = 0;
    double raw = 0.0;
    double residual = 0.0;
};

/// Gauss-Bonnet: (sum of arc angles + sum of vertex turns) / 2pi, checked for integrality.
inline EulerResult euler_characteristic_checked(const ArcBoundary& ab) {
    if (ab.partial) throw InputError("euler_characteristic needs the full boundary");
    double s = 0.0;
    for (const auto& a : ab.arcs) s += a.len;
    for (const auto& v : ab.vertices) s += v.turn();
    EulerResult r;
    r.raw = s / kTwoPi;
    r.chi = static_cast<int>(std::lround(r.raw));
    r.residual = std::abs(r.raw - r.chi);
    if (!(r.residual < 1e-6))
        throw GeometryError("Gauss-Bonnet residual " + std::to_string(r.residual) + " exceeds 1e-6", r.residual);
    if (ab.stitched) {
        int signed_loops = 0;
        for (const auto& l : ab.loops) signed_loops += l.orientation;
        if (signed_loops != r.chi)
            throw GeometryError("loop count " + std::to_string(signed_loops) + " disagrees with Gauss-Bonnet " +
                                    std::to_string(r.chi),
                                std::abs(signed_loops - r.raw));
    }
    return r;
}

inline int euler_characteristic(const ArcBoundary& ab) { return euler_characteristic_checked(ab).chi; }

inline double boundary_length(const ArcBoundary& ab) {
    double s = 0.0;
    for (const auto& a : ab.arcs) s += a.len;
    return ab.eps * s;
}

}  // namespace fraccurv
