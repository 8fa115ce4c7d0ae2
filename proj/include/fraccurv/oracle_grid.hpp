#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "vec2.hpp"

namespace fraccurv {

/// Distance to a point cloud sampled at the centres of an n x n pixel grid over [lo, hi].
struct RasterField {
    int n = 0;
    Vec2 lo{}, hi{};
    std::vector<double> values;  // row-major, values[iy * n + ix]

    double dx() const { return (hi.x - lo.x) / n; }
    double dy() const { return (hi.y - lo.y) / n; }
    double pixel_diagonal() const { return std::hypot(dx(), dy()); }
    Vec2 center(int ix, int iy) const { return {lo.x + (ix + 0.5) * dx(), lo.y + (iy + 0.5) * dy()}; }
    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * n + ix]; }
};

struct GridOptions {
    std::size_t memory_cap = std::size_t{3} << 30;  // bytes
    unsigned workers = 1;
};

namespace detail {

/// Lower envelope of parabolas (q - p)^2 + f(p) over p (one row of the transform).
inline void edt_1d(const double* f, int n, double* d, int* arg, std::vector<int>& v, std::vector<double>& z) {
    v.assign(n, 0);
    z.assign(n + 1, 0.0);
    const double inf = std::numeric_limits<double>::infinity();
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == inf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        auto meet = [&](int p) { return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p)); };
        double s = meet(v[k]);
        while (s <= z[k]) s = meet(v[--k]);
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    if (k < 0) {
        for (int q = 0; q < n; ++q) { d[q] = inf; arg[q] = -1; }
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const int p = v[j];
        d[q] = double(q - p) * (q - p) + f[p];
        arg[q] = p;
    }
}

}  // namespace detail

/// Exact Euclidean distance transform of the rasterised cloud (two separable passes), followed by
/// the true distance from each pixel centre to the best nearby owning cloud point.
inline RasterField distance_transform(const std::vector<Vec2>& points, Vec2 lo, Vec2 hi, int n,
                                      const GridOptions& opt = {}) {
    if (n < 64) throw InputError("raster resolution must be at least 64");
    if (!(hi.x > lo.x && hi.y > lo.y)) throw InputError("empty raster window");
    const std::size_t N = static_cast<std::size_t>(n) * n;
    if (N * (2 * sizeof(double) + 2 * sizeof(int)) > opt.memory_cap)
        throw ResourceError("raster of " + std::to_string(n) + "^2 pixels exceeds the memory cap");
    RasterField rf;
    rf.n = n;
    rf.lo = lo;
    rf.hi = hi;
    const double dx = rf.dx(), dy = rf.dy();
    std::vector<int> site(N, -1);
    for (std::size_t k = 0; k < points.size(); ++k) {
        const Vec2 p = points[k];
        if (p.x < lo.x || p.x > hi.x || p.y < lo.y || p.y > hi.y) throw InputError("cloud point outside raster window");
        const int ix = std::min(n - 1, static_cast<int>((p.x - lo.x) / dx));
        const int iy = std::min(n - 1, static_cast<int>((p.y - lo.y) / dy));
        int& s = site[static_cast<std::size_t>(iy) * n + ix];
        if (s < 0 || norm2(p - rf.center(ix, iy)) < norm2(points[s] - rf.center(ix, iy))) s = static_cast<int>(k);
    }
    // Pass 1 along x (in pixel units; anisotropic pixels are handled by scaling into the second pass).
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> g(N);
    std::vector<int> gx(N);
    parallel_for(static_cast<std::size_t>(n), opt.workers, [&](std::size_t iy) {
        std::vector<double> f(n), d(n);
        std::vector<int> arg(n), v;
        std::vector<double> z;
        for (int ix = 0; ix < n; ++ix) f[ix] = site[iy * n + ix] >= 0 ? 0.0 : inf;
        detail::edt_1d(f.data(), n, d.data(), arg.data(), v, z);
        const double sx = dx * dx;
        for (int ix = 0; ix < n; ++ix) {
            g[iy * n + ix] = d[ix] * sx;
            gx[iy * n + ix] = arg[ix];
        }
    });
    // Pass 2 along y: minimise (dy (y - y'))^2 + g(x, y'), written in units of dy^2. Columns are
    // gathered in blocks so the strided reads stay within a few cache lines per row.
    std::vector<int> owner(N, -1);
    const double sy = dy * dy;
    constexpr int kBlock = 16;
    parallel_for(static_cast<std::size_t>((n + kBlock - 1) / kBlock), opt.workers, [&](std::size_t blk) {
        const int x0 = static_cast<int>(blk) * kBlock, w = std::min(kBlock, n - x0);
        std::vector<double> f(static_cast<std::size_t>(kBlock) * n), d(n);
        std::vector<int> arg(static_cast<std::size_t>(kBlock) * n), v;
        std::vector<double> z;
        for (int iy = 0; iy < n; ++iy)
            for (int b = 0; b < w; ++b) f[static_cast<std::size_t>(b) * n + iy] = g[static_cast<std::size_t>(iy) * n + x0 + b] / sy;
        for (int b = 0; b < w; ++b)
            detail::edt_1d(f.data() + static_cast<std::size_t>(b) * n, n, d.data(), arg.data() + static_cast<std::size_t>(b) * n, v, z);
        for (int iy = 0; iy < n; ++iy)
            for (int b = 0; b < w; ++b) {
                const int a = arg[static_cast<std::size_t>(b) * n + iy];
                if (a < 0) continue;
                const std::size_t src = static_cast<std::size_t>(a) * n + x0 + b;
                owner[static_cast<std::size_t>(iy) * n + x0 + b] = site[static_cast<std::size_t>(a) * n + gx[src]];
            }
    });
    g.clear();
    g.shrink_to_fit();
    // The owner of the nearest site can miss the nearest point near Voronoi edges; the owners
    // of the 3x3 neighbourhood almost always include it.
    rf.values.assign(N, inf);
    parallel_for(static_cast<std::size_t>(n), opt.workers, [&](std::size_t iyu) {
        const int iy = static_cast<int>(iyu);
        for (int ix = 0; ix < n; ++ix) {
            const Vec2 x = rf.center(ix, iy);
            double best = inf;
            for (int jy = std::max(0, iy - 1); jy <= std::min(n - 1, iy + 1); ++jy)
                for (int jx = std::max(0, ix - 1); jx <= std::min(n - 1, ix + 1); ++jx) {
                    const int s = owner[static_cast<std::size_t>(jy) * n + jx];
                    if (s >= 0) best = std::min(best, norm2(points[s] - x));
                }
            rf.values[iyu * n + ix] = std::sqrt(best);
        }
    });
    return rf;
}

struct GridFunctionals {
    double area = 0.0;
    double perimeter = 0.0;
    long chi = 0;
    bool touches_border = false;
    long filled_slivers = 0;  // sub-pixel complement pockets counted as covered for chi
    std::vector<std::string> warnings;
};

/// Area (pixel count), marching-squares contour length and cubical-complex Euler characteristic
/// of the mask {d <= eps}.
inline GridFunctionals grid_functionals(const RasterField& f, double eps) {
    GridFunctionals out;
    const int n = f.n;
    const double dx = f.dx(), dy = f.dy();
    std::vector<char> mask(static_cast<std::size_t>(n) * n, 0);
    long count = 0;
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            if (f.at(ix, iy) <= eps) {
                mask[static_cast<std::size_t>(iy) * n + ix] = 1;
                ++count;
                if (ix == 0 || iy == 0 || ix == n - 1 || iy == n - 1) out.touches_border = true;
            }
    out.area = count * dx * dy;
    if (out.touches_border) out.warnings.push_back("mask touches the raster border; topology is clipped");
    auto in = [&](int ix, int iy) {
        return ix >= 0 && iy >= 0 && ix < n && iy < n && mask[static_cast<std::size_t>(iy) * n + ix];
    };

    // Marching squares on v = d - eps between pixel centres; outside the grid v = +dx.
    auto val = [&](int ix, int iy) {
        if (ix < 0 || iy < 0 || ix >= n || iy >= n) return dx;
        return f.at(ix, iy) - eps;
    };
    double per = 0.0;
    for (int iy = -1; iy < n; ++iy)
        for (int ix = -1; ix < n; ++ix) {
            const int code = in(ix, iy) | in(ix + 1, iy) << 1 | in(ix + 1, iy + 1) << 2 | in(ix, iy + 1) << 3;
            if (code == 0 || code == 15) continue;
            const double v[4] = {val(ix, iy), val(ix + 1, iy), val(ix + 1, iy + 1), val(ix, iy + 1)};
            // Corner positions in cell-local coordinates.
            static constexpr double cx[4] = {0, 1, 1, 0}, cy[4] = {0, 0, 1, 1};
            auto cut = [&](int a, int b) {
                const double t = v[a] / (v[a] - v[b]);
                return Vec2{(cx[a] + t * (cx[b] - cx[a])) * dx, (cy[a] + t * (cy[b] - cy[a])) * dy};
            };
            // Edge k joins corner k and k+1.
            auto e = [&](int k) { return cut(k, (k + 1) % 4); };
            auto seg = [&](int a, int b) { per += dist(e(a), e(b)); };
            switch (code) {
                case 1: case 14: seg(3, 0); break;
                case 2: case 13: seg(0, 1); break;
                case 3: case 12: seg(3, 1); break;
                case 4: case 11: seg(1, 2); break;
                case 6: case 9: seg(0, 2); break;
                case 7: case 8: seg(2, 3); break;
                case 5: case 10: {
                    const bool center_in = 0.25 * (v[0] + v[1] + v[2] + v[3]) <= 0.0;
                    // Joined diagonal: the inside corners connect through the centre.
                    if ((code == 5) == center_in) { seg(0, 1); seg(2, 3); }
                    else { seg(3, 0); seg(1, 2); }
                    break;
                }
                default: break;
            }
        }
    out.perimeter = per;

    // Complement components (8-connected) that never get deeper than a pixel diagonal are
    // the tips of cusps between overlapping disks, not holes the raster can resolve. Only the
    // shallow band is searched: a shallow piece next to a deep complement pixel belongs to a
    // deep component.
    {
        const double depth = f.pixel_diagonal();
        auto shallow = [&](std::size_t k) { return !mask[k] && f.values[k] - eps < depth; };
        std::vector<char> seen(mask.size(), 0);
        std::vector<std::size_t> comp, stack;
        for (std::size_t start = 0; start < mask.size(); ++start) {
            if (seen[start] || !shallow(start)) continue;
            comp.clear();
            stack.assign(1, start);
            seen[start] = 1;
            bool border = false, deep = false;
            while (!stack.empty()) {
                const std::size_t k = stack.back();
                stack.pop_back();
                comp.push_back(k);
                const int ix = static_cast<int>(k % n), iy = static_cast<int>(k / n);
                if (ix == 0 || iy == 0 || ix == n - 1 || iy == n - 1) border = true;
                for (int jy = std::max(0, iy - 1); jy <= std::min(n - 1, iy + 1); ++jy)
                    for (int jx = std::max(0, ix - 1); jx <= std::min(n - 1, ix + 1); ++jx) {
                        const std::size_t q = static_cast<std::size_t>(jy) * n + jx;
                        if (mask[q] || seen[q]) continue;
                        if (!shallow(q)) {
                            deep = true;
                            continue;
                        }
                        seen[q] = 1;
                        stack.push_back(q);
                    }
            }
            if (border || deep) continue;
            for (std::size_t k : comp) mask[k] = 1;
            ++out.filled_slivers;
        }
    }

    // Cubical complex on the covered pixel centres: 4-neighbour pairs are edges, full 2x2 blocks
    // are squares. The complement is then 8-connected, matching the component search above.
    auto on = [&](int ix, int iy) {
        return ix >= 0 && iy >= 0 && ix < n && iy < n && mask[static_cast<std::size_t>(iy) * n + ix];
    };
    long V = 0, E = 0, F = 0;
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            if (!on(ix, iy)) continue;
            ++V;
            if (on(ix + 1, iy)) ++E;
            if (on(ix, iy + 1)) ++E;
            if (on(ix + 1, iy) && on(ix, iy + 1) && on(ix + 1, iy + 1)) ++F;
        }
    out.chi = V - E + F;
    return out;
}

}  // namespace fraccurv
