#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "arcset.hpp"
#include "curvature.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "ifs.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "region.hpp"
#include "sampler.hpp"

namespace fraccurv {

/// Geometric grid eps_i = eps0 q^i, i = 0..count-1, from eps0 down to delta.
class EpsGrid {
public:
    EpsGrid(double delta, double eps0, int count) : delta_(delta), eps0_(eps0), count_(count) {
        if (!(delta > 0.0 && delta < eps0)) throw InputError("eps grid needs 0 < delta < eps0");
        if (count < 2) throw InputError("eps grid needs at least 2 points");
    }
    static EpsGrid per_decade(double delta, double eps0, double per_decade = 48.0) {
        if (!(eps0 > delta && delta > 0.0)) throw InputError("eps grid needs 0 < delta < eps0");
        const int n = std::max(2, static_cast<int>(std::ceil(per_decade * std::log10(eps0 / delta) - 1e-9)) + 1);
        return EpsGrid(delta, eps0, n);
    }

    double delta() const noexcept { return delta_; }
    double eps0() const noexcept { return eps0_; }
    int count() const noexcept { return count_; }
    double q() const { return std::pow(delta_ / eps0_, 1.0 / (count_ - 1)); }
    double operator[](int i) const {
        if (i == count_ - 1) return delta_;
        return eps0_ * std::exp(std::log(delta_ / eps0_) * i / (count_ - 1));
    }
    std::vector<double> values() const {
        std::vector<double> v(count_);
        for (int i = 0; i < count_; ++i) v[i] = (*this)[i];
        return v;
    }

private:
    double delta_, eps0_;
    int count_;
};

/// delta = 2^-8 |J|, eps0 = |J|/2, 48 points per decade.
inline EpsGrid default_grid(const IFS& ifs) {
    return EpsGrid::per_decade(std::ldexp(ifs.diameter(), -8), 0.5 * ifs.diameter());
}

using MeasureSet = std::array<std::optional<DirectionMeasure>, 3>;

struct SweepOptions {
    double eta = 0.05;
    std::vector<int> ks{0, 1, 2};
    /// Footpoint regions evaluated next to B = R^2.
    std::vector<RegionFilter> regions;
    MeasureOptions measure;
    unsigned workers = 1;
    std::size_t net_cap = 50'000'000;
    std::function<void(const struct EpsRecord&)> on_record;
};

struct EpsRecord {
    double eps = 0.0;
    bool skipped = false;
    std::string skip_reason;
    std::size_t n_points = 0;
    int chi = 0;
    double gb_residual = 0.0;  // max of the Gauss-Bonnet residual and |c0 total - chi|
    double seconds = 0.0;
    MeasureSet all;
    std::vector<MeasureSet> regions;
};

struct SweepResult {
    double D = 0.0;
    double eta = 0.0;
    std::vector<EpsRecord> records;  // grid order, eps decreasing
    std::vector<std::string> log;

    double skipped_fraction() const {
        if (records.empty()) return 0.0;
        std::size_t s = 0;
        for (const auto& r : records) s += r.skipped;
        return static_cast<double>(s) / static_cast<double>(records.size());
    }
    double max_gb_residual() const {
        double m = 0.0;
        for (const auto& r : records)
            if (!r.skipped) m = std::max(m, r.gb_residual);
        return m;
    }
};

inline void check_k(int k) {
    if (k < 0 || k > 2) throw InputError("curvature index must be 0, 1 or 2");
}

/// Full-union geometry and the requested c_k measures for every eps of the grid. An eps whose
/// boundary fails a consistency check is skipped and logged; resource errors propagate.
inline SweepResult sweep(const IFS& ifs, const EpsGrid& grid, const SweepOptions& opt = {}) {
    if (!(opt.eta > 0.0 && opt.eta <= 0.2)) throw InputError("eta must lie in (0, 0.2]");
    for (int k : opt.ks) check_k(k);
    SweepResult res;
    res.D = similarity_dimension(ifs.ratios()).D;
    res.eta = opt.eta;
    const bool dedup = !check_osc(ifs).pairwise_disjoint;
    const auto eps = grid.values();
    res.records.resize(eps.size());
    std::mutex mu;
    parallel_for(eps.size(), opt.workers, [&](std::size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        EpsRecord& r = res.records[i];
        r.eps = eps[i];
        NetOptions no;
        no.cap = opt.net_cap;
        no.dedup = dedup;
        const auto net = net_points(ifs, opt.eta * eps[i], no);
        r.n_points = net.points.size();
        try {
            const DiskUnion du(net.points, eps[i]);
            const auto ab = boundary_arcs(du);
            const auto e = euler_characteristic_checked(ab);
            r.chi = e.chi;
            r.gb_residual = e.residual;
            for (int k : opt.ks) r.all[k] = curvature_measure(k, du, ab, RegionFilter::all(), opt.measure);
            if (r.all[0] && opt.measure.R.is_full()) {
                const double dev = std::abs(r.all[0]->total() - r.chi);
                r.gb_residual = std::max(r.gb_residual, dev);
                if (!(dev < 1e-6)) throw GeometryError("c0 total deviates from chi by " + std::to_string(dev), dev);
            }
            r.regions.resize(opt.regions.size());
            for (std::size_t b = 0; b < opt.regions.size(); ++b)
                for (int k : opt.ks) r.regions[b][k] = curvature_measure(k, du, ab, opt.regions[b], opt.measure);
        } catch (const GeometryError& e) {
            r.skipped = true;
            r.skip_reason = e.what();
            r.gb_residual = e.residual();
            r.all = {};
            r.regions.clear();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (opt.on_record) {
            std::lock_guard<std::mutex> lk(mu);
            opt.on_record(r);
        }
    });
    for (const auto& r : res.records)
        if (r.skipped) res.log.push_back("eps " + std::to_string(r.eps) + " skipped: " + r.skip_reason);
    return res;
}

namespace detail {

inline const DirectionMeasure* record_measure(const EpsRecord& r, int k, int region) {
    if (r.skipped) return nullptr;
    const MeasureSet* s = &r.all;
    if (region >= 0) {
        if (static_cast<std::size_t>(region) >= r.regions.size()) return nullptr;
        s = &r.regions[region];
    }
    return (*s)[k] ? &*(*s)[k] : nullptr;
}

/// Weights w_i with sum_i w_i y_i = integral over [U0, U1] of the piecewise-linear interpolant
/// through (u_i, y_i), u ascending, extended by constants beyond the end nodes.
inline std::vector<double> trapezoid_weights(const std::vector<double>& u, double U0, double U1) {
    const std::size_t n = u.size();
    std::vector<double> w(n, 0.0);
    if (U1 <= U0 || n == 0) return w;
    if (U0 < u[0]) w[0] += std::min(U1, u[0]) - U0;
    if (U1 > u[n - 1]) w[n - 1] += U1 - std::max(U0, u[n - 1]);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = std::max(U0, u[i]), b = std::min(U1, u[i + 1]);
        if (b <= a) continue;
        const double L = u[i + 1] - u[i];
        const double fa = (a - u[i]) / L, fb = (b - u[i]) / L;
        w[i] += (b - a) * (1.0 - 0.5 * (fa + fb));
        w[i + 1] += (b - a) * 0.5 * (fa + fb);
    }
    return w;
}

}  // namespace detail

/// (1/ln(hi/lo)) * int_lo^hi eps^(D-k) m_eps deps/eps, trapezoid in ln eps over the usable
/// records; skipped eps are bridged by linear interpolation in ln eps.
inline DirectionMeasure window_average(const std::vector<EpsRecord>& recs, double D, int k, double lo, double hi,
                                       int region = -1) {
    check_k(k);
    if (!(lo > 0.0 && hi > lo)) throw InputError("averaging window needs 0 < lo < hi");
    std::vector<std::pair<double, const EpsRecord*>> pts;
    for (const auto& r : recs)
        if (detail::record_measure(r, k, region)) pts.push_back({std::log(r.eps), &r});
    std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.first < b.first; });
    std::size_t inside = 0;
    for (const auto& p : pts)
        if (p.first >= std::log(lo) - 1e-12 && p.first <= std::log(hi) + 1e-12) ++inside;
    if (inside < 4) throw InputError("log-average needs at least 4 usable grid points in the window");
    std::vector<double> u;
    for (const auto& p : pts) u.push_back(p.first);
    const auto w = detail::trapezoid_weights(u, std::log(lo), std::log(hi));
    const DirectionMeasure& first = *detail::record_measure(*pts[0].second, k, region);
    DirectionMeasure acc(first.n_bins(), first.filter());
    const double norm = 1.0 / std::log(hi / lo);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (w[i] == 0.0) continue;
        const double e = pts[i].second->eps;
        acc += detail::record_measure(*pts[i].second, k, region)->scaled(w[i] * norm * std::pow(e, D - k));
    }
    return acc;
}

/// Literal finite-delta log-Cesaro average (1/|ln delta|) int_delta^eps0 over the record range.
inline DirectionMeasure log_average(const std::vector<EpsRecord>& recs, double D, int k, int region = -1) {
    if (recs.empty()) throw InputError("log-average of an empty sweep");
    double lo = INFINITY, hi = 0.0;
    for (const auto& r : recs) {
        lo = std::min(lo, r.eps);
        hi = std::max(hi, r.eps);
    }
    if (!(lo < 1.0)) throw InputError("log-average needs delta < 1");
    return window_average(recs, D, k, lo, hi, region).scaled(std::log(hi / lo) / std::abs(std::log(lo)));
}

/// Window factor W for the tail average over [delta, W delta]: the smallest power of 1/r_max
/// spanning a decade, so lattice oscillations average over whole periods.
inline double default_tail_window(const IFS& ifs) {
    double rmax = 0.0;
    for (const auto& m : ifs.maps()) rmax = std::max(rmax, m.ratio());
    const int m = static_cast<int>(std::ceil(std::log(10.0) / -std::log(rmax) - 1e-12));
    return std::pow(1.0 / rmax, m);
}

/// Cesaro average restricted to the smallest scales [delta, W delta]; same limit as the
/// literal average but without its ln(eps0)/|ln delta| bias at finite delta.
inline DirectionMeasure tail_average(const std::vector<EpsRecord>& recs, double D, int k, double window,
                                     int region = -1) {
    if (recs.empty()) throw InputError("log-average of an empty sweep");
    if (!(window > 1.0)) throw InputError("tail window must exceed 1");
    double lo = INFINITY, hi = 0.0;
    for (const auto& r : recs) {
        lo = std::min(lo, r.eps);
        hi = std::max(hi, r.eps);
    }
    if (lo * window > hi * (1.0 + 1e-9))
        throw InputError("tail window reaches beyond eps0; extend the grid or shrink the window");
    return window_average(recs, D, k, lo, lo * window, region);
}

struct ScalingFit {
    double slope = 0.0;
    double stderr_ = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0;
    std::vector<std::string> warnings;
};

/// Least-squares slope of ln C_k^var total against ln eps, optionally on [lo, hi] only.
inline ScalingFit scaling_fit(const std::vector<EpsRecord>& recs, int k, int region = -1, double lo = 0.0,
                              double hi = INFINITY) {
    check_k(k);
    std::vector<double> x, y;
    std::size_t in_range = 0, excluded = 0;
    for (const auto& r : recs) {
        if (r.eps < lo * (1 - 1e-12) || r.eps > hi * (1 + 1e-12)) continue;
        ++in_range;
        const auto* m = detail::record_measure(r, k, region);
        if (!m) { ++excluded; continue; }
        const double v = m->variation();
        if (!(v > 0.0)) { ++excluded; continue; }
        x.push_back(std::log(r.eps));
        y.push_back(std::log(v));
    }
    if (in_range < 8) throw InputError("scaling fit needs at least 8 grid points");
    if (x.size() < 3) throw InputError("scaling fit has fewer than 3 positive totals");
    ScalingFit f;
    f.used = x.size();
    f.excluded = excluded;
    if (2 * excluded > in_range) f.warnings.push_back("more than half of the totals were excluded from the fit");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    f.slope = sxy / sxx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - my - f.slope * (x[i] - mx);
        sse += e * e;
    }
    f.stderr_ = std::sqrt(sse / (n - 2.0) / sxx);
    return f;
}

/// State of the extended shift after consuming a code prefix: T(x, phi) = (S_j^-1 x, phi_j^-1 phi).
struct ShiftState {
    Word prefix;
    Angle rotation;  // accumulated phi_{x|l}^-1
    double ratio = 1.0;
};

inline ShiftState shift_step(const IFS& ifs, ShiftState s, int j) {
    if (j < 0 || static_cast<std::size_t>(j) >= ifs.size()) throw InputError("letter out of range: " + std::to_string(j + 1));
    s.prefix.push_back(j);
    s.rotation = s.rotation + -ifs.map(j).angle();
    s.ratio *= ifs.map(j).ratio();
    return s;
}

/// Covariant neighbourhood net A_F(x, eps). `ball`: F(eps) cut by B(x, a eps). `mass`: the points
/// x' of F(eps) with |x - x'| <= rho(x', eps), where rho is the smallest radius with
/// H^D(F cap B(x', rho)) = eps^D, additionally cut by B(x, a eps). H^D is taken as
/// hausdorff_total * mu_F, and mu_F of a ball is summed over cylinders down to
/// resolution * eps.
class CovariantNet {
public:
    static CovariantNet ball(double a = 2.0) {
        if (!(a > 1.0)) throw InputError("net constant a must exceed 1");
        CovariantNet n;
        n.a_ = a;
        return n;
    }

    static CovariantNet mass(const IFS& ifs, double hausdorff_total = 1.0, double a = 2.0, double resolution = 1e-3) {
        if (!(a > 1.0)) throw InputError("net constant a must exceed 1");
        if (!(hausdorff_total > 0.0)) throw InputError("Hausdorff measure must be positive");
        if (!(resolution > 0.0 && resolution < 0.1)) throw InputError("mass resolution must lie in (0, 0.1)");
        CovariantNet n;
        n.a_ = a;
        n.mass_ = std::make_shared<const MassData>(ifs, hausdorff_total, resolution);
        return n;
    }

    double a() const noexcept { return a_; }
    bool is_ball() const noexcept { return !mass_; }
    std::string name() const { return mass_ ? "mass" : "ball"; }
    /// eps0 tied to the net (H^D(F)^(1/D) for the mass net).
    std::optional<double> natural_eps0() const {
        if (!mass_) return std::nullopt;
        return std::pow(mass_->H, 1.0 / mass_->D);
    }

    /// H^D(F cap B(p, rho)) as used by the mass net.
    double hausdorff_ball(Vec2 p, double rho, double leaf) const {
        if (!mass_) throw InputError("ball net has no mass function");
        return mass_->H * mass_->mu_ball(p, rho, leaf);
    }

    DirectionMeasure measure(int k, const DiskUnion& du, const ArcBoundary& ab, Vec2 x, double eps,
                             const MeasureOptions& opt = {}) const {
        check_k(k);
        const RegionFilter B = RegionFilter::ball(x, a_ * eps);
        if (!mass_) return curvature_measure(k, du, ab, B, opt);
        if (k == 2) throw InputError("the mass net supports k = 0 and 1");
        const double target = std::pow(eps, mass_->D);
        const double leaf = mass_->resolution * eps;
        const double reach = a_ * eps;
        auto member = [&](Vec2 p) {
            const double d = dist(p, x);
            if (d > reach) return false;
            return mass_->H * mass_->mu_ball(p, d, leaf) <= target;
        };
        DirectionMeasure m(opt.n_bins, opt.R);
        const double e = ab.eps;
        for (const auto& a : ab.arcs) {
            if (!B.may_touch(a.c, e)) continue;
            for (const auto& p : B.circle_angles(a.c, e).clip({a.t1, a.len}))
                clip_by(a.c, e, p, member, mass_->resolution, [&](double t, double len) {
                    m.add_uniform({t, len}, k == 1 ? 0.5 * e * len : len / kTwoPi);
                });
        }
        if (k == 0)
            for (const auto& v : ab.vertices) {
                if (!member(v.p)) continue;
                const double w = -v.turn();
                m.add_uniform({wrap_2pi(v.n_out), w}, -w / kTwoPi);
            }
        return m;
    }

private:
    struct MassData {
        // Maps as complex affine x -> m x + t, so the recursion needs no angle arithmetic.
        struct Affine {
            double mr, mi, tx, ty;
        };
        MassData(const IFS& f, double h, double res) : H(h), resolution(res) {
            D = similarity_dimension(f.ratios()).D;
            for (const auto& m : f.maps()) {
                wD.push_back(std::pow(m.ratio(), D));
                ratio.push_back(m.ratio());
                const Vec2 o = m({0.0, 0.0}), e = m({1.0, 0.0});
                maps.push_back({e.x - o.x, e.y - o.y, o.x, o.y});
            }
            anchor = f.anchor();
            diameter = f.diameter();
            for (const auto& v : f.feasible_set().vertices()) circum = std::max(circum, dist(v, anchor));
        }
        double mu_ball(Vec2 p, double rho, double leaf) const { return rec({1.0, 0.0, 0.0, 0.0}, 1.0, 1.0, p, rho, leaf); }
        double rec(const Affine& s, double r, double w, Vec2 p, double rho, double leaf) const {
            const double cx = s.mr * anchor.x - s.mi * anchor.y + s.tx - p.x;
            const double cy = s.mi * anchor.x + s.mr * anchor.y + s.ty - p.y;
            const double d2 = cx * cx + cy * cy;
            const double R = r * circum;
            if (d2 > (rho + R) * (rho + R)) return 0.0;
            if (rho >= R && d2 <= (rho - R) * (rho - R)) return w;
            if (r * diameter <= leaf) return d2 <= rho * rho ? w : 0.0;
            double acc = 0.0;
            for (std::size_t j = 0; j < maps.size(); ++j) {
                const Affine& m = maps[j];
                const Affine c{s.mr * m.mr - s.mi * m.mi, s.mr * m.mi + s.mi * m.mr, s.mr * m.tx - s.mi * m.ty + s.tx,
                               s.mi * m.tx + s.mr * m.ty + s.ty};
                acc += rec(c, r * ratio[j], w * wD[j], p, rho, leaf);
            }
            return acc;
        }
        double H, resolution;
        double D = 0.0;
        std::vector<double> wD, ratio;
        std::vector<Affine> maps;
        Vec2 anchor;
        double diameter = 0.0;
        double circum = 0.0;
    };

    /// Hands the parts of the arc piece where `in` holds to `add`. The piece is scanned in steps
    /// of at most 0.05 rad and each change of membership is located by bisection to `tol` rad.
    template <class In, class Add>
    static void clip_by(Vec2 c, double e, AngularInterval iv, In&& in, double tol, Add&& add) {
        if (iv.length <= 0.0) return;
        const int n = std::max(1, static_cast<int>(std::ceil(iv.length / 0.05)));
        auto at = [&](double t) { return c + e * unit(t); };
        double t0 = iv.start;
        bool s0 = in(at(t0));
        for (int i = 1; i <= n; ++i) {
            const double t1 = iv.start + iv.length * i / n;
            const bool s1 = in(at(t1));
            if (s0 == s1) {
                if (s0) add(t0, t1 - t0);
            } else {
                double lo = t0, hi = t1;
                while (hi - lo > tol) {
                    const double mid = 0.5 * (lo + hi);
                    (in(at(mid)) == s0 ? lo : hi) = mid;
                }
                const double cut = 0.5 * (lo + hi);
                if (s0) add(t0, cut - t0);
                else add(cut, t1 - cut);
            }
            t0 = t1;
            s0 = s1;
        }
    }

    double a_ = 2.0;
    std::shared_ptr<const MassData> mass_;
};

struct LocalOptions {
    double eta = 0.05;
    double per_decade = 48.0;
    MeasureOptions measure;
    std::optional<double> eps0;  // default: the net's own, else |J|/2
    std::size_t net_cap = 50'000'000;
};

/// b = max(2a, |J|/eps0).
inline double shell_constant(const IFS& ifs, const CovariantNet& net, const LocalOptions& opt) {
    const double eps0 = opt.eps0 ? *opt.eps0 : net.natural_eps0().value_or(0.5 * ifs.diameter());
    if (!(eps0 > 0.0)) throw InputError("eps0 must be positive");
    return std::max(2.0 * net.a(), ifs.diameter() / eps0);
}

struct LocalGeometry {
    DiskUnion du;
    ArcBoundary ab;
};

/// Union and boundary near x only: net words that can reach B(x, (a+1.25) eps), boundary of the
/// disks meeting B(x, a eps).
inline LocalGeometry local_geometry(const IFS& ifs, Vec2 x, double eps, double a, double eta, bool dedup,
                                    std::size_t cap = 50'000'000) {
    NetOptions no;
    no.roi_center = x;
    // Only disks within (a + 1) eps of x can cover boundary points inside B(x, a eps).
    no.roi_radius = (a + 1.25) * eps;
    no.dedup = dedup;
    no.cap = cap;
    auto net = net_points(ifs, eta * eps, no);
    DiskUnion du(std::move(net.points), eps);
    BoundaryOptions bo;
    bo.near_center = x;
    bo.near_radius = a * eps;
    auto ab = boundary_arcs(du, bo);
    return {std::move(du), std::move(ab)};
}

inline bool needs_dedup(const IFS& ifs) { return !check_osc(ifs).pairwise_disjoint; }

/// C_k(F(eps), A_F(x, eps) x R) with R from opt.measure.
inline DirectionMeasure local_measure(const IFS& ifs, Vec2 x, double eps, int k, const CovariantNet& net,
                                      const LocalOptions& opt = {}, std::optional<bool> dedup = std::nullopt) {
    const auto g = local_geometry(ifs, x, eps, net.a(), opt.eta, dedup ? *dedup : needs_dedup(ifs), opt.net_cap);
    return net.measure(k, g.du, g.ab, x, eps, opt.measure);
}

namespace detail {

/// int_lo^hi eps^-k C_k(F(eps), A_F(x, eps) x .) deps/eps for each k, trapezoid in ln eps on a
/// geometric grid with opt.per_decade points per decade (at least 2 points).
inline MeasureSet shell_integral(const IFS& ifs, Vec2 x, double lo, double hi, const std::vector<int>& ks,
                                 const CovariantNet& net, const LocalOptions& opt, bool dedup) {
    MeasureSet out;
    for (int k : ks) out[k] = DirectionMeasure(opt.measure.n_bins, opt.measure.R);
    if (!(hi > lo)) return out;
    const int n = std::max(2, static_cast<int>(std::ceil(opt.per_decade * std::log10(hi / lo))) + 1);
    const double du = std::log(hi / lo) / (n - 1);
    for (int i = 0; i < n; ++i) {
        const double eps = lo * std::exp(du * i);
        const double w = (i == 0 || i == n - 1) ? 0.5 * du : du;
        const auto g = local_geometry(ifs, x, eps, net.a(), opt.eta, dedup, opt.net_cap);
        for (int k : ks) *out[k] += net.measure(k, g.du, g.ab, x, eps, opt.measure).scaled(w * std::pow(eps, -k));
    }
    return out;
}

}  // namespace detail

/// Delta_{F,x,delta}(phi R) as a direction measure (the filter is phi R).
inline DirectionMeasure local_density_measure(const IFS& ifs, Vec2 x, double phi, double delta, int k,
                                              const DirectionSet& R, const CovariantNet& net,
                                              LocalOptions opt = {}) {
    check_k(k);
    if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0, 1)");
    const double b = shell_constant(ifs, net, opt);
    const double upper = ifs.feasible_set().distance_to_complement(x) / b;
    if (!(upper > delta))
        throw InputError("point too close to the boundary of J: d(x, J^c)/b = " + std::to_string(upper) +
                         " does not exceed delta = " + std::to_string(delta));
    opt.measure.R = R.rotated(phi);
    auto m = detail::shell_integral(ifs, x, delta, upper, {k}, net, opt, needs_dedup(ifs));
    return m[k]->scaled(1.0 / std::abs(std::log(delta)));
}

inline double local_density(const IFS& ifs, Vec2 x, double phi, double delta, int k, const DirectionSet& R,
                            const CovariantNet& net, const LocalOptions& opt = {}) {
    if (R.is_empty()) return 0.0;
    return local_density_measure(ifs, x, phi, delta, k, R, net, opt).total();
}

struct FibreOptions {
    std::size_t n_samples = 20;
    double delta = 0.0;  // 0: 2^-8 |J|
    std::vector<int> ks{1};
    std::uint64_t seed = 1;
    CovariantNet net = CovariantNet::ball();
    LocalOptions local;
    int orbit_length = 0;  // 0: about log(delta/|J|) / log(r_max)
    unsigned workers = 1;
    // latin: stratify two code blocks of length L. balanced: balanced_coded_points, which needs
    // equal letter probabilities, a prime number of maps and n_samples a power of it.
    enum class Design { latin, balanced } design = Design::latin;
};

struct FibreResult {
    MeasureSet measure;
    std::array<std::vector<double>, 3> bin_stderr;
    std::array<std::vector<double>, 3> sample_totals;
    std::array<double, 3> total_stderr{};
    int orbit_length = 0;
    double normalization = 0.0;        // sum_j r_j^D |ln r_j|
    double shell_normalization = 0.0;  // mean shell log-length / (L * normalization), about 1
    GroupDescriptor group;
    std::vector<Vec2> points;
    std::vector<MeasureSet> samples;  // per-sample contributions, already normalized
    std::vector<std::string> warnings;

    /// Standard error of the estimated mass in [lo, lo + len).
    double window_stderr(int k, double lo, double len) const {
        const double n = static_cast<double>(samples.size());
        if (n < 2.0 || !measure[k]) return 0.0;
        const double mean = measure[k]->mass_in(lo, len);
        double v = 0.0;
        for (const auto& s : samples) v += std::pow(s[k]->mass_in(lo, len) - mean, 2);
        return std::sqrt(v / (n - 1.0) / n);
    }
};

/// Monte-Carlo fibre measure. Each sample (x, phi) contributes the shell integral over
/// [d(x, (S_{x|L} J)^c)/b, d(x, J^c)/b], which by the covariance of the net equals the sum of the
/// single-shell integrands over the first L points of its shift orbit, divided by L. The
/// direction measure is pulled back by phi^-1 (exactly averaged over G when G is finite),
/// and everything is divided by sum_j r_j^D |ln r_j|.
inline FibreResult fibre_estimate(const IFS& ifs, const FibreOptions& opt = {}) {
    if (opt.n_samples < 2) throw InputError("fibre estimate needs at least 2 samples");
    for (int k : opt.ks) check_k(k);
    const double D = similarity_dimension(ifs.ratios()).D;
    FibreResult res;
    double rmax = 0.0;
    for (const auto& m : ifs.maps()) {
        res.normalization += std::pow(m.ratio(), D) * std::abs(std::log(m.ratio()));
        rmax = std::max(rmax, m.ratio());
    }
    const double delta = opt.delta > 0.0 ? opt.delta : std::ldexp(ifs.diameter(), -8);
    res.orbit_length = opt.orbit_length > 0
                           ? opt.orbit_length
                           : std::max(1, static_cast<int>(std::lround(std::log(delta / ifs.diameter()) / std::log(rmax))));
    const int L = res.orbit_length;
    res.group = rotation_group_closure(ifs.angles());
    const double b = shell_constant(ifs, opt.net, opt.local);
    const bool dedup = needs_dedup(ifs);

    Rng rng(opt.seed);
    const auto pts = opt.design == FibreOptions::Design::balanced ? balanced_coded_points(ifs, opt.n_samples, rng)
                                                                  : latin_coded_points(ifs, opt.n_samples, L, rng);
    std::vector<double> phis(opt.n_samples, 0.0);
    if (!res.group.finite())
        for (auto& p : phis) p = haar_sample(res.group, rng).radians();

    const std::size_t n = opt.n_samples;
    std::vector<MeasureSet> per(n);
    std::vector<double> loglen(n, 0.0);
    LocalOptions lopt = opt.local;
    lopt.measure.R = DirectionSet::full();
    parallel_for(n, opt.workers, [&](std::size_t i) {
        const Vec2 x = pts[i].x;
        const Word head(pts[i].prefix.begin(), pts[i].prefix.begin() + L);
        const Similarity S = compose_word(ifs, head);
        const double upper = ifs.feasible_set().distance_to_complement(x) / b;
        const double lower = ifs.feasible_set().mapped([&](Vec2 p) { return S(p); }).distance_to_complement(x) / b;
        loglen[i] = upper > lower && lower > 0.0 ? std::log(upper / lower) : 0.0;
        auto m = detail::shell_integral(ifs, x, lower, upper, opt.ks, opt.net, lopt, dedup);
        for (int k : opt.ks) {
            DirectionMeasure pulled(m[k]->n_bins());
            if (res.group.finite()) {
                const auto ord = res.group.order;
                for (std::int64_t g = 0; g < ord; ++g)
                    pulled += m[k]->rotated(-kTwoPi * static_cast<double>(g) / static_cast<double>(ord));
                pulled = pulled.scaled(1.0 / static_cast<double>(ord));
            } else {
                pulled = m[k]->rotated(-phis[i]);
            }
            per[i][k] = pulled.scaled(1.0 / (L * res.normalization));
        }
    });

    double ll = 0.0;
    for (double v : loglen) ll += v;
    res.shell_normalization = ll / static_cast<double>(n) / (L * res.normalization);
    for (const auto& p : pts) res.points.push_back(p.x);
    for (int k : opt.ks) {
        DirectionMeasure mean(per[0][k]->n_bins());
        for (std::size_t i = 0; i < n; ++i) mean += *per[i][k];
        mean = mean.scaled(1.0 / static_cast<double>(n));
        const auto mb = mean.binned();
        std::vector<double> var(mb.size(), 0.0);
        double tvar = 0.0;
        const double mt = mean.total();
        for (std::size_t i = 0; i < n; ++i) {
            const auto bi = per[i][k]->binned();
            for (std::size_t j = 0; j < bi.size(); ++j) var[j] += (bi[j] - mb[j]) * (bi[j] - mb[j]);
            const double t = per[i][k]->total();
            res.sample_totals[k].push_back(t);
            tvar += (t - mt) * (t - mt);
        }
        const double dn = static_cast<double>(n);
        for (auto& v : var) v = std::sqrt(v / (dn - 1.0) / dn);
        res.bin_stderr[k] = std::move(var);
        res.total_stderr[k] = std::sqrt(tvar / (dn - 1.0) / dn);
        res.measure[k] = std::move(mean);
    }
    res.samples = std::move(per);
    if (std::abs(res.shell_normalization - 1.0) > 0.1)
        res.warnings.push_back("shell log-lengths deviate from the ergodic normalization by " +
                               std::to_string(100.0 * std::abs(res.shell_normalization - 1.0)) + "%");
    return res;
}

struct CovarianceResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double discrepancy = 0.0;
    double bound = 0.0;  // d(x, (S_{x|l} J)^c)/b
};

/// Both sides of C_k(F(eps), A_F(x,eps) x phi R) = r^k C_k(F(eps/r), A_F(T^l x, eps/r) x phi_{x|l}^-1 phi R),
/// r = r_{x|l}, each from its own net at spacing eta times its own radius.
inline CovarianceResult covariance_check(const IFS& ifs, const CodedPoint& cp, double phi, int l, double eps, int k,
                                         const DirectionSet& R, const CovariantNet& net, LocalOptions opt = {}) {
    check_k(k);
    if (l < 0 || static_cast<std::size_t>(l) > cp.prefix.size()) throw InputError("shift depth out of range");
    const Word head(cp.prefix.begin(), cp.prefix.begin() + l);
    const Word tail(cp.prefix.begin() + l, cp.prefix.end());
    const Similarity S = compose_word(ifs, head);
    const double b = shell_constant(ifs, net, opt);
    CovarianceResult res;
    res.bound = ifs.feasible_set().mapped([&](Vec2 p) { return S(p); }).distance_to_complement(cp.x) / b;
    if (!(eps < res.bound))
        throw InputError("covariance check needs eps < d(x, (S_{x|l} J)^c)/b = " + std::to_string(res.bound));
    const bool dedup = needs_dedup(ifs);
    const double r = S.is_identity() ? 1.0 : S.ratio();
    const Vec2 y = compose_word(ifs, tail)(ifs.anchor());
    opt.measure.R = R.rotated(phi);
    res.lhs = local_measure(ifs, cp.x, eps, k, net, opt, dedup).total();
    opt.measure.R = R.rotated(phi - S.angle().radians());
    res.rhs = std::pow(r, k) * local_measure(ifs, y, eps / r, k, net, opt, dedup).total();
    res.discrepancy = std::abs(res.lhs - res.rhs) / std::max({std::abs(res.lhs), std::abs(res.rhs), 1e-300});
    return res;
}

struct ProductResult {
    double total = 0.0;            // C_k^frac(F, R^2 x S^1) by the tail average
    std::vector<double> box_total;
    std::vector<double> ratio;     // box_total / total
    std::vector<double> mu;        // empirical mu_F(B)
    std::vector<double> ratio_error;  // |ratio / mu - 1|
    std::vector<bool> excluded;
    std::vector<std::vector<double>> profile;  // binned C(B x .) / C(B x S^1)
    double max_ratio_error = 0.0;
    double profile_deviation = 0.0;  // worst pairwise L1 distance of the profiles
    bool degenerate = false;         // total near zero: ratios carry no information
    std::vector<std::string> warnings;
};

/// Product structure from a sweep that carried `boxes` as its regions.
inline ProductResult product_structure_from(const SweepResult& sw, const std::vector<RegionFilter>& boxes, int k,
                                            const EmpiricalMeasure& mu, double window) {
    if (boxes.size() < 2) throw InputError("product structure check needs at least 2 boxes");
    ProductResult res;
    const auto whole = tail_average(sw.records, sw.D, k, window);
    res.total = whole.total();
    if (std::abs(res.total) < 0.05 * whole.variation()) {
        res.degenerate = true;
        res.warnings.push_back("C" + std::to_string(k) + " total is near zero relative to its variation; ratios are not meaningful");
    }
    for (std::size_t b = 0; b < boxes.size(); ++b) {
        std::size_t in = 0;
        for (const auto& p : mu.points) in += boxes[b].contains(p, 0.0);
        const double mb = static_cast<double>(in) / static_cast<double>(mu.points.size());
        const auto m = tail_average(sw.records, sw.D, k, window, static_cast<int>(b));
        const double t = m.total();
        res.mu.push_back(mb);
        res.box_total.push_back(t);
        res.ratio.push_back(t / res.total);
        const bool ex = mb < 0.02;
        res.excluded.push_back(ex);
        res.ratio_error.push_back(ex ? 0.0 : std::abs(t / res.total / mb - 1.0));
        if (ex) res.warnings.push_back("box " + std::to_string(b) + " excluded: mu_F(B) = " + std::to_string(mb) + " < 0.02");
        std::vector<double> prof = m.binned();
        if (std::abs(t) > 0.0)
            for (auto& v : prof) v /= t;
        res.profile.push_back(std::move(prof));
    }
    for (std::size_t b = 0; b < boxes.size(); ++b) {
        if (res.excluded[b]) continue;
        res.max_ratio_error = std::max(res.max_ratio_error, res.ratio_error[b]);
        for (std::size_t c = b + 1; c < boxes.size(); ++c) {
            if (res.excluded[c]) continue;
            double l1 = 0.0;
            for (std::size_t j = 0; j < res.profile[b].size(); ++j) l1 += std::abs(res.profile[b][j] - res.profile[c][j]);
            res.profile_deviation = std::max(res.profile_deviation, l1);
        }
    }
    return res;
}

struct ProductOptions {
    SweepOptions sweep;
    double window = 0.0;  // 0: default_tail_window
    std::size_t mu_samples = 200000;
    std::uint64_t seed = 7;
};

inline ProductResult product_structure_check(const IFS& ifs, const std::vector<RegionFilter>& boxes,
                                             const EpsGrid& grid, int k, ProductOptions opt = {}) {
    if (boxes.size() < 2) throw InputError("product structure check needs at least 2 boxes");
    check_k(k);
    opt.sweep.regions = boxes;
    opt.sweep.ks = {k};
    const auto sw = sweep(ifs, grid, opt.sweep);
    const auto mu = chaos_game_sample(ifs, opt.mu_samples, opt.seed);
    return product_structure_from(sw, boxes, k, mu, opt.window > 0.0 ? opt.window : default_tail_window(ifs));
}

struct ConcentrationResult {
    double fraction = 0.0;
    double inside = 0.0;  // variation carried at distance > c eps from J^c
    double total = 0.0;
};

inline ConcentrationResult boundary_concentration(const IFS& ifs, double eps, double c, int k, double eta = 0.05) {
    check_k(k);
    if (!(c > 0.0)) throw InputError("boundary distance factor must be positive");
    NetOptions no;
    no.dedup = needs_dedup(ifs);
    const auto net = net_points(ifs, eta * eps, no);
    const DiskUnion du(net.points, eps);
    const auto ab = boundary_arcs(du);
    ConcentrationResult r;
    r.total = curvature_measure(k, du, ab).variation();
    r.inside = curvature_measure(k, du, ab, RegionFilter::away_from_boundary(ifs.feasible_set(), c)).variation();
    r.fraction = r.total > 0.0 ? r.inside / r.total : 0.0;
    return r;
}

struct IntegrabilityOptions {
    std::size_t n_points = 16;
    std::uint64_t seed = 3;
    double eta = 0.05;
    unsigned workers = 1;
};

struct IntegrabilityResult {
    double sup = 0.0;
    std::vector<std::pair<int, double>> per_octave;  // octave j: eps in (eps0 2^-(j+1), eps0 2^-j]
};

/// max over sampled x and grid eps of eps^-k C_k^var(F(eps), B(x, a eps) x S^1).
inline IntegrabilityResult uniform_integrability_probe(const IFS& ifs, const EpsGrid& grid, double a, int k,
                                                       const IntegrabilityOptions& opt = {}) {
    check_k(k);
    if (!(a > 1.0)) throw InputError("net constant a must exceed 1");
    Rng rng(opt.seed);
    const LetterSampler pick(ifs);
    std::vector<Vec2> xs;
    for (std::size_t i = 0; i < opt.n_points; ++i) xs.push_back(sample_coded_point(ifs, pick, rng).x);
    const auto eps = grid.values();
    const bool dedup = needs_dedup(ifs);
    const auto net = CovariantNet::ball(a);
    std::vector<double> val(eps.size() * xs.size(), 0.0);
    parallel_for(val.size(), opt.workers, [&](std::size_t t) {
        const std::size_t ie = t / xs.size(), ix = t % xs.size();
        LocalOptions lo;
        lo.eta = opt.eta;
        val[t] = std::pow(eps[ie], -k) * local_measure(ifs, xs[ix], eps[ie], k, net, lo, dedup).variation();
    });
    IntegrabilityResult r;
    for (std::size_t ie = 0; ie < eps.size(); ++ie) {
        const int oct = static_cast<int>(std::floor(std::log2(grid.eps0() / eps[ie]) + 1e-9));
        double s = 0.0;
        for (std::size_t ix = 0; ix < xs.size(); ++ix) s = std::max(s, val[ie * xs.size() + ix]);
        r.sup = std::max(r.sup, s);
        if (r.per_octave.empty() || r.per_octave.back().first != oct) r.per_octave.push_back({oct, s});
        else r.per_octave.back().second = std::max(r.per_octave.back().second, s);
    }
    return r;
}

/// Everything the sweep command reports.
struct EstimatorReport {
    struct Row {
        double eps = 0.0;
        bool skipped = false;
        std::string reason;
        std::size_t n_points = 0;
        int chi = 0;
        double gb_residual = 0.0;
        std::array<double, 3> total{NAN, NAN, NAN};
        std::array<double, 3> variation{NAN, NAN, NAN};
    };
    double D = 0.0;
    double eta = 0.0;
    double delta = 0.0, eps0 = 0.0;
    int count = 0;
    double tail_window = 0.0;
    std::vector<int> ks;
    std::vector<Row> rows;
    MeasureSet averaged;  // literal (1/|ln delta|) average
    MeasureSet tail;      // tail-window average
    std::array<std::optional<ScalingFit>, 3> fit;
    std::vector<std::string> skipped_log;
    std::vector<std::string> warnings;
    double skipped_fraction = 0.0;
    double max_gb_residual = 0.0;
};

inline EstimatorReport make_report(const IFS& ifs, const EpsGrid& grid, const SweepResult& sw,
                                   const std::vector<int>& ks) {
    EstimatorReport rep;
    rep.D = sw.D;
    rep.eta = sw.eta;
    rep.delta = grid.delta();
    rep.eps0 = grid.eps0();
    rep.count = grid.count();
    rep.ks = ks;
    rep.tail_window = default_tail_window(ifs);
    for (const auto& r : sw.records) {
        EstimatorReport::Row row;
        row.eps = r.eps;
        row.skipped = r.skipped;
        row.reason = r.skip_reason;
        row.n_points = r.n_points;
        row.chi = r.chi;
        row.gb_residual = r.gb_residual;
        for (int k : ks)
            if (r.all[k]) {
                row.total[k] = r.all[k]->total();
                row.variation[k] = r.all[k]->variation();
            }
        rep.rows.push_back(row);
    }
    for (int k : ks) {
        try {
            rep.averaged[k] = log_average(sw.records, sw.D, k);
        } catch (const InputError& e) {
            rep.warnings.push_back("k = " + std::to_string(k) + ": " + e.what());
        }
        try {
            if (grid.delta() * rep.tail_window <= grid.eps0()) rep.tail[k] = tail_average(sw.records, sw.D, k, rep.tail_window);
            else rep.warnings.push_back("grid too short for the tail window");
        } catch (const InputError& e) {
            rep.warnings.push_back("k = " + std::to_string(k) + ": " + e.what());
        }
        if (std::abs(k - sw.D) < 1e-9) continue;  // exponent D - k = 0: nothing to fit
        try {
            rep.fit[k] = scaling_fit(sw.records, k);
            for (const auto& w : rep.fit[k]->warnings) rep.warnings.push_back("k = " + std::to_string(k) + ": " + w);
        } catch (const InputError& e) {
            rep.warnings.push_back("k = " + std::to_string(k) + ": " + e.what());
        }
    }
    rep.skipped_log = sw.log;
    rep.skipped_fraction = sw.skipped_fraction();
    rep.max_gb_residual = sw.max_gb_residual();
    return rep;
}

}  // namespace fraccurv
