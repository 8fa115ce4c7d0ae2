#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "curvature.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "geometry.hpp"

namespace fraccurv {

using Json = nlohmann::ordered_json;

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write " + p.string());
    out << s;
    if (!out) throw InputError("write failed: " + p.string());
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// FNV-1a; used for reproducibility checks.
inline std::uint64_t text_digest(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t file_digest(const std::filesystem::path& p) { return text_digest(read_text(p)); }

inline std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ---- direction measures ----

/// Histogram block `bin_center_rad,mass`, then a blank line and the atom block `angle_rad,mass`.
inline std::string measure_csv(const DirectionMeasure& m) {
    std::string s = "bin_center_rad,mass\n";
    const auto b = m.bins();
    for (int i = 0; i < m.n_bins(); ++i) s += fmt_g17(m.bin_center(i)) + "," + fmt_g17(b[i]) + "\n";
    s += "\nangle_rad,mass\n";
    auto atoms = m.atoms();
    std::sort(atoms.begin(), atoms.end(), [](auto& x, auto& y) { return x.angle < y.angle; });
    for (const auto& a : atoms) s += fmt_g17(a.angle) + "," + fmt_g17(a.mass) + "\n";
    return s;
}

struct MeasureTable {
    std::vector<double> center, mass;
    std::vector<DirectionMeasure::Atom> atoms;

    double total() const {
        double t = 0.0;
        for (double v : mass) t += v;
        for (const auto& a : atoms) t += a.mass;
        return t;
    }
};

inline MeasureTable parse_measure_csv(const std::string& text, const std::string& path = "<csv>") {
    MeasureTable t;
    std::istringstream in(text);
    std::string line;
    int block = -1, lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line == "bin_center_rad,mass") { block = 0; continue; }
        if (line == "angle_rad,mass") { block = 1; continue; }
        const auto comma = line.find(',');
        if (block < 0 || comma == std::string::npos)
            throw InputError(path + ":" + std::to_string(lineno) + ": malformed measure row");
        char* e1 = nullptr;
        char* e2 = nullptr;
        const double a = std::strtod(line.c_str(), &e1);
        const double v = std::strtod(line.c_str() + comma + 1, &e2);
        if (e1 != line.c_str() + comma || *e2 != '\0')
            throw InputError(path + ":" + std::to_string(lineno) + ": not a number");
        if (block == 0) {
            t.center.push_back(a);
            t.mass.push_back(v);
        } else {
            t.atoms.push_back({a, v});
        }
    }
    if (t.center.empty()) throw InputError(path + ": no histogram rows");
    return t;
}

struct DirectionCluster {
    double center;  // mass-weighted mean direction
    double mass;
    int first_bin, n_bins;
};

/// Maximal runs of bins (atoms folded in) whose |mass| exceeds min_fraction of the largest bin,
/// heaviest first.
inline std::vector<DirectionCluster> direction_clusters(const DirectionMeasure& m, double min_fraction = 0.01) {
    const auto b = m.binned();
    const int n = m.n_bins();
    double mx = 0.0;
    for (double v : b) mx = std::max(mx, std::abs(v));
    std::vector<DirectionCluster> out;
    if (mx == 0.0) return out;
    const double thr = min_fraction * mx;
    auto on = [&](int i) { return std::abs(b[((i % n) + n) % n]) > thr; };
    int start = 0;
    while (start < n && on(start)) ++start;  // begin right after a gap so wrapped runs stay whole
    if (start == n) return {{kPi, m.total(), 0, n}};
    for (int i = start; i < start + n;) {
        if (!on(i)) { ++i; continue; }
        int j = i;
        double mass = 0.0, sx = 0.0, sy = 0.0;
        while (j < start + n && on(j)) {
            const double v = b[j % n];
            mass += v;
            sx += std::abs(v) * std::cos(m.bin_center(j % n));
            sy += std::abs(v) * std::sin(m.bin_center(j % n));
            ++j;
        }
        out.push_back({wrap_2pi(std::atan2(sy, sx)), mass, i % n, j - i});
        i = j;
    }
    std::sort(out.begin(), out.end(), [](auto& x, auto& y) { return std::abs(x.mass) > std::abs(y.mass); });
    return out;
}

inline Json measure_json(const DirectionMeasure& m, std::size_t max_atoms = 64) {
    Json j;
    j["total"] = m.total();
    j["total_pos"] = m.total_pos();
    j["total_neg"] = m.total_neg();
    j["n_bins"] = m.n_bins();
    auto atoms = m.atoms();
    std::sort(atoms.begin(), atoms.end(), [](auto& x, auto& y) {
        return std::abs(x.mass) != std::abs(y.mass) ? std::abs(x.mass) > std::abs(y.mass) : x.angle < y.angle;
    });
    Json ja = Json::array();
    for (std::size_t i = 0; i < atoms.size() && i < max_atoms; ++i) ja.push_back({{"angle_rad", atoms[i].angle}, {"mass", atoms[i].mass}});
    j["atoms"] = ja;
    j["n_atoms"] = atoms.size();
    Json jc = Json::array();
    const auto cl = direction_clusters(m);
    for (std::size_t i = 0; i < cl.size() && i < max_atoms; ++i)
        jc.push_back({{"direction_rad", cl[i].center}, {"mass", cl[i].mass}, {"bins", cl[i].n_bins}});
    j["dominant_directions"] = jc;
    return j;
}

/// Rose diagram: bins as radial wedges (positive outward in blue, negative in red) and atoms as
/// spokes scaled separately.
inline std::string rose_svg(const MeasureTable& t, const std::string& title) {
    const double W = 480, C = 240, R = 200;
    double bmax = 0.0, amax = 0.0;
    const double bw = t.center.size() > 1 ? t.center[1] - t.center[0] : kTwoPi;
    for (double v : t.mass) bmax = std::max(bmax, std::abs(v) / bw);
    for (const auto& a : t.atoms) amax = std::max(amax, std::abs(a.mass));
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << W + 30 << "\" viewBox=\"0 0 " << W
      << " " << W + 30 << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
    s << "<g transform=\"translate(" << C << "," << C + 30 << ") scale(1,-1)\">\n";
    s << "<circle r=\"" << R << "\" fill=\"none\" stroke=\"#bbb\"/>\n";
    auto pt = [&](double r, double a) { return fmt_g17(r * std::cos(a)) + "," + fmt_g17(r * std::sin(a)); };
    if (bmax > 0.0)
        for (std::size_t i = 0; i < t.center.size(); ++i) {
            if (t.mass[i] == 0.0) continue;
            const double r = R * std::abs(t.mass[i]) / bw / bmax;
            const double a0 = t.center[i] - 0.5 * bw, a1 = t.center[i] + 0.5 * bw;
            s << "<path d=\"M0,0 L" << pt(r, a0) << " L" << pt(r, a1) << " Z\" fill=\""
              << (t.mass[i] > 0 ? "#3a6ea5" : "#c0392b") << "\" stroke=\"none\"/>\n";
        }
    for (const auto& a : t.atoms) {
        const double r = R * std::abs(a.mass) / amax;
        s << "<line x1=\"0\" y1=\"0\" x2=\"" << fmt_g17(r * std::cos(a.angle)) << "\" y2=\""
          << fmt_g17(r * std::sin(a.angle)) << "\" stroke=\"" << (a.mass > 0 ? "#111" : "#c0392b")
          << "\" stroke-width=\"3\"/>\n";
    }
    s << "</g>\n</svg>\n";
    return s.str();
}

// ---- parallel sets ----

/// One row per boundary arc in loop order: loop,orientation,cx,cy,eps,t1,len.
inline std::string arcs_csv(const ArcBoundary& ab) {
    std::string s = "loop,orientation,cx,cy,eps,t1,len\n";
    for (std::size_t l = 0; l < ab.loops.size(); ++l)
        for (auto i : ab.loops[l].arcs) {
            const Arc& a = ab.arcs[i];
            s += std::to_string(l) + "," + std::to_string(ab.loops[l].orientation) + "," + fmt_g17(a.c.x) + "," +
                 fmt_g17(a.c.y) + "," + fmt_g17(ab.eps) + "," + fmt_g17(a.t1) + "," + fmt_g17(a.len) + "\n";
        }
    return s;
}

struct ArcRow {
    int loop;
    int orientation;
    Arc arc;
    double eps;
};

inline std::vector<ArcRow> parse_arcs_csv(const std::string& text, const std::string& path = "<csv>") {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != "loop,orientation,cx,cy,eps,t1,len") throw InputError(path + ": not an arc table");
    std::vector<ArcRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ArcRow r{};
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf,%lf", &r.loop, &r.orientation, &r.arc.c.x, &r.arc.c.y, &r.eps,
                        &r.arc.t1, &r.arc.len) != 7)
            throw InputError(path + ":" + std::to_string(lineno) + ": malformed arc row");
        rows.push_back(r);
    }
    return rows;
}

/// Filled parallel set: each loop becomes one closed path of circular arcs (even-odd fill
/// leaves the holes open). `points` are drawn on top when given.
inline std::string parallel_set_svg(const std::vector<ArcRow>& rows, const std::string& title,
                                    const std::vector<Vec2>& points = {}) {
    double lx = INFINITY, ly = INFINITY, hx = -INFINITY, hy = -INFINITY;
    for (const auto& r : rows) {
        lx = std::min(lx, r.arc.c.x - r.eps);
        ly = std::min(ly, r.arc.c.y - r.eps);
        hx = std::max(hx, r.arc.c.x + r.eps);
        hy = std::max(hy, r.arc.c.y + r.eps);
    }
    if (rows.empty()) lx = ly = 0, hx = hy = 1;
    const double W = 640, pad = 10;
    const double scale = (W - 2 * pad) / std::max(hx - lx, hy - ly);
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << W + 30 << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
    s << "<g transform=\"matrix(" << fmt_g17(scale) << " 0 0 " << fmt_g17(-scale) << " " << fmt_g17(pad - scale * lx) << " "
      << fmt_g17(W + 30 - pad + scale * ly) << ")\">\n";
    s << "<path fill=\"#9ecae1\" fill-rule=\"evenodd\" stroke=\"#08519c\" stroke-width=\"" << fmt_g17(1.0 / scale)
      << "\" d=\"";
    auto P = [](Vec2 p) { return fmt_g17(p.x) + "," + fmt_g17(p.y); };
    int cur = -1;
    for (const auto& r : rows) {
        const Arc& a = r.arc;
        const Vec2 p0 = a.c + r.eps * unit(a.t1);
        if (r.loop != cur) {
            if (cur >= 0) s << "Z ";
            s << "M" << P(p0) << " ";
            cur = r.loop;
        } else {
            s << "L" << P(p0) << " ";
        }
        // Split long arcs so that every SVG arc spans less than pi.
        const int pieces = a.len > 0.9 * kPi ? 3 : 1;
        for (int k = 1; k <= pieces; ++k) {
            const Vec2 p = a.c + r.eps * unit(a.t1 + a.len * k / pieces);
            s << "A" << fmt_g17(r.eps) << "," << fmt_g17(r.eps) << " 0 0 1 " << P(p) << " ";
        }
    }
    if (cur >= 0) s << "Z";
    s << "\"/>\n";
    const double pr = 1.5 / scale;
    for (const auto& p : points)
        s << "<circle cx=\"" << fmt_g17(p.x) << "\" cy=\"" << fmt_g17(p.y) << "\" r=\"" << fmt_g17(pr) << "\" fill=\"#e6550d\"/>\n";
    s << "</g>\n</svg>\n";
    return s.str();
}

// ---- reports ----

inline Json grid_json(const EstimatorReport& r) {
    return {{"delta", r.delta}, {"eps0", r.eps0}, {"count", r.count}, {"eta", r.eta}};
}

inline Json report_json(const EstimatorReport& r) {
    Json j;
    j["D"] = r.D;
    j["grid"] = grid_json(r);
    j["tail_window"] = r.tail_window;
    Json rows = Json::array();
    for (const auto& row : r.rows) {
        Json jr{{"eps", row.eps}, {"skipped", row.skipped}, {"n_points", row.n_points}, {"chi", row.chi},
                {"gb_residual", row.gb_residual}};
        if (row.skipped) jr["reason"] = row.reason;
        for (int k : r.ks)
            if (!std::isnan(row.total[k])) {
                jr["total_c" + std::to_string(k)] = row.total[k];
                jr["variation_c" + std::to_string(k)] = row.variation[k];
            }
        rows.push_back(jr);
    }
    j["records"] = rows;
    Json est;
    for (int k : r.ks) {
        Json e;
        if (r.averaged[k]) e["log_average"] = measure_json(*r.averaged[k], 8);
        if (r.tail[k]) e["tail_average"] = measure_json(*r.tail[k], 8);
        if (r.fit[k]) e["scaling_fit"] = {{"slope", r.fit[k]->slope}, {"stderr", r.fit[k]->stderr_}, {"expected", k - r.D},
                                          {"used", r.fit[k]->used}, {"excluded", r.fit[k]->excluded}};
        est["c" + std::to_string(k)] = e;
    }
    j["estimates"] = est;
    j["skipped_fraction"] = r.skipped_fraction;
    j["max_gb_residual"] = r.max_gb_residual;
    j["skipped"] = r.skipped_log;
    j["warnings"] = r.warnings;
    return j;
}

inline Json fibre_json(const FibreResult& f, const std::vector<int>& ks) {
    Json j;
    j["group"] = f.group.str();
    j["orbit_length"] = f.orbit_length;
    j["normalization"] = f.normalization;
    j["shell_normalization"] = f.shell_normalization;
    j["n_samples"] = f.points.size();
    for (int k : ks) {
        if (!f.measure[k]) continue;
        Json e = measure_json(*f.measure[k], 64);
        e["total_stderr"] = f.total_stderr[k];
        e["sample_totals"] = f.sample_totals[k];
        double mx = 0.0;
        for (double v : f.bin_stderr[k]) mx = std::max(mx, v);
        e["max_bin_stderr"] = mx;
        j["c" + std::to_string(k)] = e;
    }
    j["warnings"] = f.warnings;
    return j;
}

}  // namespace fraccurv
