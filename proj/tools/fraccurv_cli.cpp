#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include "fraccurv/fraccurv.hpp"

using namespace fraccurv;
namespace fs = std::filesystem;

namespace {

struct Run {
    std::string config;
    std::vector<std::string> params;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string out;
    double delta = 0.0, eps0 = 0.0;
    double per_decade = 48.0;
    int count = 0;
    double eta = 0.05;
    double a = 2.0;
    int n_bins = 720;
    std::vector<int> ks;
    bool svg = false;
    std::string net = "ball";
    double hausdorff = 1.0;
    // fibre
    std::size_t n_samples = 20;
    int orbit_length = 0;
    std::string design = "latin";
    // local
    std::vector<double> x;
    double phi = 0.0;
    double r_start = 0.0, r_length = kTwoPi;
    // sweep
    double render_eps = 0.0;
    // checks
    std::size_t n_points = 3;
};

constexpr int kDiagnosticFailure = 2;

IfsConfig load(const Run& r) {
    std::map<std::string, std::string> ov;
    for (const auto& p : r.params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0) throw InputError("--param expects key=value, got '" + p + "'");
        ov[p.substr(0, eq)] = p.substr(eq + 1);
    }
    if (fs::exists(r.config)) return load_ifs_config(r.config, ov);
    const std::string b = bundled_config(r.config + ".cfg");
    if (fs::exists(b)) return load_ifs_config(b, ov);
    throw InputError("cannot open config file " + r.config);
}

double delta_of(const Run& r, const IfsConfig& c) {
    if (r.delta > 0.0) return r.delta;
    if (c.delta) return *c.delta;
    return std::ldexp(c.ifs.diameter(), -8);
}

double eps0_of(const Run& r, const IfsConfig& c) {
    if (r.eps0 > 0.0) return r.eps0;
    if (c.eps0) return *c.eps0;
    return 0.5 * c.ifs.diameter();
}

EpsGrid grid_of(const Run& r, const IfsConfig& c) {
    const double d = delta_of(r, c), e = eps0_of(r, c);
    if (r.count > 0) return EpsGrid(d, e, r.count);
    return EpsGrid::per_decade(d, e, r.per_decade);
}

CovariantNet net_of(const Run& r, const IFS& ifs) {
    if (r.net == "ball") return CovariantNet::ball(r.a);
    if (r.net == "mass") return CovariantNet::mass(ifs, r.hausdorff, r.a);
    throw InputError("--net must be ball or mass");
}

LocalOptions local_of(const Run& r) {
    LocalOptions lo;
    lo.eta = r.eta;
    lo.per_decade = r.per_decade;
    lo.measure.n_bins = r.n_bins;
    if (r.eps0 > 0.0) lo.eps0 = r.eps0;
    return lo;
}

Json header(const std::string& cmd, const Run& r, const IfsConfig& c) {
    Json j;
    j["command"] = cmd;
    j["config"] = c.name;
    Json p = Json::object();
    for (const auto& [k, v] : c.parameters) p[k] = v;
    j["parameters"] = p;
    j["seed"] = r.seed;
    j["D"] = similarity_dimension(c.ifs.ratios()).D;
    return j;
}

fs::path out_dir(const Run& r) {
    fs::create_directories(r.out);
    return fs::path(r.out);
}

void write_measure(const fs::path& dir, const std::string& stem, const DirectionMeasure& m, bool svg,
                   const std::string& title) {
    const std::string csv = measure_csv(m);
    write_text(dir / (stem + ".csv"), csv);
    if (svg) write_text(dir / (stem + ".svg"), rose_svg(parse_measure_csv(csv), title));
}

void write_json(const fs::path& p, const Json& j) { write_text(p, j.dump(2) + "\n"); }

int finish(const Json& j, bool failed) {
    for (const auto& w : j.value("warnings", Json::array())) std::cerr << "warning: " << w.get<std::string>() << "\n";
    return failed ? kDiagnosticFailure : 0;
}

// ---- commands ----

int cmd_dimension(const Run& r) {
    const auto c = load(r);
    const auto d = similarity_dimension(c.ifs.ratios());
    std::printf("D = %.10f\nresidual = %.3e\n", d.D, d.residual);
    if (d.exceeds_ambient) std::printf("warning: similarity dimension exceeds the ambient dimension\n");
    return 0;
}

int cmd_sweep(const Run& r) {
    const auto c = load(r);
    const auto grid = grid_of(r, c);
    SweepOptions o;
    o.eta = r.eta;
    o.ks = r.ks.empty() ? std::vector<int>{0, 1, 2} : r.ks;
    o.workers = r.workers;
    o.measure.n_bins = r.n_bins;
    std::size_t done = 0;
    o.on_record = [&](const EpsRecord& rec) {
        std::fprintf(stderr, "[%zu/%d] eps = %.6g  points = %zu%s\n", ++done, grid.count(), rec.eps, rec.n_points,
                     rec.skipped ? "  skipped" : "");
    };
    const auto sw = sweep(c.ifs, grid, o);
    const auto rep = make_report(c.ifs, grid, sw, o.ks);
    const auto dir = out_dir(r);
    Json j = header("sweep", r, c);
    j.update(report_json(rep));
    for (int k : o.ks) {
        const std::string t = c.name + " C" + std::to_string(k);
        if (rep.averaged[k]) write_measure(dir, "c" + std::to_string(k) + "_log_average", *rep.averaged[k], r.svg, t);
        if (rep.tail[k]) write_measure(dir, "c" + std::to_string(k) + "_tail_average", *rep.tail[k], r.svg, t);
    }
    if (r.render_eps > 0.0) {
        NetOptions no;
        no.dedup = needs_dedup(c.ifs);
        const auto net = net_points(c.ifs, r.eta * r.render_eps, no);
        const DiskUnion du(net.points, r.render_eps);
        const std::string csv = arcs_csv(boundary_arcs(du));
        write_text(dir / "parallel_set.csv", csv);
        if (r.svg) write_text(dir / "parallel_set.svg", parallel_set_svg(parse_arcs_csv(csv), c.name));
    }
    write_json(dir / "summary.json", j);
    const bool failed = rep.skipped_fraction > 0.2 || rep.max_gb_residual >= 1e-6;
    for (int k : o.ks)
        if (rep.tail[k])
            std::printf("C%d: log-average total %.6g, tail-window total %.6g\n", k, rep.averaged[k] ? rep.averaged[k]->total() : NAN,
                        rep.tail[k]->total());
    std::printf("skipped %.1f%%, max Gauss-Bonnet residual %.2e\n", 100.0 * rep.skipped_fraction, rep.max_gb_residual);
    return finish(j, failed);
}

int cmd_fibre(const Run& r) {
    const auto c = load(r);
    FibreOptions o;
    o.n_samples = r.n_samples;
    o.delta = delta_of(r, c);
    o.ks = r.ks.empty() ? std::vector<int>{1} : r.ks;
    o.seed = r.seed;
    o.net = net_of(r, c.ifs);
    o.local = local_of(r);
    o.orbit_length = r.orbit_length;
    o.workers = r.workers;
    o.design = r.design == "balanced" ? FibreOptions::Design::balanced : FibreOptions::Design::latin;
    const auto f = fibre_estimate(c.ifs, o);
    const auto dir = out_dir(r);
    Json j = header("fibre", r, c);
    j["net"] = o.net.name();
    j["delta"] = o.delta;
    j["design"] = r.design;
    j.update(fibre_json(f, o.ks));
    for (int k : o.ks) {
        write_measure(dir, "fibre_c" + std::to_string(k), *f.measure[k], r.svg, c.name + " fibre C" + std::to_string(k));
        std::printf("C%d fibre total %.6g +- %.2g\n", k, f.measure[k]->total(), f.total_stderr[k]);
    }
    write_json(dir / "fibre.json", j);
    return finish(j, false);
}

int cmd_local(const Run& r) {
    const auto c = load(r);
    Vec2 x;
    if (r.x.size() == 2) {
        x = {r.x[0], r.x[1]};
    } else if (r.x.empty()) {
        Rng rng(r.seed);
        x = sample_coded_point(c.ifs, LetterSampler(c.ifs), rng).x;
    } else {
        throw InputError("--x expects two coordinates");
    }
    const int k = r.ks.empty() ? 1 : r.ks.front();
    const double delta = delta_of(r, c);
    const auto net = net_of(r, c.ifs);
    const auto lo = local_of(r);
    const auto R = r.r_length >= kTwoPi ? DirectionSet::full() : DirectionSet::interval(r.r_start, r.r_length);
    const auto m = local_density_measure(c.ifs, x, r.phi, delta, k, R, net, lo);
    const auto dir = out_dir(r);
    Json j = header("local", r, c);
    j["x"] = {x.x, x.y};
    j["phi"] = r.phi;
    j["k"] = k;
    j["delta"] = delta;
    j["net"] = net.name();
    j["b"] = shell_constant(c.ifs, net, lo);
    j["upper"] = c.ifs.feasible_set().distance_to_complement(x) / shell_constant(c.ifs, net, lo);
    j["density"] = m.total();
    j["measure"] = measure_json(m, 16);
    j["warnings"] = Json::array();
    write_measure(dir, "local_c" + std::to_string(k), m, r.svg, c.name + " local C" + std::to_string(k));
    write_json(dir / "local.json", j);
    std::printf("Delta = %.6g\n", m.total());
    return finish(j, false);
}

int cmd_checks(const Run& r) {
    const auto c = load(r);
    const IFS& ifs = c.ifs;
    const std::vector<int> ks = r.ks.empty() ? std::vector<int>{0, 1} : r.ks;
    const auto net = net_of(r, ifs);
    const auto lo = local_of(r);
    const double b = shell_constant(ifs, net, lo);
    const double delta = delta_of(r, c);
    Json j = header("checks", r, c);
    Json warnings = Json::array();

    // Covariance chain at depths 0, 1, 2 for points deep enough that eps = bound(2)/2 >= delta.
    Json cov = Json::array();
    Rng rng(r.seed);
    const LetterSampler pick(ifs);
    bool cov_ok = true;
    std::size_t found = 0;
    for (int t = 0; t < 100000 && found < r.n_points; ++t) {
        const auto cp = sample_coded_point(ifs, pick, rng);
        const Similarity S = compose_word(ifs, Word(cp.prefix.begin(), cp.prefix.begin() + 2));
        const double bound = ifs.feasible_set().mapped([&](Vec2 p) { return S(p); }).distance_to_complement(cp.x) / b;
        if (bound < 2.0 * delta) continue;
        ++found;
        const double eps = 0.5 * bound;
        for (int l = 0; l <= 2; ++l)
            for (int k : ks) {
                if (!net.is_ball() && k == 2) continue;  // the mass net has no k = 2
                const auto res = covariance_check(ifs, cp, 0.0, l, eps, k, DirectionSet::full(), net, lo);
                const bool pass = l == 0 ? res.discrepancy == 0.0 : res.discrepancy <= 0.05;
                cov_ok = cov_ok && pass;
                cov.push_back({{"x", {cp.x.x, cp.x.y}}, {"l", l}, {"k", k}, {"eps", eps}, {"lhs", res.lhs},
                               {"rhs", res.rhs}, {"discrepancy", res.discrepancy}, {"pass", pass}});
            }
    }
    if (found < r.n_points) warnings.push_back("found only " + std::to_string(found) + " admissible covariance points");
    j["covariance"] = {{"pass", cov_ok}, {"results", cov}};

    // Product structure on the first-level cells over the tail window [delta, W delta].
    const double W = default_tail_window(ifs);
    const auto grid = EpsGrid::per_decade(delta, delta * W, r.per_decade);
    std::vector<RegionFilter> cells;
    for (const auto& m : ifs.maps()) cells.push_back(RegionFilter::polygon(ifs.feasible_set().mapped(m)));
    SweepOptions so;
    so.eta = r.eta;
    so.ks = ks;
    so.regions = cells;
    so.workers = r.workers;
    so.measure.n_bins = r.n_bins;
    const auto sw = sweep(ifs, grid, so);
    const auto mu = chaos_game_sample(ifs, 200000, r.seed);
    Json prod = Json::array();
    bool prod_ok = true;
    for (int k : ks) {
        const auto p = product_structure_from(sw, cells, k, mu, W);
        const bool pass = p.max_ratio_error <= 0.1 && p.profile_deviation <= 0.1;
        if (!p.degenerate) prod_ok = prod_ok && pass;
        prod.push_back({{"k", k}, {"total", p.total}, {"ratio", p.ratio}, {"mu", p.mu}, {"ratio_error", p.ratio_error},
                        {"max_ratio_error", p.max_ratio_error}, {"profile_deviation", p.profile_deviation}, {"degenerate", p.degenerate}, {"pass", pass}});
        for (const auto& w : p.warnings) warnings.push_back(w);
    }
    j["product_structure"] = {{"pass", prod_ok}, {"window", W}, {"results", prod}};
    j["skipped_fraction"] = sw.skipped_fraction();
    j["max_gb_residual"] = sw.max_gb_residual();
    for (const auto& l : sw.log) warnings.push_back(l);
    j["warnings"] = warnings;
    write_json(out_dir(r) / "checks.json", j);
    std::printf("covariance %s, product structure %s\n", cov_ok ? "pass" : "FAIL", prod_ok ? "pass" : "FAIL");
    return finish(j, sw.skipped_fraction() > 0.2 || sw.max_gb_residual() >= 1e-6);
}

int cmd_render(const std::string& input, const Run& r) {
    const std::string text = read_text(input);
    const auto dir = out_dir(r);
    const fs::path dst = dir / (fs::path(input).stem().string() + ".svg");
    if (text.rfind("loop,orientation", 0) == 0) write_text(dst, parallel_set_svg(parse_arcs_csv(text, input), fs::path(input).stem().string()));
    else write_text(dst, rose_svg(parse_measure_csv(text, input), fs::path(input).stem().string()));
    std::printf("%s\n", dst.string().c_str());
    return 0;
}

void common(CLI::App* s, Run& r, bool writes) {
    s->add_option("config", r.config, "IFS config file or bundled name")->required();
    s->add_option("--param", r.params, "override a config parameter, key=value");
    if (writes) s->add_option("--out", r.out, "output directory")->required();
}

void grid_opts(CLI::App* s, Run& r) {
    s->add_option("--delta", r.delta, "smallest eps (default 2^-8 |J|)")->check(CLI::PositiveNumber);
    s->add_option("--eps0", r.eps0, "largest eps (default |J|/2)")->check(CLI::PositiveNumber);
    s->add_option("--per-decade", r.per_decade, "grid points per decade")->check(CLI::PositiveNumber);
    s->add_option("--count", r.count, "grid point count (overrides --per-decade)");
    s->add_option("--eta", r.eta, "net spacing relative to eps");
    s->add_option("--n-bins", r.n_bins, "direction bins")->check(CLI::PositiveNumber);
    s->add_option("-k,--k", r.ks, "curvature indices")->check(CLI::Range(0, 2));
    s->add_option("--workers", r.workers, "worker threads");
    s->add_flag("--svg", r.svg, "also write SVG figures");
}

void net_opts(CLI::App* s, Run& r) {
    s->add_option("--net", r.net, "neighbourhood net: ball or mass")->check(CLI::IsMember({"ball", "mass"}));
    s->add_option("-a,--a", r.a, "net constant a > 1");
    s->add_option("--hausdorff", r.hausdorff, "H^D(F) used by the mass net");
    s->add_option("--seed", r.seed, "random seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curvature-direction measures of parallel sets of planar self-similar sets"};
    app.require_subcommand(1);
    Run r;
    std::string render_input;

    auto* dim = app.add_subcommand("dimension", "similarity dimension");
    common(dim, r, false);

    auto* sw = app.add_subcommand("sweep", "eps sweep, averaged measures and scaling fits");
    common(sw, r, true);
    grid_opts(sw, r);
    sw->add_option("--render-eps", r.render_eps, "also export the parallel set at this eps");

    auto* fi = app.add_subcommand("fibre", "Monte-Carlo fibre measure");
    common(fi, r, true);
    grid_opts(fi, r);
    net_opts(fi, r);
    fi->add_option("--samples", r.n_samples, "number of (x, phi) samples");
    fi->add_option("--orbit-length", r.orbit_length, "shift orbit length per sample (0: automatic)");
    fi->add_option("--design", r.design, "code design: latin, or balanced (equal weights, prime map count, samples a power of it)")
        ->check(CLI::IsMember({"latin", "balanced"}));

    auto* lc = app.add_subcommand("local", "local density at one point");
    common(lc, r, true);
    grid_opts(lc, r);
    net_opts(lc, r);
    lc->add_option("--x", r.x, "point x y (default: a sampled point of F)")->expected(2);
    lc->add_option("--phi", r.phi, "rotation phi in radians");
    lc->add_option("--r-start", r.r_start, "direction set R: start angle (rad)");
    lc->add_option("--r-length", r.r_length, "direction set R: length (rad, default full circle)");

    auto* ch = app.add_subcommand("checks", "covariance chain and product structure");
    common(ch, r, true);
    grid_opts(ch, r);
    net_opts(ch, r);
    ch->add_option("--points", r.n_points, "covariance sample points");

    auto* rd = app.add_subcommand("render", "SVG figure from an exported CSV");
    rd->add_option("input", render_input, "measure or arc CSV")->required()->check(CLI::ExistingFile);
    rd->add_option("--out", r.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        if (*dim) return cmd_dimension(r);
        if (*sw) return cmd_sweep(r);
        if (*fi) return cmd_fibre(r);
        if (*lc) return cmd_local(r);
        if (*ch) return cmd_checks(r);
        if (*rd) return cmd_render(render_input, r);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ResourceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
