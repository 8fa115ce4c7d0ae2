#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "ifs.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace fraccurv {

struct NetCloud {
    std::vector<Vec2> points;
    double spacing = 0.0;
    std::vector<Word> words;  // filled only when requested
};

struct NetOptions {
    std::size_t cap = 50'000'000;
    bool keep_words = false;
    /// Drop points closer than spacing/8 to an already kept one. Only useful for IFS whose
    /// first-level images overlap; the covering guarantee survives because spacing/8 < spacing.
    bool dedup = false;
    /// Restrict to words whose cell can reach this ball (local nets).
    std::optional<Vec2> roi_center;
    double roi_radius = 0.0;
    unsigned workers = 1;
};

namespace detail {

inline void expand_branch(const IFS& ifs, double h, const NetOptions& opt, Word& w, const Similarity& s,
                          std::vector<Vec2>& pts, std::vector<Word>* words, std::size_t cap) {
    const double cell = s.ratio() * ifs.diameter();
    const Vec2 rep = s(ifs.anchor());
    if (opt.roi_center && dist(rep, *opt.roi_center) > opt.roi_radius + cell) return;
    if (cell <= h) {
        if (pts.size() >= cap) throw ResourceError("");
        pts.push_back(rep);
        if (words) words->push_back(w);
        return;
    }
    for (std::size_t j = 0; j < ifs.size(); ++j) {
        w.push_back(static_cast<int>(j));
        expand_branch(ifs, h, opt, w, s.then_after(ifs.map(j)), pts, words, cap);
        w.pop_back();
    }
}

struct CellKey {
    std::int64_t i, j;
    bool operator==(const CellKey&) const = default;
};
struct CellHash {
    std::size_t operator()(const CellKey& k) const noexcept {
        return std::hash<std::int64_t>()(k.i * 0x9e3779b97f4a7c15LL ^ k.j);
    }
};

inline std::vector<std::size_t> dedup_indices(const std::vector<Vec2>& pts, double r) {
    std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
    std::vector<std::size_t> keep;
    const double r2 = r * r;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto ci = static_cast<std::int64_t>(std::floor(pts[i].x / r));
        const auto cj = static_cast<std::int64_t>(std::floor(pts[i].y / r));
        bool dup = false;
        for (std::int64_t di = -1; di <= 1 && !dup; ++di)
            for (std::int64_t dj = -1; dj <= 1 && !dup; ++dj) {
                auto it = grid.find({ci + di, cj + dj});
                if (it == grid.end()) continue;
                for (auto k : it->second)
                    if (norm2(pts[k] - pts[i]) < r2) { dup = true; break; }
            }
        if (!dup) {
            grid[{ci, cj}].push_back(i);
            keep.push_back(i);
        }
    }
    return keep;
}

}  // namespace detail

/// Deterministic net: one representative S_w(anchor) per word w with r_w |J| <= h, in
/// lexicographic word order.
inline NetCloud net_points(const IFS& ifs, double h, const NetOptions& opt = {}) {
    if (!(h > 0.0)) throw InputError("net spacing must be positive");
    const std::size_t n = ifs.size();
    std::vector<std::vector<Vec2>> parts(n);
    std::vector<std::vector<Word>> wparts(n);
    NetCloud cloud;
    cloud.spacing = h;
    if (ifs.diameter() <= h) {
        cloud.points.push_back(ifs.anchor());
        if (opt.keep_words) cloud.words.push_back({});
        return cloud;
    }
    try {
        parallel_for(n, opt.workers, [&](std::size_t j) {
            Word w{static_cast<int>(j)};
            detail::expand_branch(ifs, h, opt, w, ifs.map(j), parts[j], opt.keep_words ? &wparts[j] : nullptr,
                                  opt.cap);
        });
    } catch (const ResourceError&) {
        const double D = similarity_dimension(ifs.ratios()).D;
        const double est = std::pow(ifs.diameter() / h, D);
        throw ResourceError("net of spacing " + std::to_string(h) + " needs about " +
                            std::to_string(static_cast<std::size_t>(std::max(est, static_cast<double>(opt.cap) + 1))) +
                            " points, above the cap of " + std::to_string(opt.cap));
    }
    std::size_t total = 0;
    for (const auto& p : parts) total += p.size();
    if (total > opt.cap)
        throw ResourceError("net of spacing " + std::to_string(h) + " needs " + std::to_string(total) +
                            " points, above the cap of " + std::to_string(opt.cap));
    cloud.points.reserve(total);
    for (std::size_t j = 0; j < n; ++j) {
        cloud.points.insert(cloud.points.end(), parts[j].begin(), parts[j].end());
        if (opt.keep_words)
            for (auto& w : wparts[j]) cloud.words.push_back(std::move(w));
    }
    if (opt.dedup) {
        const auto keep = detail::dedup_indices(cloud.points, h / 8.0);
        std::vector<Vec2> p;
        std::vector<Word> w;
        p.reserve(keep.size());
        for (auto k : keep) {
            p.push_back(cloud.points[k]);
            if (opt.keep_words) w.push_back(cloud.words[k]);
        }
        cloud.points = std::move(p);
        cloud.words = std::move(w);
    }
    return cloud;
}

struct EmpiricalMeasure {
    std::vector<Vec2> points;
    double weight() const { return points.empty() ? 0.0 : 1.0 / static_cast<double>(points.size()); }
};

/// Letter sampler with probabilities r_j^D (inverse CDF over cumulative sums).
class LetterSampler {
public:
    explicit LetterSampler(const IFS& ifs) {
        const double D = similarity_dimension(ifs.ratios()).D;
        double acc = 0.0;
        for (const auto& m : ifs.maps()) {
            acc += std::pow(m.ratio(), D);
            cum_.push_back(acc);
        }
        for (auto& c : cum_) c /= acc;
    }
    int operator()(Rng& rng) const {
        const double u = rng.uniform();
        for (std::size_t j = 0; j + 1 < cum_.size(); ++j)
            if (u < cum_[j]) return static_cast<int>(j);
        return static_cast<int>(cum_.size() - 1);
    }
    double probability(std::size_t j) const { return j == 0 ? cum_[0] : cum_[j] - cum_[j - 1]; }

    /// Letter whose probability interval holds u; u is rescaled to that interval, so repeated
    /// calls read successive letters of the code with distribution mu_F.
    int decode(double& u) const {
        std::size_t j = 0;
        while (j + 1 < cum_.size() && u >= cum_[j]) ++j;
        const double lo = j == 0 ? 0.0 : cum_[j - 1];
        u = std::clamp((u - lo) / (cum_[j] - lo), 0.0, std::nextafter(1.0, 0.0));
        return static_cast<int>(j);
    }

private:
    std::vector<double> cum_;
};

inline EmpiricalMeasure chaos_game_sample(const IFS& ifs, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const LetterSampler pick(ifs);
    Vec2 x = ifs.anchor();
    for (int i = 0; i < 64; ++i) x = ifs.map(pick(rng))(x);
    EmpiricalMeasure mu;
    mu.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        x = ifs.map(pick(rng))(x);
        mu.points.push_back(x);
    }
    return mu;
}

inline double mu_ball(const EmpiricalMeasure& mu, Vec2 x, double rho) {
    if (!(rho > 0.0)) throw InputError("ball radius must be positive");
    std::size_t c = 0;
    const double r2 = rho * rho;
    for (const auto& p : mu.points)
        if (norm2(p - x) <= r2) ++c;
    return mu.points.empty() ? 0.0 : static_cast<double>(c) / static_cast<double>(mu.points.size());
}

/// A point of F together with a prefix of its code: x = pi(prefix ...).
struct CodedPoint {
    Word prefix;
    Vec2 x;
};

/// Draws x ~ mu_F with an explicit code prefix long enough that r_w |J| < 1e-15 |J|.
inline CodedPoint sample_coded_point(const IFS& ifs, const LetterSampler& pick, Rng& rng) {
    double rmax = 0.0;
    for (const auto& m : ifs.maps()) rmax = std::max(rmax, m.ratio());
    const int len = static_cast<int>(std::ceil(std::log(1e-15) / std::log(rmax)));
    CodedPoint cp;
    cp.prefix.reserve(len);
    for (int i = 0; i < len; ++i) cp.prefix.push_back(pick(rng));
    cp.x = compose_word(ifs, cp.prefix)(ifs.anchor());
    return cp;
}

/// n coded points, each distributed as mu_F, with Latin-hypercube stratification of two code
/// blocks: letters [0, block) and [block, 2 block) are decoded from stratified uniforms under
/// independent random permutations, later letters are drawn freely.
inline std::vector<CodedPoint> latin_coded_points(const IFS& ifs, std::size_t n, int block, Rng& rng) {
    if (block < 1) throw InputError("stratification block must be positive");
    const LetterSampler pick(ifs);
    double rmax = 0.0;
    for (const auto& m : ifs.maps()) rmax = std::max(rmax, m.ratio());
    const int len = std::max(2 * block, static_cast<int>(std::ceil(std::log(1e-15) / std::log(rmax))));
    std::vector<std::vector<std::size_t>> perm(2, std::vector<std::size_t>(n));
    for (auto& p : perm) {
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
    }
    std::vector<CodedPoint> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& cp = out[i];
        cp.prefix.reserve(len);
        for (int b = 0; b < 2; ++b) {
            double u = (static_cast<double>(perm[b][i]) + rng.uniform()) / static_cast<double>(n);
            double width = 1.0;  // probability of the letters read so far; stop before u runs out of bits
            for (int t = 0; t < block; ++t) {
                if (width > 1e-11) {
                    const int j = pick.decode(u);
                    width *= pick.probability(j);
                    cp.prefix.push_back(j);
                } else {
                    cp.prefix.push_back(pick(rng));
                }
            }
        }
        while (static_cast<int>(cp.prefix.size()) < len) cp.prefix.push_back(pick(rng));
        cp.x = compose_word(ifs, cp.prefix)(ifs.anchor());
    }
    return out;
}

/// Alphabet size N when all letter probabilities are equal and N is prime, else 0; the
/// balanced design below needs both.
inline int balanced_alphabet(const IFS& ifs) {
    const int N = static_cast<int>(ifs.size());
    const LetterSampler pick(ifs);
    for (int j = 0; j < N; ++j)
        if (std::abs(pick.probability(j) - 1.0 / N) > 1e-12) return 0;
    for (int q = 2; q * q <= N; ++q)
        if (N % q == 0) return 0;
    return N;
}

namespace detail {

/// Coefficients c of a primitive recurrence y_{t+m} = sum_j c_j y_{t+j} over GF(N), found by
/// trying them in order and checking the period of (1, 0, ..., 0).
inline std::vector<int> primitive_recurrence(int N, int m) {
    std::int64_t full = 1;
    for (int i = 0; i < m; ++i) full *= N;
    std::vector<int> c(m, 0);
    for (std::int64_t code = 0; code < full; ++code) {
        std::int64_t v = code;
        for (int j = 0; j < m; ++j) {
            c[j] = static_cast<int>(v % N);
            v /= N;
        }
        if (c[0] == 0) continue;
        std::vector<int> s(m, 0), s0(m, 0);
        s[0] = s0[0] = 1;
        std::int64_t period = 0;
        do {
            int next = 0;
            for (int j = 0; j < m; ++j) next += c[j] * s[j];
            std::rotate(s.begin(), s.begin() + 1, s.end());
            s[m - 1] = next % N;
            ++period;
        } while (s != s0 && period < full);
        if (period == full - 1) return c;
    }
    throw InputError("no primitive recurrence found");
}

}  // namespace detail

/// N^m coded points, each distributed as mu_F, such that every window of m consecutive
/// letters takes each of its N^m values exactly once across the points. Point g follows a
/// primitive linear recurrence over GF(N) started from the digits of g, and letter t of every
/// point is shifted by the same uniform random offset b_t, which makes each point's letters iid.
inline std::vector<CodedPoint> balanced_coded_points(const IFS& ifs, std::size_t n, Rng& rng) {
    const int N = balanced_alphabet(ifs);
    if (N == 0) throw InputError("balanced design needs equal letter probabilities and a prime number of maps");
    int m = 0;
    std::size_t p = 1;
    while (p < n) {
        p *= static_cast<std::size_t>(N);
        ++m;
    }
    if (p != n || m == 0)
        throw InputError("balanced design needs a sample count that is a power of " + std::to_string(N));
    double rmax = 0.0;
    for (const auto& mp : ifs.maps()) rmax = std::max(rmax, mp.ratio());
    const int len = static_cast<int>(std::ceil(std::log(1e-15) / std::log(rmax)));
    const auto c = detail::primitive_recurrence(N, m);
    std::vector<int> shift(len);
    for (auto& b : shift) b = static_cast<int>(rng.below(static_cast<std::uint64_t>(N)));
    std::vector<CodedPoint> out(n);
    for (std::size_t g = 0; g < n; ++g) {
        std::vector<int> y(m);
        std::size_t v = g;
        for (int j = 0; j < m; ++j) {
            y[j] = static_cast<int>(v % N);
            v /= N;
        }
        auto& cp = out[g];
        cp.prefix.reserve(len);
        for (int t = 0; t < len; ++t) {
            const int yt = y[t % m];
            cp.prefix.push_back((yt + shift[t]) % N);
            int next = 0;
            for (int j = 0; j < m; ++j) next += c[j] * y[(t + j) % m];
            y[t % m] = next % N;
        }
        cp.x = compose_word(ifs, cp.prefix)(ifs.anchor());
    }
    return out;
}

}  // namespace fraccurv
