#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wph/metrics.hpp"
#include "wph/persistence.hpp"
#include "wph/synthetic.hpp"
#include "wph/vectorizer.hpp"
#include "wph/wavelet.hpp"

namespace wph::verify {

/// Outcome of one randomized check. `max_ratio` is the largest observed
/// (empirical quantity / bound); a check passes when nothing exceeded its
/// bound, not when the ratio is small.
struct CheckResult {
    std::string name;
    std::size_t trials = 0;
    double max_ratio = 0.0;
    std::size_t violations = 0;
    double seconds = 0.0;

    bool passed() const noexcept { return violations == 0; }
};

namespace detail {

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void observe(CheckResult& r, double ratio, bool violated) {
    r.max_ratio = std::max(r.max_ratio, ratio);
    if (violated) ++r.violations;
}

inline PersistencePair random_pair(std::mt19937_64& rng, int dim = 0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double b = unit(rng), d = unit(rng);
    if (b > d) std::swap(b, d);
    return {b, d, dim, false};
}

inline double norm_p(double x, double y, GroundNorm p) {
    return point_distance({0.0, 0.0}, {x, y}, p);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Gate

/// Central finite differences of the gate inside the strip b < psi < d must
/// not exceed 1 + 1e-4 in magnitude.
inline CheckResult gate_partial_bounds(std::size_t samples, double epsilon, std::uint64_t seed, double step = 1e-6) {
    CheckResult r{"gate_partial_bounds", samples};
    detail::Timer timer;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < samples; ++i) {
        std::array<double, 3> v = {unit(rng), unit(rng), unit(rng)};
        std::sort(v.begin(), v.end());
        const double b = v[0], psi = v[1], d = v[2];
        if (!(b < psi && psi < d)) continue;
        const double fd_b = (gate(psi, b + step, d, epsilon) - gate(psi, b - step, d, epsilon)) / (2 * step);
        const double fd_d = (gate(psi, b, d + step, epsilon) - gate(psi, b, d - step, epsilon)) / (2 * step);
        const double worst = std::max(std::abs(fd_b), std::abs(fd_d));
        detail::observe(r, worst, worst > 1.0 + 1e-4);
    }
    r.seconds = timer.seconds();
    return r;
}

/// |w(psi; b, d) - w(psi; b', d')| <= L_p ||(b, d) - (b', d')||_p for
/// p in {1, 2, inf} with L_p = 1, sqrt 2, 2. Half the pairs are small
/// perturbations of each other, half independent.
inline CheckResult gate_lipschitz_bound(std::size_t pairs, double epsilon, std::uint64_t seed) {
    CheckResult r{"gate_lipschitz", pairs};
    detail::Timer timer;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 0.02);
    constexpr std::array<GroundNorm, 3> norms = {GroundNorm::l1, GroundNorm::l2, GroundNorm::linf};
    for (std::size_t i = 0; i < pairs; ++i) {
        const double psi = unit(rng);
        const auto p = detail::random_pair(rng);
        PersistencePair q = detail::random_pair(rng);
        if (i % 2 == 0) {
            q.birth = std::clamp(p.birth + jitter(rng), 0.0, 1.0);
            q.death = std::clamp(p.death + jitter(rng), 0.0, 1.0);
            if (q.birth > q.death) std::swap(q.birth, q.death);
        }
        const double dw = std::abs(gate(psi, p.birth, p.death, epsilon) - gate(psi, q.birth, q.death, epsilon));
        for (GroundNorm n : norms) {
            const double bound = wph::gate_lipschitz(norm_exponent(n)) * detail::norm_p(p.birth - q.birth, p.death - q.death, n);
            if (bound == 0.0) {
                detail::observe(r, 0.0, dw != 0.0);
                continue;
            }
            detail::observe(r, dw / bound, dw > bound * (1.0 + 1e-12));
        }
    }
    r.seconds = timer.seconds();
    return r;
}

/// Pairs with d - b = 1e-9: gate values stay finite and below (d-b)^2 / (4 eps).
inline CheckResult gate_near_diagonal(std::size_t samples, double epsilon, std::uint64_t seed) {
    CheckResult r{"gate_near_diagonal", samples};
    detail::Timer timer;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr double gap = 1e-9;
    for (std::size_t i = 0; i < samples; ++i) {
        const double b = unit(rng) * (1.0 - gap);
        const double d = b + gap;
        const double psi = b + unit(rng) * (d - b);
        const double w = gate(psi, b, d, epsilon);
        const double bound = (d - b) * (d - b) / (4.0 * epsilon);
        detail::observe(r, bound > 0 ? w / bound : 0.0, !std::isfinite(w) || w < 0.0 || w > bound * (1.0 + 1e-12));
    }
    r.seconds = timer.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Vectorization stability

struct VectorizationChecks {
    CheckResult per_subband{"subband_map_bound"};
    CheckResult stacked{"stacked_map_bound"};
};

inline PersistenceDiagram random_diagram(std::mt19937_64& rng, std::size_t max_points) {
    std::uniform_int_distribution<std::size_t> count(0, max_points);
    PersistenceDiagram d;
    const std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i) d.pairs.push_back(detail::random_pair(rng));
    return d;
}

/// Perturbs every point of `d`, drops some and adds a few new ones.
inline PersistenceDiagram perturbed_diagram(const PersistenceDiagram& d, std::mt19937_64& rng, std::size_t max_points) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 0.03);
    PersistenceDiagram out;
    for (const auto& p : d.pairs) {
        if (unit(rng) < 0.15) continue;
        PersistencePair q = p;
        q.birth = std::clamp(p.birth + jitter(rng), 0.0, 1.0);
        q.death = std::clamp(p.death + jitter(rng), 0.0, 1.0);
        if (q.birth > q.death) std::swap(q.birth, q.death);
        out.pairs.push_back(q);
    }
    while (out.pairs.size() < max_points && unit(rng) < 0.3) out.pairs.push_back(detail::random_pair(rng));
    return out;
}

/// For random diagram pairs (at most `max_points` each) and the three detail
/// subbands of level `depth` of a random S x S image, checks
///   ||W(D) - W(D')||_F <= L_p sqrt(|Omega|) W1_p(D, D')        per subband
///   ||stack(D) - stack(D')||_2 <= L_p sqrt(sum |Omega|) W1_p    stacked
/// on the maps before any rescaling, for p in {1, 2, inf}.
inline VectorizationChecks vectorization_bounds(std::size_t trials, int side, int depth, WaveletFamily family,
                                                double epsilon, std::uint64_t seed, std::size_t max_points = 12) {
    VectorizationChecks out;
    out.per_subband.trials = out.stacked.trials = trials;
    detail::Timer timer;
    std::mt19937_64 rng(seed);
    constexpr std::array<GroundNorm, 3> norms = {GroundNorm::l1, GroundNorm::l2, GroundNorm::linf};
    for (std::size_t t = 0; t < trials; ++t) {
        const GrayImage img = random_image(side, side, rng);
        const SubbandPyramid pyr = dwt2(img, family, depth);
        const std::array<Grid<double>, 3> bands = {tau_map(pyr.band(Band::lh, depth)), tau_map(pyr.band(Band::hl, depth)),
                                                   tau_map(pyr.band(Band::hh, depth))};
        const PersistenceDiagram a = random_diagram(rng, max_points);
        const PersistenceDiagram b = t % 3 == 0 ? random_diagram(rng, max_points) : perturbed_diagram(a, rng, max_points);

        std::array<double, 3> frob{};
        double omega_total = 0.0;
        for (std::size_t k = 0; k < bands.size(); ++k) {
            const Grid<double> ma = subband_map(bands[k], a, epsilon);
            const Grid<double> mb = subband_map(bands[k], b, epsilon);
            double s = 0.0;
            for (std::size_t i = 0; i < ma.size(); ++i) {
                const double diff = ma.values()[i] - mb.values()[i];
                s += diff * diff;
            }
            frob[k] = std::sqrt(s);
            omega_total += static_cast<double>(bands[k].size());
        }
        double stacked = 0.0;
        for (double f : frob) stacked += f * f;
        stacked = std::sqrt(stacked);

        const auto pa = diagram_points(a), pb = diagram_points(b);
        for (GroundNorm n : norms) {
            const double w1 = wasserstein1(pa, pb, n).cost;
            const double lp = wph::gate_lipschitz(norm_exponent(n));
            for (std::size_t k = 0; k < bands.size(); ++k) {
                const double bound = lp * std::sqrt(static_cast<double>(bands[k].size())) * w1;
                if (bound == 0.0) {
                    detail::observe(out.per_subband, 0.0, frob[k] > 1e-12);
                } else {
                    detail::observe(out.per_subband, frob[k] / bound, frob[k] > bound * (1.0 + 1e-12));
                }
            }
            const double c_bound = lp * std::sqrt(omega_total) * w1;
            if (c_bound == 0.0) {
                detail::observe(out.stacked, 0.0, stacked > 1e-12);
            } else {
                detail::observe(out.stacked, stacked / c_bound, stacked > c_bound * (1.0 + 1e-12));
            }
        }
    }
    out.per_subband.seconds = out.stacked.seconds = timer.seconds();
    return out;
}

// ---------------------------------------------------------------------------
// Diagram stability

/// For random images and perturbations with ||delta||_inf <= eps,
/// d_B(D_k(I), D_k(I + delta)) <= eps + 1e-9 for k = 0, 1.
inline CheckResult diagram_stability(std::size_t trials, int size, const std::vector<double>& magnitudes,
                                     std::uint64_t seed) {
    CheckResult r{"diagram_bottleneck_stability", trials * magnitudes.size()};
    detail::Timer timer;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::size_t t = 0; t < trials; ++t) {
        const GrayImage img = random_image(size, size, rng);
        const PersistenceDiagram base = compute_diagram(img);
        for (double eps : magnitudes) {
            GrayImage moved = img;
            for (double& v : moved.values()) v = std::clamp(v + eps * unit(rng), 0.0, 1.0);
            const PersistenceDiagram other = compute_diagram(moved);
            for (int dim : {0, 1}) {
                const double db = bottleneck(base.in_dim(dim), other.in_dim(dim));
                detail::observe(r, db / eps, db > eps + 1e-9);
            }
        }
    }
    r.seconds = timer.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Betti curves

struct BettiNumbers {
    long b0 = 0;
    long b1 = 0;
};

/// Betti numbers of the sublevel complex {cells with value <= delta}: b0 by
/// union-find over 4-connected pixels, b1 from the Euler characteristic
/// b0 - b1 = V - E + F (no 2-cycles in a planar complex).
inline BettiNumbers sublevel_betti(const GrayImage& img, double delta) {
    const int m = img.height(), n = img.width();
    std::vector<int> parent(static_cast<std::size_t>(m) * n, -1);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    auto in = [&](int r, int c) { return img(r, c) <= delta; };
    long V = 0, E = 0, F = 0, comps = 0;
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < n; ++c) {
            if (in(r, c)) {
                parent[r * n + c] = r * n + c;
                ++V;
                ++comps;
            }
        }
    }
    auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent[a] = b;
            --comps;
        }
    };
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < n; ++c) {
            if (!in(r, c)) continue;
            if (c + 1 < n && in(r, c + 1)) {
                ++E;
                unite(r * n + c, r * n + c + 1);
            }
            if (r + 1 < m && in(r + 1, c)) {
                ++E;
                unite(r * n + c, (r + 1) * n + c);
            }
            if (r + 1 < m && c + 1 < n && in(r, c + 1) && in(r + 1, c) && in(r + 1, c + 1)) ++F;
        }
    }
    return {comps, comps - V + E - F};
}

/// Bars alive at delta: birth <= delta < death; capped essential bars never die.
inline BettiNumbers diagram_betti(const PersistenceDiagram& diag, double delta) {
    BettiNumbers out;
    for (const auto& p : diag.pairs) {
        if (p.birth <= delta && (p.essential_capped || delta < p.death)) ++(p.dim == 0 ? out.b0 : out.b1);
    }
    return out;
}

/// Random images up to max_size x max_size (quantized to produce ties):
/// diagram Betti curves must equal the brute-force values at every pixel value.
inline CheckResult betti_curves(std::size_t trials, int max_size, std::uint64_t seed) {
    CheckResult r{"betti_curve_oracle", trials};
    detail::Timer timer;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dim(2, max_size);
    std::uniform_int_distribution<int> levels(1, 12);
    for (std::size_t t = 0; t < trials; ++t) {
        const int h = dim(rng), w = dim(rng);
        const GrayImage img = t % 4 == 3 ? random_image(h, w, rng) : random_quantized_image(h, w, levels(rng), rng);
        const PersistenceDiagram diag = compute_diagram(img);
        std::vector<double> thresholds(img.values().begin(), img.values().end());
        std::sort(thresholds.begin(), thresholds.end());
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
        std::size_t mismatches = 0;
        for (double delta : thresholds) {
            const auto want = sublevel_betti(img, delta);
            const auto got = diagram_betti(diag, delta);
            if (want.b0 != got.b0 || want.b1 != got.b1) ++mismatches;
        }
        detail::observe(r, static_cast<double>(mismatches), mismatches != 0);
    }
    r.seconds = timer.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Wavelets

struct WaveletChecks {
    CheckResult parseval{"wavelet_parseval"};
    CheckResult reconstruction{"wavelet_reconstruction"};
};

inline double energy(const Grid<double>& g) {
    double s = 0.0;
    for (double v : g.values()) s += v * v;
    return s;
}

inline double pyramid_energy(const SubbandPyramid& pyr) {
    double s = energy(pyr.ll);
    for (const auto& d : pyr.details) s += energy(d.lh) + energy(d.hl) + energy(d.hh);
    return s;
}

/// Parseval within 1e-9 relative and reconstruction within 1e-10 max error,
/// every family x depth, `trials` random side x side inputs each.
inline WaveletChecks wavelet_roundtrip(std::size_t trials, int side, std::uint64_t seed) {
    WaveletChecks out;
    detail::Timer timer;
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < trials; ++t) {
        const GrayImage img = random_image(side, side, rng);
        const double e_in = energy(img);
        for (auto family : {WaveletFamily::haar, WaveletFamily::db2, WaveletFamily::db4}) {
            for (int depth = 1; depth <= 3; ++depth) {
                const SubbandPyramid pyr = dwt2(img, family, depth);
                const double rel = std::abs(pyramid_energy(pyr) - e_in) / e_in;
                detail::observe(out.parseval, rel / 1e-9, rel > 1e-9);
                const Grid<double> back = idwt2(pyr);
                double max_err = 0.0;
                for (std::size_t i = 0; i < back.size(); ++i) {
                    max_err = std::max(max_err, std::abs(back.values()[i] - img.values()[i]));
                }
                detail::observe(out.reconstruction, max_err / 1e-10, max_err > 1e-10);
                ++out.parseval.trials;
                ++out.reconstruction.trials;
            }
        }
    }
    out.parseval.seconds = out.reconstruction.seconds = timer.seconds();
    return out;
}

// ---------------------------------------------------------------------------

struct SuiteOptions {
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    double epsilon = 1e-6;
    int side = 256;
    int depth = 2;
    WaveletFamily family = WaveletFamily::haar;
};

/// Full randomized suite; sample counts scale with `trials`
/// (100 trials: 1e5 derivative samples, 1e6 Lipschitz pairs, 500 diagram
/// pairs, 200 perturbed 48x48 images, 100 Betti images, 50 wavelet inputs).
inline std::vector<CheckResult> run_suite(const SuiteOptions& opt) {
    std::vector<CheckResult> out;
    const std::size_t t = std::max<std::size_t>(1, opt.trials);
    out.push_back(gate_partial_bounds(1000 * t, opt.epsilon, opt.seed + 1));
    out.push_back(gate_lipschitz_bound(10000 * t, opt.epsilon, opt.seed + 2));
    out.push_back(gate_near_diagonal(1000 * t, opt.epsilon, opt.seed + 3));
    auto vec = vectorization_bounds(5 * t, opt.side, opt.depth, opt.family, opt.epsilon, opt.seed + 4);
    out.push_back(vec.per_subband);
    out.push_back(vec.stacked);
    out.push_back(diagram_stability(2 * t, 48, {0.01, 0.05}, opt.seed + 5));
    out.push_back(betti_curves(t, 16, opt.seed + 6));
    auto wav = wavelet_roundtrip(std::max<std::size_t>(1, t / 2), opt.side, opt.seed + 7);
    out.push_back(wav.parseval);
    out.push_back(wav.reconstruction);
    return out;
}

}  // namespace wph::verify
