#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "wph/error.hpp"
#include "wph/image.hpp"

namespace wph {

enum class WaveletFamily { haar, db2, db4 };

inline std::string to_string(WaveletFamily f) {
    switch (f) {
        case WaveletFamily::haar: return "haar";
        case WaveletFamily::db2: return "db2";
        case WaveletFamily::db4: return "db4";
    }
    return "unknown";
}

inline WaveletFamily parse_wavelet_family(const std::string& s) {
    if (s == "haar") return WaveletFamily::haar;
    if (s == "db2") return WaveletFamily::db2;
    if (s == "db4") return WaveletFamily::db4;
    throw ConfigError("unknown wavelet family '" + s + "' (expected haar, db2 or db4)");
}

namespace filters {

// Orthonormal Daubechies scaling filters (sum = sqrt(2), unit energy),
// obtained by minimum-phase spectral factorization evaluated at 50-digit
// precision and rounded to 17 significant digits. db2 has 2 vanishing
// moments (4 taps), db4 has 4 (8 taps).
inline constexpr std::array<double, 2> haar = {0.70710678118654752, 0.70710678118654752};

inline constexpr std::array<double, 4> db2 = {0.48296291314453414, 0.83651630373780791, 0.22414386804201338,
                                              -0.12940952255126038};

inline constexpr std::array<double, 8> db4 = {0.23037781330889650,  0.71484657055291565,  0.63088076792985891,
                                              -0.027983769416859854, -0.18703481171909308, 0.030841381835560764,
                                              0.032883011666885200,  -0.010597401785069032};

}  // namespace filters

/// Analysis filter pair. The high-pass is the alternating flip
/// hi[n] = (-1)^n lo[L-1-n].
struct FilterBank {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t length() const noexcept { return lo.size(); }
};

inline FilterBank filter_bank(WaveletFamily family) {
    FilterBank bank;
    switch (family) {
        case WaveletFamily::haar: bank.lo.assign(filters::haar.begin(), filters::haar.end()); break;
        case WaveletFamily::db2: bank.lo.assign(filters::db2.begin(), filters::db2.end()); break;
        case WaveletFamily::db4: bank.lo.assign(filters::db4.begin(), filters::db4.end()); break;
    }
    const std::size_t L = bank.lo.size();
    bank.hi.resize(L);
    for (std::size_t n = 0; n < L; ++n) bank.hi[n] = (n % 2 == 0 ? 1.0 : -1.0) * bank.lo[L - 1 - n];
    return bank;
}

/// Detail subbands of one level. First letter is the filter along the width
/// (horizontal), second along the height: LH = horizontal low-pass then
/// vertical high-pass.
struct DetailLevel {
    Grid<double> lh;
    Grid<double> hl;
    Grid<double> hh;
};

enum class Band { ll, lh, hl, hh };

inline std::string to_string(Band b) {
    switch (b) {
        case Band::ll: return "LL";
        case Band::lh: return "LH";
        case Band::hl: return "HL";
        case Band::hh: return "HH";
    }
    return "??";
}

struct SubbandPyramid {
    WaveletFamily family = WaveletFamily::haar;
    int depth = 1;
    int side = 0;
    Grid<double> ll;                  // (S/2^J)^2
    std::vector<DetailLevel> details; // details[j-1] is level j, (S/2^j)^2

    const Grid<double>& band(Band b, int level) const {
        if (level < 1 || level > depth) throw StructuralError("pyramid level out of range");
        const auto& d = details[static_cast<std::size_t>(level - 1)];
        switch (b) {
            case Band::ll:
                if (level != depth) throw StructuralError("LL is only stored at the coarsest level");
                return ll;
            case Band::lh: return d.lh;
            case Band::hl: return d.hl;
            case Band::hh: return d.hh;
        }
        throw StructuralError("unknown band");
    }
};

namespace detail {

// Periodized analysis of one line: a[k] = sum_n lo[n] x[(2k+n) mod N].
inline void analyze_line(std::span<const double> x, const FilterBank& bank, std::span<double> approx,
                         std::span<double> detail) {
    const std::size_t N = x.size(), half = N / 2, L = bank.length();
    for (std::size_t k = 0; k < half; ++k) {
        double a = 0.0, d = 0.0;
        for (std::size_t n = 0; n < L; ++n) {
            const double v = x[(2 * k + n) % N];
            a += bank.lo[n] * v;
            d += bank.hi[n] * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
}

// Transpose of analyze_line.
inline void synthesize_line(std::span<const double> approx, std::span<const double> detail, const FilterBank& bank,
                            std::span<double> x) {
    const std::size_t half = approx.size(), N = 2 * half, L = bank.length();
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t k = 0; k < half; ++k) {
        for (std::size_t n = 0; n < L; ++n) {
            x[(2 * k + n) % N] += bank.lo[n] * approx[k] + bank.hi[n] * detail[k];
        }
    }
}

struct Quad {
    Grid<double> ll, lh, hl, hh;
};

inline Quad analyze_2d(const Grid<double>& in, const FilterBank& bank) {
    const int N = in.height(), half = N / 2;
    // Horizontal pass: each row splits into low (left) and high (right) halves.
    Grid<double> lo_rows(N, half), hi_rows(N, half);
    std::vector<double> line(static_cast<std::size_t>(N)), a(half), d(half);
    for (int r = 0; r < N; ++r) {
        for (int c = 0; c < N; ++c) line[c] = in(r, c);
        analyze_line(line, bank, a, d);
        for (int c = 0; c < half; ++c) {
            lo_rows(r, c) = a[c];
            hi_rows(r, c) = d[c];
        }
    }
    Quad q{Grid<double>(half, half), Grid<double>(half, half), Grid<double>(half, half), Grid<double>(half, half)};
    auto vertical = [&](const Grid<double>& src, Grid<double>& low, Grid<double>& high) {
        for (int c = 0; c < half; ++c) {
            for (int r = 0; r < N; ++r) line[r] = src(r, c);
            analyze_line(line, bank, a, d);
            for (int r = 0; r < half; ++r) {
                low(r, c) = a[r];
                high(r, c) = d[r];
            }
        }
    };
    vertical(lo_rows, q.ll, q.lh);
    vertical(hi_rows, q.hl, q.hh);
    return q;
}

inline Grid<double> synthesize_2d(const Grid<double>& ll, const DetailLevel& det, const FilterBank& bank) {
    const int half = ll.height(), N = 2 * half;
    Grid<double> lo_rows(N, half), hi_rows(N, half);
    std::vector<double> line(static_cast<std::size_t>(N)), a(half), d(half);
    auto vertical = [&](const Grid<double>& low, const Grid<double>& high, Grid<double>& dst) {
        for (int c = 0; c < half; ++c) {
            for (int r = 0; r < half; ++r) {
                a[r] = low(r, c);
                d[r] = high(r, c);
            }
            synthesize_line(a, d, bank, line);
            for (int r = 0; r < N; ++r) dst(r, c) = line[r];
        }
    };
    vertical(ll, det.lh, lo_rows);
    vertical(det.hl, det.hh, hi_rows);
    Grid<double> out(N, N);
    for (int r = 0; r < N; ++r) {
        for (int c = 0; c < half; ++c) {
            a[c] = lo_rows(r, c);
            d[c] = hi_rows(r, c);
        }
        synthesize_line(a, d, bank, line);
        for (int c = 0; c < N; ++c) out(r, c) = line[c];
    }
    return out;
}

}  // namespace detail

inline void validate_wavelet_geometry(int side, WaveletFamily family, int depth) {
    if (!is_power_of_two(side)) throw ConfigError("wavelet input side must be a power of two");
    if (depth < 1 || depth > 3) throw ConfigError("wavelet depth must be 1, 2 or 3");
    const auto L = static_cast<int>(filter_bank(family).length());
    if ((side >> depth) < L) {
        throw ConfigError("coarsest subband " + std::to_string(side >> depth) + " is smaller than the " +
                          to_string(family) + " filter length " + std::to_string(L));
    }
}

/// J-level periodized orthonormal 2-D DWT of a square power-of-two grid.
inline SubbandPyramid dwt2(const Grid<double>& img, WaveletFamily family, int depth) {
    if (img.height() != img.width()) throw ConfigError("dwt2 expects a square input");
    validate_wavelet_geometry(img.height(), family, depth);
    const FilterBank bank = filter_bank(family);
    SubbandPyramid pyr;
    pyr.family = family;
    pyr.depth = depth;
    pyr.side = img.height();
    Grid<double> current = img;
    for (int level = 1; level <= depth; ++level) {
        auto q = detail::analyze_2d(current, bank);
        pyr.details.push_back({std::move(q.lh), std::move(q.hl), std::move(q.hh)});
        current = std::move(q.ll);
    }
    pyr.ll = std::move(current);
    return pyr;
}

/// Inverse of dwt2.
inline Grid<double> idwt2(const SubbandPyramid& pyr) {
    if (pyr.depth < 1 || static_cast<int>(pyr.details.size()) != pyr.depth) {
        throw StructuralError("pyramid depth does not match its detail levels");
    }
    for (int level = 1; level <= pyr.depth; ++level) {
        const int n = pyr.side >> level;
        const auto& d = pyr.details[static_cast<std::size_t>(level - 1)];
        for (const auto* g : {&d.lh, &d.hl, &d.hh}) {
            if (g->height() != n || g->width() != n) throw StructuralError("detail subband shape mismatch");
        }
    }
    const int n_ll = pyr.side >> pyr.depth;
    if (pyr.ll.height() != n_ll || pyr.ll.width() != n_ll) throw StructuralError("LL subband shape mismatch");
    const FilterBank bank = filter_bank(pyr.family);
    Grid<double> current = pyr.ll;
    for (int level = pyr.depth; level >= 1; --level) {
        current = detail::synthesize_2d(current, pyr.details[static_cast<std::size_t>(level - 1)], bank);
    }
    return current;
}

/// Coefficient map into [0, 1]: the logistic sigmoid (monotone, Lipschitz 1/4).
inline double tau(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

inline Grid<double> tau_map(const Grid<double>& g) {
    Grid<double> out(g.height(), g.width());
    auto src = g.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = tau(src[i]);
    return out;
}

}  // namespace wph
