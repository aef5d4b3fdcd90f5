#include <random>

#include "catch_amalgamated.hpp"
#include "wph/synthetic.hpp"
#include "wph/verify.hpp"
#include "wph/wavelet.hpp"

using namespace wph;
using Catch::Matchers::WithinAbs;

namespace {

constexpr WaveletFamily kFamilies[] = {WaveletFamily::haar, WaveletFamily::db2, WaveletFamily::db4};

double max_abs(const Grid<double>& g) {
    double m = 0;
    for (double v : g.values()) m = std::max(m, std::abs(v));
    return m;
}

Grid<double> cyclic_shift(const Grid<double>& g, int dr, int dc) {
    Grid<double> out(g.height(), g.width());
    for (int r = 0; r < g.height(); ++r)
        for (int c = 0; c < g.width(); ++c) out((r + dr) % g.height(), (c + dc) % g.width()) = g(r, c);
    return out;
}

}  // namespace

TEST_CASE("filters are orthonormal with the quadrature mirror high-pass") {
    for (auto f : kFamilies) {
        const auto bank = filter_bank(f);
        const std::size_t L = bank.lo.size();
        for (std::size_t shift = 0; shift < L; shift += 2) {
            double ll = 0, hh = 0, lh = 0;
            for (std::size_t n = 0; n + shift < L; ++n) {
                ll += bank.lo[n] * bank.lo[n + shift];
                hh += bank.hi[n] * bank.hi[n + shift];
                lh += bank.lo[n] * bank.hi[n + shift];
            }
            CHECK_THAT(ll, WithinAbs(shift == 0 ? 1.0 : 0.0, 1e-15));
            CHECK_THAT(hh, WithinAbs(shift == 0 ? 1.0 : 0.0, 1e-15));
        }
        double sum = 0;
        for (double v : bank.lo) sum += v;
        CHECK_THAT(sum, WithinAbs(std::sqrt(2.0), 1e-15));
        for (std::size_t n = 0; n < L; ++n) CHECK(bank.hi[n] == (n % 2 ? -1.0 : 1.0) * bank.lo[L - 1 - n]);
    }
}

TEST_CASE("haar on a constant image") {
    const auto pyr = dwt2(Grid<double>(8, 8, 0.3), WaveletFamily::haar, 1);
    for (double v : pyr.ll.values()) CHECK_THAT(v, WithinAbs(0.6, 1e-15));
    CHECK(max_abs(pyr.details[0].lh) == 0.0);
    CHECK(max_abs(pyr.details[0].hl) == 0.0);
    CHECK(max_abs(pyr.details[0].hh) == 0.0);
}

TEST_CASE("haar on a single pixel") {
    Grid<double> img(4, 4, 0.0);
    img(0, 0) = 1.0;
    const auto pyr = dwt2(img, WaveletFamily::haar, 1);
    for (const Grid<double>* g : {&pyr.ll, &pyr.details[0].lh, &pyr.details[0].hl, &pyr.details[0].hh}) {
        CHECK_THAT(std::abs((*g)(0, 0)), WithinAbs(0.5, 1e-15));
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                if (r || c) CHECK((*g)(r, c) == 0.0);
    }
    CHECK_THAT(pyr.ll(0, 0), WithinAbs(0.5, 1e-15));
}

TEST_CASE("band names follow the horizontal filter first") {
    Grid<double> stripes(8, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) stripes(r, c) = r % 2;
    const auto pyr = dwt2(stripes, WaveletFamily::haar, 1);
    CHECK(max_abs(pyr.details[0].lh) > 0.1);
    CHECK(max_abs(pyr.details[0].hl) == 0.0);
    CHECK(max_abs(pyr.details[0].hh) == 0.0);
}

TEST_CASE("db2 annihilates linear ramps away from the seam") {
    const int S = 32;
    Grid<double> ramp(S, S);
    for (int r = 0; r < S; ++r)
        for (int c = 0; c < S; ++c) ramp(r, c) = 0.01 * r + 0.02 * c;
    const auto pyr = dwt2(ramp, WaveletFamily::db2, 1);
    for (const Grid<double>* g : {&pyr.details[0].lh, &pyr.details[0].hl, &pyr.details[0].hh}) {
        for (int r = 0; r < S / 2 - 1; ++r)
            for (int c = 0; c < S / 2 - 1; ++c) CHECK(std::abs((*g)(r, c)) < 1e-9);
    }
}

TEST_CASE("full-period cyclic shifts shift every subband") {
    std::mt19937_64 rng(2);
    const auto img = random_image(64, 64, rng);
    for (auto f : kFamilies) {
        for (int J = 1; J <= 3; ++J) {
            const int step = 1 << J;
            const auto a = dwt2(img, f, J);
            const auto b = dwt2(cyclic_shift(img, step, 2 * step), f, J);
            for (int j = 1; j <= J; ++j) {
                const int s = 1 << (J - j);
                for (Band band : {Band::lh, Band::hl, Band::hh}) {
                    const auto want = cyclic_shift(a.band(band, j), s, 2 * s);
                    const auto& got = b.band(band, j);
                    for (std::size_t i = 0; i < got.size(); ++i) CHECK_THAT(got.values()[i], WithinAbs(want.values()[i], 1e-12));
                }
            }
        }
    }
}

TEST_CASE("Parseval and perfect reconstruction") {
    const auto checks = verify::wavelet_roundtrip(3, 64, 7);
    CHECK(checks.parseval.violations == 0);
    CHECK(checks.reconstruction.violations == 0);
    CHECK(checks.parseval.trials == 27);
}

TEST_CASE("inverse of special pyramids") {
    for (int J = 1; J <= 3; ++J) {
        auto pyr = dwt2(Grid<double>(32, 32, 0.0), WaveletFamily::db2, J);
        const auto zero_image = idwt2(pyr);
        for (double v : zero_image.values()) CHECK(v == 0.0);
        for (double& v : pyr.ll.values()) v = 0.8;
        const auto flat_image = idwt2(pyr);
        for (double v : flat_image.values()) CHECK_THAT(v, WithinAbs(0.8 / (1 << J), 1e-12));
    }
}

TEST_CASE("geometry and shape validation") {
    CHECK_THROWS_AS(dwt2(Grid<double>(16, 16), WaveletFamily::db4, 2), ConfigError);   // 4 < 8 taps
    CHECK_NOTHROW(dwt2(Grid<double>(16, 16), WaveletFamily::db4, 1));
    CHECK_THROWS_AS(dwt2(Grid<double>(16, 8), WaveletFamily::haar, 1), ConfigError);
    CHECK_THROWS_AS(dwt2(Grid<double>(24, 24), WaveletFamily::haar, 1), ConfigError);
    CHECK_THROWS_AS(dwt2(Grid<double>(16, 16), WaveletFamily::haar, 0), ConfigError);
    auto pyr = dwt2(Grid<double>(16, 16, 1.0), WaveletFamily::haar, 2);
    pyr.details[0].hh = Grid<double>(3, 3);
    CHECK_THROWS_AS(idwt2(pyr), StructuralError);
}

TEST_CASE("tau is the logistic map") {
    CHECK(tau(0.0) == 0.5);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-20, 20);
    for (int i = 0; i < 1000000; ++i) {
        const double a = u(rng), b = u(rng);
        if (i % 1000 == 0) CHECK_THAT(tau(a) + tau(-a), WithinAbs(1.0, 1e-15));
        if (std::abs(tau(a) - tau(b)) > std::abs(a - b) / 4 + 1e-17) FAIL("Lipschitz 1/4 violated");
        if (a < b && !(tau(a) <= tau(b))) FAIL("tau not monotone");
    }
}
