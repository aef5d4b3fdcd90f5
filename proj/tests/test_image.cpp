#include <random>

#include "catch_amalgamated.hpp"
#include "wph/image.hpp"
#include "wph/synthetic.hpp"

using namespace wph;
using Catch::Matchers::WithinAbs;

namespace {

GrayImage from_rows(std::vector<std::vector<double>> rows) {
    GrayImage g(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < g.height(); ++r)
        for (int c = 0; c < g.width(); ++c) g(r, c) = rows[r][c];
    return g;
}

double mean(const GrayImage& g) {
    double s = 0;
    for (double v : g.values()) s += v;
    return s / static_cast<double>(g.size());
}

// Exhaustive Otsu: maximize between-class variance over every histogram split.
double brute_otsu_threshold(const GrayImage& img) {
    std::vector<double> hist(256, 0.0);
    for (double v : img.values()) hist[std::min(255, static_cast<int>(v * 256))] += 1;
    double best = -1;
    int best_k = -1;
    for (int k = 0; k < 255; ++k) {
        double w0 = 0, w1 = 0, m0 = 0, m1 = 0;
        for (int i = 0; i <= k; ++i) w0 += hist[i], m0 += i * hist[i];
        for (int i = k + 1; i < 256; ++i) w1 += hist[i], m1 += i * hist[i];
        if (w0 == 0 || w1 == 0) continue;
        const double var = w0 * w1 * std::pow(m0 / w0 - m1 / w1, 2);
        if (var > best) best = var, best_k = k;
    }
    return best_k < 0 ? 0.0 : (best_k + 1) / 256.0;
}

}  // namespace

TEST_CASE("min-max normalization maps the range onto [0, 1]") {
    const auto n = min_max_normalize(from_rows({{2, 4, 6}}));
    CHECK(n(0, 0) == 0.0);
    CHECK(n(0, 1) == 0.5);
    CHECK(n(0, 2) == 1.0);
}

TEST_CASE("constant images normalize to zeros and are flagged") {
    const auto r = min_max_normalize_ex(from_rows({{5, 5, 5}}));
    CHECK(r.was_constant);
    for (double v : r.image.values()) CHECK(v == 0.0);
}

TEST_CASE("8-bit ramp normalizes linearly") {
    GrayImage ramp(1, 256);
    for (int c = 0; c < 256; ++c) ramp(0, c) = c;
    const auto n = min_max_normalize(ramp);
    for (int c = 0; c < 256; ++c) CHECK_THAT(n(0, c), WithinAbs(c / 255.0, 1e-15));
}

TEST_CASE("normalization is idempotent") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5, 40);
    for (int t = 0; t < 20; ++t) {
        GrayImage g(7, 9);
        for (double& v : g.values()) v = u(rng);
        const auto once = min_max_normalize(g);
        const auto twice = min_max_normalize(once);
        for (std::size_t i = 0; i < once.size(); ++i) CHECK_THAT(twice.values()[i], WithinAbs(once.values()[i], 1e-15));
    }
}

TEST_CASE("Otsu separates a two-valued image") {
    GrayImage g(8, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) g(r, c) = c < 4 ? 0.1 : 0.9;
    const auto m = otsu_mask(g);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) CHECK(m(r, c) == (c >= 4 ? 1 : 0));
}

TEST_CASE("Otsu on a constant image keeps everything") {
    const auto m = otsu_mask(GrayImage(5, 5, 0.4));
    for (auto v : m.values()) CHECK(v == 1);
}

TEST_CASE("Otsu threshold matches an exhaustive scan on bimodal mixtures") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> lo(0.2, 0.05), hi(0.8, 0.05);
    std::bernoulli_distribution coin(0.5);
    for (int t = 0; t < 10; ++t) {
        GrayImage g(40, 40);
        for (double& v : g.values()) v = std::clamp(coin(rng) ? hi(rng) : lo(rng), 0.0, 1.0);
        const double th = otsu_threshold(g);
        CHECK(th > 0.3);
        CHECK(th < 0.7);
        CHECK(th == brute_otsu_threshold(g));
    }
}

TEST_CASE("apply_mask zeroes background") {
    GrayImage g(1, 2, 0.5);
    BinaryMask m(1, 2);
    m(0, 1) = 1;
    const auto out = apply_mask(g, m);
    CHECK(out(0, 0) == 0.0);
    CHECK(out(0, 1) == 0.5);
    CHECK_THROWS_AS(apply_mask(g, BinaryMask(2, 2)), StructuralError);
}

TEST_CASE("resize_max_side halves exactly") {
    std::mt19937_64 rng(1);
    const auto img = random_image(192, 96, rng);
    const auto out = resize_max_side(img, 96);
    REQUIRE(out.height() == 96);
    REQUIRE(out.width() == 48);
    for (int r = 0; r < 96; ++r)
        for (int c = 0; c < 48; ++c) {
            const double box = (img(2 * r, 2 * c) + img(2 * r + 1, 2 * c) + img(2 * r, 2 * c + 1) + img(2 * r + 1, 2 * c + 1)) / 4;
            CHECK_THAT(out(r, c), WithinAbs(box, 1e-12));
        }
}

TEST_CASE("resize_max_side leaves small images alone") {
    std::mt19937_64 rng(2);
    const auto img = random_image(96, 96, rng);
    CHECK(resize_max_side(img, 96) == img);
}

TEST_CASE("box filtering preserves constants and the value hull") {
    const auto out = resize_max_side(GrayImage(100, 50, 0.7), 96);
    CHECK(out.height() == 96);
    for (double v : out.values()) CHECK_THAT(v, WithinAbs(0.7, 1e-12));

    std::mt19937_64 rng(4);
    for (int t = 0; t < 20; ++t) {
        const auto img = random_image(37 + t, 101 - t, rng);
        const auto [lo, hi] = value_range(img.values());
        const auto small = resize_max_side(img, 23);
        for (double v : small.values()) {
            CHECK(v >= lo);
            CHECK(v <= hi);
        }
    }
}

TEST_CASE("pad_to_square pads with zeros on the right and bottom") {
    GrayImage g(4, 2, 1.0);
    const auto p = pad_to_square(g, 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) CHECK(p(r, c) == (c < 2 ? 1.0 : 0.0));
    std::mt19937_64 rng(5);
    const auto sq = random_image(8, 8, rng);
    CHECK(pad_to_square(sq, 8) == sq);
    CHECK_THROWS_AS(pad_to_square(g, 6), ConfigError);
}

TEST_CASE("fit_to_square resizes then pads, preserving the mean") {
    std::mt19937_64 rng(6);
    const auto img = random_image(96, 48, rng);
    const auto fit = fit_to_square(img, 256);
    REQUIRE(fit.content_height == 256);
    REQUIRE(fit.content_width == 128);
    const auto content = crop(fit.square, 256, 128);
    CHECK_THAT(mean(content), WithinAbs(mean(img), 1e-6));
    CHECK(content == area_resize(img, 256, 128));
    for (int r = 0; r < 256; ++r)
        for (int c = 128; c < 256; ++c) CHECK(fit.square(r, c) == 0.0);
}

TEST_CASE("bilinear resize keeps constants and is the identity at equal size") {
    const auto up = bilinear_resize(Grid<double>(3, 5, 0.25), 17, 9);
    for (double v : up.values()) CHECK_THAT(v, WithinAbs(0.25, 1e-15));
    std::mt19937_64 rng(7);
    const auto img = random_image(6, 4, rng);
    CHECK(bilinear_resize(img, 6, 4) == img);
}
