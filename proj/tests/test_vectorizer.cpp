#include <random>

#include "catch_amalgamated.hpp"
#include "wph/synthetic.hpp"
#include "wph/vectorizer.hpp"
#include "wph/verify.hpp"

using namespace wph;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ChannelParams plain_params() {
    ChannelParams p;
    p.apply_mask = false;
    return p;
}

void check_unit_channels(const ChannelStack& s, int h, int w) {
    REQUIRE(s.channels.size() == kChannelCount);
    for (const auto& ch : s.channels) {
        REQUIRE(ch.height() == h);
        REQUIRE(ch.width() == w);
        for (double v : ch.values()) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
    }
}

}  // namespace

TEST_CASE("gate closed form") {
    CHECK(detail::gate_unchecked(0.5, 0.0, 1.0, 0.0) == 0.25);
    CHECK_THAT(gate(0.5, 0.0, 1.0, 1e-6), WithinRel(0.25 / (1.0 + 1e-6), 1e-15));
    CHECK_THAT(gate(0.5, 0.0, 1.0, 1e-6), WithinAbs(0.24999975000025, 1e-15));
    CHECK(gate(0.2, 0.2, 0.7, 1e-6) == 0.0);
    CHECK(gate(0.7, 0.2, 0.7, 1e-6) == 0.0);
    CHECK(gate(0.9, 0.2, 0.7, 1e-6) == 0.0);
    CHECK(gate(0.1, 0.2, 0.7, 1e-6) == 0.0);
    CHECK_THROWS_AS(gate(0.5, 0.0, 1.0, 0.0), ParameterError);
    CHECK_THROWS_AS(gate(0.5, 0.0, 1.0, -1.0), ParameterError);
}

TEST_CASE("gate gradient matches finite differences and stays in the unit box") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    const double h = 1e-6;
    for (double eps : {1e-6, 1e-3, 0.1}) {
        for (int i = 0; i < 2000; ++i) {
            double v[3] = {u(rng), u(rng), u(rng)};
            std::sort(v, v + 3);
            const double b = v[0], psi = v[1], d = v[2];
            if (psi - b < 1e-4 || d - psi < 1e-4) continue;
            const auto g = gate_gradient(psi, b, d, eps);
            const double fb = (gate(psi, b + h, d, eps) - gate(psi, b - h, d, eps)) / (2 * h);
            const double fd = (gate(psi, b, d + h, eps) - gate(psi, b, d - h, eps)) / (2 * h);
            CHECK_THAT(g.d_birth, WithinAbs(fb, 1e-6));
            CHECK_THAT(g.d_death, WithinAbs(fd, 1e-6));
            CHECK(std::abs(g.d_birth) <= 1.0);
            CHECK(std::abs(g.d_death) <= 1.0);
        }
    }
}

TEST_CASE("Lipschitz constants per ground norm") {
    CHECK(gate_lipschitz(1.0) == 1.0);
    CHECK(gate_lipschitz(2.0) == std::sqrt(2.0));
    CHECK(gate_lipschitz(std::numeric_limits<double>::infinity()) == 2.0);
    CHECK_THROWS_AS(gate_lipschitz(3.0), ParameterError);
}

TEST_CASE("randomized gate checks") {
    const auto fd = verify::gate_partial_bounds(20000, 1e-6, 1);
    CHECK(fd.violations == 0);
    const auto loose = verify::gate_partial_bounds(20000, 0.1, 1);
    CHECK(loose.violations == 0);
    CHECK(loose.max_ratio < 1.0);
    CHECK(verify::gate_lipschitz_bound(100000, 1e-6, 2).violations == 0);
    const auto near = verify::gate_near_diagonal(20000, 1e-6, 3);
    CHECK(near.violations == 0);
    CHECK(near.max_ratio <= 1.0);
}

TEST_CASE("subband maps") {
    const Grid<double> half(4, 6, 0.5);
    const auto empty_map = subband_map(half, PersistenceDiagram{}, 1e-6);
    for (double v : empty_map.values()) CHECK(v == 0.0);

    PersistenceDiagram one;
    one.pairs.push_back({0.0, 1.0, 0, false});
    const auto unit_map = subband_map(half, one, 1e-12);
    for (double v : unit_map.values()) CHECK_THAT(v, WithinAbs(0.25, 1e-12));

    std::mt19937_64 rng(9);
    const auto psi = random_image(8, 8, rng);
    PersistenceDiagram p;
    p.pairs.push_back({0.2, 0.7, 1, false});
    PersistenceDiagram pp = p;
    pp.pairs.push_back(p.pairs[0]);
    const auto single = subband_map(psi, p, 1e-6);
    const auto twice = subband_map(psi, pp, 1e-6);
    for (std::size_t i = 0; i < single.size(); ++i) CHECK(twice.values()[i] == 2.0 * single.values()[i]);
}

TEST_CASE("intensity map equals the per-pixel sum") {
    std::mt19937_64 rng(10);
    const auto img = random_quantized_image(10, 12, 7, rng);
    std::vector<PersistencePair> pairs = {{0.1, 0.6, 0, false}, {0.3, 0.9, 0, false}, {0.0, 0.4, 1, false}};
    const auto m = intensity_map(img, pairs, 1e-6);
    for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < img.width(); ++c) {
            double s = 0;
            for (const auto& q : pairs) s += gate(img(r, c), q.birth, q.death, 1e-6);
            CHECK(m(r, c) == s);
        }
}

TEST_CASE("rescaling maps onto [0, 1] and constants to zero") {
    Grid<double> g(1, 3);
    g(0, 0) = 2, g(0, 1) = 3, g(0, 2) = 4;
    const auto r = rescale_unit(g);
    CHECK(r.grid(0, 0) == 0.0);
    CHECK(r.grid(0, 1) == 0.5);
    CHECK(r.grid(0, 2) == 1.0);
    const auto flat = rescale_unit(Grid<double>(2, 2, 7.0)).grid;
    for (double v : flat.values()) CHECK(v == 0.0);
}

TEST_CASE("constant images give all-zero channels") {
    for (bool mask : {false, true}) {
        ChannelParams p;
        p.apply_mask = mask;
        const auto s = build_channel_stack(GrayImage(40, 30, 0.0), p);
        check_unit_channels(s, 40, 30);
        for (const auto& ch : s.channels)
            for (double v : ch.values()) CHECK(v == 0.0);
    }
}

TEST_CASE("every extraction yields 8 unit-range channels") {
    std::mt19937_64 rng(12);
    for (auto f : {WaveletFamily::haar, WaveletFamily::db2, WaveletFamily::db4}) {
        for (int J = 1; J <= 3; ++J) {
            ChannelParams p;
            p.gating.family = f;
            p.gating.depth = J;
            BlobSpec spec;
            spec.height = 50 + 10 * J;
            spec.width = 70;
            spec.dark_blobs = 3;
            spec.rings = 1;
            const auto img = min_max_normalize(synthetic_blobs(spec, rng));
            const auto s = build_channel_stack(img, p);
            check_unit_channels(s, spec.height, spec.width);
            CHECK(s.names == channel_names(J));
            CHECK(s.names[0] == "H0_LH" + std::to_string(J));
            bool any = false;
            for (std::size_t k = 0; k < 3; ++k)
                for (double v : s.channels[k].values()) any = any || v > 0;
            CHECK(any);
        }
    }
}

TEST_CASE("H0 baseline channel is supported on the surviving bar") {
    // Two basins (0.1 and 0.3) joined through a 0.8 ridge on a 0.95 plateau.
    GrayImage img(24, 24, 0.95);
    for (int r = 4; r < 20; ++r) {
        for (int c = 2; c < 10; ++c) img(r, c) = 0.1 + 0.02 * (c - 2);
        img(r, 11) = 0.8;
        for (int c = 13; c < 22; ++c) img(r, c) = 0.3 + 0.01 * (c - 13);
    }
    const auto diag = compute_diagram(img);
    const auto kept = filter_h0(diag).in_dim(0);
    REQUIRE(kept.size() >= 1);
    const auto s = build_channel_stack(img, plain_params());
    const auto& ch = s.channels[6];
    for (int r = 0; r < 24; ++r)
        for (int c = 0; c < 24; ++c) {
            bool inside = false;
            for (const auto& p : kept.pairs) inside = inside || (p.birth < img(r, c) && img(r, c) < p.death);
            CHECK((ch(r, c) > 0.0) == inside);
        }
}

TEST_CASE("empty filtered diagrams give zero maps") {
    // A single basin: H0 filtering removes the only bar and there is no H1.
    GrayImage img(32, 32);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c) img(r, c) = (std::abs(r - 16) + std::abs(c - 16)) / 32.0;
    const auto s = build_channel_stack(min_max_normalize(img), plain_params());
    for (const auto& ch : s.channels)
        for (double v : ch.values()) CHECK(v == 0.0);
}

TEST_CASE("concatenation puts the image first") {
    std::mt19937_64 rng(14);
    const auto img = min_max_normalize(synthetic_blobs({}, rng));
    const auto s = build_channel_stack(img, ChannelParams{});
    const auto t = concat_input(img, s);
    REQUIRE(t.channels == 9);
    REQUIRE(t.height == img.height());
    REQUIRE(t.width == img.width());
    const auto c0 = t.channel(0);
    CHECK(std::equal(c0.begin(), c0.end(), img.values().begin()));
    const auto c3 = t.channel(3);
    CHECK(std::equal(c3.begin(), c3.end(), s.channels[2].values().begin()));
    CHECK_THROWS_AS(concat_input(GrayImage(3, 3), s), StructuralError);

    const auto flat = build_channel_stack(GrayImage(20, 20, 0.0), ChannelParams{});
    const auto tc = concat_input(GrayImage(20, 20, 0.0), flat);
    for (double v : tc.data) CHECK(v == 0.0);
}

TEST_CASE("alternative diagram source") {
    std::mt19937_64 rng(15);
    ChannelParams p;
    p.diagram_source = DiagramSource::wavelet;
    const auto img = min_max_normalize(synthetic_blobs({}, rng));
    check_unit_channels(build_channel_stack(img, p), img.height(), img.width());
}

TEST_CASE("extraction is deterministic and validates parameters") {
    std::mt19937_64 rng(16);
    const auto img = min_max_normalize(synthetic_blobs({}, rng));
    const auto a = build_channel_stack(img, ChannelParams{});
    const auto b = build_channel_stack(img, ChannelParams{});
    CHECK(stack_tensor(a).data == stack_tensor(b).data);

    ChannelParams bad;
    bad.gating.depth = 4;
    CHECK_THROWS_AS(build_channel_stack(img, bad), ConfigError);
    bad = {};
    bad.gating.h1_pct = 0.0;
    CHECK_THROWS_AS(build_channel_stack(img, bad), ConfigError);
    bad = {};
    bad.gating.epsilon = 0.0;
    CHECK_THROWS_AS(build_channel_stack(img, bad), ConfigError);
    bad = {};
    bad.side = 200;
    CHECK_THROWS_AS(build_channel_stack(img, bad), ConfigError);
    bad = {};
    bad.max_side = 4;
    CHECK_THROWS_AS(build_channel_stack(img, bad), ConfigError);
}

TEST_CASE("map-level Lipschitz bounds on random diagrams") {
    const auto r = verify::vectorization_bounds(20, 64, 2, WaveletFamily::db2, 1e-6, 5);
    CHECK(r.per_subband.violations == 0);
    CHECK(r.stacked.violations == 0);
}
