#include <functional>
#include <limits>
#include <random>

#include "catch_amalgamated.hpp"
#include "wph/metrics.hpp"
#include "wph/synthetic.hpp"

using namespace wph;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr GroundNorm kNorms[] = {GroundNorm::l1, GroundNorm::l2, GroundNorm::linf};

std::vector<DiagramPoint> random_points(std::mt19937_64& rng, int max_n) {
    std::uniform_int_distribution<int> count(0, max_n);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<DiagramPoint> out(count(rng));
    for (auto& p : out) {
        double b = u(rng), d = u(rng);
        if (b > d) std::swap(b, d);
        p = {b, d};
    }
    return out;
}

// Enumerates every partial matching; unmatched points go to the diagonal.
// combine(acc, cost) folds edge costs (sum for W1, max for bottleneck).
double brute_force(const std::vector<DiagramPoint>& a, const std::vector<DiagramPoint>& b, GroundNorm p,
                   const std::function<double(double, double)>& combine) {
    double best = std::numeric_limits<double>::infinity();
    std::vector<bool> used(b.size(), false);
    std::function<void(std::size_t, double)> rec = [&](std::size_t i, double acc) {
        if (i == a.size()) {
            for (std::size_t j = 0; j < b.size(); ++j)
                if (!used[j]) acc = combine(acc, diagonal_distance(b[j], p));
            best = std::min(best, acc);
            return;
        }
        rec(i + 1, combine(acc, diagonal_distance(a[i], p)));
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (used[j]) continue;
            used[j] = true;
            rec(i + 1, combine(acc, point_distance(a[i], b[j], p)));
            used[j] = false;
        }
    };
    rec(0, 0.0);
    return best;
}

double brute_w1(const std::vector<DiagramPoint>& a, const std::vector<DiagramPoint>& b, GroundNorm p) {
    return brute_force(a, b, p, [](double x, double y) { return x + y; });
}

double brute_bottleneck(const std::vector<DiagramPoint>& a, const std::vector<DiagramPoint>& b) {
    return brute_force(a, b, GroundNorm::linf, [](double x, double y) { return std::max(x, y); });
}

double brute_assignment(const std::vector<double>& cost, int n) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0;
        for (int i = 0; i < n; ++i) s += cost[i * n + perm[i]];
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST_CASE("ground and diagonal distances") {
    const DiagramPoint a{0.2, 0.8};
    CHECK_THAT(diagonal_distance(a, GroundNorm::linf), WithinAbs(0.3, 1e-15));
    CHECK_THAT(diagonal_distance(a, GroundNorm::l1), WithinAbs(0.6, 1e-15));
    CHECK_THAT(diagonal_distance(a, GroundNorm::l2), WithinAbs(0.6 / std::sqrt(2.0), 1e-15));
    // Brute-force the nearest diagonal point t on a fine grid.
    for (auto p : kNorms) {
        double best = 1e9;
        for (int k = 0; k <= 100000; ++k) {
            const double t = k / 100000.0;
            best = std::min(best, point_distance(a, {t, t}, p));
        }
        CHECK_THAT(diagonal_distance(a, p), WithinAbs(best, 1e-5));
    }
    CHECK(parse_ground_norm("inf") == GroundNorm::linf);
    CHECK(to_string(GroundNorm::l2) == "2");
    CHECK_THROWS_AS(parse_ground_norm("3"), ConfigError);
}

TEST_CASE("Hungarian solver matches permutation enumeration") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 10);
    for (int n = 1; n <= 7; ++n) {
        for (int t = 0; t < 10; ++t) {
            std::vector<double> cost(n * n);
            for (auto& c : cost) c = std::floor(u(rng) * 2) / 2;  // ties
            const auto assign = solve_assignment(cost, n);
            double s = 0;
            std::vector<bool> seen(n, false);
            for (int i = 0; i < n; ++i) {
                REQUIRE(!seen[assign[i]]);
                seen[assign[i]] = true;
                s += cost[i * n + assign[i]];
            }
            CHECK_THAT(s, WithinAbs(brute_assignment(cost, n), 1e-9));
        }
    }
}

TEST_CASE("W1 worked example") {
    const std::vector<DiagramPoint> a = {{0.0, 1.0}}, b = {{0.1, 0.9}};
    CHECK_THAT(wasserstein1(a, b, GroundNorm::linf).cost, WithinAbs(0.1, 1e-15));
    CHECK(wasserstein1(a, a, GroundNorm::l2).cost == 0.0);
    CHECK(wasserstein1(std::vector<DiagramPoint>{}, std::vector<DiagramPoint>{}, GroundNorm::l1).cost == 0.0);
}

TEST_CASE("W1 equals exhaustive matching on small diagrams") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 150; ++t) {
        const auto a = random_points(rng, 4), b = random_points(rng, 4);
        for (auto p : kNorms) {
            const auto r = wasserstein1(a, b, p);
            CHECK_THAT(r.cost, WithinAbs(brute_w1(a, b, p), 1e-12));
            CHECK_THAT(matching_cost(a, b, r, p), WithinAbs(r.cost, 1e-12));
        }
    }
}

TEST_CASE("W1 refuses diagrams above the cap") {
    std::vector<DiagramPoint> a(300, {0.1, 0.5}), b(300, {0.2, 0.6});
    CHECK_THROWS_AS(wasserstein1(a, b, GroundNorm::l1), ParameterError);
    CHECK_NOTHROW(wasserstein1(std::span(a).first(10), std::span(b).first(10), GroundNorm::l1));
}

TEST_CASE("bottleneck worked examples") {
    const std::vector<DiagramPoint> a = {{0.2, 0.8}}, none;
    CHECK_THAT(bottleneck(a, none), WithinAbs(0.3, 1e-15));
    CHECK(bottleneck(a, a) == 0.0);
    CHECK(bottleneck(none, none) == 0.0);
    CHECK_THAT(bottleneck(std::vector<DiagramPoint>{{0, 1}}, std::vector<DiagramPoint>{{0.1, 0.9}}), WithinAbs(0.1, 1e-15));
}

TEST_CASE("bottleneck equals exhaustive matching on small diagrams") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 300; ++t) {
        const auto a = random_points(rng, 5), b = random_points(rng, 5);
        CHECK_THAT(bottleneck(a, b), WithinAbs(brute_bottleneck(a, b), 1e-15));
    }
}

TEST_CASE("bottleneck handles ties and duplicate points") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> q(0, 4);
    for (int t = 0; t < 200; ++t) {
        std::vector<DiagramPoint> a, b;
        for (int i = 0; i < 5; ++i) {
            double x = q(rng) / 4.0, y = q(rng) / 4.0;
            if (x > y) std::swap(x, y);
            (i % 2 ? a : b).push_back({x, y});
        }
        CHECK_THAT(bottleneck(a, b), WithinAbs(brute_bottleneck(a, b), 1e-15));
    }
}

TEST_CASE("metric axioms on random triples") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 100; ++t) {
        const auto a = random_points(rng, 10), b = random_points(rng, 10), c = random_points(rng, 10);
        const double ab = bottleneck(a, b), ba = bottleneck(b, a);
        CHECK(ab == ba);
        CHECK(ab >= 0);
        CHECK(bottleneck(a, c) <= ab + bottleneck(b, c) + 1e-9);
        CHECK(ab <= wasserstein1(a, b, GroundNorm::linf).cost + 1e-12);
        for (auto p : kNorms) {
            const double w = wasserstein1(a, b, p).cost;
            CHECK_THAT(w, WithinAbs(wasserstein1(b, a, p).cost, 1e-12));
            CHECK(wasserstein1(a, c, p).cost <= w + wasserstein1(b, c, p).cost + 1e-9);
        }
    }
}

TEST_CASE("bottleneck scales to image-sized diagrams") {
    std::mt19937_64 rng(9);
    const auto img = random_image(48, 48, rng);
    GrayImage moved = img;
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (double& v : moved.values()) v = std::clamp(v + u(rng), 0.0, 1.0);
    const auto a = compute_diagram(img).in_dim(0), b = compute_diagram(moved).in_dim(0);
    REQUIRE(a.size() > 200);
    CHECK(bottleneck(a, b) <= 0.05 + 1e-9);
}

TEST_CASE("mixed-dimension diagrams are rejected") {
    PersistenceDiagram d;
    d.pairs = {{0.1, 0.5, 0, false}, {0.2, 0.4, 1, false}};
    CHECK_THROWS_AS(diagram_points(d), StructuralError);
    PersistenceDiagram h0, h1;
    h0.pairs = {{0.1, 0.5, 0, false}};
    h1.pairs = {{0.1, 0.5, 1, false}};
    CHECK_THROWS_AS(wasserstein1(h0, h1, GroundNorm::l1), StructuralError);
}

TEST_CASE("W2 between clouds") {
    std::vector<CloudPoint> u = {{0.0, 0.0, 1.0}}, v = {{3.0, 4.0, 1.0}};
    CHECK_THAT(wasserstein2_clouds(u, v, 512, 0).value, WithinAbs(5.0, 1e-12));

    std::mt19937_64 rng(10);
    std::normal_distribution<double> g(0, 1);
    std::vector<CloudPoint> a(200, CloudPoint(8)), b(300, CloudPoint(8));
    for (auto& p : a)
        for (auto& x : p) x = g(rng);
    for (auto& p : b)
        for (auto& x : p) x = g(rng);
    CHECK(wasserstein2_clouds(a, a, 512, 1).value == 0.0);
    const auto d1 = wasserstein2_clouds(a, b, 512, 3), d2 = wasserstein2_clouds(a, b, 512, 3);
    CHECK(d1.value == d2.value);
    CHECK(d1.n_used == 200);
    CHECK(d1.reduced);
    CHECK_THROWS(wasserstein2_clouds(a, std::vector<CloudPoint>{}, 512, 0));
}

TEST_CASE("W2 recovers a mean shift between Gaussian clouds") {
    // Independent N(0, I) and N(mu, I) in 8-D with |mu| = 6; the empirical
    // plug-in estimate is biased upward by the sampling noise, so the shift
    // is large enough for that bias to sit well inside the tolerance.
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0, 1);
    const double m = 6.0 / std::sqrt(8.0);
    std::vector<CloudPoint> a(512, CloudPoint(8)), b(512, CloudPoint(8));
    for (auto& p : a)
        for (auto& x : p) x = g(rng);
    for (auto& p : b)
        for (auto& x : p) x = m + g(rng);
    CHECK_THAT(wasserstein2_clouds(a, b, 512, 0).value, WithinRel(6.0, 0.15));
}
