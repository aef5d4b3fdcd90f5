#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wph/error.hpp"
#include "wph/persistence.hpp"

namespace wph {

/// Ground norm on the birth-death plane.
enum class GroundNorm { l1, l2, linf };

inline std::string to_string(GroundNorm p) {
    switch (p) {
        case GroundNorm::l1: return "1";
        case GroundNorm::l2: return "2";
        case GroundNorm::linf: return "inf";
    }
    return "?";
}

inline GroundNorm parse_ground_norm(const std::string& s) {
    if (s == "1") return GroundNorm::l1;
    if (s == "2") return GroundNorm::l2;
    if (s == "inf" || s == "linf") return GroundNorm::linf;
    throw ConfigError("unknown ground norm '" + s + "' (expected 1, 2 or inf)");
}

inline double norm_exponent(GroundNorm p) {
    switch (p) {
        case GroundNorm::l1: return 1.0;
        case GroundNorm::l2: return 2.0;
        case GroundNorm::linf: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

struct DiagramPoint {
    double birth = 0.0;
    double death = 0.0;
};

inline double point_distance(const DiagramPoint& a, const DiagramPoint& b, GroundNorm p) noexcept {
    const double db = std::abs(a.birth - b.birth), dd = std::abs(a.death - b.death);
    switch (p) {
        case GroundNorm::l1: return db + dd;
        case GroundNorm::l2: return std::hypot(db, dd);
        case GroundNorm::linf: return std::max(db, dd);
    }
    return 0.0;
}

/// Distance from (b, d) to the nearest diagonal point (t, t). Writing
/// u = d - b >= 0:
///   l1:   |b-t| + |d-t| >= u with equality for any t in [b, d]       -> u
///   l2:   minimized at t = (b+d)/2, sqrt(2 (u/2)^2)                  -> u / sqrt(2)
///   linf: max(|b-t|, |d-t|) >= u/2 with equality at t = (b+d)/2      -> u / 2
inline double diagonal_distance(const DiagramPoint& a, GroundNorm p) noexcept {
    const double u = std::abs(a.death - a.birth);
    switch (p) {
        case GroundNorm::l1: return u;
        case GroundNorm::l2: return u / std::sqrt(2.0);
        case GroundNorm::linf: return u / 2.0;
    }
    return 0.0;
}

/// Points of a single-dimension diagram. Throws if dimensions are mixed.
inline std::vector<DiagramPoint> diagram_points(const PersistenceDiagram& d) {
    std::vector<DiagramPoint> pts;
    pts.reserve(d.size());
    for (const auto& p : d.pairs) {
        if (p.dim != d.pairs.front().dim) throw StructuralError("diagram distances need a single homological dimension");
        pts.push_back({p.birth, p.death});
    }
    return pts;
}

// ---------------------------------------------------------------------------
// Assignment

namespace detail {

// Shortest-augmenting-path Hungarian method with row/column potentials,
// O(n^3). `cost` is row-major n x n. Returns column assigned to each row.
inline std::vector<int> hungarian(std::span<const double> cost, int n) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<double> minv(n + 1);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[std::size_t(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j) {
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    }
    return row_to_col;
}

}  // namespace detail

/// Exact minimum-cost perfect assignment of a square cost matrix.
inline std::vector<int> solve_assignment(std::span<const double> cost, int n) {
    if (n < 0 || cost.size() != std::size_t(n) * std::size_t(n)) throw StructuralError("cost matrix must be n x n");
    if (n == 0) return {};
    for (double c : cost) {
        if (!std::isfinite(c)) throw ParameterError("assignment costs must be finite");
    }
    return detail::hungarian(cost, n);
}

// ---------------------------------------------------------------------------
// Diagram distances

inline constexpr int kDiagonal = -1;

struct MatchingResult {
    double cost = 0.0;
    // (index into first diagram or kDiagonal, index into second or kDiagonal).
    std::vector<std::pair<int, int>> matching;
};

inline constexpr std::size_t kDefaultWassersteinCap = 512;

/// 1-Wasserstein distance with l_p ground cost, solved exactly as an
/// (n+m) x (n+m) assignment: rows are the n points of `a` followed by m
/// diagonal slots, columns the m points of `b` followed by n diagonal slots.
/// A point may take any diagonal slot at its diagonal distance; slot-slot
/// cells cost 0.
inline MatchingResult wasserstein1(std::span<const DiagramPoint> a, std::span<const DiagramPoint> b, GroundNorm p,
                                   std::size_t cap = kDefaultWassersteinCap) {
    const std::size_t n = a.size(), m = b.size();
    if (n + m > cap) {
        throw ParameterError("diagrams have " + std::to_string(n + m) + " points combined, above the exact-solver cap of " +
                             std::to_string(cap) + "; subsample the diagrams or raise the cap");
    }
    MatchingResult result;
    if (n + m == 0) return result;
    const int N = static_cast<int>(n + m);
    std::vector<double> cost(std::size_t(N) * N, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) cost[i * N + j] = point_distance(a[i], b[j], p);
        const double diag = diagonal_distance(a[i], p);
        for (std::size_t k = 0; k < n; ++k) cost[i * N + m + k] = diag;
    }
    for (std::size_t j = 0; j < m; ++j) {
        const double diag = diagonal_distance(b[j], p);
        for (std::size_t k = 0; k < m; ++k) cost[(n + k) * N + j] = diag;
    }
    const auto assign = solve_assignment(cost, N);
    for (std::size_t i = 0; i < n; ++i) {
        const int j = assign[i];
        if (j < static_cast<int>(m)) {
            result.matching.emplace_back(static_cast<int>(i), j);
            result.cost += point_distance(a[i], b[j], p);
        } else {
            result.matching.emplace_back(static_cast<int>(i), kDiagonal);
            result.cost += diagonal_distance(a[i], p);
        }
    }
    for (std::size_t k = 0; k < m; ++k) {
        const int j = assign[n + k];
        if (j < static_cast<int>(m)) {
            result.matching.emplace_back(kDiagonal, j);
            result.cost += diagonal_distance(b[j], p);
        }
    }
    return result;
}

inline MatchingResult wasserstein1(const PersistenceDiagram& a, const PersistenceDiagram& b, GroundNorm p,
                                   std::size_t cap = kDefaultWassersteinCap) {
    const auto pa = diagram_points(a), pb = diagram_points(b);
    if (!a.empty() && !b.empty() && a.pairs.front().dim != b.pairs.front().dim) {
        throw StructuralError("diagrams of different homological dimensions");
    }
    return wasserstein1(pa, pb, p, cap);
}

/// Recomputes the cost of a matching produced by wasserstein1.
inline double matching_cost(std::span<const DiagramPoint> a, std::span<const DiagramPoint> b,
                            const MatchingResult& matching, GroundNorm p) {
    double total = 0.0;
    for (auto [i, j] : matching.matching) {
        if (i != kDiagonal && j != kDiagonal) {
            total += point_distance(a[i], b[j], p);
        } else if (i != kDiagonal) {
            total += diagonal_distance(a[i], p);
        } else if (j != kDiagonal) {
            total += diagonal_distance(b[j], p);
        }
    }
    return total;
}

namespace detail {

// First point of the birth-sorted `right` with |birth - p.birth| <= r. The
// test uses the same rounded difference as point_distance, so no point at
// distance exactly r falls outside the window.
inline std::span<const DiagramPoint>::iterator window_start(std::span<const DiagramPoint> right, const DiagramPoint& p,
                                                            double r) {
    return std::partition_point(right.begin(), right.end(), [&](const DiagramPoint& q) { return p.birth - q.birth > r; });
}

// Points of `left` that must be matched (diagonal cost above r) can all be
// matched into `right` using edges of l_inf cost <= r. `right` is sorted by
// birth so candidates come from a window of width r.
inline bool cover_required(std::span<const DiagramPoint> left, std::span<const DiagramPoint> right, double r) {
    std::vector<int> required;
    for (int i = 0; i < static_cast<int>(left.size()); ++i) {
        if (diagonal_distance(left[i], GroundNorm::linf) > r) required.push_back(i);
    }
    if (required.empty()) return true;
    if (required.size() > right.size()) return false;

    std::vector<std::vector<int>> adj(required.size());
    for (std::size_t k = 0; k < required.size(); ++k) {
        const auto& p = left[required[k]];
        auto lo = detail::window_start(right, p, r);
        for (auto it = lo; it != right.end() && it->birth - p.birth <= r; ++it) {
            if (point_distance(p, *it, GroundNorm::linf) <= r) adj[k].push_back(static_cast<int>(it - right.begin()));
        }
        if (adj[k].empty()) return false;
    }

    // Kuhn's augmenting paths with a greedy start.
    std::vector<int> owner(right.size(), -1);
    std::vector<int> seen(right.size(), -1);
    std::vector<int> unmatched;
    for (std::size_t k = 0; k < adj.size(); ++k) {
        bool placed = false;
        for (int j : adj[k]) {
            if (owner[j] < 0) {
                owner[j] = static_cast<int>(k);
                placed = true;
                break;
            }
        }
        if (!placed) unmatched.push_back(static_cast<int>(k));
    }
    int stamp = 0;
    std::vector<std::pair<int, std::size_t>> stack;
    for (int start : unmatched) {
        ++stamp;
        // Iterative DFS over alternating paths.
        stack.assign(1, {start, 0});
        std::vector<int> path_cols;
        bool found = false;
        while (!stack.empty() && !found) {
            auto& [k, next] = stack.back();
            if (next == adj[k].size()) {
                stack.pop_back();
                if (!path_cols.empty()) path_cols.pop_back();
                continue;
            }
            const int j = adj[k][next++];
            if (seen[j] == stamp) continue;
            seen[j] = stamp;
            path_cols.push_back(j);
            if (owner[j] < 0) {
                found = true;
                break;
            }
            stack.emplace_back(owner[j], 0);
        }
        if (!found) return false;
        // Flip along the path: stack[i].first takes path_cols[i].
        for (std::size_t i = 0; i < path_cols.size(); ++i) owner[path_cols[i]] = stack[i].first;
    }
    return true;
}

inline bool bottleneck_feasible(std::span<const DiagramPoint> a_sorted, std::span<const DiagramPoint> b_sorted,
                                double r) {
    return cover_required(a_sorted, b_sorted, r) && cover_required(b_sorted, a_sorted, r);
}

}  // namespace detail

/// Exact bottleneck distance (l_inf ground cost, diagonal projections allowed).
///
/// A threshold r is feasible when the augmented bipartite graph (each point
/// may go to its own diagonal projection, projections pair freely) has a
/// perfect matching. That holds exactly when some point-to-point matching
/// with edges <= r covers every point whose diagonal distance exceeds r; by
/// the Mendelsohn-Dulmage theorem this splits into one covering problem per
/// side. The answer is the smallest feasible candidate among the pairwise and
/// diagonal distances, found by binary search.
inline double bottleneck(std::span<const DiagramPoint> a, std::span<const DiagramPoint> b) {
    if (a.empty() && b.empty()) return 0.0;
    auto by_birth = [](const DiagramPoint& x, const DiagramPoint& y) {
        return x.birth < y.birth || (x.birth == y.birth && x.death < y.death);
    };
    std::vector<DiagramPoint> as(a.begin(), a.end()), bs(b.begin(), b.end());
    std::sort(as.begin(), as.end(), by_birth);
    std::sort(bs.begin(), bs.end(), by_birth);

    // Sending everything to the diagonal is always feasible.
    double upper = 0.0;
    std::vector<double> candidates;
    for (const auto& p : as) candidates.push_back(diagonal_distance(p, GroundNorm::linf));
    for (const auto& p : bs) candidates.push_back(diagonal_distance(p, GroundNorm::linf));
    for (double c : candidates) upper = std::max(upper, c);
    const std::span<const DiagramPoint> right(bs);
    for (const auto& p : as) {
        for (auto it = detail::window_start(right, p, upper); it != right.end() && it->birth - p.birth <= upper; ++it) {
            const double c = point_distance(p, *it, GroundNorm::linf);
            if (c <= upper) candidates.push_back(c);
        }
    }
    candidates.push_back(0.0);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // Galloping from the small end keeps the tested graphs sparse.
    std::size_t lo = 0, hi = candidates.size() - 1;  // candidates[hi] is feasible
    for (std::size_t step = 1; lo + step - 1 < hi; step *= 2) {
        const std::size_t probe = lo + step - 1;
        if (detail::bottleneck_feasible(as, bs, candidates[probe])) {
            hi = probe;
            break;
        }
        lo = probe + 1;
    }
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (detail::bottleneck_feasible(as, bs, candidates[mid])) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return candidates[hi];
}

inline double bottleneck(const PersistenceDiagram& a, const PersistenceDiagram& b) {
    if (!a.empty() && !b.empty() && a.pairs.front().dim != b.pairs.front().dim) {
        throw StructuralError("diagrams of different homological dimensions");
    }
    const auto pa = diagram_points(a), pb = diagram_points(b);
    return bottleneck(pa, pb);
}

// ---------------------------------------------------------------------------
// Point clouds

using CloudPoint = std::vector<double>;

struct CloudDistance {
    double value = 0.0;
    std::size_t size_a = 0;
    std::size_t size_b = 0;
    std::size_t n_used = 0;       // points per side entering the assignment
    bool reduced = false;         // requested subsample exceeded a cloud size
    std::uint64_t seed = 0;
};

/// Empirical Wasserstein-2 distance between two point clouds. Both clouds
/// are subsampled without replacement (seeded) to the same count
/// min(n_sub, |a|, |b|); the optimal assignment on squared Euclidean costs
/// gives sqrt(mean matched cost).
inline CloudDistance wasserstein2_clouds(std::span<const CloudPoint> a, std::span<const CloudPoint> b, std::size_t n_sub,
                                         std::uint64_t seed) {
    if (a.empty() || b.empty()) throw InputError("W2 needs two nonempty clouds");
    if (n_sub == 0) throw ParameterError("subsample size must be positive");
    const std::size_t dim = a.front().size();
    for (const auto* cloud : {&a, &b}) {
        for (const auto& x : *cloud) {
            if (x.size() != dim) throw StructuralError("cloud points have inconsistent dimension");
        }
    }
    CloudDistance out;
    out.size_a = a.size();
    out.size_b = b.size();
    out.seed = seed;
    out.n_used = std::min({n_sub, a.size(), b.size()});
    out.reduced = out.n_used < n_sub;

    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t size) {
        std::vector<std::size_t> idx(size);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(out.n_used);
        return idx;
    };
    const auto ia = pick(a.size());
    const auto ib = pick(b.size());
    const int n = static_cast<int>(out.n_used);
    std::vector<double> cost(std::size_t(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            const auto& x = a[ia[i]];
            const auto& y = b[ib[j]];
            for (std::size_t k = 0; k < dim; ++k) acc += (x[k] - y[k]) * (x[k] - y[k]);
            cost[std::size_t(i) * n + j] = acc;
        }
    }
    const auto assign = solve_assignment(cost, n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost[std::size_t(i) * n + assign[i]];
    out.value = std::sqrt(total / n);
    return out;
}

}  // namespace wph
