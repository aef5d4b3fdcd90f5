#pragma once

#include <algorithm>
#include <array>
#include <iterator>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "wph/error.hpp"
#include "wph/image.hpp"

namespace wph {

struct PersistencePair {
    double birth = 0.0;
    double death = 0.0;
    int dim = 0;
    // Death of an essential class replaced by the filtration maximum 1.0.
    bool essential_capped = false;

    double lifetime() const noexcept { return death - birth; }

    friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

struct PersistenceDiagram {
    std::vector<PersistencePair> pairs;

    bool empty() const noexcept { return pairs.empty(); }
    std::size_t size() const noexcept { return pairs.size(); }

    std::size_t count(int dim) const noexcept {
        return static_cast<std::size_t>(
            std::count_if(pairs.begin(), pairs.end(), [dim](const auto& p) { return p.dim == dim; }));
    }

    PersistenceDiagram in_dim(int dim) const {
        PersistenceDiagram out;
        for (const auto& p : pairs) {
            if (p.dim == dim) out.pairs.push_back(p);
        }
        return out;
    }

    friend bool operator==(const PersistenceDiagram&, const PersistenceDiagram&) = default;
};

enum class H1Order { top, lowest };

inline std::string to_string(H1Order order) { return order == H1Order::top ? "top" : "lowest"; }

inline H1Order parse_h1_order(const std::string& s) {
    if (s == "top") return H1Order::top;
    if (s == "lowest") return H1Order::lowest;
    throw ConfigError("unknown h1 order '" + s + "' (expected top or lowest)");
}

/// Cell layout of the V-construction on an m x n pixel grid: pixels are
/// vertices, 4-neighbour pairs are edges, 2x2 blocks are squares. Every cell
/// takes the maximum of its vertex values.
class CubicalGrid {
public:
    explicit CubicalGrid(const GrayImage& img) : img_(img), rows_(img.height()), cols_(img.width()) {
        if (rows_ < 2 || cols_ < 2) {
            throw InputError("persistence needs an image of at least 2x2 pixels, got " + std::to_string(rows_) + "x" +
                             std::to_string(cols_));
        }
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }

    std::size_t vertex_count() const noexcept { return std::size_t(rows_) * cols_; }
    std::size_t horizontal_edge_count() const noexcept { return std::size_t(rows_) * (cols_ - 1); }
    std::size_t edge_count() const noexcept { return horizontal_edge_count() + std::size_t(rows_ - 1) * cols_; }
    std::size_t square_count() const noexcept { return std::size_t(rows_ - 1) * (cols_ - 1); }

    double vertex_value(std::size_t v) const noexcept { return img_.values()[v]; }

    // Horizontal edges first (r, c)-(r, c+1), then vertical (r, c)-(r+1, c).
    std::pair<std::uint32_t, std::uint32_t> edge_vertices(std::size_t e) const noexcept {
        const std::size_t h = horizontal_edge_count();
        if (e < h) {
            const std::size_t r = e / (cols_ - 1), c = e % (cols_ - 1);
            const auto v = static_cast<std::uint32_t>(r * cols_ + c);
            return {v, v + 1};
        }
        const std::size_t k = e - h;
        const std::size_t r = k / cols_, c = k % cols_;
        const auto v = static_cast<std::uint32_t>(r * cols_ + c);
        return {v, v + static_cast<std::uint32_t>(cols_)};
    }

    double edge_value(std::size_t e) const noexcept {
        auto [a, b] = edge_vertices(e);
        return std::max(vertex_value(a), vertex_value(b));
    }

    // Top, bottom, left, right edges of the square with top-left pixel (r, c).
    std::array<std::uint32_t, 4> square_edges(std::size_t s) const noexcept {
        const std::size_t r = s / (cols_ - 1), c = s % (cols_ - 1);
        const std::size_t h = horizontal_edge_count();
        return {static_cast<std::uint32_t>(r * (cols_ - 1) + c), static_cast<std::uint32_t>((r + 1) * (cols_ - 1) + c),
                static_cast<std::uint32_t>(h + r * cols_ + c), static_cast<std::uint32_t>(h + r * cols_ + c + 1)};
    }

    double square_value(std::size_t s) const noexcept {
        const std::size_t r = s / (cols_ - 1), c = s % (cols_ - 1);
        const std::size_t v = r * cols_ + c;
        return std::max(std::max(vertex_value(v), vertex_value(v + 1)),
                        std::max(vertex_value(v + cols_), vertex_value(v + cols_ + 1)));
    }

private:
    const GrayImage& img_;
    int rows_;
    int cols_;
};

namespace detail {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }

    std::uint32_t find(std::uint32_t x) noexcept {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // Caller decides which root survives.
    void attach(std::uint32_t child_root, std::uint32_t parent_root) noexcept { parent_[child_root] = parent_root; }

private:
    std::vector<std::uint32_t> parent_;
};

// Sorted cell order within one dimension: (value, index). Across dimensions,
// a face always precedes its cofaces because values are maxima over vertices
// and lower dimension wins ties.
template <typename ValueFn>
std::vector<std::uint32_t> filtration_order(std::size_t count, ValueFn value) {
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) values[i] = value(i);
    std::vector<std::uint32_t> order(count);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return values[a] < values[b] || (values[a] == values[b] && a < b);
    });
    return order;
}

inline bool vertex_older(const CubicalGrid& grid, std::uint32_t a, std::uint32_t b) noexcept {
    const double va = grid.vertex_value(a), vb = grid.vertex_value(b);
    return va < vb || (va == vb && a < b);
}

inline void add_h0_pairs(const CubicalGrid& grid, const std::vector<std::uint32_t>& edge_order,
                         PersistenceDiagram& out) {
    UnionFind uf(grid.vertex_count());
    for (std::uint32_t e : edge_order) {
        auto [a, b] = grid.edge_vertices(e);
        std::uint32_t ra = uf.find(a), rb = uf.find(b);
        if (ra == rb) continue;
        // Roots always hold the oldest vertex of their component.
        if (vertex_older(grid, rb, ra)) std::swap(ra, rb);
        const double birth = grid.vertex_value(rb);
        const double death = grid.edge_value(e);
        if (birth < death) out.pairs.push_back({birth, death, 0, false});
        uf.attach(rb, ra);
    }
    std::uint32_t oldest = 0;
    for (std::uint32_t v = 1; v < grid.vertex_count(); ++v) {
        if (vertex_older(grid, v, oldest)) oldest = v;
    }
    const double birth = grid.vertex_value(oldest);
    if (birth < 1.0) out.pairs.push_back({birth, 1.0, 0, true});
}

// Column reduction over Z2 of the square boundary matrix. Columns hold edge
// positions in the filtration order, sorted ascending; the pivot is the last.
inline void add_h1_pairs(const CubicalGrid& grid, const std::vector<std::uint32_t>& edge_order,
                         PersistenceDiagram& out) {
    const std::size_t n_edges = grid.edge_count();
    std::vector<std::uint32_t> edge_rank(n_edges);
    for (std::uint32_t pos = 0; pos < n_edges; ++pos) edge_rank[edge_order[pos]] = pos;

    const auto square_order = filtration_order(grid.square_count(), [&](std::size_t s) { return grid.square_value(s); });

    constexpr std::uint32_t kNone = ~0u;
    std::vector<std::uint32_t> pivot_owner(n_edges, kNone);
    std::vector<std::vector<std::uint32_t>> reduced(grid.square_count());
    std::vector<std::uint32_t> scratch;

    for (std::uint32_t s : square_order) {
        auto edges = grid.square_edges(s);
        std::vector<std::uint32_t> column;
        column.reserve(4);
        for (auto e : edges) column.push_back(edge_rank[e]);
        std::sort(column.begin(), column.end());

        while (!column.empty()) {
            const std::uint32_t owner = pivot_owner[column.back()];
            if (owner == kNone) break;
            const auto& other = reduced[owner];
            scratch.clear();
            std::set_symmetric_difference(column.begin(), column.end(), other.begin(), other.end(),
                                          std::back_inserter(scratch));
            column.swap(scratch);
        }
        if (column.empty()) continue;

        const std::uint32_t pivot = column.back();
        pivot_owner[pivot] = s;
        const double birth = grid.edge_value(edge_order[pivot]);
        const double death = grid.square_value(s);
        if (birth < death) out.pairs.push_back({birth, death, 1, false});
        reduced[s] = std::move(column);
    }
}

}  // namespace detail

/// Sublevel-set cubical persistence (Z2, dimensions 0 and 1) of an image with
/// values in [0, 1].
///
/// H0 pairs come from union-find under the elder rule; the single essential
/// class gets death 1.0 and `essential_capped = true`. H1 pairs come from
/// reducing the square boundary matrix. Zero-lifetime pairs are dropped.
/// Ties are broken by cell index, so the output is a deterministic function
/// of the pixels. Pair order: H0 in merge order, capped class, then H1 in
/// square order.
inline PersistenceDiagram compute_diagram(const GrayImage& img) {
    CubicalGrid grid(img);
    for (double v : img.values()) {
        if (!(v >= 0.0 && v <= 1.0)) throw InputError("persistence input must be normalized to [0, 1]");
    }
    const auto edge_order = detail::filtration_order(grid.edge_count(), [&](std::size_t e) { return grid.edge_value(e); });
    PersistenceDiagram out;
    detail::add_h0_pairs(grid, edge_order, out);
    detail::add_h1_pairs(grid, edge_order, out);
    return out;
}

/// Drops the longest H0 bar (the capped essential class wins ties). H1 is untouched.
inline PersistenceDiagram filter_h0(const PersistenceDiagram& diag) {
    auto dominant = diag.pairs.end();
    for (auto it = diag.pairs.begin(); it != diag.pairs.end(); ++it) {
        if (it->dim != 0) continue;
        if (dominant == diag.pairs.end() || it->lifetime() > dominant->lifetime() ||
            (it->lifetime() == dominant->lifetime() && it->essential_capped && !dominant->essential_capped)) {
            dominant = it;
        }
    }
    PersistenceDiagram out;
    out.pairs.reserve(diag.pairs.size());
    for (auto it = diag.pairs.begin(); it != diag.pairs.end(); ++it) {
        if (it != dominant) out.pairs.push_back(*it);
    }
    return out;
}

/// ceil(fraction * n), robust to products such as 0.1 * 30 landing one ulp above an integer.
inline std::size_t retained_count(double fraction, std::size_t n) {
    if (n == 0) return 0;
    const double x = fraction * static_cast<double>(n);
    double k = std::ceil(x);
    if (k - x > 1.0 - 1e-9 * std::max(1.0, x)) k -= 1.0;
    return std::clamp(static_cast<std::size_t>(k), std::size_t{1}, n);
}

/// Keeps ceil(h1_pct * |H1|) H1 bars: the longest ones for `H1Order::top`,
/// the shortest for `H1Order::lowest`. Equal lifetimes are ordered by
/// (birth, death). Retained H1 bars are emitted in that sorted order after H0.
inline PersistenceDiagram truncate_h1(const PersistenceDiagram& diag, double h1_pct, H1Order order = H1Order::top) {
    if (!(h1_pct > 0.0 && h1_pct <= 1.0)) throw ParameterError("h1 retention must lie in (0, 1]");
    PersistenceDiagram out;
    std::vector<PersistencePair> h1;
    for (const auto& p : diag.pairs) {
        if (p.dim == 1) {
            h1.push_back(p);
        } else {
            out.pairs.push_back(p);
        }
    }
    std::stable_sort(h1.begin(), h1.end(), [order](const PersistencePair& a, const PersistencePair& b) {
        if (a.lifetime() != b.lifetime()) {
            return order == H1Order::top ? a.lifetime() > b.lifetime() : a.lifetime() < b.lifetime();
        }
        return std::tie(a.birth, a.death) < std::tie(b.birth, b.death);
    });
    h1.resize(retained_count(h1_pct, h1.size()));
    out.pairs.insert(out.pairs.end(), h1.begin(), h1.end());
    return out;
}

}  // namespace wph
