#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wph/error.hpp"

namespace wph {

/// Dense row-major 2-D grid.
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    Grid(int height, int width, T fill = T{})
        : height_(height), width_(width), data_(checked_size(height, width), fill) {}
    Grid(int height, int width, std::vector<T> data) : height_(height), width_(width), data_(std::move(data)) {
        if (data_.size() != checked_size(height, width)) {
            throw StructuralError("grid data size does not match height*width");
        }
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int row, int col) noexcept { return data_[index(row, col)]; }
    const T& operator()(int row, int col) const noexcept { return data_[index(row, col)]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    bool same_shape(const Grid& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }
    static std::size_t checked_size(int height, int width) {
        if (height < 0 || width < 0) throw StructuralError("grid dimensions must be non-negative");
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

/// Grayscale intensities; after min_max_normalize every value lies in [0, 1].
using GrayImage = Grid<double>;
/// 1 = foreground, 0 = background.
using BinaryMask = Grid<std::uint8_t>;

inline bool is_power_of_two(int v) noexcept { return v > 0 && (v & (v - 1)) == 0; }

inline std::pair<double, double> value_range(std::span<const double> values) {
    if (values.empty()) throw InputError("empty grid has no value range");
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return {*lo, *hi};
}

struct NormalizeResult {
    GrayImage image;
    bool was_constant = false;
    double source_min = 0.0;
    double source_max = 0.0;
};

/// Affine map of the pixel range onto [0, 1]. A constant image maps to all zeros.
inline NormalizeResult min_max_normalize_ex(const GrayImage& img) {
    if (img.empty()) throw InputError("cannot normalize an image without pixels");
    auto [lo, hi] = value_range(img.values());
    NormalizeResult out{GrayImage(img.height(), img.width(), 0.0), lo == hi, lo, hi};
    if (out.was_constant) return out;
    const double span = hi - lo;
    auto src = img.values();
    auto dst = out.image.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = std::clamp((src[i] - lo) / span, 0.0, 1.0);
    }
    return out;
}

inline GrayImage min_max_normalize(const GrayImage& img) { return min_max_normalize_ex(img).image; }

namespace detail {

inline int otsu_bin(double v) noexcept {
    return std::clamp(static_cast<int>(std::floor(v * 256.0)), 0, 255);
}

}  // namespace detail

/// Otsu threshold over a 256-bin histogram on [0, 1].
///
/// Returns the lower edge of the foreground class, i.e. pixels with
/// `v >= threshold` are foreground. Returns 0 when no split is possible
/// (constant image), so that every pixel is foreground. Among equal
/// inter-class variances the lowest split wins.
inline double otsu_threshold(const GrayImage& img) {
    if (img.empty()) throw InputError("otsu on an empty image");
    std::array<double, 256> hist{};
    for (double v : img.values()) hist[detail::otsu_bin(v)] += 1.0;
    const double total = static_cast<double>(img.size());

    double sum_all = 0.0;
    for (int k = 0; k < 256; ++k) sum_all += hist[k] * (k + 0.5) / 256.0;

    double best = 0.0;
    int best_k = -1;
    double w0 = 0.0, sum0 = 0.0;
    for (int k = 0; k < 255; ++k) {
        w0 += hist[k];
        sum0 += hist[k] * (k + 0.5) / 256.0;
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_all - sum0) / w1;
        const double between = (w0 / total) * (w1 / total) * (mu0 - mu1) * (mu0 - mu1);
        if (between > best) {
            best = between;
            best_k = k;
        }
    }
    if (best_k < 0) return 0.0;
    return (best_k + 1) / 256.0;
}

inline BinaryMask otsu_mask(const GrayImage& img) {
    const double threshold = otsu_threshold(img);
    BinaryMask mask(img.height(), img.width(), 0);
    auto src = img.values();
    auto dst = mask.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = (threshold == 0.0 || detail::otsu_bin(src[i]) >= static_cast<int>(threshold * 256.0)) ? 1 : 0;
    }
    return mask;
}

/// Zeroes every pixel outside the mask.
inline GrayImage apply_mask(const GrayImage& img, const BinaryMask& mask) {
    if (img.height() != mask.height() || img.width() != mask.width()) {
        throw StructuralError("mask shape does not match image shape");
    }
    GrayImage out = img;
    auto dst = out.values();
    auto m = mask.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (!m[i]) dst[i] = 0.0;
    }
    return out;
}

namespace detail {

struct AreaTap {
    int source;
    double weight;
};

// Footprint of output cell i is [i*in/out, (i+1)*in/out) in source units;
// each tap weight is the overlap length divided by the footprint length.
inline std::vector<std::vector<AreaTap>> area_taps(int in, int out) {
    std::vector<std::vector<AreaTap>> taps(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
        const double lo = i * scale;
        const double hi = (i + 1) * scale;
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(in - 1, static_cast<int>(std::ceil(hi)) - 1);
        for (int k = first; k <= last; ++k) {
            const double overlap = std::min(hi, k + 1.0) - std::max(lo, static_cast<double>(k));
            if (overlap > 0.0) taps[i].push_back({k, overlap / scale});
        }
    }
    return taps;
}

}  // namespace detail

/// Area-averaging (box) resample to an arbitrary size, up or down. Output
/// values are clamped to the input range so the result never leaves the
/// convex hull of the input values.
inline GrayImage area_resize(const GrayImage& img, int out_height, int out_width) {
    if (out_height < 1 || out_width < 1) throw ParameterError("resize target must be at least 1x1");
    if (img.empty()) throw InputError("cannot resize an empty image");
    if (out_height == img.height() && out_width == img.width()) return img;
    auto [lo, hi] = value_range(img.values());

    const auto col_taps = detail::area_taps(img.width(), out_width);
    GrayImage rows(img.height(), out_width);
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < out_width; ++c) {
            double acc = 0.0;
            for (const auto& t : col_taps[c]) acc += t.weight * img(r, t.source);
            rows(r, c) = acc;
        }
    }
    const auto row_taps = detail::area_taps(img.height(), out_height);
    GrayImage out(out_height, out_width);
    for (int r = 0; r < out_height; ++r) {
        for (int c = 0; c < out_width; ++c) {
            double acc = 0.0;
            for (const auto& t : row_taps[r]) acc += t.weight * rows(t.source, c);
            out(r, c) = std::clamp(acc, lo, hi);
        }
    }
    return out;
}

namespace detail {

inline std::pair<int, int> scaled_dims(int height, int width, int longer_target) {
    const int longer = std::max(height, width);
    const double scale = static_cast<double>(longer_target) / longer;
    auto scale_side = [&](int side) {
        if (side == longer) return longer_target;
        return std::clamp(static_cast<int>(std::lround(side * scale)), std::min(2, longer_target), longer_target);
    };
    return {scale_side(height), scale_side(width)};
}

}  // namespace detail

/// Aspect-preserving box downsample so the longer side is at most `max_side`.
/// Never upsamples.
inline GrayImage resize_max_side(const GrayImage& img, int max_side) {
    if (max_side < 2) throw ParameterError("max_side must be at least 2");
    if (std::max(img.height(), img.width()) <= max_side) return img;
    auto [h, w] = detail::scaled_dims(img.height(), img.width(), max_side);
    return area_resize(img, h, w);
}

/// Places the image in the top-left corner of a zero-filled side x side canvas.
inline GrayImage pad_to_square(const GrayImage& img, int side) {
    if (!is_power_of_two(side)) throw ConfigError("square side must be a power of two, got " + std::to_string(side));
    if (img.height() > side || img.width() > side) {
        throw ConfigError("image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                          " does not fit in a " + std::to_string(side) + " square");
    }
    if (img.height() == side && img.width() == side) return img;
    GrayImage out(side, side, 0.0);
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) out(r, c) = img(r, c);
    }
    return out;
}

struct SquareFit {
    GrayImage square;
    int content_height = 0;
    int content_width = 0;
};

/// Aspect-preserving area resample so the longer side equals `side`, then zero padding.
inline SquareFit fit_to_square(const GrayImage& img, int side) {
    if (!is_power_of_two(side)) throw ConfigError("square side must be a power of two, got " + std::to_string(side));
    auto [h, w] = detail::scaled_dims(img.height(), img.width(), side);
    GrayImage content = area_resize(img, h, w);
    return {pad_to_square(content, side), h, w};
}

inline Grid<double> crop(const Grid<double>& g, int height, int width) {
    if (height > g.height() || width > g.width() || height < 1 || width < 1) {
        throw StructuralError("crop window exceeds grid");
    }
    Grid<double> out(height, width);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) out(r, c) = g(r, c);
    }
    return out;
}

/// Bilinear resample with pixel-centre alignment and edge clamping.
inline Grid<double> bilinear_resize(const Grid<double>& g, int out_height, int out_width) {
    if (g.empty()) throw InputError("cannot resize an empty grid");
    if (out_height == g.height() && out_width == g.width()) return g;
    struct Tap {
        int i0, i1;
        double t;
    };
    auto taps = [](int in, int out) {
        std::vector<Tap> result(static_cast<std::size_t>(out));
        const double scale = static_cast<double>(in) / out;
        for (int i = 0; i < out; ++i) {
            const double src = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
            const int i0 = static_cast<int>(std::floor(src));
            const int i1 = std::min(i0 + 1, in - 1);
            result[i] = {i0, i1, src - i0};
        }
        return result;
    };
    const auto rt = taps(g.height(), out_height);
    const auto ct = taps(g.width(), out_width);
    Grid<double> out(out_height, out_width);
    for (int r = 0; r < out_height; ++r) {
        const auto& a = rt[r];
        for (int c = 0; c < out_width; ++c) {
            const auto& b = ct[c];
            const double top = (1.0 - b.t) * g(a.i0, b.i0) + b.t * g(a.i0, b.i1);
            const double bottom = (1.0 - b.t) * g(a.i1, b.i0) + b.t * g(a.i1, b.i1);
            out(r, c) = (1.0 - a.t) * top + a.t * bottom;
        }
    }
    return out;
}

}  // namespace wph
