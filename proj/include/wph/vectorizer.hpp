#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wph/error.hpp"
#include "wph/image.hpp"
#include "wph/persistence.hpp"
#include "wph/wavelet.hpp"

namespace wph {

inline constexpr std::size_t kChannelCount = 8;

/// Gating and diagram-filtering parameters.
struct GatingParams {
    double epsilon = 1e-6;
    double h1_pct = 0.5;
    WaveletFamily family = WaveletFamily::haar;
    int depth = 2;
    H1Order h1_order = H1Order::top;

    void validate() const {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be a positive finite number");
        if (!(h1_pct > 0.0 && h1_pct <= 1.0)) throw ConfigError("h1 retention must lie in (0, 1]");
        if (depth < 1 || depth > 3) throw ConfigError("wavelet depth must be 1, 2 or 3");
    }
};

/// Where the diagrams feeding the wavelet channels come from: the
/// downsampled image (default) or each tau-mapped subband itself.
enum class DiagramSource { image, wavelet };

inline std::string to_string(DiagramSource s) { return s == DiagramSource::image ? "image" : "wavelet"; }

inline DiagramSource parse_diagram_source(const std::string& s) {
    if (s == "image") return DiagramSource::image;
    if (s == "wavelet") return DiagramSource::wavelet;
    throw ConfigError("unknown diagram source '" + s + "' (expected image or wavelet)");
}

struct ChannelParams {
    GatingParams gating;
    int max_side = 96;  // persistence grid
    int side = 256;     // wavelet grid S
    bool apply_mask = true;
    DiagramSource diagram_source = DiagramSource::image;

    void validate() const {
        gating.validate();
        if (max_side < 8) throw ConfigError("persistence max side must be at least 8");
        validate_wavelet_geometry(side, gating.family, gating.depth);
    }
};

// ---------------------------------------------------------------------------
// Gating function

namespace detail {

inline double gate_unchecked(double psi, double b, double d, double eps) noexcept {
    if (!(b <= psi && psi < d)) return 0.0;
    return (psi - b) * (d - psi) / ((d - b) + eps);
}

}  // namespace detail

/// Quadratic bump supported on [b, d), scaled by 1/(d - b + eps). Zero on b == d.
inline double gate(double psi, double b, double d, double epsilon) {
    if (!(epsilon > 0.0)) throw ParameterError("gate epsilon must be positive");
    return detail::gate_unchecked(psi, b, d, epsilon);
}

struct GateGradient {
    double d_birth = 0.0;
    double d_death = 0.0;
};

/// Exact partial derivatives inside the open strip b < psi < d:
///   dw/db = -(d-psi)(d-psi+eps) / (d-b+eps)^2
///   dw/dd =  (psi-b)(psi-b+eps) / (d-b+eps)^2
/// Both are bounded by 1 in magnitude. Zero outside the support.
inline GateGradient gate_gradient(double psi, double b, double d, double epsilon) {
    if (!(epsilon > 0.0)) throw ParameterError("gate epsilon must be positive");
    if (!(b < psi && psi < d)) return {};
    const double denom = (d - b + epsilon) * (d - b + epsilon);
    return {-(d - psi) * (d - psi + epsilon) / denom, (psi - b) * (psi - b + epsilon) / denom};
}

/// Lipschitz constant of the gate w.r.t. (b, d) under the l1, l2, linf ground norms.
inline double gate_lipschitz(double p) {
    if (p == 1.0) return 1.0;
    if (p == 2.0) return std::sqrt(2.0);
    if (std::isinf(p)) return 2.0;
    throw ParameterError("Lipschitz constant is only tabulated for p in {1, 2, inf}");
}

// ---------------------------------------------------------------------------
// Maps

/// Pointwise sum of the gate over every pair, evaluated at each grid value.
/// The empty diagram gives the zero grid.
inline Grid<double> subband_map(const Grid<double>& psi_tilde, std::span<const PersistencePair> pairs, double epsilon) {
    if (!(epsilon > 0.0)) throw ParameterError("gate epsilon must be positive");
    Grid<double> out(psi_tilde.height(), psi_tilde.width(), 0.0);
    auto src = psi_tilde.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        double acc = 0.0;
        for (const auto& p : pairs) acc += detail::gate_unchecked(src[i], p.birth, p.death, epsilon);
        dst[i] = acc;
    }
    return out;
}

inline Grid<double> subband_map(const Grid<double>& psi_tilde, const PersistenceDiagram& diag, double epsilon) {
    return subband_map(psi_tilde, std::span<const PersistencePair>(diag.pairs), epsilon);
}

/// Same values as subband_map, evaluated once per distinct intensity. Meant
/// for full-resolution images where the number of distinct values is far
/// below the pixel count.
inline Grid<double> intensity_map(const Grid<double>& image, std::span<const PersistencePair> pairs, double epsilon) {
    if (!(epsilon > 0.0)) throw ParameterError("gate epsilon must be positive");
    std::vector<double> levels(image.values().begin(), image.values().end());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    std::vector<double> level_value(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k) {
        double acc = 0.0;
        for (const auto& p : pairs) acc += detail::gate_unchecked(levels[k], p.birth, p.death, epsilon);
        level_value[k] = acc;
    }
    Grid<double> out(image.height(), image.width());
    auto src = image.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const auto k = static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), src[i]) - levels.begin());
        dst[i] = level_value[k];
    }
    return out;
}

struct RescaleResult {
    Grid<double> grid;
    double min = 0.0;
    double max = 0.0;
};

/// Min-max rescale to [0, 1]; a constant grid maps to zeros.
inline RescaleResult rescale_unit(const Grid<double>& g) {
    auto [lo, hi] = value_range(g.values());
    RescaleResult out{Grid<double>(g.height(), g.width(), 0.0), lo, hi};
    if (hi > lo) {
        auto src = g.values();
        auto dst = out.grid.values();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::clamp((src[i] - lo) / (hi - lo), 0.0, 1.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Channel stack

/// Everything about an image that does not depend on wavelet family, depth,
/// H1 retention or epsilon. Reusable across an ablation grid.
struct PreparedImage {
    GrayImage image;              // normalized input, H x W
    GrayImage masked;             // after the optional Otsu mask
    GrayImage persistence_grid;   // masked, downsampled to max_side
    PersistenceDiagram diagram;   // unfiltered diagram of persistence_grid
    SquareFit wavelet_input;      // masked, resampled to S and zero padded
    int max_side = 0;
    int side = 0;
    bool mask_applied = false;
};

inline PreparedImage prepare_image(const GrayImage& normalized, const ChannelParams& params) {
    if (normalized.height() < 2 || normalized.width() < 2) throw InputError("images must be at least 2x2");
    if (!is_power_of_two(params.side)) throw ConfigError("wavelet side must be a power of two");
    PreparedImage prep;
    prep.image = normalized;
    prep.masked = params.apply_mask ? apply_mask(normalized, otsu_mask(normalized)) : normalized;
    prep.persistence_grid = resize_max_side(prep.masked, params.max_side);
    prep.diagram = compute_diagram(prep.persistence_grid);
    prep.wavelet_input = fit_to_square(prep.masked, params.side);
    prep.max_side = params.max_side;
    prep.side = params.side;
    prep.mask_applied = params.apply_mask;
    return prep;
}

struct ChannelStack {
    int height = 0;
    int width = 0;
    std::vector<Grid<double>> channels;  // kChannelCount grids, H x W, values in [0, 1]
    std::vector<std::string> names;
    // Min / max of each map before rescaling (over the region that is upsampled).
    std::vector<std::pair<double, double>> rescale;
    // Maps before rescaling at native resolution: full subband grids for
    // channels 0..5, the image grid for channels 6..7.
    std::vector<Grid<double>> raw;
    ChannelParams params;
    std::string source_hash;
};

inline std::vector<std::string> channel_names(int depth) {
    const std::string j = std::to_string(depth);
    return {"H0_LH" + j, "H0_HL" + j, "H0_HH" + j, "H1_LH" + j, "H1_HL" + j, "H1_HH" + j, "H0_image", "H1_image"};
}

struct FilteredDiagrams {
    PersistenceDiagram h0;
    PersistenceDiagram h1;
};

inline FilteredDiagrams filter_diagram(const PersistenceDiagram& raw, const GatingParams& gating) {
    return {filter_h0(raw).in_dim(0), truncate_h1(raw, gating.h1_pct, gating.h1_order).in_dim(1)};
}

/// Builds the eight topological channels:
///   0-2  gate sums over tau(LH_J), tau(HL_J), tau(HH_J) with the filtered H0 diagram
///   3-5  the same subbands with the truncated H1 diagram
///   6-7  gate sums over the masked image intensities with H0 and H1
/// Each map is min-max rescaled to [0, 1]; wavelet maps are cropped to the
/// content region of the padded square and bilinearly upsampled to H x W.
inline ChannelStack build_channel_stack(const PreparedImage& prep, const ChannelParams& params) {
    params.validate();
    if (prep.max_side != params.max_side || prep.side != params.side || prep.mask_applied != params.apply_mask) {
        throw StructuralError("prepared image was built with different geometry parameters");
    }
    const auto& g = params.gating;
    const int H = prep.image.height(), W = prep.image.width();

    const SubbandPyramid pyr = dwt2(prep.wavelet_input.square, g.family, g.depth);
    const std::array<const Grid<double>*, 3> bands = {&pyr.band(Band::lh, g.depth), &pyr.band(Band::hl, g.depth),
                                                      &pyr.band(Band::hh, g.depth)};
    const FilteredDiagrams image_diagrams = filter_diagram(prep.diagram, g);

    ChannelStack stack;
    stack.height = H;
    stack.width = W;
    stack.names = channel_names(g.depth);
    stack.params = params;
    stack.raw.resize(kChannelCount);

    for (std::size_t k = 0; k < bands.size(); ++k) {
        const Grid<double> psi = tau_map(*bands[k]);
        FilteredDiagrams diagrams = image_diagrams;
        if (params.diagram_source == DiagramSource::wavelet) diagrams = filter_diagram(compute_diagram(psi), g);
        stack.raw[k] = subband_map(psi, diagrams.h0, g.epsilon);
        stack.raw[k + 3] = subband_map(psi, diagrams.h1, g.epsilon);
    }
    stack.raw[6] = intensity_map(prep.masked, image_diagrams.h0.pairs, g.epsilon);
    stack.raw[7] = intensity_map(prep.masked, image_diagrams.h1.pairs, g.epsilon);

    const int scale = 1 << g.depth;
    const int crop_h = std::max(1, (prep.wavelet_input.content_height + scale - 1) / scale);
    const int crop_w = std::max(1, (prep.wavelet_input.content_width + scale - 1) / scale);
    for (std::size_t k = 0; k < kChannelCount; ++k) {
        const bool wavelet_channel = k < 6;
        const Grid<double> region = wavelet_channel ? crop(stack.raw[k], crop_h, crop_w) : stack.raw[k];
        RescaleResult rescaled = rescale_unit(region);
        Grid<double> channel = wavelet_channel ? bilinear_resize(rescaled.grid, H, W) : std::move(rescaled.grid);
        for (double& v : channel.values()) v = std::clamp(v, 0.0, 1.0);
        stack.channels.push_back(std::move(channel));
        stack.rescale.emplace_back(rescaled.min, rescaled.max);
    }
    return stack;
}

inline ChannelStack build_channel_stack(const GrayImage& normalized, const ChannelParams& params) {
    params.validate();
    return build_channel_stack(prepare_image(normalized, params), params);
}

/// C x H x W tensor, row-major per channel.
struct ChannelTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    std::span<const double> channel(int c) const {
        const std::size_t n = std::size_t(height) * width;
        return std::span<const double>(data).subspan(std::size_t(c) * n, n);
    }
};

inline ChannelTensor stack_tensor(const ChannelStack& stack) {
    ChannelTensor t{static_cast<int>(stack.channels.size()), stack.height, stack.width, {}};
    t.data.reserve(std::size_t(t.channels) * t.height * t.width);
    for (const auto& ch : stack.channels) t.data.insert(t.data.end(), ch.values().begin(), ch.values().end());
    return t;
}

/// [image | stack]: channel 0 is the image itself, 1..8 the stack in order.
inline ChannelTensor concat_input(const GrayImage& img, const ChannelStack& stack) {
    if (img.height() != stack.height || img.width() != stack.width) {
        throw StructuralError("image and channel stack shapes differ");
    }
    for (const auto& ch : stack.channels) {
        if (ch.height() != stack.height || ch.width() != stack.width) throw StructuralError("channel shape mismatch");
    }
    ChannelTensor t{static_cast<int>(stack.channels.size()) + 1, img.height(), img.width(), {}};
    t.data.reserve(std::size_t(t.channels) * t.height * t.width);
    t.data.insert(t.data.end(), img.values().begin(), img.values().end());
    for (const auto& ch : stack.channels) t.data.insert(t.data.end(), ch.values().begin(), ch.values().end());
    return t;
}

}  // namespace wph
