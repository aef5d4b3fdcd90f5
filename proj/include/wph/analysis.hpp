#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wph/error.hpp"
#include "wph/metrics.hpp"
#include "wph/vectorizer.hpp"

namespace wph {

using Embedding = std::array<double, kChannelCount>;

/// Per-channel spatial mean of a channel-major C x H x W buffer (C = 8),
/// accumulated in double in storage order.
template <typename T>
Embedding pool_embedding(std::span<const T> data, int channels, int height, int width) {
    if (channels != static_cast<int>(kChannelCount)) throw StructuralError("embedding pooling needs exactly 8 channels");
    if (height < 1 || width < 1) throw StructuralError("empty channel");
    const std::size_t plane = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    if (data.size() != plane * kChannelCount) throw StructuralError("channel buffer size does not match its shape");
    Embedding z{};
    for (std::size_t k = 0; k < kChannelCount; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) s += static_cast<double>(data[k * plane + i]);
        z[k] = s / static_cast<double>(plane);
    }
    return z;
}

/// Per-channel spatial mean, in channel order.
inline Embedding pool_embedding(const ChannelStack& stack) {
    if (stack.channels.size() != kChannelCount) throw StructuralError("channel stack must have 8 channels");
    Embedding z{};
    for (std::size_t k = 0; k < kChannelCount; ++k) {
        const auto values = stack.channels[k].values();
        if (values.empty()) throw StructuralError("empty channel");
        z[k] = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    }
    return z;
}

struct EmbeddingEntry {
    std::string patient_id;
    Embedding z{};
    std::optional<int> label;
};

struct EmbeddingCloud {
    std::vector<EmbeddingEntry> entries;

    std::vector<CloudPoint> points() const {
        std::vector<CloudPoint> out;
        out.reserve(entries.size());
        for (const auto& e : entries) out.emplace_back(e.z.begin(), e.z.end());
        return out;
    }
    std::vector<int> labels() const {
        std::vector<int> out;
        for (const auto& e : entries) {
            if (!e.label) throw InputError("patient '" + e.patient_id + "' has no label");
            out.push_back(*e.label);
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Patient-level aggregation

enum class AggregateMode { mean, max };

inline std::string to_string(AggregateMode m) { return m == AggregateMode::mean ? "mean" : "max"; }

inline AggregateMode parse_aggregate_mode(const std::string& s) {
    if (s == "mean") return AggregateMode::mean;
    if (s == "max") return AggregateMode::max;
    throw ConfigError("unknown aggregation mode '" + s + "' (expected mean or max)");
}

struct AggregateReport {
    std::size_t skipped = 0;  // records without a patient id
};

/// One entry per patient, sorted by patient id. Patient label is the max of
/// its image labels (any positive image makes a positive patient).
inline EmbeddingCloud aggregate_patient(std::span<const EmbeddingEntry> images, AggregateMode mode,
                                        AggregateReport* report = nullptr) {
    struct Acc {
        Embedding z{};
        std::size_t n = 0;
        std::optional<int> label;
    };
    std::map<std::string, Acc> groups;
    std::size_t skipped = 0;
    for (const auto& img : images) {
        if (img.patient_id.empty()) {
            ++skipped;
            continue;
        }
        auto& g = groups[img.patient_id];
        for (std::size_t k = 0; k < kChannelCount; ++k) {
            if (g.n == 0) {
                g.z[k] = img.z[k];
            } else if (mode == AggregateMode::mean) {
                g.z[k] += img.z[k];
            } else {
                g.z[k] = std::max(g.z[k], img.z[k]);
            }
        }
        ++g.n;
        if (img.label) g.label = std::max(g.label.value_or(*img.label), *img.label);
    }
    if (report) report->skipped = skipped;
    EmbeddingCloud cloud;
    for (auto& [id, g] : groups) {
        if (mode == AggregateMode::mean) {
            for (double& v : g.z) v /= static_cast<double>(g.n);
        }
        cloud.entries.push_back({id, g.z, g.label});
    }
    return cloud;
}

struct ScoredImage {
    std::string patient_id;
    double score = 0.0;
    std::optional<int> label;
};

struct PatientScore {
    std::string patient_id;
    double score = 0.0;
    std::optional<int> label;
};

inline std::vector<PatientScore> aggregate_patient_scores(std::span<const ScoredImage> images, AggregateMode mode,
                                                          AggregateReport* report = nullptr) {
    struct Acc {
        double s = 0.0;
        std::size_t n = 0;
        std::optional<int> label;
    };
    std::map<std::string, Acc> groups;
    std::size_t skipped = 0;
    for (const auto& img : images) {
        if (img.patient_id.empty()) {
            ++skipped;
            continue;
        }
        auto& g = groups[img.patient_id];
        if (g.n == 0) {
            g.s = img.score;
        } else if (mode == AggregateMode::mean) {
            g.s += img.score;
        } else {
            g.s = std::max(g.s, img.score);
        }
        ++g.n;
        if (img.label) g.label = std::max(g.label.value_or(*img.label), *img.label);
    }
    if (report) report->skipped = skipped;
    std::vector<PatientScore> out;
    for (const auto& [id, g] : groups) {
        out.push_back({id, mode == AggregateMode::mean ? g.s / static_cast<double>(g.n) : g.s, g.label});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Logistic probe

struct ProbeModel {
    Embedding w{};
    double b = 0.0;
    double lambda = 0.0;

    double logit(const Embedding& z) const noexcept {
        double s = b;
        for (std::size_t k = 0; k < kChannelCount; ++k) s += w[k] * z[k];
        return s;
    }
    double predict(const Embedding& z) const noexcept {
        const double s = logit(z);
        return s >= 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
    }
};

struct ProbeOptions {
    double lambda = 1e-4;
    int iterations = 5000;
    double step = 0.1;
};

namespace detail {

// log(1 + e^s) without overflow.
inline double softplus(double s) noexcept { return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

inline double sigmoid(double s) noexcept {
    if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

}  // namespace detail

/// Mean logistic loss plus (lambda/2)||w||^2; the bias is not penalized.
inline double probe_loss(const ProbeModel& m, std::span<const Embedding> z, std::span<const int> y) {
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double s = m.logit(z[i]);
        total += detail::softplus(s) - y[i] * s;
    }
    double reg = 0.0;
    for (double v : m.w) reg += v * v;
    return total / static_cast<double>(z.size()) + 0.5 * m.lambda * reg;
}

struct ProbeGradient {
    Embedding w{};
    double b = 0.0;

    double norm() const noexcept {
        double s = b * b;
        for (double v : w) s += v * v;
        return std::sqrt(s);
    }
};

inline ProbeGradient probe_gradient(const ProbeModel& m, std::span<const Embedding> z, std::span<const int> y) {
    ProbeGradient g;
    const double inv_n = 1.0 / static_cast<double>(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double r = (detail::sigmoid(m.logit(z[i])) - y[i]) * inv_n;
        for (std::size_t k = 0; k < kChannelCount; ++k) g.w[k] += r * z[i][k];
        g.b += r;
    }
    for (std::size_t k = 0; k < kChannelCount; ++k) g.w[k] += m.lambda * m.w[k];
    return g;
}

/// Full-batch gradient descent from zero with a fixed step and iteration count.
inline ProbeModel fit_probe(std::span<const Embedding> z, std::span<const int> y, const ProbeOptions& opt = {}) {
    if (z.size() != y.size() || z.empty()) throw StructuralError("probe needs matching, nonempty features and labels");
    bool has0 = false, has1 = false;
    for (int v : y) {
        if (v != 0 && v != 1) throw InputError("probe labels must be 0 or 1");
        (v ? has1 : has0) = true;
    }
    if (!has0 || !has1) throw InputError("probe training data must contain both classes");
    ProbeModel m;
    m.lambda = opt.lambda;
    for (int it = 0; it < opt.iterations; ++it) {
        const ProbeGradient g = probe_gradient(m, z, y);
        for (std::size_t k = 0; k < kChannelCount; ++k) m.w[k] -= opt.step * g.w[k];
        m.b -= opt.step * g.b;
    }
    return m;
}

inline ProbeModel fit_probe(const EmbeddingCloud& train, const ProbeOptions& opt = {}) {
    std::vector<Embedding> z;
    for (const auto& e : train.entries) z.push_back(e.z);
    const auto y = train.labels();
    return fit_probe(z, y, opt);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline void require_both_classes(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw StructuralError("scores and labels differ in length");
    bool has0 = false, has1 = false;
    for (int v : labels) {
        if (v != 0 && v != 1) throw InputError("labels must be 0 or 1");
        (v ? has1 : has0) = true;
    }
    if (!has0 || !has1) throw InputError("metric undefined: both classes must be present");
}

}  // namespace detail

/// Mann-Whitney AUC via mid-ranks: ties between a positive and a negative count 1/2.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    detail::require_both_classes(scores, labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                rank_sum_pos += mid_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n - n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

struct YoudenResult {
    double threshold = 0.0;
    double index = 0.0;  // sensitivity + specificity - 1
    double sensitivity = 0.0;
    double specificity = 0.0;
};

struct OperatingPoint {
    double sensitivity = 0.0;
    double specificity = 0.0;
    double accuracy = 0.0;
};

/// Classifies `score >= threshold` as positive.
inline OperatingPoint operating_point(std::span<const double> scores, std::span<const int> labels, double threshold) {
    if (scores.size() != labels.size() || scores.empty()) throw StructuralError("scores and labels differ in length");
    double tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (labels[i] == 1) {
            (pred ? tp : fn) += 1;
        } else {
            (pred ? fp : tn) += 1;
        }
    }
    OperatingPoint op;
    op.sensitivity = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    op.specificity = tn + fp > 0 ? tn / (tn + fp) : 0.0;
    op.accuracy = (tp + tn) / static_cast<double>(scores.size());
    return op;
}

/// Threshold maximizing Youden's index over the midpoints between
/// consecutive distinct scores (the single distinct score itself when all
/// scores are equal). The smallest maximizing threshold wins ties.
inline YoudenResult youden_threshold(std::span<const double> scores, std::span<const int> labels) {
    detail::require_both_classes(scores, labels);
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<double> candidates;
    if (sorted.size() == 1) {
        candidates.push_back(sorted.front());
    } else {
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));
    }
    YoudenResult best;
    bool first = true;
    for (double t : candidates) {
        const auto op = operating_point(scores, labels, t);
        const double j = op.sensitivity + op.specificity - 1.0;
        if (first || j > best.index) {
            best = {t, j, op.sensitivity, op.specificity};
            first = false;
        }
    }
    return best;
}

using Statistic = std::function<double(std::span<const double>, std::span<const int>)>;

struct BootstrapResult {
    double low = 0.0;
    double high = 0.0;
    double mean = 0.0;
    double estimate = 0.0;      // statistic on the full sample
    std::size_t valid = 0;
    std::size_t skipped = 0;    // resamples with a single class
};

namespace detail {

// Linear interpolation between order statistics (the usual "type 7" rule).
inline double percentile(std::vector<double> sorted, double q) {
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Patient-wise percentile bootstrap (95%). Resample i draws with an
/// mt19937_64 seeded by seed + i, so any resample can be recomputed on its own.
inline BootstrapResult bootstrap_ci(std::span<const double> scores, std::span<const int> labels,
                                    const Statistic& statistic, int n_boot, std::uint64_t seed) {
    if (n_boot < 1) throw ParameterError("bootstrap needs at least one resample");
    if (scores.size() != labels.size() || scores.empty()) throw StructuralError("scores and labels differ in length");
    const std::size_t n = scores.size();
    BootstrapResult out;
    out.estimate = statistic(scores, labels);
    std::vector<double> stats;
    stats.reserve(static_cast<std::size_t>(n_boot));
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n_boot; ++i) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(i));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        bool has0 = false, has1 = false;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t idx = pick(rng);
            s[k] = scores[idx];
            y[k] = labels[idx];
            (y[k] ? has1 : has0) = true;
        }
        if (!has0 || !has1) {
            ++out.skipped;
            continue;
        }
        stats.push_back(statistic(s, y));
    }
    if (stats.empty()) throw InputError("every bootstrap resample was degenerate (single class)");
    out.valid = stats.size();
    out.mean = std::accumulate(stats.begin(), stats.end(), 0.0) / static_cast<double>(stats.size());
    out.low = detail::percentile(stats, 0.025);
    out.high = detail::percentile(stats, 0.975);
    return out;
}

/// Stratified patient split: each class is shuffled (seeded) and its first
/// round(train_fraction * size) members go to the training side.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

inline Split stratified_split(std::span<const int> labels, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ParameterError("train fraction must lie in (0, 1)");
    Split split;
    std::mt19937_64 rng(seed);
    for (int cls : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) members.push_back(i);
        }
        std::shuffle(members.begin(), members.end(), rng);
        auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(members.size())));
        if (members.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
        split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
        split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace wph
