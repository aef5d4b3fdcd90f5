#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <utility>
#include <string>
#include <vector>

#include "wph/image.hpp"

namespace wph {

/// Smooth test images: a bright elliptical tissue region attached to the left
/// edge on a dark background, with a controlled number of shallow dark blobs
/// (H0) and dark rings around brighter centres (H1) inside it, plus uniform
/// noise. The dips stay above the tissue/background Otsu split.
struct BlobSpec {
    int height = 64;
    int width = 64;
    int dark_blobs = 2;
    int rings = 0;
    double tissue = 0.85;
    double background = 0.05;
    double noise = 0.01;
};

inline GrayImage synthetic_blobs(const BlobSpec& spec, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double cy = 0.5 * spec.height, ry = 0.47 * spec.height, rx = 0.92 * spec.width;
    auto inside = [&](double r, double c, double shrink) {
        const double u = (r - cy) / (ry * shrink), v = c / (rx * shrink);
        return u * u + v * v <= 1.0;
    };
    GrayImage img(spec.height, spec.width, spec.background);
    for (int r = 0; r < spec.height; ++r) {
        for (int c = 0; c < spec.width; ++c) {
            if (inside(r, c, 1.0)) img(r, c) = spec.tissue;
        }
    }
    const double scale = std::min(spec.height, spec.width);
    auto random_centre = [&](double shrink) {
        for (;;) {
            const double r = unit(rng) * spec.height, c = unit(rng) * spec.width;
            if (inside(r, c, shrink)) return std::pair{r, c};
        }
    };
    auto dip = [&](double depth, auto&& profile) {
        for (int r = 0; r < spec.height; ++r) {
            for (int c = 0; c < spec.width; ++c) {
                if (inside(r, c, 1.0)) img(r, c) -= depth * profile(r, c);
            }
        }
    };
    for (int k = 0; k < spec.dark_blobs; ++k) {
        const double sigma = scale * (0.03 + 0.02 * unit(rng));
        const double depth = 0.25 + 0.15 * unit(rng);
        auto [by, bx] = random_centre(0.7);
        dip(depth, [&](int r, int c) {
            const double d2 = (r - by) * (r - by) + (c - bx) * (c - bx);
            return std::exp(-d2 / (2 * sigma * sigma));
        });
    }
    for (int k = 0; k < spec.rings; ++k) {
        const double radius = scale * (0.10 + 0.04 * unit(rng));
        const double width = scale * 0.025;
        const double depth = 0.25 + 0.1 * unit(rng);
        auto [by, bx] = random_centre(0.45);
        dip(depth, [&](int r, int c) {
            const double dist = std::hypot(r - by, c - bx) - radius;
            return std::exp(-dist * dist / (2 * width * width));
        });
    }
    for (double& v : img.values()) v = std::clamp(v + spec.noise * (2.0 * unit(rng) - 1.0), 0.0, 1.0);
    return img;
}

/// I.i.d. uniform [0, 1] pixels.
inline GrayImage random_image(int height, int width, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    GrayImage img(height, width);
    for (double& v : img.values()) v = unit(rng);
    return img;
}

/// Pixels drawn from {0, 1/levels, ..., 1}; produces many ties.
inline GrayImage random_quantized_image(int height, int width, int levels, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, levels);
    GrayImage img(height, width);
    for (double& v : img.values()) v = static_cast<double>(pick(rng)) / levels;
    return img;
}

struct SyntheticImage {
    std::string name;
    std::string patient_id;
    int label = 0;
    GrayImage image;
};

/// Two-class corpus: class 0 images carry 1-2 dark blobs, class 1 images
/// 5-7 blobs and a ring. Patients alternate between classes.
inline std::vector<SyntheticImage> synthetic_corpus(int patients, int images_per_patient, int size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<SyntheticImage> out;
    for (int p = 0; p < patients; ++p) {
        const int label = p % 2;
        for (int v = 0; v < images_per_patient; ++v) {
            BlobSpec spec;
            spec.height = size;
            spec.width = size + size / 4;
            std::uniform_int_distribution<int> count(label ? 5 : 1, label ? 7 : 2);
            spec.dark_blobs = count(rng);
            spec.rings = label;
            char name[64];
            std::snprintf(name, sizeof name, "p%03d_v%d", p, v);
            char pid[32];
            std::snprintf(pid, sizeof pid, "p%03d", p);
            out.push_back({name, pid, label, synthetic_blobs(spec, rng)});
        }
    }
    return out;
}

}  // namespace wph
