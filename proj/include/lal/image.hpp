#pragma once

#include <cstdint>
#include <vector>

#include "lal/common.hpp"

namespace lal {

// H x W grayscale image, values in [0, 1], row-major.
struct Image2D {
    int h = 0;
    int w = 0;
    std::vector<double> px;

    Image2D() = default;
    Image2D(int h_, int w_, double fill = 0.0) : h(h_), w(w_), px(static_cast<size_t>(h_) * w_, fill) {}

    double& at(int i, int j) { return px[static_cast<size_t>(i) * w + j]; }
    double at(int i, int j) const { return px[static_cast<size_t>(i) * w + j]; }
    size_t size() const { return px.size(); }
};

// H x W binary mask, strictly {0, 1}.
struct Mask2D {
    int h = 0;
    int w = 0;
    std::vector<uint8_t> bits;

    Mask2D() = default;
    Mask2D(int h_, int w_, uint8_t fill = 0) : h(h_), w(w_), bits(static_cast<size_t>(h_) * w_, fill) {}

    uint8_t& at(int i, int j) { return bits[static_cast<size_t>(i) * w + j]; }
    uint8_t at(int i, int j) const { return bits[static_cast<size_t>(i) * w + j]; }
    bool in_bounds(int i, int j) const { return i >= 0 && i < h && j >= 0 && j < w; }

    long popcount() const {
        long n = 0;
        for (uint8_t b : bits) n += b;
        return n;
    }

    bool operator==(const Mask2D& o) const { return h == o.h && w == o.w && bits == o.bits; }
};

// Pixel-level mask plus its skeleton-level counterpart for one image.
// Invariant: skeleton is a subset of pixel; both strictly binary.
struct LabelPair {
    Mask2D pixel;
    Mask2D skeleton;
};

inline void require_same_shape(const Mask2D& a, const Mask2D& b, const char* what) {
    if (a.h != b.h || a.w != b.w)
        throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.h) + "x" +
                         std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" + std::to_string(b.w));
}

} // namespace lal
