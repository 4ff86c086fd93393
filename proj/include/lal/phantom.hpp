#pragma once

#include <cstdint>

#include "lal/image.hpp"

namespace lal {

// Synthetic vessel phantom generation. Everything here is a pure function of
// (config, seed), so samples can be produced in parallel across seeds.
struct PhantomConfig {
    int size = 64;                    // H = W, divisible by 8
    int n_trees = 2;                  // vessel trees per phantom
    double capillary_density = 1.0;   // scales capillary offshoots per large segment
    double branch_prob = 0.75;        // probability of each of the 0-2 children
    double noise_std = 0.08;          // additive Gaussian speckle
    double blur_radius = 0.7;         // Gaussian blur sigma, pixels
    double background_amp = 0.15;     // multiplicative texture amplitude
    double thickness_contrast = 0.5;  // 0 = flat vessel intensity, 1 = fully thickness-coded
    uint64_t seed = 0;

    void validate() const;
};

// One straight piece of vessel. Coordinates are (row, col) in pixels; parent
// is the index of the spawning segment (-1 for a root). Large vessels carry
// radii in [2,4], capillaries in [0.72, 1] so their rasterization stays
// 8-connected.
struct VesselSegment {
    double r0, c0, r1, c1;
    double radius;
    int parent;
    bool capillary;
};

struct VesselTree {
    std::vector<VesselSegment> segments;
};

// Recursive binary branching from a root on the image border; terminal
// generations are capillary random walks.
VesselTree generate_tree(const PhantomConfig& config, uint64_t seed);

// Pixel mask = union of stadium shapes (distance-to-segment <= radius),
// skeleton = skeletonize(pixel). Segments outside the canvas are clipped by
// construction of the distance test.
LabelPair rasterize(const VesselTree& tree, int size);

// Vessel intensity coded by local thickness, then blur, speckle and a
// multiplicative background texture; clipped to [0,1].
Image2D synthesize_image(const Mask2D& pixel_mask, const PhantomConfig& config, uint64_t seed);

struct Phantom {
    Image2D image;
    LabelPair labels;
};

// n_trees trees merged, rasterized, and rendered in one call.
Phantom make_phantom(const PhantomConfig& config, uint64_t seed);

// Exact squared-euclidean distance transform: for each pixel the squared
// distance to the nearest zero pixel (0 on background).
std::vector<double> squared_distance_to_background(const Mask2D& mask);

} // namespace lal
