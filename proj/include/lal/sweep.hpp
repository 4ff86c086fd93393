#pragma once

#include <vector>

#include "lal/metrics.hpp"
#include "lal/network.hpp"

namespace lal {

// One forward pass per grid w, binarized and measured. grid runs from 0 to 1
// inclusive; all three vectors are index-aligned.
struct SweepResult {
    std::vector<double> grid;
    std::vector<Mask2D> masks;
    std::vector<MetricRecord> records;
};

// Runs the model across w = 0, step, 2*step, ..., 1. step must be a whole
// number of hundredths that divides 1 (0.01 gives the full 101-point grid).
// Grid points with an empty segmentation keep their record with the
// width/fractal fields absent. Fans out over LAL_THREADS workers; output is
// bit-identical for any worker count. gt, when given, fills dice/accuracy.
SweepResult sweep(const ModelParams& params, const Image2D& image, double step = 0.01,
                  double threshold = 0.5, const Mask2D* gt = nullptr);

struct RecommendResult {
    double w_star = 0.0;
    std::vector<double> ws;        // non-degenerate grid points used
    std::vector<double> raw;       // their VDI values
    std::vector<double> smoothed;  // moving average, window 5, shrinking at ends
    std::vector<double> curvature; // kappa per point; 0 at the two ends
};

// Operating-point pick: w where the smoothed VDI curve bends hardest
// (maximum discrete curvature |f''| / (1 + f'^2)^(3/2), central differences).
// Ties go to the smaller w. Throws DegenerateCurveError when the curve is
// flat (max kappa < 1e-9), which is what an untrained model produces, and
// ValueError with fewer than 7 usable points.
RecommendResult recommend_from_curve(const std::vector<double>& ws, const std::vector<double>& vdis);
RecommendResult recommend_w(const SweepResult& sweep);

// Fraction-of-grid positive count f per pixel, mapped to 1 - f, except
// pixels that are positive at every w or at none score exactly 0.
Image2D uncertainty_map(const SweepResult& sweep);

// Drops every 8-connected component with area < 3 whose mean uncertainty
// exceeds 0.7; everything else passes through untouched.
Mask2D denoise(const Mask2D& mask, const Image2D& uncertainty);

} // namespace lal
