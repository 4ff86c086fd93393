#pragma once

#include <optional>
#include <utility>

#include "lal/morphology.hpp"

namespace lal {

// One row of the metric table. vdi and fd are absent for empty segmentations
// ("no vessel"); dice/accuracy are absent when no ground truth was supplied.
struct MetricRecord {
    std::optional<double> vdi; // mask area / skeleton length, pixels
    double vd = 0.0;           // vessel density, foreground fraction
    double vlf = 0.0;          // skeleton foreground fraction
    std::optional<double> fd;  // box-counting fractal dimension of the skeleton
    double vc = 100.0;         // connectivity score, 100 = fully connected
    long ni = 0;               // isolated single-pixel components
    std::optional<double> dice;
    std::optional<double> accuracy;
};

double vessel_density(const Mask2D& mask);
double vessel_length_fraction(const Mask2D& skeleton);

// Mean vessel width in pixels. Throws NoVesselError on an empty skeleton.
double vessel_diameter_index(const Mask2D& mask, const Mask2D& skeleton);

// Box-counting dimension over box sizes 1,2,4,... up to size/4, grid anchored
// at the image origin; least-squares slope of log N(s) against log(1/s).
// Throws NoVesselError on an empty skeleton.
double fractal_dimension(const Mask2D& skeleton);

// 100 * (1 - min(1, (C-1)/P)) with C components and P foreground pixels.
// Empty mask scores 100 by convention.
double vessel_connectivity(const Mask2D& mask);

// Number of 8-connected components of size exactly 1.
long noise_intensity(const Mask2D& mask);

// (dice, accuracy). Dice of two empty masks is 1.0.
std::pair<double, double> eval_against_gt(const Mask2D& pred, const Mask2D& gt);

// Full record for a mask and its skeleton; gt optional.
MetricRecord compute_metrics(const Mask2D& mask, const Mask2D& skeleton,
                             const Mask2D* gt = nullptr);

} // namespace lal
