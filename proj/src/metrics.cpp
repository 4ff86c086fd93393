#include "lal/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace lal {

double vessel_density(const Mask2D& mask) {
    if (mask.bits.empty()) return 0.0;
    return static_cast<double>(mask.popcount()) / static_cast<double>(mask.bits.size());
}

double vessel_length_fraction(const Mask2D& skeleton) {
    return vessel_density(skeleton);
}

double vessel_diameter_index(const Mask2D& mask, const Mask2D& skeleton) {
    require_same_shape(mask, skeleton, "vessel_diameter_index");
    const long len = skeleton.popcount();
    if (len == 0) throw NoVesselError("vessel_diameter_index: no vessel (empty skeleton)");
    return static_cast<double>(mask.popcount()) / static_cast<double>(len);
}

double fractal_dimension(const Mask2D& skeleton) {
    if (skeleton.popcount() == 0) throw NoVesselError("fractal_dimension: no vessel (empty skeleton)");
    const int limit = std::max(skeleton.h, skeleton.w) / 4;
    std::vector<double> xs, ys; // (log(1/s), log N(s))
    for (int s = 1; s <= std::max(1, limit); s *= 2) {
        const int bh = (skeleton.h + s - 1) / s;
        const int bw = (skeleton.w + s - 1) / s;
        std::vector<uint8_t> occupied(static_cast<size_t>(bh) * bw, 0);
        for (int i = 0; i < skeleton.h; ++i)
            for (int j = 0; j < skeleton.w; ++j)
                if (skeleton.at(i, j)) occupied[static_cast<size_t>(i / s) * bw + j / s] = 1;
        long n = 0;
        for (uint8_t b : occupied) n += b;
        if (n >= 1) {
            xs.push_back(std::log(1.0 / s));
            ys.push_back(std::log(static_cast<double>(n)));
        }
    }
    // least-squares slope
    const double m = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = m * sxx - sx * sx;
    if (denom == 0.0) return 0.0; // single scale; a point has dimension 0
    return (m * sxy - sx * sy) / denom;
}

double vessel_connectivity(const Mask2D& mask) {
    const long p = mask.popcount();
    if (p == 0) return 100.0;
    const long c = connected_components(mask).count();
    if (c - 1 >= p) return 0.0;
    return 100.0 - 100.0 * static_cast<double>(c - 1) / static_cast<double>(p);
}

long noise_intensity(const Mask2D& mask) {
    const auto cc = connected_components(mask);
    long n = 0;
    for (long s : cc.sizes)
        if (s == 1) ++n;
    return n;
}

std::pair<double, double> eval_against_gt(const Mask2D& pred, const Mask2D& gt) {
    require_same_shape(pred, gt, "eval_against_gt");
    long inter = 0, p = 0, g = 0, agree = 0;
    for (size_t i = 0; i < pred.bits.size(); ++i) {
        p += pred.bits[i];
        g += gt.bits[i];
        inter += pred.bits[i] & gt.bits[i];
        agree += pred.bits[i] == gt.bits[i];
    }
    const double dice = (p + g == 0) ? 1.0 : 2.0 * inter / static_cast<double>(p + g);
    const double accuracy = pred.bits.empty() ? 1.0 : static_cast<double>(agree) / pred.bits.size();
    return {dice, accuracy};
}

MetricRecord compute_metrics(const Mask2D& mask, const Mask2D& skeleton, const Mask2D* gt) {
    MetricRecord r;
    r.vd = vessel_density(mask);
    r.vlf = vessel_length_fraction(skeleton);
    r.vc = vessel_connectivity(mask);
    r.ni = noise_intensity(mask);
    if (skeleton.popcount() > 0) {
        r.vdi = vessel_diameter_index(mask, skeleton);
        r.fd = fractal_dimension(skeleton);
    }
    if (gt) {
        auto [dice, acc] = eval_against_gt(mask, *gt);
        r.dice = dice;
        r.accuracy = acc;
    }
    return r;
}

} // namespace lal
