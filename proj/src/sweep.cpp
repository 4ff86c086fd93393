#include "lal/sweep.hpp"

#include <algorithm>
#include <cmath>

#include "lal/morphology.hpp"
#include "lal/threads.hpp"

namespace lal {

SweepResult sweep(const ModelParams& params, const Image2D& image, double step, double threshold,
                  const Mask2D* gt) {
    const long long centi = std::llround(step * 100.0);
    if (std::abs(step * 100.0 - static_cast<double>(centi)) > 1e-9 || centi < 1 || centi > 100 ||
        100 % centi != 0)
        throw ValueError("sweep step must be a whole number of hundredths dividing 1 "
                         "(e.g. 0.01, 0.05, 0.5), got " + std::to_string(step));
    const int n = static_cast<int>(100 / centi) + 1;

    SweepResult out;
    out.grid.resize(static_cast<size_t>(n));
    out.masks.resize(static_cast<size_t>(n));
    out.records.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out.grid[static_cast<size_t>(i)] = static_cast<double>(i * centi) / 100.0;

    parallel_for(n, [&](int i) {
        const size_t k = static_cast<size_t>(i);
        const Image2D prob = unet_forward(params, image, out.grid[k]);
        Mask2D mask = binarize(prob, threshold);
        const Mask2D skel = skeletonize(mask);
        out.records[k] = compute_metrics(mask, skel, gt);
        out.masks[k] = std::move(mask);
    });
    return out;
}

RecommendResult recommend_from_curve(const std::vector<double>& ws, const std::vector<double>& vdis) {
    if (ws.size() != vdis.size())
        throw ValueError("recommend_from_curve: w/vdi length mismatch");
    const size_t n = ws.size();
    if (n < 7)
        throw ValueError("recommend_w needs at least 7 usable grid points, got " + std::to_string(n));
    for (size_t i = 1; i < n; ++i)
        if (!(ws[i] > ws[i - 1])) throw ValueError("recommend_from_curve: w values must increase");

    RecommendResult r;
    r.ws = ws;
    r.raw = vdis;

    // centered moving average, window 5, shrunk symmetrically at the ends
    r.smoothed.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const size_t reach = std::min<size_t>({2, i, n - 1 - i});
        double acc = 0.0;
        for (size_t j = i - reach; j <= i + reach; ++j) acc += vdis[j];
        r.smoothed[i] = acc / static_cast<double>(2 * reach + 1);
    }

    // discrete curvature on interior points; spacing taken from the actual w
    // values so a curve with dropped (degenerate) points still works
    r.curvature.assign(n, 0.0);
    double best = -1.0;
    size_t best_i = 0;
    for (size_t i = 1; i + 1 < n; ++i) {
        const double hp = ws[i] - ws[i - 1];
        const double hn = ws[i + 1] - ws[i];
        const double d1 = (r.smoothed[i + 1] - r.smoothed[i - 1]) / (hp + hn);
        const double d2 = 2.0 * (hn * r.smoothed[i - 1] - (hp + hn) * r.smoothed[i] + hp * r.smoothed[i + 1]) /
                          (hp * hn * (hp + hn));
        const double kappa = std::abs(d2) / std::pow(1.0 + d1 * d1, 1.5);
        r.curvature[i] = kappa;
        if (kappa > best) {
            best = kappa;
            best_i = i;
        }
    }
    if (best < 1e-9)
        throw DegenerateCurveError("degenerate curve: VDI carries no curvature signal "
                                   "(max kappa " + std::to_string(best) + "); is the model trained?");
    r.w_star = ws[best_i];
    return r;
}

RecommendResult recommend_w(const SweepResult& sweep) {
    std::vector<double> ws, vdis;
    ws.reserve(sweep.grid.size());
    vdis.reserve(sweep.grid.size());
    for (size_t i = 0; i < sweep.grid.size(); ++i) {
        if (!sweep.records[i].vdi) continue;
        ws.push_back(sweep.grid[i]);
        vdis.push_back(*sweep.records[i].vdi);
    }
    return recommend_from_curve(ws, vdis);
}

Image2D uncertainty_map(const SweepResult& sweep) {
    if (sweep.masks.empty()) throw ValueError("uncertainty_map: empty sweep");
    const int h = sweep.masks[0].h, w = sweep.masks[0].w;
    const size_t g = sweep.masks.size();
    for (const auto& m : sweep.masks)
        if (m.h != h || m.w != w) throw ShapeError("uncertainty_map: masks disagree in shape");

    Image2D u(h, w);
    for (size_t p = 0; p < u.px.size(); ++p) {
        size_t count = 0;
        for (const auto& m : sweep.masks) count += m.bits[p];
        if (count == 0 || count == g) continue; // always-same pixels pin to 0
        u.px[p] = 1.0 - static_cast<double>(count) / static_cast<double>(g);
    }
    return u;
}

Mask2D denoise(const Mask2D& mask, const Image2D& uncertainty) {
    if (mask.h != uncertainty.h || mask.w != uncertainty.w)
        throw ShapeError("denoise: mask " + std::to_string(mask.h) + "x" + std::to_string(mask.w) +
                         " vs uncertainty " + std::to_string(uncertainty.h) + "x" +
                         std::to_string(uncertainty.w));
    const ComponentLabeling cc = connected_components(mask);
    std::vector<double> mean_u(cc.sizes.size(), 0.0);
    for (size_t p = 0; p < mask.bits.size(); ++p)
        if (cc.labels[p] > 0) mean_u[static_cast<size_t>(cc.labels[p] - 1)] += uncertainty.px[p];
    std::vector<uint8_t> drop(cc.sizes.size(), 0);
    for (size_t k = 0; k < cc.sizes.size(); ++k) {
        mean_u[k] /= static_cast<double>(cc.sizes[k]);
        drop[k] = cc.sizes[k] < 3 && mean_u[k] > 0.7;
    }
    Mask2D out = mask;
    for (size_t p = 0; p < out.bits.size(); ++p)
        if (cc.labels[p] > 0 && drop[static_cast<size_t>(cc.labels[p] - 1)]) out.bits[p] = 0;
    return out;
}

} // namespace lal
