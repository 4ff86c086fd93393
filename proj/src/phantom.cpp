#include "lal/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lal/morphology.hpp"
#include "lal/rng.hpp"

namespace lal {

namespace {

constexpr double kLargeMin = 2.0;
constexpr double kLargeMax = 4.0;
// sqrt(2)/2 plus a little slack: a stadium this wide always covers an
// 8-connected run of pixel centers.
constexpr double kCapillaryMin = 0.72;
constexpr double kCapillaryMax = 1.0;

struct Point {
    double r, c;
};

Point rotate(Point dir, double angle) {
    const double s = std::sin(angle), co = std::cos(angle);
    return {dir.r * co - dir.c * s, dir.r * s + dir.c * co};
}

class TreeBuilder {
public:
    TreeBuilder(const PhantomConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng) {}

    VesselTree build() {
        const double size = cfg_.size;
        // root on a border, heading inward
        const int side = static_cast<int>(rng_.below(4));
        const double pos = rng_.uniform(0.15 * size, 0.85 * size);
        Point start, dir;
        switch (side) {
            case 0: start = {0.0, pos}, dir = {1.0, 0.0}; break;        // top
            case 1: start = {size - 1.0, pos}, dir = {-1.0, 0.0}; break; // bottom
            case 2: start = {pos, 0.0}, dir = {0.0, 1.0}; break;        // left
            default: start = {pos, size - 1.0}, dir = {0.0, -1.0}; break;
        }
        dir = rotate(dir, rng_.uniform(-0.4, 0.4));
        const double radius = rng_.uniform(kLargeMin, kLargeMax);
        grow(start, dir, radius, -1, 0);
        return std::move(tree_);
    }

private:
    void grow(Point start, Point dir, double radius, int parent, int generation) {
        if (generation > 8 || tree_.segments.size() > 400) return;
        if (radius < kLargeMin) {
            capillary_walk(start, dir, std::min(radius, kCapillaryMax), parent);
            return;
        }
        const double len = rng_.uniform(0.15 * cfg_.size, 0.28 * cfg_.size);
        Point end = advance(start, dir, len);
        const int idx = push(start, end, radius, parent, false);

        // capillary offshoots sprinkled along the large segment
        const double expected = cfg_.capillary_density * len / 12.0;
        int offshoots = static_cast<int>(expected);
        if (rng_.uniform() < expected - offshoots) ++offshoots;
        for (int k = 0; k < offshoots; ++k) {
            const double t = rng_.uniform();
            Point at{start.r + t * (end.r - start.r), start.c + t * (end.c - start.c)};
            Point cdir = rotate(dir, (rng_.below(2) ? 1.0 : -1.0) * rng_.uniform(0.7, 1.5));
            capillary_walk(at, cdir, rng_.uniform(kCapillaryMin, kCapillaryMax), idx);
        }

        // 0-2 children, each with reduced radius and bounded turning
        const int n_children = (rng_.uniform() < cfg_.branch_prob ? 1 : 0) +
                               (rng_.uniform() < cfg_.branch_prob ? 1 : 0);
        double first_turn = rng_.uniform(0.15, 0.7);
        for (int k = 0; k < n_children; ++k) {
            const double turn = (k == 0 ? -first_turn : rng_.uniform(0.15, 0.7));
            double child_radius = radius * rng_.uniform(0.62, 0.85);
            if (child_radius < kLargeMin) child_radius = rng_.uniform(kCapillaryMin, kCapillaryMax);
            grow(end, rotate(dir, turn), std::min(child_radius, radius), idx, generation + 1);
        }
    }

    void capillary_walk(Point start, Point dir, double radius, int parent) {
        radius = std::max(radius, kCapillaryMin);
        const int steps = 3 + static_cast<int>(rng_.below(6));
        Point cur = start;
        int par = parent;
        for (int s = 0; s < steps; ++s) {
            if (tree_.segments.size() > 400) return;
            const double len = rng_.uniform(2.5, 5.5);
            Point end = advance(cur, dir, len);
            par = push(cur, end, radius, par, true);
            dir = rotate(dir, rng_.uniform(-0.5, 0.5));
            cur = end;
            if (cur.r <= 1.0 || cur.r >= cfg_.size - 2.0 || cur.c <= 1.0 || cur.c >= cfg_.size - 2.0)
                return;
        }
    }

    // step forward, but bend back toward the canvas center when about to leave
    Point advance(Point start, Point& dir, double len) {
        Point end{start.r + dir.r * len, start.c + dir.c * len};
        const double margin = 1.0, hi = cfg_.size - 2.0;
        if (end.r < margin || end.r > hi || end.c < margin || end.c > hi) {
            const double mid = (cfg_.size - 1.0) / 2.0;
            Point to_center{mid - start.r, mid - start.c};
            const double n = std::hypot(to_center.r, to_center.c);
            if (n > 1e-9) dir = {to_center.r / n, to_center.c / n};
            end = {start.r + dir.r * len, start.c + dir.c * len};
            end.r = std::clamp(end.r, margin, hi);
            end.c = std::clamp(end.c, margin, hi);
        }
        return end;
    }

    int push(Point a, Point b, double radius, int parent, bool capillary) {
        tree_.segments.push_back({a.r, a.c, b.r, b.c, radius, parent, capillary});
        return static_cast<int>(tree_.segments.size()) - 1;
    }

    const PhantomConfig& cfg_;
    Rng& rng_;
    VesselTree tree_;
};

double dist_to_segment(double pr, double pc, const VesselSegment& s) {
    const double dr = s.r1 - s.r0, dc = s.c1 - s.c0;
    const double len2 = dr * dr + dc * dc;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((pr - s.r0) * dr + (pc - s.c0) * dc) / len2, 0.0, 1.0);
    const double qr = s.r0 + t * dr, qc = s.c0 + t * dc;
    return std::hypot(pr - qr, pc - qc);
}

// 1D squared distance transform (lower envelope of parabolas).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, int n) {
    static thread_local std::vector<int> v;
    static thread_local std::vector<double> z;
    v.assign(static_cast<size_t>(n), 0);
    z.assign(static_cast<size_t>(n) + 1, 0.0);
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s;
        while (true) {
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
            if (s <= z[k]) { --k; } else break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

} // namespace

void PhantomConfig::validate() const {
    if (size <= 0 || size % 8 != 0)
        throw ValueError("phantom size must be positive and divisible by 8, got " + std::to_string(size));
    if (n_trees < 1) throw ValueError("n_trees must be >= 1, got " + std::to_string(n_trees));
    if (capillary_density < 0 || noise_std < 0 || blur_radius < 0 || background_amp < 0 ||
        thickness_contrast < 0 || thickness_contrast > 1)
        throw ValueError("phantom corruption parameters must be non-negative (thickness_contrast in [0,1])");
    if (branch_prob < 0 || branch_prob > 1)
        throw ValueError("branch_prob must lie in [0,1], got " + std::to_string(branch_prob));
}

VesselTree generate_tree(const PhantomConfig& config, uint64_t seed) {
    config.validate();
    Rng rng(seed);
    TreeBuilder builder(config, rng);
    return builder.build();
}

LabelPair rasterize(const VesselTree& tree, int size) {
    Mask2D pixel(size, size);
    for (const auto& s : tree.segments) {
        // only sweep the segment's bounding box
        const double pad = s.radius + 1.0;
        const int i0 = std::max(0, static_cast<int>(std::floor(std::min(s.r0, s.r1) - pad)));
        const int i1 = std::min(size - 1, static_cast<int>(std::ceil(std::max(s.r0, s.r1) + pad)));
        const int j0 = std::max(0, static_cast<int>(std::floor(std::min(s.c0, s.c1) - pad)));
        const int j1 = std::min(size - 1, static_cast<int>(std::ceil(std::max(s.c0, s.c1) + pad)));
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j)
                if (!pixel.at(i, j) && dist_to_segment(i, j, s) <= s.radius) pixel.at(i, j) = 1;
    }
    LabelPair out;
    out.skeleton = skeletonize(pixel);
    out.pixel = std::move(pixel);
    return out;
}

std::vector<double> squared_distance_to_background(const Mask2D& mask) {
    const int h = mask.h, w = mask.w;
    const double inf = 1e18;
    std::vector<double> g(mask.bits.size());
    for (size_t i = 0; i < mask.bits.size(); ++i) g[i] = mask.bits[i] ? inf : 0.0;

    std::vector<double> col(static_cast<size_t>(h)), colres(static_cast<size_t>(h));
    for (int j = 0; j < w; ++j) {
        for (int i = 0; i < h; ++i) col[static_cast<size_t>(i)] = g[static_cast<size_t>(i) * w + j];
        edt_1d(col, colres, h);
        for (int i = 0; i < h; ++i) g[static_cast<size_t>(i) * w + j] = colres[static_cast<size_t>(i)];
    }
    std::vector<double> row(static_cast<size_t>(w)), rowres(static_cast<size_t>(w));
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) row[static_cast<size_t>(j)] = g[static_cast<size_t>(i) * w + j];
        edt_1d(row, rowres, w);
        for (int j = 0; j < w; ++j) g[static_cast<size_t>(i) * w + j] = rowres[static_cast<size_t>(j)];
    }
    return g;
}

namespace {

Image2D gaussian_blur(const Image2D& img, double sigma) {
    if (sigma < 1e-9) return img;
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<size_t>(2 * r + 1));
    double ksum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[static_cast<size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
        ksum += k[static_cast<size_t>(i + r)];
    }
    for (double& v : k) v /= ksum;

    auto clampi = [](int v, int hi) { return std::min(std::max(v, 0), hi); };
    Image2D tmp(img.h, img.w), out(img.h, img.w);
    for (int i = 0; i < img.h; ++i)
        for (int j = 0; j < img.w; ++j) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t)
                acc += k[static_cast<size_t>(t + r)] * img.at(i, clampi(j + t, img.w - 1));
            tmp.at(i, j) = acc;
        }
    for (int i = 0; i < img.h; ++i)
        for (int j = 0; j < img.w; ++j) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t)
                acc += k[static_cast<size_t>(t + r)] * tmp.at(clampi(i + t, img.h - 1), j);
            out.at(i, j) = acc;
        }
    return out;
}

// Low-frequency field in [0,1]: coarse random grid, bilinearly interpolated.
Image2D smooth_field(int h, int w, Rng& rng) {
    const int cell = 8;
    const int nr = h / cell + 2, nc = w / cell + 2;
    std::vector<double> grid(static_cast<size_t>(nr) * nc);
    for (double& v : grid) v = rng.uniform();
    Image2D out(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const double gi = static_cast<double>(i) / cell, gj = static_cast<double>(j) / cell;
            const int i0 = static_cast<int>(gi), j0 = static_cast<int>(gj);
            const double fi = gi - i0, fj = gj - j0;
            const auto g = [&](int a, int b) { return grid[static_cast<size_t>(a) * nc + b]; };
            out.at(i, j) = (1 - fi) * ((1 - fj) * g(i0, j0) + fj * g(i0, j0 + 1)) +
                           fi * ((1 - fj) * g(i0 + 1, j0) + fj * g(i0 + 1, j0 + 1));
        }
    return out;
}

} // namespace

Image2D synthesize_image(const Mask2D& pixel_mask, const PhantomConfig& config, uint64_t seed) {
    config.validate();
    Rng rng(seed);

    // thickness-coded base intensity
    const std::vector<double> d2 = squared_distance_to_background(pixel_mask);
    double dmax = 0.0;
    for (double v : d2) dmax = std::max(dmax, v);
    const double dnorm = dmax > 0.0 ? std::sqrt(dmax) : 1.0;
    Image2D img(pixel_mask.h, pixel_mask.w);
    for (size_t i = 0; i < img.px.size(); ++i) {
        if (!pixel_mask.bits[i]) continue;
        const double thick = std::sqrt(d2[i]) / dnorm;
        img.px[i] = (1.0 - config.thickness_contrast) + config.thickness_contrast * thick;
    }

    img = gaussian_blur(img, config.blur_radius);

    if (config.noise_std > 0.0)
        for (double& v : img.px) v += config.noise_std * rng.normal();

    if (config.background_amp > 0.0) {
        const Image2D field = smooth_field(pixel_mask.h, pixel_mask.w, rng);
        for (size_t i = 0; i < img.px.size(); ++i)
            img.px[i] *= 1.0 + config.background_amp * (field.px[i] - 0.5);
    }

    for (double& v : img.px) v = std::clamp(v, 0.0, 1.0);
    return img;
}

Phantom make_phantom(const PhantomConfig& config, uint64_t seed) {
    config.validate();
    Rng master(seed);
    VesselTree merged;
    for (int t = 0; t < config.n_trees; ++t) {
        const uint64_t tree_seed = master.next_u64();
        VesselTree tree = generate_tree(config, tree_seed);
        const int offset = static_cast<int>(merged.segments.size());
        for (auto& s : tree.segments) {
            if (s.parent >= 0) s.parent += offset;
            merged.segments.push_back(s);
        }
    }
    Phantom out;
    out.labels = rasterize(merged, config.size);
    out.image = synthesize_image(out.labels.pixel, config, master.next_u64());
    return out;
}

} // namespace lal
