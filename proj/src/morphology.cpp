#include "lal/morphology.hpp"

#include <array>

namespace lal {

Mask2D binarize(const Image2D& prob, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ValueError("binarize: threshold must lie in (0,1), got " + std::to_string(threshold));
    Mask2D out(prob.h, prob.w);
    for (size_t i = 0; i < prob.px.size(); ++i) out.bits[i] = prob.px[i] >= threshold ? 1 : 0;
    return out;
}

namespace {

// p2..p9 clockwise from north, as in the thinning literature.
inline void neighbors(const Mask2D& m, int i, int j, std::array<int, 8>& p) {
    auto get = [&](int a, int b) -> int { return m.in_bounds(a, b) ? m.at(a, b) : 0; };
    p[0] = get(i - 1, j);     // N
    p[1] = get(i - 1, j + 1); // NE
    p[2] = get(i, j + 1);     // E
    p[3] = get(i + 1, j + 1); // SE
    p[4] = get(i + 1, j);     // S
    p[5] = get(i + 1, j - 1); // SW
    p[6] = get(i, j - 1);     // W
    p[7] = get(i - 1, j - 1); // NW
}

inline int transitions(const std::array<int, 8>& p) {
    int a = 0;
    for (int k = 0; k < 8; ++k)
        if (p[k] == 0 && p[(k + 1) % 8] == 1) ++a;
    return a;
}

inline int neighbor_sum(const std::array<int, 8>& p) {
    int b = 0;
    for (int v : p) b += v;
    return b;
}

// Zhang-Suen deletability in sub-pass 0 or 1, evaluated on m.
bool zs_deletable(const Mask2D& m, int i, int j, int pass) {
    std::array<int, 8> p;
    neighbors(m, i, j, p);
    const int b = neighbor_sum(p);
    if (b < 2 || b > 6) return false;
    if (transitions(p) != 1) return false;
    // p2=p[0] N, p4=p[2] E, p6=p[4] S, p8=p[6] W
    if (pass == 0) {
        if (p[0] * p[2] * p[4] != 0) return false;
        if (p[2] * p[4] * p[6] != 0) return false;
    } else {
        if (p[0] * p[2] * p[6] != 0) return false;
        if (p[0] * p[4] * p[6] != 0) return false;
    }
    return true;
}

// Deletion is locally safe right now: the live neighborhood stays one piece
// and the pixel is not isolated.
bool simple_point(const Mask2D& m, int i, int j) {
    std::array<int, 8> p;
    neighbors(m, i, j, p);
    return neighbor_sum(p) >= 1 && transitions(p) == 1;
}

int component_count(const Mask2D& m);

} // namespace

Mask2D skeletonize(const Mask2D& mask) {
    Mask2D cur = mask;
    std::vector<std::pair<int, int>> candidates;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            candidates.clear();
            for (int i = 0; i < cur.h; ++i)
                for (int j = 0; j < cur.w; ++j)
                    if (cur.at(i, j) && zs_deletable(cur, i, j, pass))
                        candidates.emplace_back(i, j);
            if (candidates.empty()) continue;

            Mask2D next = cur;
            for (auto [i, j] : candidates) next.at(i, j) = 0;

            // Parallel deletion can annihilate tiny blobs (a lone 2x2 square
            // satisfies every condition at once). When the component count
            // would change, redo the sub-pass sequentially, re-validating
            // each deletion against the live mask.
            if (component_count(next) != component_count(cur)) {
                next = cur;
                for (auto [i, j] : candidates) {
                    if (simple_point(next, i, j)) next.at(i, j) = 0;
                }
            }
            if (!(next == cur)) {
                cur = std::move(next);
                changed = true;
            }
        }
    }
    return cur;
}

ComponentLabeling connected_components(const Mask2D& mask) {
    ComponentLabeling out;
    out.h = mask.h;
    out.w = mask.w;
    out.labels.assign(mask.bits.size(), 0);
    std::vector<int> stack;
    for (int i = 0; i < mask.h; ++i) {
        for (int j = 0; j < mask.w; ++j) {
            const size_t idx = static_cast<size_t>(i) * mask.w + j;
            if (!mask.bits[idx] || out.labels[idx]) continue;
            const int id = static_cast<int>(out.sizes.size()) + 1;
            long size = 0;
            stack.push_back(static_cast<int>(idx));
            out.labels[idx] = id;
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                ++size;
                const int ci = cur / mask.w, cj = cur % mask.w;
                for (int di = -1; di <= 1; ++di) {
                    for (int dj = -1; dj <= 1; ++dj) {
                        if (di == 0 && dj == 0) continue;
                        const int ni = ci + di, nj = cj + dj;
                        if (!mask.in_bounds(ni, nj)) continue;
                        const size_t nidx = static_cast<size_t>(ni) * mask.w + nj;
                        if (mask.bits[nidx] && !out.labels[nidx]) {
                            out.labels[nidx] = id;
                            stack.push_back(static_cast<int>(nidx));
                        }
                    }
                }
            }
            out.sizes.push_back(size);
        }
    }
    return out;
}

namespace {

int component_count(const Mask2D& m) {
    return connected_components(m).count();
}

} // namespace

} // namespace lal
