#pragma once

#include "lal/image.hpp"

namespace lal {

// Dense component labeling of a binary mask, 8-connectivity.
// labels: H x W of component ids, 0 = background, ids dense from 1.
struct ComponentLabeling {
    int h = 0;
    int w = 0;
    std::vector<int> labels;
    std::vector<long> sizes; // sizes[k] is the pixel count of component id k+1

    int count() const { return static_cast<int>(sizes.size()); }
    int label_at(int i, int j) const { return labels[static_cast<size_t>(i) * w + j]; }
};

// bit = 1 iff prob >= threshold (ties go positive). Threshold must lie in (0,1).
Mask2D binarize(const Image2D& prob, double threshold = 0.5);

// Zhang-Suen iterative thinning until a full iteration deletes nothing.
// Result is a subset of the input, idempotent, and never changes the number
// of 8-connected components.
Mask2D skeletonize(const Mask2D& mask);

ComponentLabeling connected_components(const Mask2D& mask);

} // namespace lal
