#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lal/image.hpp"
#include "lal/tensor.hpp"

namespace lal {

// Encoder-decoder with the w-conditioned adjustment layer in every
// convolution block. depth = number of pooling steps; encoder channels are
// base, 2*base, ..., the bottleneck doubles once more and the decoder mirrors.
struct NetworkConfig {
    int depth = 3;
    int base_channels = 16;
    int in_channels = 1;
    int out_channels = 1;

    void validate() const;
    int required_multiple() const { return 1 << depth; }
};

// One conv block: conv1 -> relu -> scale first split_n channels by w ->
// conv2 -> relu. conv2 sees scaled and unscaled channels together, which is
// where the fusion happens.
struct AdjustmentBlockConfig {
    int in_channels;
    int out_channels;
    int split_n;          // 0 < split_n < out_channels
    int kernel_size = 3;

    void validate() const;
};

// split_n choice used everywhere: half the channels conditioned on w, the
// rest left as an unconditioned path.
int split_channels(int out_channels);

// All learnable weights, keyed by a stable path like "enc0/conv1/weight".
// Construction order is the forward order; immutable after training, so
// concurrent read-only forwards (parallel w sweeps) are safe.
struct ModelParams {
    NetworkConfig config;
    std::vector<std::pair<std::string, TensorPtr>> named;

    TensorPtr find(const std::string& path) const;
    std::vector<TensorPtr> tensors() const;
    int64_t total_parameters() const;
};

// (name, shape) of every parameter in forward order; the canonical layout
// that build_unet_lal creates and checkpoints are validated against.
std::vector<std::pair<std::string, std::vector<int>>> parameter_plan(const NetworkConfig& config);

// He-style init (normal, std = sqrt(2/fan_in)) from the seeded generator;
// biases zero. Deterministic given seed.
ModelParams build_unet_lal(const NetworkConfig& config, uint64_t seed);

// Closed-form parameter total for a config, for sanity checks.
int64_t expected_parameter_count(const NetworkConfig& config);

TensorPtr adjustment_block_forward(Graph& g, const TensorPtr& x, double w,
                                   const TensorPtr& w1, const TensorPtr& b1,
                                   const TensorPtr& w2, const TensorPtr& b2, int split_n,
                                   bool use_adjustment = true);

// Full U-Net pass on the graph; returns the sigmoid probability map node.
// use_adjustment=false runs the identically-parameterized scale-free network
// (the w=1 reference).
TensorPtr unet_forward_graph(Graph& g, const ModelParams& params, const TensorPtr& input, double w,
                             bool use_adjustment = true);

// Inference-only convenience: image in, probability map out.
Image2D unet_forward(const ModelParams& params, const Image2D& image, double w,
                     bool use_adjustment = true);

TensorPtr image_to_tensor(const Image2D& image, bool requires_grad = false);

} // namespace lal
