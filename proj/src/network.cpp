#include "lal/network.hpp"

#include <cmath>

#include "lal/rng.hpp"

namespace lal {

void NetworkConfig::validate() const {
    if (depth < 1) throw ValueError("network depth must be >= 1, got " + std::to_string(depth));
    if (base_channels < 2)
        throw ValueError("base_channels must be >= 2 so every block can split, got " +
                         std::to_string(base_channels));
    if (in_channels != 1 || out_channels != 1)
        throw ValueError("only single-channel input/output is supported");
}

void AdjustmentBlockConfig::validate() const {
    if (split_n <= 0 || split_n >= out_channels)
        throw ValueError("adjustment split must satisfy 0 < n < " + std::to_string(out_channels) +
                         ", got " + std::to_string(split_n));
    if (kernel_size % 2 == 0) throw ValueError("kernel_size must be odd");
}

int split_channels(int out_channels) { return (out_channels + 1) / 2; }

TensorPtr ModelParams::find(const std::string& path) const {
    for (const auto& [name, t] : named)
        if (name == path) return t;
    throw ValueError("no parameter named '" + path + "'");
}

std::vector<TensorPtr> ModelParams::tensors() const {
    std::vector<TensorPtr> out;
    out.reserve(named.size());
    for (const auto& [name, t] : named) out.push_back(t);
    return out;
}

int64_t ModelParams::total_parameters() const {
    int64_t n = 0;
    for (const auto& [name, t] : named) n += t->numel();
    return n;
}

namespace {

struct BlockShape {
    std::string name;
    int in_ch;
    int out_ch;
};

// Encoder blocks, bottleneck, decoder blocks, in forward order.
std::vector<BlockShape> block_plan(const NetworkConfig& cfg) {
    std::vector<BlockShape> plan;
    int ch = cfg.base_channels;
    int in = cfg.in_channels;
    for (int d = 0; d < cfg.depth; ++d) {
        plan.push_back({"enc" + std::to_string(d), in, ch});
        in = ch;
        ch *= 2;
    }
    plan.push_back({"bottleneck", in, ch});
    for (int d = cfg.depth - 1; d >= 0; --d) {
        const int skip = cfg.base_channels << d;
        plan.push_back({"dec" + std::to_string(d), ch + skip, skip});
        ch = skip;
    }
    return plan;
}

} // namespace

std::vector<std::pair<std::string, std::vector<int>>> parameter_plan(const NetworkConfig& config) {
    config.validate();
    std::vector<std::pair<std::string, std::vector<int>>> plan;
    for (const auto& b : block_plan(config)) {
        plan.emplace_back(b.name + "/conv1/weight", std::vector<int>{b.out_ch, b.in_ch, 3, 3});
        plan.emplace_back(b.name + "/conv1/bias", std::vector<int>{b.out_ch});
        plan.emplace_back(b.name + "/conv2/weight", std::vector<int>{b.out_ch, b.out_ch, 3, 3});
        plan.emplace_back(b.name + "/conv2/bias", std::vector<int>{b.out_ch});
    }
    plan.emplace_back("final/weight", std::vector<int>{config.out_channels, config.base_channels, 1, 1});
    plan.emplace_back("final/bias", std::vector<int>{config.out_channels});
    return plan;
}

ModelParams build_unet_lal(const NetworkConfig& config, uint64_t seed) {
    Rng rng(seed);
    ModelParams params;
    params.config = config;
    for (const auto& [name, shape] : parameter_plan(config)) {
        auto t = make_tensor(shape, true);
        if (name.ends_with("/weight")) {
            const double fan_in = static_cast<double>(t->numel() / t->dim(0));
            const double std = std::sqrt(2.0 / fan_in);
            for (double& v : t->data) v = rng.normal(0.0, std);
        }
        params.named.emplace_back(name, std::move(t));
    }
    return params;
}

int64_t expected_parameter_count(const NetworkConfig& config) {
    int64_t n = 0;
    for (const auto& [name, shape] : parameter_plan(config)) {
        int64_t e = 1;
        for (int d : shape) e *= d;
        n += e;
    }
    return n;
}

TensorPtr adjustment_block_forward(Graph& g, const TensorPtr& x, double w, const TensorPtr& w1,
                                   const TensorPtr& b1, const TensorPtr& w2, const TensorPtr& b2,
                                   int split_n, bool use_adjustment) {
    if (w < 0.0 || w > 1.0)
        throw ValueError("adversarial weight must lie in [0,1], got " + std::to_string(w));
    TensorPtr h = g.relu(g.conv2d(x, w1, b1));
    if (use_adjustment) h = g.channel_scale(h, split_n, w);
    return g.relu(g.conv2d(h, w2, b2));
}

TensorPtr unet_forward_graph(Graph& g, const ModelParams& params, const TensorPtr& input, double w,
                             bool use_adjustment) {
    const NetworkConfig& cfg = params.config;
    if (input->shape.size() != 3 || input->dim(0) != cfg.in_channels)
        throw ShapeError("unet_forward: expected " + std::to_string(cfg.in_channels) + "xHxW input, got " +
                         input->shape_str());
    const int mult = cfg.required_multiple();
    if (input->dim(1) % mult != 0 || input->dim(2) % mult != 0)
        throw ShapeError("unet_forward: spatial dims " + input->shape_str() + " must be divisible by " +
                         std::to_string(mult) + " (depth " + std::to_string(cfg.depth) + ")");

    auto block = [&](const std::string& name, const TensorPtr& x, int out_ch) {
        return adjustment_block_forward(g, x, w, params.find(name + "/conv1/weight"),
                                        params.find(name + "/conv1/bias"),
                                        params.find(name + "/conv2/weight"),
                                        params.find(name + "/conv2/bias"), split_channels(out_ch),
                                        use_adjustment);
    };

    std::vector<TensorPtr> skips;
    TensorPtr h = input;
    int ch = cfg.base_channels;
    for (int d = 0; d < cfg.depth; ++d) {
        h = block("enc" + std::to_string(d), h, ch);
        skips.push_back(h);
        h = g.maxpool_2x2(h);
        ch *= 2;
    }
    h = block("bottleneck", h, ch);
    for (int d = cfg.depth - 1; d >= 0; --d) {
        h = g.nearest_upsample_2x2(h);
        h = g.channel_concat(h, skips[static_cast<size_t>(d)]);
        h = block("dec" + std::to_string(d), h, cfg.base_channels << d);
    }
    h = g.conv2d(h, params.find("final/weight"), params.find("final/bias"));
    return g.sigmoid(h);
}

TensorPtr image_to_tensor(const Image2D& image, bool requires_grad) {
    auto t = make_tensor({1, image.h, image.w}, requires_grad);
    t->data = image.px;
    return t;
}

Image2D unet_forward(const ModelParams& params, const Image2D& image, double w, bool use_adjustment) {
    Graph g;
    TensorPtr out = unet_forward_graph(g, params, image_to_tensor(image), w, use_adjustment);
    Image2D prob(image.h, image.w);
    prob.px = out->data;
    return prob;
}

} // namespace lal
