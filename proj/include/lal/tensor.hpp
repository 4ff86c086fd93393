#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lal/common.hpp"

namespace lal {

// Dense 64-bit-float tensor, node payload in a computation graph.
// grad is empty until gradients flow; once allocated it mirrors data's size.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;

    Tensor() = default;
    Tensor(std::vector<int> shape_, bool requires_grad_ = false);

    int64_t numel() const;
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    void ensure_grad();
    void zero_grad();
    std::string shape_str() const;
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad = false);
TensorPtr make_tensor(std::vector<int> shape, std::vector<double> values, bool requires_grad = false);

// One recorded operation: kind, inputs, output and the closure that pushes
// output->grad back into the inputs' grads (accumulating).
struct GraphNode {
    const char* op;
    std::vector<TensorPtr> inputs;
    TensorPtr output;
    std::function<void()> backprop;
};

// Define-by-run tape. Ops execute eagerly and append one node each, so the
// node sequence is topologically ordered by construction and backward walks
// it in exact reverse order. A Graph and its tensors belong to one worker;
// parameter tensors may be shared read-only by concurrent forward passes.
class Graph {
public:
    // y[o,i,j] = bias[o] + sum_{c,u,v} x[c, i+u-(K-1)/2, j+v-(K-1)/2] * k[o,c,u,v]
    // K odd, stride 1, zero padding (same-size output).
    TensorPtr conv2d(const TensorPtr& x, const TensorPtr& kernel, const TensorPtr& bias);

    TensorPtr relu(const TensorPtr& x);    // derivative at exactly 0 is 0
    TensorPtr sigmoid(const TensorPtr& x);
    TensorPtr add(const TensorPtr& a, const TensorPtr& b);
    TensorPtr channel_concat(const TensorPtr& a, const TensorPtr& b);
    TensorPtr maxpool_2x2(const TensorPtr& x);
    TensorPtr nearest_upsample_2x2(const TensorPtr& x);

    // Multiplies channels [0, first_n) by factor, leaves [first_n, C) bit-identical.
    // Requires 0 < first_n < C.
    TensorPtr channel_scale(const TensorPtr& x, int first_n, double factor);

    TensorPtr sum(const TensorPtr& x); // scalar

    // Mean binary cross entropy against a constant {0,1} target, with the
    // prediction clamped to [1e-7, 1 - 1e-7] before the logs. Scalar output.
    TensorPtr bce(const TensorPtr& pred, const std::vector<double>& target);

    // ca*a + cb*b for scalar nodes; coefficients are graph constants.
    TensorPtr scalar_mix(const TensorPtr& a, const TensorPtr& b, double ca, double cb);

    // Default entrypoint: zeroes every grad reachable from the tape, seeds
    // loss grad with 1 and walks the tape backwards. Loss must be scalar.
    void backward(const TensorPtr& loss);

    // Accumulating variant: leaf grads are left untouched and add up, which
    // is what batch averaging wants; node-output grads are scratch and reset
    // on every call. Seeds loss grad with `seed`.
    void backward_accumulate(const TensorPtr& loss, double seed = 1.0);

    void zero_all_grads();
    size_t size() const { return nodes_.size(); }
    const GraphNode& node(size_t i) const { return nodes_[i]; }

    static constexpr double kProbClamp = 1e-7;

private:
    TensorPtr record(const char* op, std::vector<TensorPtr> inputs, TensorPtr out,
                     std::function<void()> backprop);
    size_t find_output_node(const TensorPtr& t) const;

    std::vector<GraphNode> nodes_;
};

} // namespace lal
