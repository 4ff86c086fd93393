#include "lal/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lal {

Tensor::Tensor(std::vector<int> shape_, bool requires_grad_)
    : shape(std::move(shape_)), requires_grad(requires_grad_) {
    int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeError("tensor dimension must be positive, got " + std::to_string(d));
        n *= d;
    }
    data.assign(static_cast<size_t>(n), 0.0);
}

int64_t Tensor::numel() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
    grad.assign(data.size(), 0.0);
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad) {
    return std::make_shared<Tensor>(std::move(shape), requires_grad);
}

TensorPtr make_tensor(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    auto t = std::make_shared<Tensor>(std::move(shape), requires_grad);
    if (values.size() != t->data.size())
        throw ShapeError("value count " + std::to_string(values.size()) + " does not fill shape " +
                         t->shape_str());
    t->data = std::move(values);
    return t;
}

TensorPtr Graph::record(const char* op, std::vector<TensorPtr> inputs, TensorPtr out,
                        std::function<void()> backprop) {
    nodes_.push_back(GraphNode{op, std::move(inputs), out, std::move(backprop)});
    return out;
}

static void check_rank(const TensorPtr& t, size_t rank, const char* op) {
    if (t->shape.size() != rank)
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + " tensor, got " +
                         t->shape_str());
}

TensorPtr Graph::conv2d(const TensorPtr& x, const TensorPtr& kernel, const TensorPtr& bias) {
    check_rank(x, 3, "conv2d input");
    check_rank(kernel, 4, "conv2d kernel");
    check_rank(bias, 1, "conv2d bias");
    const int C = x->dim(0), H = x->dim(1), W = x->dim(2);
    const int O = kernel->dim(0), KC = kernel->dim(1), K = kernel->dim(2);
    if (kernel->dim(3) != K) throw ShapeError("conv2d: kernel must be square, got " + kernel->shape_str());
    if (K % 2 == 0) throw ShapeError("conv2d: kernel size must be odd, got " + std::to_string(K));
    if (KC != C)
        throw ShapeError("conv2d: input channels " + x->shape_str() + " do not match kernel " +
                         kernel->shape_str());
    if (bias->dim(0) != O)
        throw ShapeError("conv2d: bias " + bias->shape_str() + " does not match kernel output channels " +
                         std::to_string(O));

    auto y = make_tensor({O, H, W});
    const int P = (K - 1) / 2;
    const size_t plane = static_cast<size_t>(H) * W;

    // Per-tap shifted AXPY over whole rows; inner loops stay contiguous so the
    // compiler can vectorize them.
    const double* xd = x->data.data();
    const double* kd = kernel->data.data();
    double* yd = y->data.data();
    for (int o = 0; o < O; ++o) {
        double b = bias->data[static_cast<size_t>(o)];
        std::fill(yd + o * plane, yd + (o + 1) * plane, b);
    }
    for (int o = 0; o < O; ++o) {
        double* yo = yd + o * plane;
        for (int c = 0; c < C; ++c) {
            const double* xc = xd + c * plane;
            const double* ktap = kd + ((static_cast<size_t>(o) * C + c) * K) * K;
            for (int u = 0; u < K; ++u) {
                for (int v = 0; v < K; ++v) {
                    const double kv = ktap[u * K + v];
                    const int di = u - P, dj = v - P;
                    const int i0 = std::max(0, -di), i1 = std::min(H, H - di);
                    const int j0 = std::max(0, -dj), j1 = std::min(W, W - dj);
                    for (int i = i0; i < i1; ++i) {
                        double* yrow = yo + static_cast<size_t>(i) * W;
                        const double* xrow = xc + static_cast<size_t>(i + di) * W + dj;
                        for (int j = j0; j < j1; ++j) yrow[j] += kv * xrow[j];
                    }
                }
            }
        }
    }

    auto backprop = [x, kernel, bias, y, C, H, W, O, K, P, plane]() {
        const double* gy = y->grad.data();
        x->ensure_grad();
        kernel->ensure_grad();
        bias->ensure_grad();
        double* gx = x->grad.data();
        double* gk = kernel->grad.data();
        double* gb = bias->grad.data();
        const double* xd = x->data.data();
        const double* kd = kernel->data.data();
        for (int o = 0; o < O; ++o) {
            const double* go = gy + o * plane;
            double s = 0.0;
            for (size_t i = 0; i < plane; ++i) s += go[i];
            gb[o] += s;
            for (int c = 0; c < C; ++c) {
                const double* xc = xd + c * plane;
                double* gxc = gx + c * plane;
                const size_t kbase = (static_cast<size_t>(o) * C + c) * K * K;
                for (int u = 0; u < K; ++u) {
                    for (int v = 0; v < K; ++v) {
                        const int di = u - P, dj = v - P;
                        const int i0 = std::max(0, -di), i1 = std::min(H, H - di);
                        const int j0 = std::max(0, -dj), j1 = std::min(W, W - dj);
                        const double kv = kd[kbase + u * K + v];
                        // four independent accumulators: fixed summation order
                        // (so results stay reproducible) without a serial
                        // dependence chain blocking vectorization
                        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
                        for (int i = i0; i < i1; ++i) {
                            const double* grow = go + static_cast<size_t>(i) * W;
                            const double* xrow = xc + static_cast<size_t>(i + di) * W + dj;
                            double* gxrow = gxc + static_cast<size_t>(i + di) * W + dj;
                            int j = j0;
                            for (; j + 4 <= j1; j += 4) {
                                gxrow[j] += kv * grow[j];
                                gxrow[j + 1] += kv * grow[j + 1];
                                gxrow[j + 2] += kv * grow[j + 2];
                                gxrow[j + 3] += kv * grow[j + 3];
                                a0 += grow[j] * xrow[j];
                                a1 += grow[j + 1] * xrow[j + 1];
                                a2 += grow[j + 2] * xrow[j + 2];
                                a3 += grow[j + 3] * xrow[j + 3];
                            }
                            for (; j < j1; ++j) {
                                gxrow[j] += kv * grow[j];
                                a0 += grow[j] * xrow[j];
                            }
                        }
                        gk[kbase + u * K + v] += (a0 + a1) + (a2 + a3);
                    }
                }
            }
        }
    };
    return record("conv2d", {x, kernel, bias}, y, backprop);
}

TensorPtr Graph::relu(const TensorPtr& x) {
    auto y = make_tensor(x->shape);
    for (size_t i = 0; i < x->data.size(); ++i) y->data[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
    auto backprop = [x, y]() {
        x->ensure_grad();
        for (size_t i = 0; i < x->data.size(); ++i)
            if (x->data[i] > 0.0) x->grad[i] += y->grad[i];
    };
    return record("relu", {x}, y, backprop);
}

TensorPtr Graph::sigmoid(const TensorPtr& x) {
    auto y = make_tensor(x->shape);
    for (size_t i = 0; i < x->data.size(); ++i) {
        const double v = x->data[i];
        double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        // keep the output strictly inside (0,1) even at saturation
        s = std::min(std::max(s, 1e-15), 1.0 - 1e-15);
        y->data[i] = s;
    }
    auto backprop = [x, y]() {
        x->ensure_grad();
        for (size_t i = 0; i < x->data.size(); ++i) {
            const double s = y->data[i];
            x->grad[i] += y->grad[i] * s * (1.0 - s);
        }
    };
    return record("sigmoid", {x}, y, backprop);
}

TensorPtr Graph::add(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape)
        throw ShapeError("add: shape mismatch " + a->shape_str() + " vs " + b->shape_str());
    auto y = make_tensor(a->shape);
    for (size_t i = 0; i < y->data.size(); ++i) y->data[i] = a->data[i] + b->data[i];
    auto backprop = [a, b, y]() {
        a->ensure_grad();
        b->ensure_grad();
        for (size_t i = 0; i < y->data.size(); ++i) {
            a->grad[i] += y->grad[i];
            b->grad[i] += y->grad[i];
        }
    };
    return record("add", {a, b}, y, backprop);
}

TensorPtr Graph::channel_concat(const TensorPtr& a, const TensorPtr& b) {
    check_rank(a, 3, "channel_concat");
    check_rank(b, 3, "channel_concat");
    if (a->dim(1) != b->dim(1) || a->dim(2) != b->dim(2))
        throw ShapeError("channel_concat: spatial mismatch " + a->shape_str() + " vs " + b->shape_str());
    const size_t na = a->data.size(), nb = b->data.size();
    auto y = make_tensor({a->dim(0) + b->dim(0), a->dim(1), a->dim(2)});
    std::copy(a->data.begin(), a->data.end(), y->data.begin());
    std::copy(b->data.begin(), b->data.end(), y->data.begin() + static_cast<long>(na));
    auto backprop = [a, b, y, na, nb]() {
        a->ensure_grad();
        b->ensure_grad();
        for (size_t i = 0; i < na; ++i) a->grad[i] += y->grad[i];
        for (size_t i = 0; i < nb; ++i) b->grad[i] += y->grad[na + i];
    };
    return record("channel_concat", {a, b}, y, backprop);
}

TensorPtr Graph::maxpool_2x2(const TensorPtr& x) {
    check_rank(x, 3, "maxpool_2x2");
    const int C = x->dim(0), H = x->dim(1), W = x->dim(2);
    if (H % 2 != 0 || W % 2 != 0)
        throw ShapeError("maxpool_2x2: spatial dims must be even, got " + x->shape_str());
    const int Ho = H / 2, Wo = W / 2;
    auto y = make_tensor({C, Ho, Wo});
    auto argmax = std::make_shared<std::vector<size_t>>(y->data.size());
    const double* xd = x->data.data();
    for (int c = 0; c < C; ++c) {
        for (int i = 0; i < Ho; ++i) {
            for (int j = 0; j < Wo; ++j) {
                const size_t base = (static_cast<size_t>(c) * H + 2 * i) * W + 2 * j;
                size_t best = base;
                double bv = xd[base];
                const size_t cand[3] = {base + 1, base + W, base + W + 1};
                for (size_t k : cand)
                    if (xd[k] > bv) { bv = xd[k]; best = k; }
                const size_t oi = (static_cast<size_t>(c) * Ho + i) * Wo + j;
                y->data[oi] = bv;
                (*argmax)[oi] = best;
            }
        }
    }
    auto backprop = [x, y, argmax]() {
        x->ensure_grad();
        for (size_t i = 0; i < y->data.size(); ++i) x->grad[(*argmax)[i]] += y->grad[i];
    };
    return record("maxpool_2x2", {x}, y, backprop);
}

TensorPtr Graph::nearest_upsample_2x2(const TensorPtr& x) {
    check_rank(x, 3, "nearest_upsample_2x2");
    const int C = x->dim(0), H = x->dim(1), W = x->dim(2);
    auto y = make_tensor({C, 2 * H, 2 * W});
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                const double v = x->data[(static_cast<size_t>(c) * H + i) * W + j];
                const size_t o = (static_cast<size_t>(c) * 2 * H + 2 * i) * 2 * W + 2 * j;
                y->data[o] = v;
                y->data[o + 1] = v;
                y->data[o + 2 * static_cast<size_t>(W)] = v;
                y->data[o + 2 * static_cast<size_t>(W) + 1] = v;
            }
    auto backprop = [x, y, C, H, W]() {
        x->ensure_grad();
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < H; ++i)
                for (int j = 0; j < W; ++j) {
                    const size_t o = (static_cast<size_t>(c) * 2 * H + 2 * i) * 2 * W + 2 * j;
                    x->grad[(static_cast<size_t>(c) * H + i) * W + j] +=
                        y->grad[o] + y->grad[o + 1] + y->grad[o + 2 * static_cast<size_t>(W)] +
                        y->grad[o + 2 * static_cast<size_t>(W) + 1];
                }
    };
    return record("nearest_upsample_2x2", {x}, y, backprop);
}

TensorPtr Graph::channel_scale(const TensorPtr& x, int first_n, double factor) {
    check_rank(x, 3, "channel_scale");
    const int C = x->dim(0);
    if (first_n <= 0 || first_n >= C)
        throw ValueError("channel_scale: first_n must satisfy 0 < n < " + std::to_string(C) + ", got " +
                         std::to_string(first_n));
    const size_t plane = static_cast<size_t>(x->dim(1)) * x->dim(2);
    const size_t split = static_cast<size_t>(first_n) * plane;
    auto y = make_tensor(x->shape);
    for (size_t i = 0; i < split; ++i) y->data[i] = x->data[i] * factor;
    std::copy(x->data.begin() + static_cast<long>(split), x->data.end(),
              y->data.begin() + static_cast<long>(split));
    auto backprop = [x, y, split, factor]() {
        x->ensure_grad();
        for (size_t i = 0; i < split; ++i) x->grad[i] += y->grad[i] * factor;
        for (size_t i = split; i < x->data.size(); ++i) x->grad[i] += y->grad[i];
    };
    return record("channel_scale", {x}, y, backprop);
}

TensorPtr Graph::sum(const TensorPtr& x) {
    auto y = make_tensor({1});
    double s = 0.0;
    for (double v : x->data) s += v;
    y->data[0] = s;
    auto backprop = [x, y]() {
        x->ensure_grad();
        const double g = y->grad[0];
        for (size_t i = 0; i < x->data.size(); ++i) x->grad[i] += g;
    };
    return record("sum", {x}, y, backprop);
}

TensorPtr Graph::bce(const TensorPtr& pred, const std::vector<double>& target) {
    if (pred->data.size() != target.size())
        throw ShapeError("bce: prediction has " + std::to_string(pred->data.size()) +
                         " values but target has " + std::to_string(target.size()));
    const size_t n = pred->data.size();
    auto tgt = std::make_shared<std::vector<double>>(target);
    auto y = make_tensor({1});
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double p = std::min(std::max(pred->data[i], kProbClamp), 1.0 - kProbClamp);
        const double t = (*tgt)[i];
        acc -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    y->data[0] = acc / static_cast<double>(n);
    auto backprop = [pred, y, tgt, n]() {
        pred->ensure_grad();
        const double g = y->grad[0] / static_cast<double>(n);
        for (size_t i = 0; i < n; ++i) {
            const double raw = pred->data[i];
            if (raw <= kProbClamp || raw >= 1.0 - kProbClamp) continue; // clamp is flat
            const double t = (*tgt)[i];
            pred->grad[i] += g * (-t / raw + (1.0 - t) / (1.0 - raw));
        }
    };
    return record("bce", {pred}, y, backprop);
}

TensorPtr Graph::scalar_mix(const TensorPtr& a, const TensorPtr& b, double ca, double cb) {
    if (a->numel() != 1 || b->numel() != 1)
        throw ShapeError("scalar_mix: both inputs must be scalar, got " + a->shape_str() + " and " +
                         b->shape_str());
    auto y = make_tensor({1});
    y->data[0] = ca * a->data[0] + cb * b->data[0];
    auto backprop = [a, b, y, ca, cb]() {
        a->ensure_grad();
        b->ensure_grad();
        a->grad[0] += ca * y->grad[0];
        b->grad[0] += cb * y->grad[0];
    };
    return record("scalar_mix", {a, b}, y, backprop);
}

size_t Graph::find_output_node(const TensorPtr& t) const {
    for (size_t i = nodes_.size(); i > 0; --i)
        if (nodes_[i - 1].output == t) return i - 1;
    throw ValueError("backward: tensor is not the output of any node in this graph");
}

void Graph::zero_all_grads() {
    for (auto& n : nodes_) {
        for (auto& in : n.inputs) in->zero_grad();
        n.output->zero_grad();
    }
}

void Graph::backward(const TensorPtr& loss) {
    zero_all_grads();
    backward_accumulate(loss, 1.0);
}

void Graph::backward_accumulate(const TensorPtr& loss, double seed) {
    if (loss->numel() != 1)
        throw ShapeError("backward: loss must be scalar, got " + loss->shape_str());
    const size_t last = find_output_node(loss);
    // Node outputs are scratch: reset them so repeated calls on one graph do
    // not re-propagate stale values. Leaf grads are left to accumulate.
    for (size_t i = 0; i <= last; ++i) nodes_[i].output->zero_grad();
    loss->ensure_grad();
    loss->grad[0] += seed;
    for (size_t i = last + 1; i > 0; --i) {
        auto& n = nodes_[i - 1];
        n.output->ensure_grad();
        n.backprop();
    }
}

} // namespace lal
