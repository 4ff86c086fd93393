#include "lal/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lal/rng.hpp"

namespace lal {

namespace {

std::vector<double> mask_targets(const Mask2D& m) {
    std::vector<double> t(m.bits.size());
    for (size_t i = 0; i < t.size(); ++i) t[i] = m.bits[i] ? 1.0 : 0.0;
    return t;
}

} // namespace

TensorPtr bce_loss(Graph& g, const TensorPtr& pred, const Mask2D& target) {
    if (pred->numel() != static_cast<int64_t>(target.bits.size()))
        throw ShapeError("bce_loss: prediction " + pred->shape_str() + " vs " +
                         std::to_string(target.h) + "x" + std::to_string(target.w) + " target");
    return g.bce(pred, mask_targets(target));
}

TensorPtr lal_loss(Graph& g, const TensorPtr& pred, const LabelPair& labels, double w) {
    if (w < 0.0 || w > 1.0)
        throw ValueError("adversarial weight must lie in [0,1], got " + std::to_string(w));
    require_same_shape(labels.pixel, labels.skeleton, "lal_loss");
    TensorPtr skel = bce_loss(g, pred, labels.skeleton);
    TensorPtr pixel = bce_loss(g, pred, labels.pixel);
    return g.scalar_mix(skel, pixel, 1.0 - w, w);
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ValueError("epochs must be >= 1, got " + std::to_string(epochs));
    if (batch_size < 1) throw ValueError("batch_size must be >= 1, got " + std::to_string(batch_size));
    if (!(lr >= 0.0)) throw ValueError("lr must be >= 0, got " + std::to_string(lr));
    if (optimizer != "adam" && optimizer != "sgd")
        throw ValueError("optimizer must be 'adam' or 'sgd', got '" + optimizer + "'");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ValueError("adam betas must lie in [0,1)");
    if (!(eps > 0.0)) throw ValueError("adam eps must be positive");
    if (fixed_w && (*fixed_w < 0.0 || *fixed_w > 1.0))
        throw ValueError("fixed_w must lie in [0,1], got " + std::to_string(*fixed_w));
}

Optimizer::Optimizer(std::vector<TensorPtr> params, const TrainConfig& config)
    : params_(std::move(params)), cfg_(config), adam_(config.optimizer == "adam") {
    cfg_.validate();
    if (adam_) {
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (const auto& p : params_) {
            m_.emplace_back(p->data.size(), 0.0);
            v_.emplace_back(p->data.size(), 0.0);
        }
    }
}

void Optimizer::zero_grad() {
    for (auto& p : params_) p->zero_grad();
}

void Optimizer::step() {
    ++t_;
    if (!adam_) {
        for (auto& p : params_) {
            if (p->grad.empty()) continue;
            for (size_t i = 0; i < p->data.size(); ++i) p->data[i] -= cfg_.lr * p->grad[i];
        }
        return;
    }
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t k = 0; k < params_.size(); ++k) {
        auto& p = *params_[k];
        if (p.grad.empty()) continue;
        auto& m = m_[k];
        auto& v = v_[k];
        for (size_t i = 0; i < p.data.size(); ++i) {
            const double g = p.grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

TrainReport train(ModelParams& params, const std::vector<Phantom>& dataset,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (dataset.empty()) throw ValueError("train: dataset is empty");
    const int mult = params.config.required_multiple();
    for (size_t i = 0; i < dataset.size(); ++i) {
        const auto& s = dataset[i];
        require_same_shape(s.labels.pixel, s.labels.skeleton, "train dataset");
        if (s.image.h != s.labels.pixel.h || s.image.w != s.labels.pixel.w)
            throw ShapeError("train: sample " + std::to_string(i) + " image/label shape mismatch");
        if (s.image.h % mult != 0 || s.image.w % mult != 0)
            throw ShapeError("train: sample " + std::to_string(i) + " is " + std::to_string(s.image.h) +
                             "x" + std::to_string(s.image.w) + ", needs dims divisible by " +
                             std::to_string(mult));
    }

    Rng rng(config.seed);
    Optimizer opt(params.tensors(), config);
    std::vector<size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), size_t{0});

    TrainReport report;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_sum = 0.0;
        int64_t epoch_steps = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
            const size_t stop = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            const double w = config.fixed_w ? *config.fixed_w : rng.uniform();

            opt.zero_grad();
            double batch_loss = 0.0;
            for (size_t k = start; k < stop; ++k) {
                const Phantom& s = dataset[order[k]];
                Graph g;
                TensorPtr pred = unet_forward_graph(g, params, image_to_tensor(s.image), w);
                TensorPtr loss = lal_loss(g, pred, s.labels, w);
                batch_loss += inv_batch * loss->data[0];
                g.backward_accumulate(loss, inv_batch);
            }
            if (!std::isfinite(batch_loss))
                throw Error("training diverged: non-finite loss at step " + std::to_string(report.steps) +
                            " (epoch " + std::to_string(epoch) + ")");
            opt.step();
            ++report.steps;
            epoch_sum += batch_loss;
            ++epoch_steps;
        }
        report.epoch_loss.push_back(epoch_sum / static_cast<double>(epoch_steps));
        if (on_epoch) on_epoch(epoch, report.epoch_loss.back());
    }
    return report;
}

} // namespace lal
