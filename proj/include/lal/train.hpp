#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lal/network.hpp"
#include "lal/phantom.hpp"

namespace lal {

// Mean BCE of a probability map against a binary mask.
TensorPtr bce_loss(Graph& g, const TensorPtr& pred, const Mask2D& target);

// (1-w) * bce(pred, skeleton) + w * bce(pred, pixel). At the endpoints the
// other branch's coefficient is exactly zero, so w=0 reproduces the pure
// skeleton loss bit-for-bit and w=1 the pure pixel loss.
TensorPtr lal_loss(Graph& g, const TensorPtr& pred, const LabelPair& labels, double w);

struct TrainConfig {
    int epochs = 20;
    int batch_size = 4;
    double lr = 1e-3;
    std::string optimizer = "adam"; // "adam" or "sgd"
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 0;
    // When unset, each optimization step draws its own w ~ U[0,1] shared by
    // the whole batch; set to pin training to a single operating point.
    std::optional<double> fixed_w;

    void validate() const;
};

// Adam (with bias correction) or plain SGD over a fixed parameter list.
// Reads each tensor's grad, updates data in place.
class Optimizer {
public:
    Optimizer(std::vector<TensorPtr> params, const TrainConfig& config);

    void zero_grad();
    void step();
    int64_t steps_taken() const { return t_; }

private:
    std::vector<TensorPtr> params_;
    TrainConfig cfg_;
    bool adam_;
    int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

struct TrainReport {
    std::vector<double> epoch_loss; // mean batch loss per epoch
    int64_t steps = 0;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

// Deterministic given (params seed, config.seed, dataset): one Rng drives
// epoch shuffles and per-step w draws in a fixed order. Gradients are
// averaged over the batch by seeding each sample's backward pass with
// 1/batch. Throws if the loss turns non-finite, naming the failing step.
TrainReport train(ModelParams& params, const std::vector<Phantom>& dataset,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

} // namespace lal
