#pragma once

#include "hamlearn/neural.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace hamlearn {

struct TrainConfig {
    double learning_rate = 0.01;
    long steps = 1000;
    std::uint64_t seed = 0;
    /// Transition pairs per trajectory per stage; unset means one full-length stage.
    std::optional<std::size_t> chunk_size;
    long log_every = 1000;
    /// Chunked training stops after the first stage whose final loss is at or below this.
    std::optional<double> loss_threshold;
    /// Upper bound on the number of chunk stages; unset runs every stage.
    std::optional<std::size_t> max_stages;

    void validate() const;
};

struct LossRecord {
    long step;
    double loss;
};

struct TrainReport {
    std::vector<LossRecord> loss_history;
    double final_loss = 0.0;
    double wall_time = 0.0;
    /// Index into loss_history where each stage starts.
    std::vector<std::size_t> stage_starts;
};

/// Called with (global step, loss) every log_every steps.
using ProgressFn = std::function<void(long, double)>;

/// Full-batch gradient descent with a constant learning rate.
///
/// The loss is logged before step 0, every log_every steps, and once more
/// after the last update, so final_loss is the loss of the returned network.
/// Throws DivergenceError when the loss or gradient becomes non-finite.
std::pair<DenseNetwork, TrainReport> train(DenseNetwork net, std::span<const Trajectory> corpus,
                                           const TrainConfig& cfg, const ProgressFn& progress = {});

/// Successive windows of cfg.chunk_size transitions per trajectory, cfg.steps
/// updates each, carrying the weights between stages.
std::pair<DenseNetwork, TrainReport> train_chunked(DenseNetwork net, std::span<const Trajectory> corpus,
                                                   const TrainConfig& cfg, const ProgressFn& progress = {});

/// Same weights and biases, new hidden activations and output transform.
DenseNetwork swap_activations(const DenseNetwork& net, const std::vector<Activation>& activations,
                              OutputTransform output_transform);

}  // namespace hamlearn
