#include "hamlearn/training.hpp"

#include "hamlearn/errors.hpp"

#include <chrono>
#include <cmath>

namespace hamlearn {

namespace {

// Runs cfg.steps updates on one prepared batch, appending to `report`.
void descend(DenseNetwork& net, const ResidualBatch& batch, const TrainConfig& cfg, long step_offset,
             TrainReport& report, const ProgressFn& progress) {
    report.stage_starts.push_back(report.loss_history.size());
    for (long step = 0; step < cfg.steps; ++step) {
        const long global = step_offset + step;
        auto [value, grad] = loss_param_gradient(net, batch);
        if (!std::isfinite(value) || !std::isfinite(grad.squared_norm()))
            throw DivergenceError("training loss became non-finite", global);
        if (step % cfg.log_every == 0) {
            report.loss_history.push_back({global, value});
            if (progress) progress(global, value);
        }
        apply_update(net, grad, cfg.learning_rate);
    }
    const long end = step_offset + cfg.steps;
    const double last = loss(net, batch);
    if (!std::isfinite(last)) throw DivergenceError("training loss became non-finite", end);
    report.loss_history.push_back({end, last});
    if (progress) progress(end, last);
    report.final_loss = last;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
    if (steps < 1) throw ConfigError("training needs at least one step");
    if (log_every < 1) throw ConfigError("log_every must be positive");
    if (chunk_size && *chunk_size < 1) throw ConfigError("chunk size must be positive");
    if (max_stages && *max_stages < 1) throw ConfigError("max_stages must be positive");
}

std::pair<DenseNetwork, TrainReport> train(DenseNetwork net, std::span<const Trajectory> corpus,
                                           const TrainConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    net.validate();
    const auto start = std::chrono::steady_clock::now();
    const ResidualBatch batch(net.input_transform, corpus);
    TrainReport report;
    descend(net, batch, cfg, 0, report, progress);
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(net), std::move(report)};
}

std::pair<DenseNetwork, TrainReport> train_chunked(DenseNetwork net, std::span<const Trajectory> corpus,
                                                   const TrainConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    net.validate();
    if (!cfg.chunk_size) throw ConfigError("chunked training needs chunk_size");
    if (corpus.empty()) throw ConfigError("corpus is empty");
    const std::size_t usable = corpus.front().transitions();
    const std::size_t chunk = *cfg.chunk_size;
    if (usable == 0 || usable % chunk != 0)
        throw ConfigError("chunk size " + std::to_string(chunk) + " does not divide the " + std::to_string(usable) +
                          " usable transitions");
    std::size_t stages = usable / chunk;
    if (cfg.max_stages) stages = std::min(stages, *cfg.max_stages);

    const auto start = std::chrono::steady_clock::now();
    TrainReport report;
    std::vector<Trajectory> window(corpus.size());
    for (std::size_t stage = 0; stage < stages; ++stage) {
        for (std::size_t j = 0; j < corpus.size(); ++j) {
            if (corpus[j].transitions() != usable) throw ConfigError("ragged corpus: trajectories differ in length");
            window[j] = corpus[j].window(stage * chunk, chunk);
        }
        const ResidualBatch batch(net.input_transform, window);
        descend(net, batch, cfg, static_cast<long>(stage) * cfg.steps, report, progress);
        if (cfg.loss_threshold && report.final_loss <= *cfg.loss_threshold) break;
    }
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(net), std::move(report)};
}

DenseNetwork swap_activations(const DenseNetwork& net, const std::vector<Activation>& activations,
                              OutputTransform output_transform) {
    if (activations.size() != net.hidden_count())
        throw ConfigError("expected " + std::to_string(net.hidden_count()) + " activations, got " +
                          std::to_string(activations.size()));
    DenseNetwork out = net;
    out.activations = activations;
    out.output_transform = output_transform;
    return out;
}

}  // namespace hamlearn
