#pragma once

#include "hamlearn/dynamics.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hamlearn {

enum class Activation { Tanh, ELU, Softplus, Linear };
enum class InputTransform { Identity, PairDifference, PairDistance };
enum class OutputTransform { Identity, Exp };

std::string to_string(Activation a);
std::string to_string(InputTransform t);
std::string to_string(OutputTransform t);
Activation activation_from_string(const std::string& name);
InputTransform input_transform_from_string(const std::string& name);
OutputTransform output_transform_from_string(const std::string& name);

/// Value, first and second derivative of an activation at x. ELU uses alpha = 1
/// and the x >= 0 branch at the origin.
struct ActivationJet {
    double value;
    double d1;
    double d2;
};
ActivationJet activation_jet(Activation a, double x);

/// Dimension of the raw position vector consumed by a transform whose output feeds
/// a first layer of width `transformed_dim`.
std::size_t raw_input_dim(InputTransform t, std::size_t transformed_dim);

/// Scalar-output dense feedforward network V(q; theta).
///
/// layer_dims = (n0, n1, ..., nL) with nL = 1; weights[l] is n_{l+1} x n_l.
/// Hidden layer l (0-based, l < L-1) applies activations[l]; the last affine
/// layer is followed by the output transform. n0 is the dimension after the
/// input transform.
struct DenseNetwork {
    std::vector<int> layer_dims;
    std::vector<Mat> weights;
    std::vector<Vec> biases;
    std::vector<Activation> activations;
    InputTransform input_transform = InputTransform::Identity;
    OutputTransform output_transform = OutputTransform::Identity;

    std::size_t layer_count() const { return weights.size(); }
    std::size_t hidden_count() const { return activations.size(); }
    std::size_t input_dim() const { return raw_input_dim(input_transform, static_cast<std::size_t>(layer_dims.front())); }
    std::size_t parameter_count() const;

    /// Throws ConfigError unless all shapes agree with layer_dims.
    void validate() const;

    bool operator==(const DenseNetwork& other) const;
};

/// Parameter-shaped container for dL/dtheta.
struct ParamGradient {
    std::vector<Mat> weights;
    std::vector<Vec> biases;

    static ParamGradient zeros_like(const DenseNetwork& net);
    double squared_norm() const;
    ParamGradient& operator+=(const ParamGradient& other);
};

/// Glorot-uniform weights, zero biases, deterministic in `seed`.
DenseNetwork init_network(const std::vector<int>& layer_dims, const std::vector<Activation>& activations,
                          InputTransform input_transform, OutputTransform output_transform, std::uint64_t seed);

/// Applies the input transform to a raw position vector.
Vec transform_input(InputTransform t, const Vec& q);

double forward(const DenseNetwork& net, const Vec& q);
/// Exact grad_q V(q; theta) including the input transform Jacobian.
Vec grad_input(const DenseNetwork& net, const Vec& q);

/// Flattened parameter vector: for each layer, the row-major weights then the bias.
Vec flatten_parameters(const DenseNetwork& net);
void assign_parameters(DenseNetwork& net, const Vec& theta);
Vec flatten_gradient(const ParamGradient& g);

/// theta <- theta - rate * grad
void apply_update(DenseNetwork& net, const ParamGradient& grad, double rate);

/// Transition pairs of a corpus prepared for repeated loss evaluation.
///
/// Stores the transformed inputs q_i, the momentum-difference targets
/// (p_{i+1} - p_i)/h and whatever the input transform needs to map the
/// network's input gradient back to raw coordinates.
class ResidualBatch {
public:
    ResidualBatch(InputTransform transform, std::span<const Trajectory> corpus);

    std::size_t size() const { return static_cast<std::size_t>(inputs_.cols()); }
    std::size_t raw_dim() const { return static_cast<std::size_t>(targets_.rows()); }
    InputTransform transform() const { return transform_; }

    const Mat& inputs() const { return inputs_; }
    const Mat& targets() const { return targets_; }
    const Mat& directions() const { return directions_; }

private:
    InputTransform transform_;
    Mat inputs_;
    Mat targets_;
    Mat directions_;
};

/// Mean over all transition pairs of |(p_{i+1}-p_i)/h + grad_q V(q_i)|^2.
double loss(const DenseNetwork& net, std::span<const Trajectory> corpus);
double loss(const DenseNetwork& net, const ResidualBatch& batch);

/// Loss and its exact parameter gradient (reverse mode over the input-gradient pass).
std::pair<double, ParamGradient> loss_param_gradient(const DenseNetwork& net, std::span<const Trajectory> corpus);
std::pair<double, ParamGradient> loss_param_gradient(const DenseNetwork& net, const ResidualBatch& batch);

/// Network values at each column of `points` (raw coordinates).
Vec forward_batch(const DenseNetwork& net, const Mat& points);

inline constexpr int kModelFormatVersion = 1;

/// JSON model document; doubles are written in shortest round-trip form.
std::string serialize(const DenseNetwork& net);
DenseNetwork deserialize(const std::string& text);

}  // namespace hamlearn
