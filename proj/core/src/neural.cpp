#include "hamlearn/neural.hpp"

#include "hamlearn/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace hamlearn {

namespace {

constexpr Eigen::Index kBlockColumns = 256;

template <typename Enum, std::size_t N>
Enum parse_tag(const std::string& name, const std::pair<Enum, const char*> (&table)[N], const char* what) {
    for (const auto& [value, tag] : table)
        if (name == tag) return value;
    throw ConfigError(std::string("unknown ") + what + " '" + name + "'");
}

constexpr std::pair<Activation, const char*> kActivationTags[] = {
    {Activation::Tanh, "tanh"}, {Activation::ELU, "elu"}, {Activation::Softplus, "softplus"}, {Activation::Linear, "linear"}};
constexpr std::pair<InputTransform, const char*> kInputTags[] = {{InputTransform::Identity, "identity"},
                                                                 {InputTransform::PairDifference, "pair-difference"},
                                                                 {InputTransform::PairDistance, "pair-distance"}};
constexpr std::pair<OutputTransform, const char*> kOutputTags[] = {{OutputTransform::Identity, "identity"},
                                                                   {OutputTransform::Exp, "exp"}};

using BlockRef = Eigen::Ref<Mat>;
using ConstBlockRef = Eigen::Ref<const Mat>;

// Value and derivatives of the activation, elementwise over a block.
void activate(Activation a, const ConstBlockRef& z, BlockRef value, BlockRef d1, BlockRef d2) {
    switch (a) {
        case Activation::Tanh:
            value = z.array().tanh().matrix();
            d1 = (1.0 - value.array().square()).matrix();
            d2 = (-2.0 * value.array() * d1.array()).matrix();
            return;
        case Activation::Linear:
            value = z;
            d1.setOnes();
            d2.setZero();
            return;
        default:
            break;
    }
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            const auto jet = activation_jet(a, z(r, c));
            value(r, c) = jet.value;
            d1(r, c) = jet.d1;
            d2(r, c) = jet.d2;
        }
    }
}

void check_input(const DenseNetwork& net, const Vec& q) {
    if (static_cast<std::size_t>(q.size()) != net.input_dim())
        throw ConfigError("network expects input dimension " + std::to_string(net.input_dim()) + ", got " +
                          std::to_string(q.size()));
}

// Scratch matrices for one block of columns. Kept per thread and reused while the layer shapes stay
// the same, so a training step allocates nothing here.
struct Workspace {
    std::vector<int> dims;
    Eigen::Index raw = 0;
    std::vector<Mat> z, act, d1, d2, delta, e, zbar, ebar, dbar, back;
    Mat outputs, out_d1, residual;

    void prepare(const DenseNetwork& net) {
        const auto raw_dim = static_cast<Eigen::Index>(net.input_dim());
        if (dims == net.layer_dims && raw == raw_dim) return;
        dims = net.layer_dims;
        raw = raw_dim;
        const std::size_t layers = dims.size() - 1;
        for (auto* v : {&z, &act, &d1, &d2, &delta, &e, &zbar, &ebar, &dbar, &back}) v->assign(layers, Mat());
        for (std::size_t l = 0; l < layers; ++l) {
            act[l].resize(dims[l], kBlockColumns);
            delta[l].resize(dims[l], kBlockColumns);
            dbar[l].resize(dims[l], kBlockColumns);
            back[l].resize(dims[l], kBlockColumns);
            for (auto* m : {&z[l], &d1[l], &d2[l], &e[l], &zbar[l], &ebar[l]}) m->resize(dims[l + 1], kBlockColumns);
        }
        outputs.resize(1, kBlockColumns);
        out_d1.resize(1, kBlockColumns);
        residual.resize(raw, kBlockColumns);
    }
};

Workspace& workspace(const DenseNetwork& net) {
    thread_local Workspace ws;
    ws.prepare(net);
    return ws;
}

// Forward, input-gradient and (optionally) second reverse pass over blocks of at most kBlockColumns
// columns. Only one evaluator per thread may be live at a time.
class BlockEvaluator {
public:
    explicit BlockEvaluator(const DenseNetwork& net) : net_(net), ws_(workspace(net)) {}

    Mat::ColsBlockXpr cols(Mat& m) const { return m.leftCols(n_); }

    // Fills the outputs and, if `with_gradient`, delta[0] (gradient w.r.t. the transformed input).
    void run(const ConstBlockRef& inputs, bool with_gradient) {
        const std::size_t layers = net_.layer_count();
        n_ = inputs.cols();
        cols(ws_.act[0]) = inputs;
        for (std::size_t l = 0; l < layers; ++l) {
            auto z = cols(ws_.z[l]);
            z.noalias() = net_.weights[l] * cols(ws_.act[l]);
            z.colwise() += net_.biases[l];
            if (l + 1 < layers) activate(net_.activations[l], z, cols(ws_.act[l + 1]), cols(ws_.d1[l]), cols(ws_.d2[l]));
        }
        const auto z_out = cols(ws_.z[layers - 1]);
        auto out = cols(ws_.outputs);
        auto out_d1 = cols(ws_.out_d1);
        if (net_.output_transform == OutputTransform::Exp) {
            out = z_out.array().exp().matrix();
            out_d1 = out;
        } else {
            out = z_out;
            out_d1.setOnes();
        }
        if (!with_gradient) return;

        cols(ws_.e[layers - 1]) = out_d1;
        for (std::size_t l = layers; l-- > 0;) {
            cols(ws_.delta[l]).noalias() = net_.weights[l].transpose() * cols(ws_.e[l]);
            if (l >= 1) cols(ws_.e[l - 1]) = (cols(ws_.delta[l]).array() * cols(ws_.d1[l - 1]).array()).matrix();
        }
    }

    // Second reverse pass: given dL/d(delta_0) in input_adjoint(), accumulate dL/dtheta into `grad`.
    void accumulate(ParamGradient& grad) {
        const std::size_t layers = net_.layer_count();
        for (std::size_t l = 0; l < layers; ++l) {
            const auto dbar = cols(ws_.dbar[l]);
            auto ebar = cols(ws_.ebar[l]);
            auto zbar = cols(ws_.zbar[l]);
            grad.weights[l].noalias() += cols(ws_.e[l]) * dbar.transpose();
            ebar.noalias() = net_.weights[l] * dbar;
            if (l + 1 < layers) {
                zbar = (ebar.array() * cols(ws_.delta[l + 1]).array() * cols(ws_.d2[l]).array()).matrix();
                cols(ws_.dbar[l + 1]) = (ebar.array() * cols(ws_.d1[l]).array()).matrix();
            } else if (net_.output_transform == OutputTransform::Exp) {
                // the output transform's second derivative equals its first for exp, zero for identity
                zbar = (ebar.array() * cols(ws_.outputs).array()).matrix();
            } else {
                zbar.setZero();
            }
        }
        for (std::size_t l = layers; l-- > 0;) {
            const auto zbar = cols(ws_.zbar[l]);
            grad.biases[l].noalias() += zbar.rowwise().sum();
            grad.weights[l].noalias() += zbar * cols(ws_.act[l]).transpose();
            if (l >= 1) {
                auto back = cols(ws_.back[l]);
                back.noalias() = net_.weights[l].transpose() * zbar;
                cols(ws_.zbar[l - 1]).array() += back.array() * cols(ws_.d1[l - 1]).array();
            }
        }
    }

    auto outputs() const { return ws_.outputs.leftCols(n_); }
    auto input_gradient() const { return ws_.delta[0].leftCols(n_); }
    auto input_adjoint() { return cols(ws_.dbar[0]); }
    auto residual() { return cols(ws_.residual); }

private:
    const DenseNetwork& net_;
    Workspace& ws_;
    Eigen::Index n_ = 0;
};

// Residual (p_{i+1}-p_i)/h + grad_q V for a block, in raw coordinates.
void residual_block(const ResidualBatch& batch, Eigen::Index first, Eigen::Index cols, const ConstBlockRef& g,
                    BlockRef r) {
    const auto targets = batch.targets().middleCols(first, cols);
    switch (batch.transform()) {
        case InputTransform::Identity: r = targets + g; return;
        case InputTransform::PairDifference:
            r.topRows(3) = targets.topRows(3) + g;
            r.bottomRows(3) = targets.bottomRows(3) - g;
            return;
        case InputTransform::PairDistance: {
            const auto u = batch.directions().middleCols(first, cols);
            r.topRows(3) = targets.topRows(3) + (u.array().rowwise() * g.row(0).array()).matrix();
            r.bottomRows(3) = targets.bottomRows(3) - (u.array().rowwise() * g.row(0).array()).matrix();
            return;
        }
    }
}

// Pulls the raw-coordinate adjoint back to the transformed input.
void pull_back(const ResidualBatch& batch, Eigen::Index first, Eigen::Index cols, const ConstBlockRef& raw_adjoint,
               BlockRef out) {
    switch (batch.transform()) {
        case InputTransform::Identity: out = raw_adjoint; return;
        case InputTransform::PairDifference: out = raw_adjoint.topRows(3) - raw_adjoint.bottomRows(3); return;
        case InputTransform::PairDistance: {
            const auto u = batch.directions().middleCols(first, cols);
            out = (u.array() * (raw_adjoint.topRows(3) - raw_adjoint.bottomRows(3)).array()).colwise().sum().matrix();
            return;
        }
    }
}

void check_corpus(std::span<const Trajectory> corpus) {
    if (corpus.empty()) throw ConfigError("corpus is empty");
    const auto& first = corpus.front();
    if (first.transitions() < 1) throw ConfigError("trajectories need at least two states");
    for (const auto& t : corpus) {
        if (t.dim() != first.dim() || t.size() != first.size() || t.step() != first.step())
            throw ConfigError("ragged corpus: trajectories differ in dimension, length or step");
    }
}

}  // namespace

std::string to_string(Activation a) {
    for (const auto& [v, tag] : kActivationTags)
        if (v == a) return tag;
    return "unknown";
}
std::string to_string(InputTransform t) {
    for (const auto& [v, tag] : kInputTags)
        if (v == t) return tag;
    return "unknown";
}
std::string to_string(OutputTransform t) {
    for (const auto& [v, tag] : kOutputTags)
        if (v == t) return tag;
    return "unknown";
}
Activation activation_from_string(const std::string& name) { return parse_tag(name, kActivationTags, "activation"); }
InputTransform input_transform_from_string(const std::string& name) {
    return parse_tag(name, kInputTags, "input transform");
}
OutputTransform output_transform_from_string(const std::string& name) {
    return parse_tag(name, kOutputTags, "output transform");
}

ActivationJet activation_jet(Activation a, double x) {
    switch (a) {
        case Activation::Tanh: {
            const double t = std::tanh(x);
            const double d1 = 1.0 - t * t;
            return {t, d1, -2.0 * t * d1};
        }
        case Activation::ELU: {
            if (x >= 0.0) return {x, 1.0, 0.0};
            const double e = std::exp(x);
            return {e - 1.0, e, e};
        }
        case Activation::Softplus: {
            const double e = std::exp(-std::abs(x));
            const double s = x >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
            return {std::log1p(e) + std::max(x, 0.0), s, s * (1.0 - s)};
        }
        case Activation::Linear: return {x, 1.0, 0.0};
    }
    return {0.0, 0.0, 0.0};
}

std::size_t raw_input_dim(InputTransform t, std::size_t transformed_dim) {
    switch (t) {
        case InputTransform::Identity: return transformed_dim;
        case InputTransform::PairDifference:
            if (transformed_dim != 3) throw ConfigError("pair-difference transform feeds a 3-unit input layer");
            return 6;
        case InputTransform::PairDistance:
            if (transformed_dim != 1) throw ConfigError("pair-distance transform feeds a 1-unit input layer");
            return 6;
    }
    return 0;
}

std::size_t DenseNetwork::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
    return n;
}

void DenseNetwork::validate() const {
    if (layer_dims.size() < 2) throw ConfigError("network needs at least an input and an output layer");
    for (int d : layer_dims)
        if (d < 1) throw ConfigError("layer dimensions must be positive");
    if (layer_dims.back() != 1) throw ConfigError("network output dimension must be 1");
    (void)raw_input_dim(input_transform, static_cast<std::size_t>(layer_dims.front()));
    const std::size_t layers = layer_dims.size() - 1;
    if (weights.size() != layers || biases.size() != layers)
        throw ConfigError("weight/bias count does not match layer_dims");
    if (activations.size() != layers - 1)
        throw ConfigError("need one activation per hidden layer (" + std::to_string(layers - 1) + "), got " +
                          std::to_string(activations.size()));
    for (std::size_t l = 0; l < layers; ++l) {
        if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] ||
            biases[l].size() != layer_dims[l + 1])
            throw ConfigError("layer " + std::to_string(l) + " has inconsistent weight/bias shapes");
    }
}

bool DenseNetwork::operator==(const DenseNetwork& other) const {
    if (layer_dims != other.layer_dims || activations != other.activations ||
        input_transform != other.input_transform || output_transform != other.output_transform ||
        weights.size() != other.weights.size() || biases.size() != other.biases.size())
        return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols() ||
            weights[l] != other.weights[l] || biases[l].size() != other.biases[l].size() ||
            biases[l] != other.biases[l])
            return false;
    }
    return true;
}

ParamGradient ParamGradient::zeros_like(const DenseNetwork& net) {
    ParamGradient g;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        g.weights.push_back(Mat::Zero(net.weights[l].rows(), net.weights[l].cols()));
        g.biases.push_back(Vec::Zero(net.biases[l].size()));
    }
    return g;
}

double ParamGradient::squared_norm() const {
    double s = 0.0;
    for (const auto& w : weights) s += w.squaredNorm();
    for (const auto& b : biases) s += b.squaredNorm();
    return s;
}

ParamGradient& ParamGradient::operator+=(const ParamGradient& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        weights[l] += other.weights[l];
        biases[l] += other.biases[l];
    }
    return *this;
}

DenseNetwork init_network(const std::vector<int>& layer_dims, const std::vector<Activation>& activations,
                          InputTransform input_transform, OutputTransform output_transform, std::uint64_t seed) {
    DenseNetwork net;
    net.layer_dims = layer_dims;
    net.activations = activations;
    net.input_transform = input_transform;
    net.output_transform = output_transform;
    if (layer_dims.size() < 2) throw ConfigError("network needs at least an input and an output layer");
    for (int d : layer_dims)
        if (d < 1) throw ConfigError("layer dimensions must be positive");

    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const int fan_in = layer_dims[l];
        const int fan_out = layer_dims[l + 1];
        const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-s, s);
        Mat w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = dist(rng);
        net.weights.push_back(std::move(w));
        net.biases.push_back(Vec::Zero(fan_out));
    }
    net.validate();
    return net;
}

Vec transform_input(InputTransform t, const Vec& q) {
    switch (t) {
        case InputTransform::Identity: return q;
        case InputTransform::PairDifference:
            if (q.size() != 6) throw ConfigError("pair transforms need a 6-dimensional input");
            return q.head<3>() - q.tail<3>();
        case InputTransform::PairDistance: {
            if (q.size() != 6) throw ConfigError("pair transforms need a 6-dimensional input");
            Vec r(1);
            r[0] = (q.head<3>() - q.tail<3>()).norm();
            return r;
        }
    }
    return q;
}

double forward(const DenseNetwork& net, const Vec& q) {
    check_input(net, q);
    BlockEvaluator eval(net);
    eval.run(transform_input(net.input_transform, q), false);
    return eval.outputs()(0, 0);
}

Vec grad_input(const DenseNetwork& net, const Vec& q) {
    check_input(net, q);
    BlockEvaluator eval(net);
    const Vec x = transform_input(net.input_transform, q);
    eval.run(x, true);
    const Vec g = eval.input_gradient().col(0);
    switch (net.input_transform) {
        case InputTransform::Identity: return g;
        case InputTransform::PairDifference: {
            Vec out(6);
            out << g, -g;
            return out;
        }
        case InputTransform::PairDistance: {
            if (x[0] < kSingularityGuard) throw DomainError("pair-distance gradient undefined at zero separation");
            const Vec u = (q.head<3>() - q.tail<3>()) / x[0];
            Vec out(6);
            out << g[0] * u, -g[0] * u;
            return out;
        }
    }
    return g;
}

Vec forward_batch(const DenseNetwork& net, const Mat& points) {
    if (static_cast<std::size_t>(points.rows()) != net.input_dim())
        throw ConfigError("network expects input dimension " + std::to_string(net.input_dim()));
    Mat inputs(net.layer_dims.front(), points.cols());
    for (Eigen::Index c = 0; c < points.cols(); ++c)
        inputs.col(c) = transform_input(net.input_transform, points.col(c));
    BlockEvaluator eval(net);
    Vec out(points.cols());
    for (Eigen::Index first = 0; first < points.cols(); first += kBlockColumns) {
        const Eigen::Index cols = std::min(kBlockColumns, points.cols() - first);
        eval.run(inputs.middleCols(first, cols), false);
        out.segment(first, cols) = eval.outputs().row(0).transpose();
    }
    return out;
}

Vec flatten_parameters(const DenseNetwork& net) {
    Vec theta(static_cast<Eigen::Index>(net.parameter_count()));
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto& w = net.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) theta[k++] = w(r, c);
        for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) theta[k++] = net.biases[l][r];
    }
    return theta;
}

void assign_parameters(DenseNetwork& net, const Vec& theta) {
    if (static_cast<std::size_t>(theta.size()) != net.parameter_count())
        throw ConfigError("parameter vector has the wrong length");
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        auto& w = net.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = theta[k++];
        for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) net.biases[l][r] = theta[k++];
    }
}

Vec flatten_gradient(const ParamGradient& g) {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < g.weights.size(); ++l) n += g.weights[l].size() + g.biases[l].size();
    Vec out(n);
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        for (Eigen::Index r = 0; r < g.weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < g.weights[l].cols(); ++c) out[k++] = g.weights[l](r, c);
        for (Eigen::Index r = 0; r < g.biases[l].size(); ++r) out[k++] = g.biases[l][r];
    }
    return out;
}

void apply_update(DenseNetwork& net, const ParamGradient& grad, double rate) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        net.weights[l].noalias() -= rate * grad.weights[l];
        net.biases[l].noalias() -= rate * grad.biases[l];
    }
}

ResidualBatch::ResidualBatch(InputTransform transform, std::span<const Trajectory> corpus) : transform_(transform) {
    check_corpus(corpus);
    const Eigen::Index d = static_cast<Eigen::Index>(corpus.front().dim());
    const Eigen::Index per = static_cast<Eigen::Index>(corpus.front().transitions());
    const Eigen::Index total = per * static_cast<Eigen::Index>(corpus.size());
    const double h = corpus.front().step();
    if (transform != InputTransform::Identity && d != 6)
        throw ConfigError("pair transforms need 6-dimensional trajectories");

    Mat q(d, total);
    targets_.resize(d, total);
    Eigen::Index k = 0;
    for (const auto& traj : corpus) {
        q.middleCols(k, per) = traj.positions().leftCols(per);
        targets_.middleCols(k, per) = (traj.momenta().rightCols(per) - traj.momenta().leftCols(per)) / h;
        k += per;
    }
    switch (transform) {
        case InputTransform::Identity: inputs_ = std::move(q); break;
        case InputTransform::PairDifference: inputs_ = q.topRows(3) - q.bottomRows(3); break;
        case InputTransform::PairDistance: {
            const Mat diff = q.topRows(3) - q.bottomRows(3);
            inputs_ = diff.colwise().norm();
            for (Eigen::Index c = 0; c < total; ++c)
                if (inputs_(0, c) < kSingularityGuard)
                    throw DomainError("pair-distance input at zero separation (pair " + std::to_string(c) + ")");
            directions_ = diff.array().rowwise() / inputs_.row(0).array();
            break;
        }
    }
}

double loss(const DenseNetwork& net, std::span<const Trajectory> corpus) {
    return loss(net, ResidualBatch(net.input_transform, corpus));
}

double loss(const DenseNetwork& net, const ResidualBatch& batch) {
    net.validate();
    if (batch.transform() != net.input_transform || batch.raw_dim() != net.input_dim())
        throw ConfigError("batch does not match the network's input transform");
    BlockEvaluator eval(net);
    const Eigen::Index total = static_cast<Eigen::Index>(batch.size());
    double sum = 0.0;
    for (Eigen::Index first = 0; first < total; first += kBlockColumns) {
        const Eigen::Index cols = std::min(kBlockColumns, total - first);
        eval.run(batch.inputs().middleCols(first, cols), true);
        auto r = eval.residual();
        residual_block(batch, first, cols, eval.input_gradient(), r);
        sum += r.squaredNorm();
    }
    return sum / static_cast<double>(total);
}

std::pair<double, ParamGradient> loss_param_gradient(const DenseNetwork& net, std::span<const Trajectory> corpus) {
    return loss_param_gradient(net, ResidualBatch(net.input_transform, corpus));
}

std::pair<double, ParamGradient> loss_param_gradient(const DenseNetwork& net, const ResidualBatch& batch) {
    net.validate();
    if (batch.transform() != net.input_transform || batch.raw_dim() != net.input_dim())
        throw ConfigError("batch does not match the network's input transform");
    BlockEvaluator eval(net);
    ParamGradient grad = ParamGradient::zeros_like(net);
    const Eigen::Index total = static_cast<Eigen::Index>(batch.size());
    const double weight = 1.0 / static_cast<double>(total);
    double sum = 0.0;
    for (Eigen::Index first = 0; first < total; first += kBlockColumns) {
        const Eigen::Index cols = std::min(kBlockColumns, total - first);
        eval.run(batch.inputs().middleCols(first, cols), true);
        auto r = eval.residual();
        residual_block(batch, first, cols, eval.input_gradient(), r);
        sum += r.squaredNorm();
        r *= 2.0 * weight;
        pull_back(batch, first, cols, r, eval.input_adjoint());
        eval.accumulate(grad);
    }
    return {sum * weight, std::move(grad)};
}

namespace {

nlohmann::json matrix_rows(const Mat& m) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    return flat;
}

}  // namespace

std::string serialize(const DenseNetwork& net) {
    net.validate();
    nlohmann::json doc;
    doc["format_version"] = kModelFormatVersion;
    doc["layer_dims"] = net.layer_dims;
    std::vector<std::string> acts;
    for (auto a : net.activations) acts.push_back(to_string(a));
    doc["activations"] = acts;
    doc["input_transform"] = to_string(net.input_transform);
    doc["output_transform"] = to_string(net.output_transform);
    doc["weights"] = nlohmann::json::array();
    doc["biases"] = nlohmann::json::array();
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        doc["weights"].push_back(matrix_rows(net.weights[l]));
        doc["biases"].push_back(std::vector<double>(net.biases[l].data(), net.biases[l].data() + net.biases[l].size()));
    }
    return doc.dump(1) + "\n";
}

DenseNetwork deserialize(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (!doc.is_object() || !doc.contains("format_version")) throw FormatError("model file lacks format_version");
        const int version = doc.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw FormatError("unsupported model format version " + std::to_string(version));
        DenseNetwork net;
        net.layer_dims = doc.at("layer_dims").get<std::vector<int>>();
        for (const auto& a : doc.at("activations")) net.activations.push_back(activation_from_string(a.get<std::string>()));
        net.input_transform = input_transform_from_string(doc.at("input_transform").get<std::string>());
        net.output_transform = output_transform_from_string(doc.at("output_transform").get<std::string>());
        const auto& ws = doc.at("weights");
        const auto& bs = doc.at("biases");
        if (!ws.is_array() || !bs.is_array() || ws.size() + 1 != net.layer_dims.size() || bs.size() != ws.size())
            throw FormatError("model weight/bias arrays do not match layer_dims");
        for (std::size_t l = 0; l < ws.size(); ++l) {
            const auto flat = ws[l].get<std::vector<double>>();
            const int rows = net.layer_dims[l + 1];
            const int cols = net.layer_dims[l];
            if (flat.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
                throw FormatError("layer " + std::to_string(l) + " weight array has the wrong length");
            Mat w(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) w(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
            net.weights.push_back(std::move(w));
            const auto b = bs[l].get<std::vector<double>>();
            if (b.size() != static_cast<std::size_t>(rows))
                throw FormatError("layer " + std::to_string(l) + " bias array has the wrong length");
            net.biases.push_back(Eigen::Map<const Vec>(b.data(), rows));
        }
        net.validate();
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed model file: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("inconsistent model file: ") + e.what());
    }
}

}  // namespace hamlearn
