#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "compo/activation.hpp"
#include "compo/tree.hpp"

namespace compo {

/// Row-major sample storage shared by training and evaluation.
struct Dataset {
    std::size_t dim = 1;
    std::vector<double> xs; // size() * dim
    std::vector<double> ys;

    std::size_t size() const { return ys.size(); }
    std::span<const double> x(std::size_t i) const { return {xs.data() + i * dim, dim}; }
    void add(std::span<const double> x_, double y_) {
        xs.insert(xs.end(), x_.begin(), x_.end());
        ys.push_back(y_);
    }
};

/// Common surface of the trainable approximators. Forward evaluation is
/// pure; batch_grad is the only mutating entry point (batchnorm running
/// statistics are refreshed there in training mode).
class Net {
public:
    virtual ~Net() = default;

    virtual std::string kind() const = 0;
    virtual std::size_t input_dim() const = 0;

    /// Number of trainable scalars (batchnorm scale/shift included, running
    /// statistics excluded).
    virtual std::size_t param_count() const = 0;
    virtual std::vector<double> params() const = 0;
    virtual void set_params(std::span<const double> p) = 0;

    /// Forward value in inference mode.
    virtual double eval(std::span<const double> x) const = 0;

    /// MSE over the index subset of `data` and its gradient w.r.t. all
    /// trainable parameters. In training mode batchnorm normalizes by batch
    /// statistics (gradients flow through them) and running stats update.
    virtual double batch_grad(const Dataset& data, std::span<const std::size_t> idx,
                              std::vector<double>& grad, bool training) = 0;

    /// Same loss without gradient or side effects.
    virtual double batch_loss(const Dataset& data, std::span<const std::size_t> idx,
                              bool training) const = 0;

    /// Inference-mode MSE over a whole dataset.
    double mse(const Dataset& data) const;

    virtual std::unique_ptr<Net> clone() const = 0;
};

/// One-hidden-layer ridge-function network: x -> sum_k a_k sigma(w_k.x + b_k).
class ShallowNet : public Net {
public:
    struct Unit {
        std::vector<double> w;
        double b = 0;
        double a = 0;
    };

    ShallowNet(std::size_t input_dim, std::size_t units, SmoothActivation act = {});

    std::string kind() const override { return "shallow"; }
    std::size_t input_dim() const override { return input_dim_; }
    std::size_t units() const { return units_.size(); }
    std::size_t param_count() const override { return (input_dim_ + 2) * units_.size(); }
    std::vector<double> params() const override;
    void set_params(std::span<const double> p) override;
    double eval(std::span<const double> x) const override;
    double batch_grad(const Dataset& data, std::span<const std::size_t> idx,
                      std::vector<double>& grad, bool training) override;
    double batch_loss(const Dataset& data, std::span<const std::size_t> idx,
                      bool training) const override;
    std::unique_ptr<Net> clone() const override { return std::make_unique<ShallowNet>(*this); }

    Unit& unit(std::size_t k) { return units_[k]; }
    const Unit& unit(std::size_t k) const { return units_[k]; }
    const SmoothActivation& activation() const { return act_; }

    /// Forward value plus gradient w.r.t. the input coordinates (used by the
    /// tree backward pass) and, optionally, parameter gradients scaled by
    /// `gscale` accumulated into `param_grad`.
    double eval_backprop(std::span<const double> x, std::span<double> input_grad,
                         double gscale, std::span<double> param_grad) const;

private:
    std::size_t input_dim_;
    std::vector<Unit> units_;
    SmoothActivation act_;
};

/// Binary-tree network: one bivariate ShallowNet with n channels per
/// internal vertex, composed bottom-up.
class DeepTreeNet : public Net {
public:
    DeepTreeNet(TreeTopology topo, std::size_t channels, SmoothActivation act = {});

    std::string kind() const override { return "tree"; }
    std::size_t input_dim() const override { return topo_.leaves; }
    std::size_t channels() const { return channels_; }
    const TreeTopology& topology() const { return topo_; }
    std::size_t param_count() const override { return (topo_.leaves - 1) * 4 * channels_; }
    std::vector<double> params() const override;
    void set_params(std::span<const double> p) override;
    double eval(std::span<const double> x) const override;
    double batch_grad(const Dataset& data, std::span<const std::size_t> idx,
                      std::vector<double>& grad, bool training) override;
    double batch_loss(const Dataset& data, std::span<const std::size_t> idx,
                      bool training) const override;
    std::unique_ptr<Net> clone() const override { return std::make_unique<DeepTreeNet>(*this); }

    /// Forward value plus the output of every internal vertex (index v-1).
    std::vector<double> eval_nodes(std::span<const double> x) const;

    ShallowNet& node(std::size_t vertex);
    const ShallowNet& node(std::size_t vertex) const;

private:
    TreeTopology topo_;
    std::size_t channels_;
    std::vector<ShallowNet> nodes_; // index v-1
};

/// Fully connected multi-layer perceptron with optional batch normalization
/// between consecutive hidden layers (regression head: affine output, no
/// activation).
class GenericMLP : public Net {
public:
    struct BatchNormState {
        std::vector<double> gamma, beta;
        std::vector<double> run_mean, run_var;
        double eps = 1e-5;
        double momentum = 0.1;
    };

    GenericMLP(std::vector<std::size_t> dims, bool batchnorm, SmoothActivation act = {});

    std::string kind() const override { return "mlp"; }
    std::size_t input_dim() const override { return dims_.front(); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    bool batchnorm() const { return batchnorm_; }
    std::size_t param_count() const override;
    std::vector<double> params() const override;
    void set_params(std::span<const double> p) override;
    double eval(std::span<const double> x) const override;
    double batch_grad(const Dataset& data, std::span<const std::size_t> idx,
                      std::vector<double>& grad, bool training) override;
    double batch_loss(const Dataset& data, std::span<const std::size_t> idx,
                      bool training) const override;
    std::unique_ptr<Net> clone() const override { return std::make_unique<GenericMLP>(*this); }

    std::size_t layer_count() const { return dims_.size() - 1; }
    std::size_t bn_count() const { return bn_.size(); }
    const SmoothActivation& activation() const { return act_; }

    std::vector<double>& weights(std::size_t layer) { return W_[layer]; }
    std::vector<double>& biases(std::size_t layer) { return b_[layer]; }
    BatchNormState& bn(std::size_t i) { return bn_[i]; }
    const BatchNormState& bn(std::size_t i) const { return bn_[i]; }

private:
    struct BatchTrace;
    double forward_batch(const Dataset& data, std::span<const std::size_t> idx, bool training,
                         BatchTrace* trace, bool update_running, double* mse_out) const;

    std::vector<std::size_t> dims_;
    std::vector<std::vector<double>> W_; // layer l: dims[l+1] x dims[l], row-major
    std::vector<std::vector<double>> b_;
    std::vector<BatchNormState> bn_;    // after hidden layer i, i < hidden-1
    bool batchnorm_;
    SmoothActivation act_;

    friend class MlpSerialization;
};

/// Architecture descriptor consumed by init_network.
struct NetworkArch {
    enum class Kind { shallow, tree, mlp };
    Kind kind = Kind::shallow;
    std::size_t input_dim = 1;          // shallow / tree
    std::size_t units = 1;              // shallow units or tree channels
    std::vector<std::size_t> mlp_dims;  // mlp only
    bool batchnorm = false;             // mlp only
    double delta = 0.01;

    static NetworkArch shallow(std::size_t d, std::size_t n, double delta = 0.01);
    static NetworkArch tree(std::size_t d, std::size_t n, double delta = 0.01);
    static NetworkArch mlp(std::vector<std::size_t> dims, bool bn, double delta = 0.01);
    std::string describe() const;
};

/// Deterministic initialization: weights uniform on [-s, s] with
/// s = sqrt(6/(fan_in+fan_out)), biases zero, batchnorm scale 1 / shift 0.
std::unique_ptr<Net> init_network(const NetworkArch& arch, std::uint64_t seed);

} // namespace compo
