#include "compo/networks.hpp"

#include <cmath>
#include <sstream>

#include "compo/rng.hpp"

namespace compo {

double Net::mse(const Dataset& data) const {
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return batch_loss(data, idx, false);
}

// ---------------------------------------------------------------------------
// ShallowNet
// ---------------------------------------------------------------------------

ShallowNet::ShallowNet(std::size_t input_dim, std::size_t units, SmoothActivation act)
    : input_dim_(input_dim), units_(units), act_(act) {
    if (input_dim < 1) throw ConfigError("ShallowNet: input_dim must be >= 1");
    for (auto& u : units_) u.w.assign(input_dim, 0.0);
}

std::vector<double> ShallowNet::params() const {
    std::vector<double> p;
    p.reserve(param_count());
    for (const auto& u : units_) {
        p.insert(p.end(), u.w.begin(), u.w.end());
        p.push_back(u.b);
        p.push_back(u.a);
    }
    return p;
}

void ShallowNet::set_params(std::span<const double> p) {
    if (p.size() != param_count()) throw ConfigError("ShallowNet: parameter count mismatch");
    std::size_t k = 0;
    for (auto& u : units_) {
        for (double& wj : u.w) wj = p[k++];
        u.b = p[k++];
        u.a = p[k++];
    }
}

double ShallowNet::eval(std::span<const double> x) const {
    if (x.size() != input_dim_) throw ConfigError("ShallowNet: input dimension mismatch");
    double out = 0;
    for (const auto& u : units_) {
        double z = u.b;
        for (std::size_t j = 0; j < input_dim_; ++j) z += u.w[j] * x[j];
        out += u.a * act_(z);
    }
    return out;
}

double ShallowNet::eval_backprop(std::span<const double> x, std::span<double> input_grad,
                                 double gscale, std::span<double> param_grad) const {
    double out = 0;
    for (std::size_t j = 0; j < input_grad.size(); ++j) input_grad[j] = 0;
    std::size_t k = 0;
    for (const auto& u : units_) {
        double z = u.b;
        for (std::size_t j = 0; j < input_dim_; ++j) z += u.w[j] * x[j];
        double s = act_(z);
        double ds = act_.grad(z);
        out += u.a * s;
        if (!input_grad.empty())
            for (std::size_t j = 0; j < input_dim_; ++j) input_grad[j] += u.a * ds * u.w[j];
        if (!param_grad.empty()) {
            for (std::size_t j = 0; j < input_dim_; ++j) param_grad[k + j] += gscale * u.a * ds * x[j];
            param_grad[k + input_dim_] += gscale * u.a * ds;
            param_grad[k + input_dim_ + 1] += gscale * s;
        }
        k += input_dim_ + 2;
    }
    return out;
}

double ShallowNet::batch_grad(const Dataset& data, std::span<const std::size_t> idx,
                              std::vector<double>& grad, bool) {
    if (idx.empty()) throw ConfigError("batch_grad: empty batch");
    if (data.dim != input_dim_) throw ConfigError("batch_grad: input dimension mismatch");
    grad.assign(param_count(), 0.0);
    const double inv = 1.0 / static_cast<double>(idx.size());
    double loss = 0;
    std::vector<double> per_sample(param_count());
    for (std::size_t i : idx) {
        std::fill(per_sample.begin(), per_sample.end(), 0.0);
        double pred = eval_backprop(data.x(i), {}, 1.0, per_sample);
        double r = pred - data.ys[i];
        if (!std::isfinite(r)) throw NumericError("ShallowNet: non-finite activation in batch");
        loss += r * r;
        double g = 2.0 * r * inv;
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g * per_sample[k];
    }
    return loss * inv;
}

double ShallowNet::batch_loss(const Dataset& data, std::span<const std::size_t> idx, bool) const {
    if (idx.empty()) throw ConfigError("batch_loss: empty batch");
    double loss = 0;
    for (std::size_t i : idx) {
        double r = eval(data.x(i)) - data.ys[i];
        loss += r * r;
    }
    return loss / static_cast<double>(idx.size());
}

// ---------------------------------------------------------------------------
// DeepTreeNet
// ---------------------------------------------------------------------------

DeepTreeNet::DeepTreeNet(TreeTopology topo, std::size_t channels, SmoothActivation act)
    : topo_(topo), channels_(channels) {
    nodes_.reserve(topo_.internal_count());
    for (std::size_t v = 1; v < topo_.leaves; ++v) nodes_.emplace_back(2, channels, act);
}

ShallowNet& DeepTreeNet::node(std::size_t vertex) {
    if (!topo_.valid_internal(vertex))
        throw ConfigError("DeepTreeNet: no internal vertex " + std::to_string(vertex));
    return nodes_[vertex - 1];
}

const ShallowNet& DeepTreeNet::node(std::size_t vertex) const {
    return const_cast<DeepTreeNet*>(this)->node(vertex);
}

std::vector<double> DeepTreeNet::params() const {
    std::vector<double> p;
    p.reserve(param_count());
    for (const auto& n : nodes_) {
        auto q = n.params();
        p.insert(p.end(), q.begin(), q.end());
    }
    return p;
}

void DeepTreeNet::set_params(std::span<const double> p) {
    if (p.size() != param_count()) throw ConfigError("DeepTreeNet: parameter count mismatch");
    std::size_t off = 0;
    for (auto& n : nodes_) {
        n.set_params(p.subspan(off, n.param_count()));
        off += n.param_count();
    }
}

std::vector<double> DeepTreeNet::eval_nodes(std::span<const double> x) const {
    if (x.size() != topo_.leaves) throw ConfigError("DeepTreeNet: input dimension mismatch");
    const std::size_t d = topo_.leaves;
    std::vector<double> val(2 * d);
    for (std::size_t i = 0; i < d; ++i) val[d + i] = x[i];
    for (std::size_t v = d; v-- > 1;) {
        double in[2] = {val[2 * v], val[2 * v + 1]};
        val[v] = nodes_[v - 1].eval(std::span<const double>(in, 2));
    }
    return {val.begin() + 1, val.begin() + static_cast<std::ptrdiff_t>(d)};
}

double DeepTreeNet::eval(std::span<const double> x) const { return eval_nodes(x)[0]; }

double DeepTreeNet::batch_grad(const Dataset& data, std::span<const std::size_t> idx,
                               std::vector<double>& grad, bool) {
    if (idx.empty()) throw ConfigError("batch_grad: empty batch");
    if (data.dim != topo_.leaves) throw ConfigError("batch_grad: input dimension mismatch");
    grad.assign(param_count(), 0.0);
    const std::size_t d = topo_.leaves;
    const std::size_t node_params = 4 * channels_;
    const double inv = 1.0 / static_cast<double>(idx.size());
    double loss = 0;
    std::vector<double> val(2 * d), up(d);
    for (std::size_t i : idx) {
        auto x = data.x(i);
        for (std::size_t j = 0; j < d; ++j) val[d + j] = x[j];
        for (std::size_t v = d; v-- > 1;) {
            double in[2] = {val[2 * v], val[2 * v + 1]};
            val[v] = nodes_[v - 1].eval(std::span<const double>(in, 2));
        }
        double r = val[1] - data.ys[i];
        if (!std::isfinite(r)) throw NumericError("DeepTreeNet: non-finite activation in batch");
        loss += r * r;
        // upstream sensitivities, parents before children in heap order
        up[1] = 2.0 * r * inv;
        double in_grad[2];
        for (std::size_t v = 1; v < d; ++v) {
            double in[2] = {val[2 * v], val[2 * v + 1]};
            nodes_[v - 1].eval_backprop(std::span<const double>(in, 2),
                                        std::span<double>(in_grad, 2), up[v],
                                        std::span<double>(grad).subspan((v - 1) * node_params,
                                                                        node_params));
            if (2 * v < d) up[2 * v] = up[v] * in_grad[0];
            if (2 * v + 1 < d) up[2 * v + 1] = up[v] * in_grad[1];
        }
    }
    return loss * inv;
}

double DeepTreeNet::batch_loss(const Dataset& data, std::span<const std::size_t> idx, bool) const {
    if (idx.empty()) throw ConfigError("batch_loss: empty batch");
    double loss = 0;
    for (std::size_t i : idx) {
        double r = eval(data.x(i)) - data.ys[i];
        loss += r * r;
    }
    return loss / static_cast<double>(idx.size());
}

// ---------------------------------------------------------------------------
// GenericMLP
// ---------------------------------------------------------------------------

GenericMLP::GenericMLP(std::vector<std::size_t> dims, bool batchnorm, SmoothActivation act)
    : dims_(std::move(dims)), batchnorm_(batchnorm), act_(act) {
    if (dims_.size() < 2) throw ConfigError("GenericMLP: need at least input and output widths");
    if (dims_.back() != 1) throw ConfigError("GenericMLP: regression head requires output width 1");
    for (std::size_t w : dims_)
        if (w < 1) throw ConfigError("GenericMLP: zero layer width");
    const std::size_t layers = dims_.size() - 1;
    W_.resize(layers);
    b_.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        W_[l].assign(dims_[l + 1] * dims_[l], 0.0);
        b_[l].assign(dims_[l + 1], 0.0);
    }
    if (batchnorm_ && layers >= 3) {
        bn_.resize(layers - 2);
        for (std::size_t i = 0; i < bn_.size(); ++i) {
            const std::size_t w = dims_[i + 1];
            bn_[i].gamma.assign(w, 1.0);
            bn_[i].beta.assign(w, 0.0);
            bn_[i].run_mean.assign(w, 0.0);
            bn_[i].run_var.assign(w, 1.0);
        }
    }
}

std::size_t GenericMLP::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) n += (dims_[l] + 1) * dims_[l + 1];
    for (const auto& bn : bn_) n += 2 * bn.gamma.size();
    return n;
}

std::vector<double> GenericMLP::params() const {
    std::vector<double> p;
    p.reserve(param_count());
    for (std::size_t l = 0; l < W_.size(); ++l) {
        p.insert(p.end(), W_[l].begin(), W_[l].end());
        p.insert(p.end(), b_[l].begin(), b_[l].end());
        if (l < bn_.size()) {
            p.insert(p.end(), bn_[l].gamma.begin(), bn_[l].gamma.end());
            p.insert(p.end(), bn_[l].beta.begin(), bn_[l].beta.end());
        }
    }
    return p;
}

void GenericMLP::set_params(std::span<const double> p) {
    if (p.size() != param_count()) throw ConfigError("GenericMLP: parameter count mismatch");
    std::size_t k = 0;
    auto take = [&](std::vector<double>& dst) {
        for (double& v : dst) v = p[k++];
    };
    for (std::size_t l = 0; l < W_.size(); ++l) {
        take(W_[l]);
        take(b_[l]);
        if (l < bn_.size()) {
            take(bn_[l].gamma);
            take(bn_[l].beta);
        }
    }
}

double GenericMLP::eval(std::span<const double> x) const {
    if (x.size() != dims_.front()) throw ConfigError("GenericMLP: input dimension mismatch");
    std::vector<double> h(x.begin(), x.end()), u;
    const std::size_t layers = dims_.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = dims_[l], out = dims_[l + 1];
        u.assign(out, 0.0);
        for (std::size_t r = 0; r < out; ++r) {
            double z = b_[l][r];
            const double* row = W_[l].data() + r * in;
            for (std::size_t c = 0; c < in; ++c) z += row[c] * h[c];
            u[r] = z;
        }
        if (l + 1 < layers) {
            for (double& z : u) z = act_(z);
            if (l < bn_.size()) {
                const auto& bn = bn_[l];
                for (std::size_t r = 0; r < u.size(); ++r)
                    u[r] = bn.gamma[r] * (u[r] - bn.run_mean[r]) /
                               std::sqrt(bn.run_var[r] + bn.eps) +
                           bn.beta[r];
            }
        }
        h = u;
    }
    return h[0];
}

struct GenericMLP::BatchTrace {
    // per layer: pre-activation U, post-activation A, bn normalized Xhat,
    // layer input H (H[0] is the batch input)
    std::vector<std::vector<double>> U, A, Xhat, H;
    std::vector<std::vector<double>> mean, var;
};

double GenericMLP::forward_batch(const Dataset& data, std::span<const std::size_t> idx,
                                 bool training, BatchTrace* trace, bool update_running,
                                 double* mse_out) const {
    const std::size_t B = idx.size();
    const std::size_t layers = dims_.size() - 1;
    std::vector<double> H(B * dims_.front());
    for (std::size_t i = 0; i < B; ++i) {
        auto x = data.x(idx[i]);
        std::copy(x.begin(), x.end(), H.begin() + i * dims_.front());
    }
    if (trace) {
        trace->U.resize(layers);
        trace->A.resize(layers);
        trace->Xhat.resize(layers);
        trace->H.resize(layers + 1);
        trace->mean.resize(layers);
        trace->var.resize(layers);
        trace->H[0] = H;
    }
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = dims_[l], out = dims_[l + 1];
        std::vector<double> U(B * out);
        for (std::size_t i = 0; i < B; ++i) {
            const double* hrow = H.data() + i * in;
            double* urow = U.data() + i * out;
            for (std::size_t r = 0; r < out; ++r) {
                double z = b_[l][r];
                const double* row = W_[l].data() + r * in;
                for (std::size_t c = 0; c < in; ++c) z += row[c] * hrow[c];
                urow[r] = z;
            }
        }
        if (trace) trace->U[l] = U;
        if (l + 1 < layers) {
            std::vector<double> A(B * out);
            for (std::size_t i = 0; i < B * out; ++i) {
                A[i] = act_(U[i]);
                if (!std::isfinite(A[i]))
                    throw NumericError("GenericMLP: non-finite activation at layer " +
                                       std::to_string(l));
            }
            if (trace) trace->A[l] = A;
            if (l < bn_.size()) {
                const auto& bn = bn_[l];
                std::vector<double> mean(out, 0.0), var(out, 0.0), xhat(B * out);
                if (training) {
                    for (std::size_t i = 0; i < B; ++i)
                        for (std::size_t r = 0; r < out; ++r) mean[r] += A[i * out + r];
                    for (double& m : mean) m /= static_cast<double>(B);
                    for (std::size_t i = 0; i < B; ++i)
                        for (std::size_t r = 0; r < out; ++r) {
                            double dlt = A[i * out + r] - mean[r];
                            var[r] += dlt * dlt;
                        }
                    for (double& v : var) v /= static_cast<double>(B);
                } else {
                    mean = bn.run_mean;
                    var = bn.run_var;
                }
                std::vector<double> inv_sd(out);
                for (std::size_t r = 0; r < out; ++r) inv_sd[r] = 1.0 / std::sqrt(var[r] + bn.eps);
                std::vector<double> Z(B * out);
                for (std::size_t i = 0; i < B; ++i)
                    for (std::size_t r = 0; r < out; ++r) {
                        double xh = (A[i * out + r] - mean[r]) * inv_sd[r];
                        xhat[i * out + r] = xh;
                        Z[i * out + r] = bn.gamma[r] * xh + bn.beta[r];
                    }
                if (trace) {
                    trace->Xhat[l] = xhat;
                    trace->mean[l] = mean;
                    trace->var[l] = var;
                }
                if (update_running && training) {
                    auto& mbn = const_cast<GenericMLP*>(this)->bn_[l];
                    for (std::size_t r = 0; r < out; ++r) {
                        mbn.run_mean[r] = (1 - bn.momentum) * bn.run_mean[r] + bn.momentum * mean[r];
                        mbn.run_var[r] = (1 - bn.momentum) * bn.run_var[r] + bn.momentum * var[r];
                    }
                }
                H = Z;
            } else {
                H = A;
            }
            if (trace) trace->H[l + 1] = H;
        } else {
            H = U;
            if (trace) trace->H[l + 1] = H;
        }
    }
    double loss = 0;
    for (std::size_t i = 0; i < B; ++i) {
        double r = H[i] - data.ys[idx[i]];
        loss += r * r;
    }
    loss /= static_cast<double>(B);
    if (mse_out) *mse_out = loss;
    return loss;
}

double GenericMLP::batch_loss(const Dataset& data, std::span<const std::size_t> idx,
                              bool training) const {
    if (idx.empty()) throw ConfigError("batch_loss: empty batch");
    if (data.dim != dims_.front()) throw ConfigError("batch_loss: input dimension mismatch");
    return forward_batch(data, idx, training, nullptr, false, nullptr);
}

double GenericMLP::batch_grad(const Dataset& data, std::span<const std::size_t> idx,
                              std::vector<double>& grad, bool training) {
    if (idx.empty()) throw ConfigError("batch_grad: empty batch");
    if (data.dim != dims_.front()) throw ConfigError("batch_grad: input dimension mismatch");
    const std::size_t B = idx.size();
    const std::size_t layers = dims_.size() - 1;
    BatchTrace tr;
    double loss = forward_batch(data, idx, training, &tr, true, nullptr);

    grad.assign(param_count(), 0.0);
    // parameter offsets per layer block
    std::vector<std::size_t> off(layers);
    {
        std::size_t k = 0;
        for (std::size_t l = 0; l < layers; ++l) {
            off[l] = k;
            k += (dims_[l] + 1) * dims_[l + 1];
            if (l < bn_.size()) k += 2 * dims_[l + 1];
        }
    }

    // dL/d(output of layer stack)
    std::vector<double> dH(B);
    for (std::size_t i = 0; i < B; ++i)
        dH[i] = 2.0 * (tr.H[layers][i] - data.ys[idx[i]]) / static_cast<double>(B);

    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = dims_[l], out = dims_[l + 1];
        std::vector<double> dU;
        if (l + 1 == layers) {
            dU = dH; // affine output head
        } else {
            // dH is w.r.t. the block output (post bn if present)
            std::vector<double> dA(B * out);
            if (l < bn_.size()) {
                const auto& bn = bn_[l];
                const auto& xhat = tr.Xhat[l];
                double* ggam = grad.data() + off[l] + (in + 1) * out;
                double* gbet = ggam + out;
                std::vector<double> dxhat(B * out);
                for (std::size_t i = 0; i < B; ++i)
                    for (std::size_t r = 0; r < out; ++r) {
                        double d = dH[i * out + r];
                        ggam[r] += d * xhat[i * out + r];
                        gbet[r] += d;
                        dxhat[i * out + r] = d * bn.gamma[r];
                    }
                if (training) {
                    // through batch statistics
                    std::vector<double> sum_dx(out, 0.0), sum_dx_xhat(out, 0.0);
                    for (std::size_t i = 0; i < B; ++i)
                        for (std::size_t r = 0; r < out; ++r) {
                            sum_dx[r] += dxhat[i * out + r];
                            sum_dx_xhat[r] += dxhat[i * out + r] * xhat[i * out + r];
                        }
                    for (std::size_t r = 0; r < out; ++r) {
                        double inv_sd = 1.0 / std::sqrt(tr.var[l][r] + bn.eps);
                        for (std::size_t i = 0; i < B; ++i) {
                            double term = dxhat[i * out + r] - sum_dx[r] / B -
                                          xhat[i * out + r] * sum_dx_xhat[r] / B;
                            dA[i * out + r] = inv_sd * term;
                        }
                    }
                } else {
                    for (std::size_t r = 0; r < out; ++r) {
                        double inv_sd = 1.0 / std::sqrt(bn.run_var[r] + bn.eps);
                        for (std::size_t i = 0; i < B; ++i)
                            dA[i * out + r] = dxhat[i * out + r] * inv_sd;
                    }
                }
            } else {
                dA = dH;
            }
            dU.assign(B * out, 0.0);
            const auto& U = tr.U[l];
            for (std::size_t i = 0; i < B * out; ++i) dU[i] = dA[i] * act_.grad(U[i]);
        }
        // accumulate dW, db; propagate dH to the previous block
        const auto& Hin = tr.H[l];
        double* gW = grad.data() + off[l];
        double* gb = gW + in * out;
        for (std::size_t i = 0; i < B; ++i) {
            const double* hrow = Hin.data() + i * in;
            const double* durow = dU.data() + i * out;
            for (std::size_t r = 0; r < out; ++r) {
                double d = durow[r];
                double* grow = gW + r * in;
                for (std::size_t c = 0; c < in; ++c) grow[c] += d * hrow[c];
                gb[r] += d;
            }
        }
        if (l > 0) {
            std::vector<double> dHprev(B * in, 0.0);
            for (std::size_t i = 0; i < B; ++i) {
                const double* durow = dU.data() + i * out;
                double* drow = dHprev.data() + i * in;
                for (std::size_t r = 0; r < out; ++r) {
                    const double* wrow = W_[l].data() + r * in;
                    double d = durow[r];
                    for (std::size_t c = 0; c < in; ++c) drow[c] += d * wrow[c];
                }
            }
            dH = std::move(dHprev);
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// init_network
// ---------------------------------------------------------------------------

NetworkArch NetworkArch::shallow(std::size_t d, std::size_t n, double delta) {
    NetworkArch a;
    a.kind = Kind::shallow;
    a.input_dim = d;
    a.units = n;
    a.delta = delta;
    return a;
}

NetworkArch NetworkArch::tree(std::size_t d, std::size_t n, double delta) {
    NetworkArch a;
    a.kind = Kind::tree;
    a.input_dim = d;
    a.units = n;
    a.delta = delta;
    return a;
}

NetworkArch NetworkArch::mlp(std::vector<std::size_t> dims, bool bn, double delta) {
    NetworkArch a;
    a.kind = Kind::mlp;
    a.mlp_dims = std::move(dims);
    a.batchnorm = bn;
    a.delta = delta;
    return a;
}

std::string NetworkArch::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::shallow: os << "shallow(d=" << input_dim << ",n=" << units << ")"; break;
        case Kind::tree: os << "tree(d=" << input_dim << ",n=" << units << ")"; break;
        case Kind::mlp:
            os << "mlp(";
            for (std::size_t i = 0; i < mlp_dims.size(); ++i) os << (i ? "-" : "") << mlp_dims[i];
            os << (batchnorm ? ",bn" : "") << ")";
            break;
    }
    return os.str();
}

namespace {

void init_shallow(ShallowNet& net, Rng& rng) {
    const std::size_t d = net.input_dim();
    const std::size_t n = net.units();
    const double s_hidden = std::sqrt(6.0 / static_cast<double>(d + n));
    const double s_out = std::sqrt(6.0 / static_cast<double>(n + 1));
    for (std::size_t k = 0; k < n; ++k) {
        auto& u = net.unit(k);
        for (double& w : u.w) w = rng.uniform(-s_hidden, s_hidden);
        u.b = 0.0;
    }
    for (std::size_t k = 0; k < n; ++k) net.unit(k).a = rng.uniform(-s_out, s_out);
}

} // namespace

std::unique_ptr<Net> init_network(const NetworkArch& arch, std::uint64_t seed) {
    Rng rng(seed);
    SmoothActivation act(arch.delta);
    switch (arch.kind) {
        case NetworkArch::Kind::shallow: {
            if (arch.units < 1) throw ConfigError("init_network: shallow net needs units >= 1");
            auto net = std::make_unique<ShallowNet>(arch.input_dim, arch.units, act);
            init_shallow(*net, rng);
            return net;
        }
        case NetworkArch::Kind::tree: {
            if (arch.units < 1) throw ConfigError("init_network: tree net needs channels >= 1");
            auto net = std::make_unique<DeepTreeNet>(TreeTopology(arch.input_dim), arch.units, act);
            for (std::size_t v = 1; v < arch.input_dim; ++v) init_shallow(net->node(v), rng);
            return net;
        }
        case NetworkArch::Kind::mlp: {
            auto net = std::make_unique<GenericMLP>(arch.mlp_dims, arch.batchnorm, act);
            for (std::size_t l = 0; l + 1 < arch.mlp_dims.size(); ++l) {
                const double s =
                    std::sqrt(6.0 / static_cast<double>(arch.mlp_dims[l] + arch.mlp_dims[l + 1]));
                for (double& w : net->weights(l)) w = rng.uniform(-s, s);
            }
            return net;
        }
    }
    throw ConfigError("init_network: invalid architecture descriptor");
}

} // namespace compo
