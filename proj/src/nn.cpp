#include "singularlab/nn.hpp"

#include <cmath>

namespace singularlab {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMajorMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

inline double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double silu(double x, double tau) { return x * logistic(tau * x); }

inline double silu_deriv(double x, double tau) {
  const double t = tau * x;
  const double s = logistic(t);
  return s + t * s * (1.0 - s);
}

void apply_activation(const LayerSpec& layer, const MatrixXd& pre,
                      MatrixXd& post) {
  switch (layer.act) {
    case Activation::identity:
      post = pre;
      break;
    case Activation::relu:
      post = pre.cwiseMax(0.0);
      break;
    case Activation::silu:
      post = pre.unaryExpr(
          [tau = layer.silu_tau](double v) { return silu(v, tau); });
      break;
  }
}

void apply_activation_deriv(const LayerSpec& layer, const MatrixXd& pre,
                            MatrixXd& dpost_dpre) {
  switch (layer.act) {
    case Activation::identity:
      dpost_dpre.setOnes(pre.rows(), pre.cols());
      break;
    case Activation::relu:
      // subgradient 0 at the kink
      dpost_dpre = (pre.array() > 0.0).cast<double>();
      break;
    case Activation::silu:
      dpost_dpre = pre.unaryExpr(
          [tau = layer.silu_tau](double v) { return silu_deriv(v, tau); });
      break;
  }
}

// Backpropagates dE/d(output) through a completed forward pass and
// accumulates dE/dw into grad (which must be zero-initialized).
void backprop_params(const NetworkSpec& spec, const VectorXd& w,
                     const MatrixXd& X, NetWorkspace& ws,
                     const MatrixXd& dout, VectorXd& grad) {
  const int c = spec.depth();
  ws.delta.resize(c);
  ws.delta[c - 1] = dout;
  MatrixXd deriv;
  for (int l = c - 1; l >= 0; --l) {
    const int in = spec.layer_in_dim(l);
    const int out = spec.layer(l).out_dim;
    const MatrixXd& a_prev = (l == 0) ? X : ws.post[l - 1];
    RowMajorMutMap gw(grad.data() + spec.weight_offset(l), out, in);
    gw.noalias() += ws.delta[l].transpose() * a_prev;
    if (spec.layer(l).has_bias) {
      Eigen::Map<VectorXd> gb(grad.data() + spec.bias_offset(l), out);
      gb.noalias() += ws.delta[l].colwise().sum().transpose();
    }
    if (l > 0) {
      RowMajorMap W(w.data() + spec.weight_offset(l), out, in);
      apply_activation_deriv(spec.layer(l - 1), ws.pre[l - 1], deriv);
      ws.delta[l - 1].noalias() = ws.delta[l] * W;
      ws.delta[l - 1].array() *= deriv.array();
    }
  }
}

}  // namespace

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::silu: return "silu";
  }
  return "?";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "silu") return Activation::silu;
  throw std::invalid_argument("unknown activation: " + name);
}

NetworkSpec::NetworkSpec(int input_dim, std::vector<LayerSpec> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (input_dim_ < 1) throw std::invalid_argument("input_dim must be >= 1");
  if (layers_.empty()) throw std::invalid_argument("need at least one layer");
  if (layers_.back().act != Activation::identity)
    throw std::invalid_argument("output layer must be affine");
  int offset = 0;
  int in = input_dim_;
  for (const auto& layer : layers_) {
    if (layer.out_dim < 1) throw std::invalid_argument("layer dims must be >= 1");
    if (layer.act == Activation::silu && layer.silu_tau <= 0.0)
      throw std::invalid_argument("silu tau must be positive");
    weight_offset_.push_back(offset);
    offset += layer.out_dim * in;
    bias_offset_.push_back(layer.has_bias ? offset : -1);
    if (layer.has_bias) offset += layer.out_dim;
    in = layer.out_dim;
  }
  param_count_ = offset;
}

NetworkSpec NetworkSpec::mlp(const std::vector<int>& dims, Activation hidden,
                             double silu_tau) {
  if (dims.size() < 2) throw std::invalid_argument("mlp needs >= 2 dims");
  std::vector<LayerSpec> layers;
  for (std::size_t l = 1; l < dims.size(); ++l) {
    const bool last = (l + 1 == dims.size());
    layers.push_back(
        {dims[l], last ? Activation::identity : hidden, true, silu_tau});
  }
  return NetworkSpec(dims[0], std::move(layers));
}

int NetworkSpec::layer_in_dim(int l) const {
  return l == 0 ? input_dim_ : layers_[l - 1].out_dim;
}

NetworkSpec NetworkSpec::suffix(int first) const {
  if (first < 0 || first >= depth())
    throw std::invalid_argument("suffix layer out of range");
  return NetworkSpec(layer_in_dim(first),
                     {layers_.begin() + first, layers_.end()});
}

int NetworkSpec::param_offset(int first) const {
  if (first == depth()) return param_count_;
  return weight_offset_[first];
}

bool NetworkSpec::operator==(const NetworkSpec& o) const {
  if (input_dim_ != o.input_dim_ || layers_.size() != o.layers_.size())
    return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& a = layers_[i];
    const auto& b = o.layers_[i];
    if (a.out_dim != b.out_dim || a.act != b.act || a.has_bias != b.has_bias)
      return false;
    if (a.act == Activation::silu && a.silu_tau != b.silu_tau) return false;
  }
  return true;
}

std::vector<LayerParams> unpack(const NetworkSpec& spec,
                                const Eigen::VectorXd& w) {
  if (w.size() != spec.param_count())
    throw std::invalid_argument("parameter vector has wrong length");
  std::vector<LayerParams> out(spec.depth());
  for (int l = 0; l < spec.depth(); ++l) {
    const int in = spec.layer_in_dim(l);
    const int od = spec.layer(l).out_dim;
    out[l].weight = RowMajorMap(w.data() + spec.weight_offset(l), od, in);
    if (spec.layer(l).has_bias)
      out[l].bias = Eigen::Map<const VectorXd>(w.data() + spec.bias_offset(l), od);
  }
  return out;
}

Eigen::VectorXd pack(const NetworkSpec& spec,
                     const std::vector<LayerParams>& layers) {
  if (static_cast<int>(layers.size()) != spec.depth())
    throw std::invalid_argument("layer count mismatch");
  VectorXd w(spec.param_count());
  for (int l = 0; l < spec.depth(); ++l) {
    const int in = spec.layer_in_dim(l);
    const int od = spec.layer(l).out_dim;
    if (layers[l].weight.rows() != od || layers[l].weight.cols() != in)
      throw std::invalid_argument("weight shape mismatch");
    RowMajorMutMap(w.data() + spec.weight_offset(l), od, in) = layers[l].weight;
    if (spec.layer(l).has_bias) {
      if (layers[l].bias.size() != od)
        throw std::invalid_argument("bias shape mismatch");
      Eigen::Map<VectorXd>(w.data() + spec.bias_offset(l), od) = layers[l].bias;
    }
  }
  return w;
}

void forward_batch(const NetworkSpec& spec, const Eigen::VectorXd& w,
                   const Eigen::MatrixXd& X, NetWorkspace& ws) {
  if (X.cols() != spec.input_dim())
    throw std::invalid_argument("input dimension mismatch");
  if (w.size() != spec.param_count())
    throw std::invalid_argument("parameter vector has wrong length");
  const int c = spec.depth();
  ws.pre.resize(c);
  ws.post.resize(c);
  for (int l = 0; l < c; ++l) {
    const int in = spec.layer_in_dim(l);
    const int out = spec.layer(l).out_dim;
    const MatrixXd& a_prev = (l == 0) ? X : ws.post[l - 1];
    RowMajorMap W(w.data() + spec.weight_offset(l), out, in);
    ws.pre[l].noalias() = a_prev * W.transpose();
    if (spec.layer(l).has_bias) {
      Eigen::Map<const VectorXd> b(w.data() + spec.bias_offset(l), out);
      ws.pre[l].rowwise() += b.transpose();
    }
    apply_activation(spec.layer(l), ws.pre[l], ws.post[l]);
  }
  ws.out = ws.post[c - 1];
}

Eigen::MatrixXd forward_batch(const NetworkSpec& spec, const Eigen::VectorXd& w,
                              const Eigen::MatrixXd& X) {
  NetWorkspace ws;
  forward_batch(spec, w, X, ws);
  return ws.out;
}

Eigen::VectorXd forward(const NetworkSpec& spec, const Eigen::VectorXd& w,
                        const Eigen::VectorXd& x) {
  return forward_batch(spec, w, x.transpose()).row(0).transpose();
}

Eigen::MatrixXd forward_prefix(const NetworkSpec& spec,
                               const Eigen::VectorXd& w,
                               const Eigen::MatrixXd& X, int split) {
  if (split < 1 || split > spec.depth())
    throw std::invalid_argument("split layer out of range");
  NetWorkspace ws;
  forward_batch(spec, w, X, ws);  // activations up to `split` are what we need
  return ws.post[split - 1];
}

double sse_and_grad(const NetworkSpec& spec, const Eigen::VectorXd& w,
                    const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                    NetWorkspace& ws, Eigen::VectorXd& grad) {
  if (Y.cols() != spec.output_dim() || Y.rows() != X.rows())
    throw std::invalid_argument("target shape mismatch");
  forward_batch(spec, w, X, ws);
  MatrixXd resid = ws.out - Y;
  const double value = 0.5 * resid.squaredNorm();
  grad.setZero(spec.param_count());
  backprop_params(spec, w, X, ws, resid, grad);
  return value;
}

Eigen::VectorXd grad_nll(const NetworkSpec& spec, const Eigen::VectorXd& w,
                         const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (X.rows() == 0) throw std::invalid_argument("dataset is empty");
  NetWorkspace ws;
  VectorXd grad;
  sse_and_grad(spec, w, X, Y, ws, grad);
  return grad;
}

Eigen::MatrixXd jacobian(const NetworkSpec& spec, const Eigen::VectorXd& w,
                         const Eigen::VectorXd& x) {
  NetWorkspace ws;
  forward_batch(spec, w, x.transpose(), ws);
  const int m = spec.output_dim();
  MatrixXd jac(m, spec.param_count());
  VectorXd grad;
  for (int out = 0; out < m; ++out) {
    MatrixXd seed = MatrixXd::Zero(1, m);
    seed(0, out) = 1.0;
    grad.setZero(spec.param_count());
    backprop_params(spec, w, x.transpose(), ws, seed, grad);
    jac.row(out) = grad.transpose();
  }
  return jac;
}

Eigen::MatrixXd fd_hessian(const LogDensity& target, const Eigen::VectorXd& w) {
  const int d = static_cast<int>(w.size());
  MatrixXd hess(d, d);
  VectorXd wp = w, wm = w, gp(d), gm(d);
  for (int i = 0; i < d; ++i) {
    const double h = 1e-4 * std::max(1.0, std::abs(w[i]));
    wp[i] = w[i] + h;
    wm[i] = w[i] - h;
    target.value_and_grad(wp, gp);
    target.value_and_grad(wm, gm);
    hess.col(i) = (gp - gm) / (2.0 * h);
    wp[i] = w[i];
    wm[i] = w[i];
  }
  hess = 0.5 * (hess + hess.transpose()).eval();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (!std::isfinite(hess(i, j)))
        throw NumericalError("non-finite Hessian entry", i * d + j);
  return hess;
}

Eigen::VectorXd generator_direction(const NetworkSpec& spec,
                                    const Eigen::VectorXd& w, int l, int j) {
  if (l < 0 || l >= spec.depth() - 1)
    throw std::invalid_argument("generator needs a hidden layer index");
  if (j < 0 || j >= spec.layer(l).out_dim)
    throw std::invalid_argument("hidden node index out of range");
  if (spec.layer(l).act != Activation::relu)
    throw std::invalid_argument("generator requires a relu node");
  if (w.size() != spec.param_count())
    throw std::invalid_argument("parameter vector has wrong length");
  VectorXd g = VectorXd::Zero(spec.param_count());
  const int in = spec.layer_in_dim(l);
  for (int k = 0; k < in; ++k) {
    const int idx = spec.weight_index(l, j, k);
    g[idx] = w[idx];
  }
  if (spec.layer(l).has_bias) {
    const int idx = spec.bias_offset(l) + j;
    g[idx] = w[idx];
  }
  for (int i = 0; i < spec.layer(l + 1).out_dim; ++i) {
    const int idx = spec.weight_index(l + 1, i, j);
    g[idx] = -w[idx];
  }
  return g;
}

}  // namespace singularlab
