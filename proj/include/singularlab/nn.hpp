#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "singularlab/density.hpp"

namespace singularlab {

enum class Activation { identity, relu, silu };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// One affine layer. `act` is applied to this layer's output when it feeds
// the next layer; the final layer of a network is always affine (its act
// must be identity).
struct LayerSpec {
  int out_dim = 1;
  Activation act = Activation::identity;
  bool has_bias = true;
  double silu_tau = 100.0;
};

// Dense feedforward architecture with a fixed flat parameter layout:
// for each layer l in order, the weight matrix row-major (out x in),
// then the bias vector when present.
class NetworkSpec {
 public:
  NetworkSpec(int input_dim, std::vector<LayerSpec> layers);

  // Standard MLP: dims = [d_0, ..., d_c], all biases, `hidden` activation
  // between layers, affine output.
  static NetworkSpec mlp(const std::vector<int>& dims, Activation hidden,
                         double silu_tau = 100.0);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return layers_.back().out_dim; }
  int depth() const { return static_cast<int>(layers_.size()); }
  const LayerSpec& layer(int l) const { return layers_[l]; }
  int layer_in_dim(int l) const;
  int param_count() const { return param_count_; }

  int weight_offset(int l) const { return weight_offset_[l]; }
  // -1 when the layer has no bias.
  int bias_offset(int l) const { return bias_offset_[l]; }
  int weight_index(int l, int j, int k) const {
    return weight_offset_[l] + j * layer_in_dim(l) + k;
  }

  // Architecture of layers [first, depth), as a standalone network.
  NetworkSpec suffix(int first) const;
  // Flat-parameter offset of layer `first`'s block (suffix params are the
  // contiguous tail of the layout).
  int param_offset(int first) const;

  bool operator==(const NetworkSpec& o) const;

 private:
  int input_dim_;
  std::vector<LayerSpec> layers_;
  std::vector<int> weight_offset_;
  std::vector<int> bias_offset_;
  int param_count_;
};

// Per-layer view of a flat parameter vector.
struct LayerParams {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // empty when absent
};

std::vector<LayerParams> unpack(const NetworkSpec& spec,
                                const Eigen::VectorXd& w);
Eigen::VectorXd pack(const NetworkSpec& spec,
                     const std::vector<LayerParams>& layers);

// Scratch buffers for batched forward/backward passes; reuse across calls
// to avoid reallocation in sampler hot loops.
struct NetWorkspace {
  std::vector<Eigen::MatrixXd> pre;   // u^l, n x d_l
  std::vector<Eigen::MatrixXd> post;  // a^l after activation
  std::vector<Eigen::MatrixXd> delta;
  Eigen::MatrixXd out;
};

Eigen::VectorXd forward(const NetworkSpec& spec, const Eigen::VectorXd& w,
                        const Eigen::VectorXd& x);
// X is n x input_dim; returns n x output_dim.
Eigen::MatrixXd forward_batch(const NetworkSpec& spec, const Eigen::VectorXd& w,
                              const Eigen::MatrixXd& X);
void forward_batch(const NetworkSpec& spec, const Eigen::VectorXd& w,
                   const Eigen::MatrixXd& X, NetWorkspace& ws);

// Runs layers [0, split) plus the trailing inter-layer activation; the
// image feeds layer `split` of the same network unchanged.
Eigen::MatrixXd forward_prefix(const NetworkSpec& spec,
                               const Eigen::VectorXd& w,
                               const Eigen::MatrixXd& X, int split);

// Value and gradient of the half summed squared error
//   E(w) = 1/2 sum_i || y_i - f(x_i, w) ||^2
// (the data term of n * L_n; its constant offset has zero gradient).
double sse_and_grad(const NetworkSpec& spec, const Eigen::VectorXd& w,
                    const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                    NetWorkspace& ws, Eigen::VectorXd& grad);
Eigen::VectorXd grad_nll(const NetworkSpec& spec, const Eigen::VectorXd& w,
                         const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

// Jacobian of f(x, .) at w: output_dim x param_count.
Eigen::MatrixXd jacobian(const NetworkSpec& spec, const Eigen::VectorXd& w,
                         const Eigen::VectorXd& x);

// Raised when a finite-difference evaluation produces a non-finite entry.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& msg, int index)
      : std::runtime_error(msg), index(index) {}
  int index;
};

// Symmetrized central finite differences of the analytic gradient,
// step h_i = 1e-4 * max(1, |w_i|).
Eigen::MatrixXd fd_hessian(const LogDensity& target, const Eigen::VectorXd& w);

// Infinitesimal generator of the positive-scale symmetry at hidden ReLU
// node (l, j), 0-based: +w^l_{jk} and +b^l_j on the node's incoming block,
// -w^{l+1}_{ij} on its outgoing weights, zero elsewhere.
Eigen::VectorXd generator_direction(const NetworkSpec& spec,
                                    const Eigen::VectorXd& w, int l, int j);

}  // namespace singularlab
