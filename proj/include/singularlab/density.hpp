#pragma once

#include <Eigen/Dense>

namespace singularlab {

// A differentiable (unnormalized) log density over R^d. The sampler,
// finite-difference Hessians and Laplace machinery all consume this.
//
// Instances are cheap to copy or rebuild; concurrent calls on one
// instance are not guaranteed safe (parallel code owns one per worker).
class LogDensity {
 public:
  virtual ~LogDensity() = default;

  virtual int dim() const = 0;
  virtual double value(const Eigen::VectorXd& w) const = 0;
  // Returns value(w) and fills grad (resized to dim()).
  virtual double value_and_grad(const Eigen::VectorXd& w,
                                Eigen::VectorXd& grad) const = 0;
};

}  // namespace singularlab
