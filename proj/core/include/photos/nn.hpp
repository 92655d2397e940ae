#pragma once

#include <Eigen/Dense>
#include <vector>

#include "photos/rng.hpp"

namespace photos::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Flat view of one parameter tensor and its gradient accumulator.
struct TensorRef {
  double* value;
  double* grad;
  std::size_t size;
};

/// Fully connected layer, column-batched: forward(X) = W * X + b per column.
struct Dense {
  MatrixXd W, gW;
  VectorXd b, gb;

  void init(int out, int in, double w_scale, Rng& rng);
  void zero_grad() { gW.setZero(); gb.setZero(); }
  void collect(std::vector<TensorRef>& refs);

  MatrixXd forward(const MatrixXd& X) const { return (W * X).colwise() + b; }
  /// Accumulates gW, gb and returns dX.
  MatrixXd backward(const MatrixXd& X, const MatrixXd& dY);
};

/// 3x3 convolution, stride 2, zero padding 1. Channels stored as a vector of
/// (H x W) matrices; weights indexed [out_ch * in_ch].
struct Conv2 {
  int in_ch = 0, out_ch = 0;
  std::vector<MatrixXd> W, gW;  // each 3x3
  VectorXd b, gb;

  void init(int out_channels, int in_channels, Rng& rng);
  void zero_grad();
  void collect(std::vector<TensorRef>& refs);

  std::vector<MatrixXd> forward(const std::vector<MatrixXd>& in) const;
  std::vector<MatrixXd> backward(const std::vector<MatrixXd>& in,
                                 const std::vector<MatrixXd>& dOut);
};

inline MatrixXd leaky_relu(const MatrixXd& x, double alpha = 0.01) {
  return x.array().max(alpha * x.array());
}
inline MatrixXd leaky_relu_grad(const MatrixXd& x, const MatrixXd& dy, double alpha = 0.01) {
  return (x.array() > 0.0).select(dy, alpha * dy);
}

/// Adam with bias correction. Moment buffers are allocated on first step and
/// keyed by registration order, so the parameter list must be stable.
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<TensorRef>& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<VectorXd> m_, v_;
};

}  // namespace photos::nn
