#include "photos/nn.hpp"

#include <cmath>

namespace photos::nn {

void Dense::init(int out, int in, double w_scale, Rng& rng) {
  W.resize(out, in);
  b = VectorXd::Zero(out);
  // Row-major fill order so layer shape, not Eigen storage, fixes the stream.
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c) W(r, c) = rng.uniform(-w_scale, w_scale);
  gW = MatrixXd::Zero(out, in);
  gb = VectorXd::Zero(out);
}

void Dense::collect(std::vector<TensorRef>& refs) {
  refs.push_back({W.data(), gW.data(), static_cast<std::size_t>(W.size())});
  refs.push_back({b.data(), gb.data(), static_cast<std::size_t>(b.size())});
}

MatrixXd Dense::backward(const MatrixXd& X, const MatrixXd& dY) {
  gW.noalias() += dY * X.transpose();
  gb.noalias() += dY.rowwise().sum();
  return W.transpose() * dY;
}

void Conv2::init(int out_channels, int in_channels, Rng& rng) {
  in_ch = in_channels;
  out_ch = out_channels;
  W.assign(static_cast<std::size_t>(out_ch) * in_ch, MatrixXd(3, 3));
  const double scale = std::sqrt(2.0 / (9.0 * in_ch));
  for (auto& k : W)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) k(r, c) = scale * rng.normal();
  gW.assign(W.size(), MatrixXd::Zero(3, 3));
  b = VectorXd::Zero(out_ch);
  gb = VectorXd::Zero(out_ch);
}

void Conv2::zero_grad() {
  for (auto& g : gW) g.setZero();
  gb.setZero();
}

void Conv2::collect(std::vector<TensorRef>& refs) {
  for (std::size_t i = 0; i < W.size(); ++i)
    refs.push_back({W[i].data(), gW[i].data(), 9});
  refs.push_back({b.data(), gb.data(), static_cast<std::size_t>(b.size())});
}

std::vector<MatrixXd> Conv2::forward(const std::vector<MatrixXd>& in) const {
  const int h = static_cast<int>(in[0].rows());
  const int w = static_cast<int>(in[0].cols());
  const int oh = h / 2, ow = w / 2;
  std::vector<MatrixXd> out(out_ch, MatrixXd::Constant(oh, ow, 0.0));
  for (int oc = 0; oc < out_ch; ++oc) {
    out[oc].setConstant(b(oc));
    for (int ic = 0; ic < in_ch; ++ic) {
      const MatrixXd& k = W[static_cast<std::size_t>(oc) * in_ch + ic];
      const MatrixXd& x = in[ic];
      for (int r = 0; r < oh; ++r)
        for (int c = 0; c < ow; ++c) {
          double acc = 0.0;
          for (int kr = 0; kr < 3; ++kr)
            for (int kc = 0; kc < 3; ++kc) {
              const int ir = 2 * r - 1 + kr;
              const int icn = 2 * c - 1 + kc;
              if (ir < 0 || ir >= h || icn < 0 || icn >= w) continue;
              acc += k(kr, kc) * x(ir, icn);
            }
          out[oc](r, c) += acc;
        }
    }
  }
  return out;
}

std::vector<MatrixXd> Conv2::backward(const std::vector<MatrixXd>& in,
                                      const std::vector<MatrixXd>& dOut) {
  const int h = static_cast<int>(in[0].rows());
  const int w = static_cast<int>(in[0].cols());
  const int oh = h / 2, ow = w / 2;
  std::vector<MatrixXd> dIn(in_ch, MatrixXd::Zero(h, w));
  for (int oc = 0; oc < out_ch; ++oc) {
    gb(oc) += dOut[oc].sum();
    for (int ic = 0; ic < in_ch; ++ic) {
      const MatrixXd& k = W[static_cast<std::size_t>(oc) * in_ch + ic];
      MatrixXd& gk = gW[static_cast<std::size_t>(oc) * in_ch + ic];
      for (int r = 0; r < oh; ++r)
        for (int c = 0; c < ow; ++c) {
          const double g = dOut[oc](r, c);
          if (g == 0.0) continue;
          for (int kr = 0; kr < 3; ++kr)
            for (int kc = 0; kc < 3; ++kc) {
              const int ir = 2 * r - 1 + kr;
              const int icn = 2 * c - 1 + kc;
              if (ir < 0 || ir >= h || icn < 0 || icn >= w) continue;
              gk(kr, kc) += g * in[ic](ir, icn);
              dIn[ic](ir, icn) += g * k(kr, kc);
            }
        }
    }
  }
  return dIn;
}

void Adam::step(const std::vector<TensorRef>& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = VectorXd::Zero(static_cast<long>(params[i].size));
      v_[i] = VectorXd::Zero(static_cast<long>(params[i].size));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Eigen::Map<VectorXd> x(params[i].value, static_cast<long>(params[i].size));
    Eigen::Map<const VectorXd> g(params[i].grad, static_cast<long>(params[i].size));
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i].array().matrix() + (1.0 - beta2_) * g.array().square().matrix();
    x.array() -= lr_ * (m_[i].array() / bc1) /
                 ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

}  // namespace photos::nn
