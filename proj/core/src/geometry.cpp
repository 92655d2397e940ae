#include "photos/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace photos::geom {

namespace {

Eigen::Matrix2d rotation(double theta) {
  Eigen::Matrix2d R;
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return R;
}

Eigen::Matrix2d rotation_dtheta(double theta) {
  Eigen::Matrix2d R;
  R << -std::sin(theta), -std::cos(theta), std::cos(theta), -std::sin(theta);
  return R;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// C1 smoothstep on [0,1].
double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }
double smoothstep_d(double u) { return 6.0 * u * (1.0 - u); }

}  // namespace

VectorXd DesignVars::to_flat() const {
  VectorXd flat(dim());
  for (int i = 0; i < count(); ++i) {
    const auto& inst = instances[i];
    flat.segment<6>(6 * i) << inst.z(0), inst.z(1), inst.x_bar_nm, inst.y_bar_nm,
        inst.theta, inst.s;
  }
  return flat;
}

DesignVars DesignVars::from_flat(const VectorXd& flat) {
  if (flat.size() % kVarsPerInstance != 0)
    throw std::invalid_argument("DesignVars::from_flat: size not a multiple of 6");
  DesignVars d;
  d.instances.resize(flat.size() / kVarsPerInstance);
  for (int i = 0; i < d.count(); ++i) {
    auto seg = flat.segment<6>(6 * i);
    d.instances[i].z << seg(0), seg(1);
    d.instances[i].x_bar_nm = seg(2);
    d.instances[i].y_bar_nm = seg(3);
    d.instances[i].theta = seg(4);
    d.instances[i].s = seg(5);
  }
  return d;
}

VectorXd DesignVars::normalize(const VectorXd& lower, const VectorXd& upper) const {
  const VectorXd flat = to_flat();
  if (lower.size() != flat.size() || upper.size() != flat.size())
    throw std::invalid_argument("DesignVars::normalize: bounds size mismatch");
  return (flat - lower).cwiseQuotient(upper - lower);
}

DesignVars DesignVars::denormalize(const VectorXd& x01, const VectorXd& lower,
                                   const VectorXd& upper) {
  return from_flat(lower + x01.cwiseProduct(upper - lower));
}

MatrixXd transform_coords(const MatrixXd& elem_coords_nm, const ShapeInstance& instance,
                          double nominal_scale_nm_per_unit) {
  if (instance.s <= 0.0) throw std::domain_error("transform_coords: scale must be positive");
  if (elem_coords_nm.rows() != 2)
    throw std::invalid_argument("transform_coords: coords must be 2 x n");
  const Eigen::Matrix2d R = rotation(instance.theta);
  const Vector2d t(instance.x_bar_nm, instance.y_bar_nm);
  return (R * (elem_coords_nm.colwise() - t)) / (instance.s * nominal_scale_nm_per_unit);
}

VectorXd query_sdf(const vae::VaeParams& params, const ShapeInstance& instance,
                   const MatrixXd& elem_coords_nm, const GeometryConfig& config,
                   SdfTrace* trace_out) {
  SdfTrace local_trace;
  SdfTrace& t = trace_out ? *trace_out : local_trace;
  const long n = elem_coords_nm.cols();
  t.local = transform_coords(elem_coords_nm, instance, config.nominal_scale_nm_per_unit);
  t.inf_norm.resize(n);
  t.blend.resize(n);
  t.near_col.assign(n, -1);
  t.exit_col.assign(n, -1);

  const double band = config.farfield_band;
  long cols = 0;
  for (long e = 0; e < n; ++e) {
    const double m = std::max(std::abs(t.local(0, e)), std::abs(t.local(1, e)));
    t.inf_norm(e) = m;
    if (m < 1.0) t.near_col[e] = static_cast<int>(cols++);
    if (m > 1.0 - band) t.exit_col[e] = static_cast<int>(cols++);
    t.blend(e) = m <= 1.0 - band ? 1.0
                : m >= 1.0       ? 0.0
                                 : smoothstep((1.0 - m) / band);
  }

  t.decode_X.resize(2, cols);
  for (long e = 0; e < n; ++e) {
    if (t.near_col[e] >= 0) t.decode_X.col(t.near_col[e]) = t.local.col(e);
    if (t.exit_col[e] >= 0)
      t.decode_X.col(t.exit_col[e]) = t.local.col(e) / std::max(t.inf_norm(e), 1e-300);
  }

  t.dtrace = vae::decode_trace(params, instance.z, t.decode_X);

  t.phi.resize(n);
  for (long e = 0; e < n; ++e) {
    const double w = t.blend(e);
    double value = 0.0;
    if (t.near_col[e] >= 0) value += w * t.dtrace.phi(t.near_col[e]);
    if (t.exit_col[e] >= 0) {
      const Vector2d p = t.decode_X.col(t.exit_col[e]);
      const double far = t.dtrace.phi(t.exit_col[e]) + p.norm() - t.local.col(e).norm();
      value += (1.0 - w) * far;
    }
    t.phi(e) = value;
  }
  return t.phi;
}

InstanceGrad query_sdf_vjp(const vae::VaeParams& params, const ShapeInstance& instance,
                           const MatrixXd& elem_coords_nm, const GeometryConfig& config,
                           const SdfTrace& t, const VectorXd& cotangent) {
  const long n = elem_coords_nm.cols();
  if (cotangent.size() != n) throw std::invalid_argument("query_sdf_vjp: cotangent mismatch");
  const long cols = t.decode_X.cols();

  // Cotangent on each decode output.
  VectorXd dcot = VectorXd::Zero(cols);
  for (long e = 0; e < n; ++e) {
    const double c = cotangent(e);
    if (c == 0.0) continue;
    if (t.near_col[e] >= 0) dcot(t.near_col[e]) += c * t.blend(e);
    if (t.exit_col[e] >= 0) dcot(t.exit_col[e]) += c * (1.0 - t.blend(e));
  }

  Vector2d grad_z;
  MatrixXd grad_cols;
  vae::decode_vjp(params, instance.z, t.decode_X, t.dtrace, dcot, &grad_z, &grad_cols);

  // Assemble the per-element gradient w.r.t. the local coordinate.
  const double band = config.farfield_band;
  MatrixXd g_local = MatrixXd::Zero(2, n);
  for (long e = 0; e < n; ++e) {
    const double c = cotangent(e);
    if (c == 0.0) continue;
    Vector2d g = Vector2d::Zero();
    if (t.near_col[e] >= 0) g += grad_cols.col(t.near_col[e]);  // already weighted by blend
    if (t.exit_col[e] >= 0) {
      const double m = t.inf_norm(e);
      const Vector2d x = t.local.col(e);
      const Vector2d p = t.decode_X.col(t.exit_col[e]);
      const double w = t.blend(e);
      // far(x) = D(p) + |p| - |x| with p = x / m.
      const Vector2d dfar_dp = grad_cols.col(t.exit_col[e]) +
                               c * (1.0 - w) * p / std::max(p.norm(), 1e-300);
      // (dp/dx)^T v = v / m - x * (sign(x_a) * v_a) / m^2 on the argmax axis a.
      const int a = std::abs(x(0)) >= std::abs(x(1)) ? 0 : 1;
      const double sgn = x(a) >= 0.0 ? 1.0 : -1.0;
      Vector2d through_p = dfar_dp / m;
      through_p -= x * (sgn * dfar_dp(a)) / (m * m);
      g += through_p;
      g -= c * (1.0 - w) * x / std::max(x.norm(), 1e-300);
      // Blend weight depends on m = |x_a|.
      if (w > 0.0 && w < 1.0) {
        const double u = (1.0 - m) / band;
        const double dw_dm = -smoothstep_d(u) / band;
        const double near_val = t.near_col[e] >= 0 ? t.dtrace.phi(t.near_col[e]) : 0.0;
        const double far_val = t.dtrace.phi(t.exit_col[e]) + p.norm() - x.norm();
        g(a) += c * (near_val - far_val) * dw_dm * sgn;
      }
    }
    g_local.col(e) = g;
  }

  // Chain through the affine transform x_local = R (q - T) / (s L).
  const double sL = instance.s * config.nominal_scale_nm_per_unit;
  const Eigen::Matrix2d R = rotation(instance.theta);
  const Eigen::Matrix2d Rd = rotation_dtheta(instance.theta);
  const Vector2d T(instance.x_bar_nm, instance.y_bar_nm);

  InstanceGrad out;
  out.z = grad_z;
  const Vector2d g_sum = g_local.rowwise().sum();
  const Vector2d gT = -(R.transpose() * g_sum) / sL;
  out.x_bar = gT(0);
  out.y_bar = gT(1);
  for (long e = 0; e < n; ++e) {
    const Vector2d g = g_local.col(e);
    if (g.isZero(0.0)) continue;
    const Vector2d q = elem_coords_nm.col(e);
    out.theta += g.dot(Rd * (q - T)) / sL;
    out.s += -g.dot(t.local.col(e)) / instance.s;
  }
  return out;
}

VectorXd project_density(const VectorXd& phi, double beta_proj) {
  if (beta_proj <= 0.0) throw std::invalid_argument("project_density: beta must be positive");
  VectorXd rho(phi.size());
  for (long e = 0; e < phi.size(); ++e) rho(e) = stable_sigmoid(beta_proj * phi(e));
  return rho;
}

VectorXd union_density(const std::vector<VectorXd>& rho_list, double p,
                       double clamp_sharpness, VectorXd* raw_pnorm) {
  if (p < 1.0) throw std::invalid_argument("union_density: p must be >= 1");
  if (rho_list.empty()) {
    if (raw_pnorm) raw_pnorm->resize(0);
    return VectorXd();
  }
  const long n = rho_list[0].size();
  VectorXd S = VectorXd::Zero(n);
  for (const auto& rho : rho_list) S += rho.array().pow(p).matrix();
  VectorXd raw = S.array().pow(1.0 / p);
  if (raw_pnorm) *raw_pnorm = raw;

  // softmin(a, 1) = min(a,1) - log(1 + exp(-k |a-1|)) / k
  const double k = clamp_sharpness;
  VectorXd out(n);
  for (long e = 0; e < n; ++e) {
    const double a = raw(e);
    out(e) = std::min(a, 1.0) - std::log1p(std::exp(-k * std::abs(a - 1.0))) / k;
    out(e) = std::max(out(e), 0.0);  // softmin undershoot below 0 is unphysical
  }
  return out;
}

VectorXd permittivity(const VectorXd& rho_hat) {
  for (long e = 0; e < rho_hat.size(); ++e)
    if (rho_hat(e) < -1e-9 || rho_hat(e) > 1.0 + 1e-9)
      throw std::invalid_argument("permittivity: density outside [0,1]");
  return (kEpsOxide + (kEpsSilicon - kEpsOxide) * rho_hat.array()).matrix();
}

GeometryEval design_to_permittivity(const DesignVars& design, const MatrixXd& elem_coords_nm,
                                    const vae::VaeParams& params,
                                    const GeometryConfig& config) {
  GeometryEval eval;
  const long n = elem_coords_nm.cols();
  const int n_F = design.count();
  eval.phi.resize(n_F);
  eval.rho.resize(n_F);
  eval.traces.resize(n_F);
  for (int i = 0; i < n_F; ++i) {
    eval.phi[i] = query_sdf(params, design.instances[i], elem_coords_nm, config,
                            &eval.traces[i]);
    eval.rho[i] = project_density(eval.phi[i], config.beta_proj);
  }
  if (n_F == 0) {
    eval.rho_raw = VectorXd::Zero(n);
    eval.rho_hat = VectorXd::Zero(n);
  } else {
    eval.rho_hat = union_density(eval.rho, config.union_p, config.clamp_sharpness,
                                 &eval.rho_raw);
  }
  eval.eps = permittivity(eval.rho_hat);
  return eval;
}

VectorXd chain_vjp(const DesignVars& design, const MatrixXd& elem_coords_nm,
                   const vae::VaeParams& params, const GeometryConfig& config,
                   const GeometryEval& eval, const VectorXd* cot_eps,
                   const std::vector<VectorXd>* cot_phi) {
  const long n = elem_coords_nm.cols();
  const int n_F = design.count();
  VectorXd grad = VectorXd::Zero(design.dim());

  // Backprop through permittivity -> clamp -> p-norm to per-instance rho.
  VectorXd d_raw = VectorXd::Zero(n);
  if (cot_eps) {
    const double k = config.clamp_sharpness;
    for (long e = 0; e < n; ++e) {
      const double d_rho_hat = (kEpsSilicon - kEpsOxide) * (*cot_eps)(e);
      // d softmin(a,1)/da = sigmoid(k (1 - a))
      d_raw(e) = d_rho_hat * stable_sigmoid(k * (1.0 - eval.rho_raw(e)));
    }
  }

  for (int i = 0; i < n_F; ++i) {
    VectorXd cot(n);
    for (long e = 0; e < n; ++e) {
      double c = cot_phi ? (*cot_phi)[i](e) : 0.0;
      if (cot_eps && d_raw(e) != 0.0) {
        const double raw = eval.rho_raw(e);
        if (raw > 1e-12) {
          const double d_rho_i =
              d_raw(e) * std::pow(eval.rho[i](e) / raw, config.union_p - 1.0);
          c += d_rho_i * config.beta_proj * eval.rho[i](e) * (1.0 - eval.rho[i](e));
        }
      }
      cot(e) = c;
    }
    const InstanceGrad g = query_sdf_vjp(params, design.instances[i], elem_coords_nm,
                                         config, eval.traces[i], cot);
    grad.segment<6>(6 * i) << g.z(0), g.z(1), g.x_bar, g.y_bar, g.theta, g.s;
  }
  return grad;
}

}  // namespace photos::geom
