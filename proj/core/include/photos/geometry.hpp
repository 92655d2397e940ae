#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "photos/vae.hpp"

namespace photos::geom {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

constexpr double kEpsOxide = 2.25;
constexpr double kEpsSilicon = 12.25;

/// One placed shape: latent coordinates plus an affine transform from the
/// design frame (nm) into the library frame.
struct ShapeInstance {
  Vector2d z = Vector2d::Zero();
  double x_bar_nm = 0.0;
  double y_bar_nm = 0.0;
  double theta = 0.0;  // radians
  double s = 1.0;      // scale multiplier on library units
};

/// Flat packing order per instance: z1, z2, x_bar, y_bar, theta, s.
struct DesignVars {
  std::vector<ShapeInstance> instances;
  static constexpr int kVarsPerInstance = 6;

  int count() const { return static_cast<int>(instances.size()); }
  int dim() const { return kVarsPerInstance * count(); }

  VectorXd to_flat() const;
  static DesignVars from_flat(const VectorXd& flat);

  /// Affine map into [0,1]^dim given per-variable bounds.
  VectorXd normalize(const VectorXd& lower, const VectorXd& upper) const;
  static DesignVars denormalize(const VectorXd& x01, const VectorXd& lower,
                                const VectorXd& upper);
};

struct GeometryConfig {
  double nominal_scale_nm_per_unit = 200.0;
  double beta_proj = 8.0;        // projection sharpness, per normalized unit
  double union_p = 8.0;          // p-norm order of the union
  double clamp_sharpness = 50.0; // softmin sharpness of the density clamp
  double farfield_band = 0.05;   // blend band inside the bbox, normalized units
};

/// Eq. of motion of a query point into the library frame:
/// x_local = R(theta) * (x - translation) / (s * nominal_scale).
MatrixXd transform_coords(const MatrixXd& elem_coords_nm, const ShapeInstance& instance,
                          double nominal_scale_nm_per_unit);

/// Book-keeping of one instance SDF query, consumed by the VJP.
struct SdfTrace {
  MatrixXd local;            // 2 x n_e transformed coordinates
  VectorXd inf_norm;         // per element
  VectorXd blend;            // decode weight: 1 inside, 0 in the far field
  std::vector<int> near_col; // decode batch column of the element point, -1 if unused
  std::vector<int> exit_col; // decode batch column of the bbox exit point, -1 if unused
  MatrixXd decode_X;         // 2 x n_cols decode batch
  vae::DecodeTrace dtrace;
  VectorXd phi;              // final SDF, normalized units
};

/// SDF of one instance at element coordinates (design frame, nm), in
/// normalized library units. Inside the bbox the decoder answers; outside,
/// the far-field approximation -|x| + r0 takes over, blended over
/// `farfield_band` so the value and its VJP stay continuous.
VectorXd query_sdf(const vae::VaeParams& params, const ShapeInstance& instance,
                   const MatrixXd& elem_coords_nm, const GeometryConfig& config,
                   SdfTrace* trace = nullptr);

/// Gradient of sum(cot . phi) for one instance w.r.t. its six variables.
struct InstanceGrad {
  Vector2d z = Vector2d::Zero();
  double x_bar = 0.0, y_bar = 0.0, theta = 0.0, s = 0.0;
};
InstanceGrad query_sdf_vjp(const vae::VaeParams& params, const ShapeInstance& instance,
                           const MatrixXd& elem_coords_nm, const GeometryConfig& config,
                           const SdfTrace& trace, const VectorXd& cotangent);

VectorXd project_density(const VectorXd& phi, double beta_proj);

/// p-norm union followed by a soft clamp against 1 so overlapping instances
/// stay physical without introducing a kink.
VectorXd union_density(const std::vector<VectorXd>& rho_list, double p,
                       double clamp_sharpness, VectorXd* raw_pnorm = nullptr);

VectorXd permittivity(const VectorXd& rho_hat);

struct GeometryEval {
  std::vector<VectorXd> phi;   // per instance, cached for the MSD constraint
  std::vector<VectorXd> rho;   // per instance
  VectorXd rho_raw;            // pre-clamp p-norm
  VectorXd rho_hat;
  VectorXd eps;
  std::vector<SdfTrace> traces;
};

GeometryEval design_to_permittivity(const DesignVars& design, const MatrixXd& elem_coords_nm,
                                    const vae::VaeParams& params, const GeometryConfig& config);

/// VJP of the full chain. Either cotangent may be null: cot_eps feeds the
/// permittivity path, cot_phi feeds the cached per-instance SDFs directly
/// (one vector per instance). Returns the gradient in flat packing order.
VectorXd chain_vjp(const DesignVars& design, const MatrixXd& elem_coords_nm,
                   const vae::VaeParams& params, const GeometryConfig& config,
                   const GeometryEval& eval, const VectorXd* cot_eps,
                   const std::vector<VectorXd>* cot_phi);

}  // namespace photos::geom
