#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "photos/fdfd.hpp"
#include "photos/geometry.hpp"
#include "photos/mma.hpp"
#include "photos/shapes.hpp"
#include "photos/vae.hpp"

namespace photos::opt {

using Complex = std::complex<double>;

/// One scattering target, applied at every sampled wavelength.
struct BandTarget {
  int port = 0;
  int mode_order = 0;
  enum class Kind { LowerBound, UpperBound } kind = Kind::LowerBound;
  double cutoff_power = 0.0;  // |S*|^2, linear power
  double weight = 0.1;
};

struct PerfSpec {
  std::vector<BandTarget> targets;
};

struct FabSpec {
  double mfs_nm = 40.0;
  double msd_nm = 60.0;
  double delta_star_nm() const { return 0.5 * msd_nm; }
};

struct OptConfig {
  int n_f = 36;
  int init_grid = 6;  // init_grid^2 must equal n_f
  std::uint64_t rng_seed = 27;
  int max_iters = 150;
  double move_limit = 1e-2;
  double eps_msd = 1e-4;     // separation constraint tolerance
  double eps_latent = 0.05;  // latent constraint tolerance
  double tau_start = 0.5, tau_end = 0.005;
  double beta_proj_start = 8.0, beta_proj_max = 100.0, beta_proj_growth = 1.3;
  int beta_proj_interval = 15;
  double step_tol = 1e-5;
  double init_z_std = 2.0;
  // Fixed scale factors presented to MMA; raw values are logged.
  double obj_scale = 0.01;
  double gs_scale = 10.0;
  double gl_scale = 1.0;
};

/// Softplus-penalty objective over the spectra; optionally returns
/// dL/dS as complex cotangents aligned with spectra.entries.
double objective(const fdfd::ScatterSpectra& spectra, const PerfSpec& perf,
                 std::vector<Complex>* dL_dS = nullptr);

/// Separation constraint: instances are dilated by delta* and their summed
/// soft indicators may not overlap. phi is per-instance in normalized library
/// units; the scale of each instance converts it to physical nm.
struct MsdResult {
  double value = 0.0;
  std::vector<Eigen::VectorXd> d_phi;  // per instance, empty unless with_grad
  Eigen::VectorXd d_scale;             // explicit scale term, per instance
};
MsdResult msd_constraint(const std::vector<Eigen::VectorXd>& phi,
                         const std::vector<double>& scales, const FabSpec& fab,
                         double beta_proj, double nominal_scale_nm_per_unit,
                         double eps_msd, bool with_grad);

/// LogSumExp max-over-instances of min-over-library latent distances.
struct LatentResult {
  double value = 0.0;
  Eigen::MatrixXd d_z;  // n_F x 2
};
LatentResult latent_constraint(const Eigen::MatrixXd& z_instances,
                               const Eigen::MatrixXd& z_star, double tau, double eps_latent,
                               bool with_grad);

/// Box bounds over the flat design vector.
void bounds(const OptConfig& config, const FabSpec& fab, const shapes::Library& library,
            const fdfd::SimDomain& domain, Eigen::VectorXd* lower, Eigen::VectorXd* upper);

struct Problem {
  fdfd::SimDomain domain;
  std::vector<fdfd::PortSpec> ports;
  int input_port = 0;
  Eigen::MatrixXd eps_background;  // all waveguides, design window at oxide
  Eigen::MatrixXd eps_reference;   // straight input guide, for calibration
  std::vector<double> wavelengths;
  PerfSpec perf;
  FabSpec fab;
  OptConfig opt;
  geom::GeometryConfig geometry;  // beta_proj taken as the continuation start
};

struct IterRecord {
  int iter = 0;
  double L = 0.0, g_s = 0.0, g_l = 0.0;
  double beta_proj = 0.0, tau = 0.0, step_norm = 0.0;
  double min_trans_power = 0.0, max_refl_power = 0.0;
};

struct OptResult {
  geom::DesignVars design;
  fdfd::ScatterSpectra spectra;  // final, at the optimization wavelengths
  std::vector<IterRecord> history;
  Eigen::VectorXd final_eps_design;
  double L0 = 0.0, L_final = 0.0, g_s_final = 0.0, g_l_final = 0.0;
  bool feasible = false;
  int iterations = 0;
  geom::GeometryConfig geometry_final;
};

OptResult run(const Problem& problem, const vae::VaeParams& params,
              const vae::LatentTable& latents, const shapes::Library& library);

/// Post-hoc exact check: snap to the nearest library shape and measure true
/// boundary separations by dense sampling.
struct FabReport {
  double min_separation_nm = 0.0;  // 0 when any pair overlaps
  double min_feature_nm = 0.0;     // hard bound min_i s_i * library MFS
  double max_snap_distance = 0.0;  // worst latent distance to the snapped code
  std::vector<int> snapped_index;
  std::vector<std::string> snapped_names;
  bool msd_ok = false, mfs_ok = false;
};
FabReport verify_fabrication(const geom::DesignVars& design, const shapes::Library& library,
                             const vae::LatentTable& latents, const FabSpec& fab,
                             double nominal_scale_nm_per_unit);

}  // namespace photos::opt
