#include "photos/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "photos/rng.hpp"

namespace photos::opt {

namespace {

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double objective(const fdfd::ScatterSpectra& spectra, const PerfSpec& perf,
                 std::vector<Complex>* dL_dS) {
  if (dL_dS) dL_dS->assign(spectra.entries.size(), Complex(0.0, 0.0));
  double L = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < spectra.entries.size(); ++k) {
    const auto& entry = spectra.entries[k];
    for (const auto& t : perf.targets) {
      if (t.port != entry.port || t.mode_order != entry.mode_order) continue;
      any = true;
      const double power = std::norm(entry.S);
      const double sign = t.kind == BandTarget::Kind::UpperBound ? 1.0 : -1.0;
      const double d = sign * (power - t.cutoff_power);
      const double sp = softplus(d / t.weight);
      L += sp * sp;
      if (dL_dS) {
        const double dL_dpower = 2.0 * sp * sigmoid(d / t.weight) / t.weight * sign;
        // d|S|^2/dS in the (dRe, dIm) pairing is 2 S.
        (*dL_dS)[k] += dL_dpower * 2.0 * entry.S;
      }
    }
  }
  if (!any) throw std::invalid_argument("objective: spectra cover no target");
  return L;
}

MsdResult msd_constraint(const std::vector<Eigen::VectorXd>& phi,
                         const std::vector<double>& scales, const FabSpec& fab,
                         double beta_proj, double nominal_scale_nm_per_unit,
                         double eps_msd, bool with_grad) {
  const int n_F = static_cast<int>(phi.size());
  if (static_cast<int>(scales.size()) != n_F)
    throw std::invalid_argument("msd_constraint: scales size mismatch");
  MsdResult result;
  result.d_scale = Eigen::VectorXd::Zero(n_F);
  if (n_F == 0) {
    result.value = -eps_msd;
    return result;
  }
  const long n_e = phi[0].size();
  const double delta_units = fab.delta_star_nm() / nominal_scale_nm_per_unit;

  // sigma(beta * (s_i phi + delta*/L)): the dilation is +delta* under the
  // positive-inside sign convention.
  Eigen::MatrixXd sig(n_F, n_e);
  for (int i = 0; i < n_F; ++i)
    for (long e = 0; e < n_e; ++e)
      sig(i, e) = sigmoid(beta_proj * (scales[i] * phi[i](e) + delta_units));

  if (with_grad) {
    result.d_phi.assign(n_F, Eigen::VectorXd::Zero(n_e));
  }
  double acc = 0.0;
  for (long e = 0; e < n_e; ++e) {
    const double overlap = sig.col(e).sum() - 1.0;
    if (overlap > 0.0) {
      acc += overlap;
      if (with_grad) {
        for (int i = 0; i < n_F; ++i) {
          const double dsig = sig(i, e) * (1.0 - sig(i, e)) * beta_proj / n_e;
          result.d_phi[i](e) = dsig * scales[i];
          result.d_scale(i) += dsig * phi[i](e);
        }
      }
    }
  }
  result.value = acc / static_cast<double>(n_e) - eps_msd;
  return result;
}

LatentResult latent_constraint(const Eigen::MatrixXd& z_instances,
                               const Eigen::MatrixXd& z_star, double tau, double eps_latent,
                               bool with_grad) {
  if (tau <= 0.0) throw std::invalid_argument("latent_constraint: tau must be positive");
  const int n_F = static_cast<int>(z_instances.rows());
  const int n_L = static_cast<int>(z_star.rows());
  LatentResult result;
  result.d_z = Eigen::MatrixXd::Zero(n_F, 2);
  if (n_F == 0 || n_L == 0) {
    result.value = -eps_latent;
    return result;
  }

  Eigen::MatrixXd D(n_L, n_F);
  for (int i = 0; i < n_F; ++i)
    for (int j = 0; j < n_L; ++j) {
      const double d2 = (z_star.row(j) - z_instances.row(i)).squaredNorm();
      D(j, i) = std::sqrt(d2 + 1e-12);  // smooth at exact snap
    }

  // smoothmin_j D(., i), then smoothmax_i, both via LogSumExp.
  Eigen::VectorXd v(n_F);
  Eigen::MatrixXd u(n_L, n_F);  // softmin weights
  for (int i = 0; i < n_F; ++i) {
    const double dmin = D.col(i).minCoeff();
    double sum = 0.0;
    for (int j = 0; j < n_L; ++j) {
      u(j, i) = std::exp(-(D(j, i) - dmin) / tau);
      sum += u(j, i);
    }
    u.col(i) /= sum;
    v(i) = dmin - tau * std::log(sum);
  }
  const double vmax = v.maxCoeff();
  double wsum = 0.0;
  Eigen::VectorXd w(n_F);
  for (int i = 0; i < n_F; ++i) {
    w(i) = std::exp((v(i) - vmax) / tau);
    wsum += w(i);
  }
  w /= wsum;
  result.value = vmax + tau * std::log(wsum) - eps_latent;

  if (with_grad) {
    for (int i = 0; i < n_F; ++i) {
      Eigen::RowVector2d g = Eigen::RowVector2d::Zero();
      for (int j = 0; j < n_L; ++j)
        g += u(j, i) * (z_instances.row(i) - z_star.row(j)) / D(j, i);
      result.d_z.row(i) = w(i) * g;
    }
  }
  return result;
}

void bounds(const OptConfig& config, const FabSpec& fab, const shapes::Library& library,
            const fdfd::SimDomain& domain, Eigen::VectorXd* lower, Eigen::VectorXd* upper) {
  if (fab.mfs_nm < library.library_mfs_nm)
    throw std::invalid_argument(
        "bounds: target MFS below the library MFS; the library cannot express it");
  const double s_min = fab.mfs_nm / library.library_mfs_nm;
  const double win_x = domain.design_nx * domain.dx_nm;
  const double win_y = domain.design_ny * domain.dx_nm;
  const double window_diag = std::hypot(win_x, win_y);
  const double shape_diag =
      2.0 * library.nominal_scale_nm_per_unit * std::numbers::sqrt2;  // bbox [-1,1]^2
  const double s_max = window_diag / shape_diag;
  if (s_max <= s_min)
    throw std::invalid_argument("bounds: design window too small for the target MFS");

  const double x0 = domain.design_x0() * domain.dx_nm;
  const double y0 = domain.design_y0() * domain.dx_nm;
  lower->resize(6 * config.n_f);
  upper->resize(6 * config.n_f);
  for (int i = 0; i < config.n_f; ++i) {
    lower->segment<6>(6 * i) << -3.0, -3.0, x0, y0, 0.0, s_min;
    upper->segment<6>(6 * i) << 3.0, 3.0, x0 + win_x, y0 + win_y, 2.0 * std::numbers::pi,
        s_max;
  }
}

OptResult run(const Problem& problem, const vae::VaeParams& params,
              const vae::LatentTable& latents, const shapes::Library& library) {
  const OptConfig& cfg = problem.opt;
  if (cfg.init_grid * cfg.init_grid != cfg.n_f)
    throw std::invalid_argument("run: init_grid^2 must equal n_f");

  Eigen::VectorXd lo, hi;
  bounds(cfg, problem.fab, library, problem.domain, &lo, &hi);
  const double s_min = lo(5), s_max = hi(5);

  // Initial layout: equispaced grid, mean scale, random latents.
  Rng rng(cfg.rng_seed);
  geom::DesignVars design;
  design.instances.resize(cfg.n_f);
  const double x0 = problem.domain.design_x0() * problem.domain.dx_nm;
  const double y0 = problem.domain.design_y0() * problem.domain.dx_nm;
  const double win_x = problem.domain.design_nx * problem.domain.dx_nm;
  const double win_y = problem.domain.design_ny * problem.domain.dx_nm;
  for (int gy = 0; gy < cfg.init_grid; ++gy)
    for (int gx = 0; gx < cfg.init_grid; ++gx) {
      auto& inst = design.instances[gy * cfg.init_grid + gx];
      inst.x_bar_nm = x0 + (gx + 0.5) / cfg.init_grid * win_x;
      inst.y_bar_nm = y0 + (gy + 0.5) / cfg.init_grid * win_y;
      inst.theta = 0.0;
      inst.s = 0.5 * (s_min + s_max);
      inst.z(0) = std::clamp(rng.normal(0.0, cfg.init_z_std), -3.0, 3.0);
      inst.z(1) = std::clamp(rng.normal(0.0, cfg.init_z_std), -3.0, 3.0);
    }

  fdfd::ScatterSim sim(problem.domain, problem.ports, problem.input_port,
                       problem.eps_background, problem.eps_reference, problem.wavelengths);
  const Eigen::MatrixXd elems = problem.domain.design_cell_centers();

  Mma mma(design.dim(), 2, Eigen::VectorXd::Zero(design.dim()),
          Eigen::VectorXd::Ones(design.dim()), MmaOptions{.move_limit = cfg.move_limit});

  OptResult result;
  Eigen::VectorXd x = design.normalize(lo, hi);
  geom::GeometryConfig gcfg = problem.geometry;
  const Eigen::VectorXd span = hi - lo;

  const int max_iters = std::max(1, cfg.max_iters);
  for (int iter = 0; iter < max_iters; ++iter) {
    gcfg.beta_proj = std::min(
        problem.geometry.beta_proj *
            std::pow(cfg.beta_proj_growth, static_cast<double>(iter / cfg.beta_proj_interval)),
        cfg.beta_proj_max);
    const double tau =
        max_iters > 1
            ? cfg.tau_start *
                  std::pow(cfg.tau_end / cfg.tau_start, iter / double(max_iters - 1))
            : cfg.tau_end;

    design = geom::DesignVars::denormalize(x, lo, hi);
    geom::GeometryEval eval = geom::design_to_permittivity(design, elems, params, gcfg);
    const Eigen::MatrixXd eps = problem.domain.compose_eps(problem.eps_background, eval.eps);
    const fdfd::ScatterSpectra& spectra = sim.forward(eps);

    std::vector<Complex> dL_dS;
    const double L = objective(spectra, problem.perf, &dL_dS);
    const Eigen::VectorXd dL_deps = sim.adjoint(dL_dS);
    Eigen::VectorXd dL = geom::chain_vjp(design, elems, params, gcfg, eval, &dL_deps, nullptr);

    std::vector<double> scales(design.count());
    for (int i = 0; i < design.count(); ++i) scales[i] = design.instances[i].s;
    MsdResult msd = msd_constraint(eval.phi, scales, problem.fab, gcfg.beta_proj,
                                   gcfg.nominal_scale_nm_per_unit, cfg.eps_msd, true);
    Eigen::VectorXd dGs =
        geom::chain_vjp(design, elems, params, gcfg, eval, nullptr, &msd.d_phi);
    for (int i = 0; i < design.count(); ++i) dGs(6 * i + 5) += msd.d_scale(i);

    Eigen::MatrixXd z_inst(design.count(), 2);
    for (int i = 0; i < design.count(); ++i) z_inst.row(i) = design.instances[i].z.transpose();
    LatentResult lat = latent_constraint(z_inst, latents.z_star, tau, cfg.eps_latent, true);
    Eigen::VectorXd dGl = Eigen::VectorXd::Zero(design.dim());
    for (int i = 0; i < design.count(); ++i) dGl.segment<2>(6 * i) = lat.d_z.row(i).transpose();

    // Raw-variable gradients to normalized coordinates, then fixed scalings.
    Eigen::VectorXd df = dL.cwiseProduct(span) * cfg.obj_scale;
    Eigen::VectorXd g(2);
    g << msd.value * cfg.gs_scale, lat.value * cfg.gl_scale;
    Eigen::MatrixXd dg(2, design.dim());
    dg.row(0) = (dGs.cwiseProduct(span) * cfg.gs_scale).transpose();
    dg.row(1) = (dGl.cwiseProduct(span) * cfg.gl_scale).transpose();

    const Eigen::VectorXd x_new = mma.update(x, L * cfg.obj_scale, df, g, dg);
    const double step_norm = (x_new - x).lpNorm<Eigen::Infinity>();

    IterRecord rec;
    rec.iter = iter;
    rec.L = L;
    rec.g_s = msd.value;
    rec.g_l = lat.value;
    rec.beta_proj = gcfg.beta_proj;
    rec.tau = tau;
    rec.step_norm = step_norm;
    rec.min_trans_power = 1.0;
    rec.max_refl_power = 0.0;
    for (const auto& e : spectra.entries) {
      const double p = std::norm(e.S);
      if (e.port == problem.input_port)
        rec.max_refl_power = std::max(rec.max_refl_power, p);
      else
        rec.min_trans_power = std::min(rec.min_trans_power, p);
    }
    result.history.push_back(rec);
    if (iter == 0) result.L0 = L;

    x = x_new;
    if (step_norm < cfg.step_tol && msd.value <= 0.0 && lat.value <= 0.0) break;
  }

  // Final evaluation at the last accepted point.
  design = geom::DesignVars::denormalize(x, lo, hi);
  geom::GeometryEval eval = geom::design_to_permittivity(design, elems, params, gcfg);
  const Eigen::MatrixXd eps = problem.domain.compose_eps(problem.eps_background, eval.eps);
  result.spectra = sim.forward(eps);
  result.L_final = objective(result.spectra, problem.perf, nullptr);

  std::vector<double> scales(design.count());
  for (int i = 0; i < design.count(); ++i) scales[i] = design.instances[i].s;
  result.g_s_final = msd_constraint(eval.phi, scales, problem.fab, gcfg.beta_proj,
                                    gcfg.nominal_scale_nm_per_unit, cfg.eps_msd, false)
                         .value;
  Eigen::MatrixXd z_inst(design.count(), 2);
  for (int i = 0; i < design.count(); ++i) z_inst.row(i) = design.instances[i].z.transpose();
  result.g_l_final =
      latent_constraint(z_inst, latents.z_star, cfg.tau_end, cfg.eps_latent, false).value;

  result.design = design;
  result.final_eps_design = eval.eps;
  result.feasible = result.g_s_final <= 0.0 && result.g_l_final <= 0.0;
  result.iterations = static_cast<int>(result.history.size());
  result.geometry_final = gcfg;
  return result;
}

FabReport verify_fabrication(const geom::DesignVars& design, const shapes::Library& library,
                             const vae::LatentTable& latents, const FabSpec& fab,
                             double nominal_scale_nm_per_unit) {
  FabReport report;
  const int n_F = design.count();
  report.min_feature_nm = std::numeric_limits<double>::infinity();
  report.min_separation_nm = std::numeric_limits<double>::infinity();

  for (int i = 0; i < n_F; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < latents.z_star.rows(); ++j) {
      const double d = (latents.z_star.row(j).transpose() - design.instances[i].z).norm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    report.snapped_index.push_back(best);
    report.snapped_names.push_back(library.shapes[best].name);
    report.max_snap_distance = std::max(report.max_snap_distance, best_d);
    report.min_feature_nm =
        std::min(report.min_feature_nm, design.instances[i].s * library.library_mfs_nm);
  }

  // Boundary point sets in the design frame (nm).
  auto boundary = [&](int i, int points) {
    const auto& inst = design.instances[i];
    auto pts = shapes::sample_boundary(library.shapes[report.snapped_index[i]], points);
    const double c = std::cos(inst.theta), s = std::sin(inst.theta);
    const double sl = inst.s * nominal_scale_nm_per_unit;
    for (auto& p : pts) {
      // Inverse of the query transform: q = s L R(-theta) x + T.
      const shapes::Vec2 q{c * p.x() + s * p.y(), -s * p.x() + c * p.y()};
      p = {sl * q.x() + inst.x_bar_nm, sl * q.y() + inst.y_bar_nm};
    }
    return pts;
  };
  auto in_shape = [&](int i, const shapes::Vec2& q_nm) {
    const auto& inst = design.instances[i];
    const double c = std::cos(inst.theta), s = std::sin(inst.theta);
    const double sl = inst.s * nominal_scale_nm_per_unit;
    const shapes::Vec2 t{q_nm.x() - inst.x_bar_nm, q_nm.y() - inst.y_bar_nm};
    const shapes::Vec2 local{(c * t.x() - s * t.y()) / sl, (s * t.x() + c * t.y()) / sl};
    return shapes::polygon_sdf(local, library.shapes[report.snapped_index[i]]) > 0.0;
  };

  std::vector<std::vector<shapes::Vec2>> coarse(n_F);
  for (int i = 0; i < n_F; ++i) coarse[i] = boundary(i, 512);

  auto min_dist = [](const std::vector<shapes::Vec2>& a, const std::vector<shapes::Vec2>& b) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pa : a)
      for (const auto& pb : b) best = std::min(best, (pa - pb).squaredNorm());
    return std::sqrt(best);
  };

  // Crossing boundaries put some sampled points of one shape inside the
  // other, so a strided membership test detects overlap.
  auto overlaps = [&](int i, int j) {
    for (std::size_t k = 0; k < coarse[i].size(); k += 8)
      if (in_shape(j, coarse[i][k])) return true;
    for (std::size_t k = 0; k < coarse[j].size(); k += 8)
      if (in_shape(i, coarse[j][k])) return true;
    return false;
  };

  bool overlap = false;
  std::vector<std::pair<int, int>> close_pairs;
  double coarse_best = std::numeric_limits<double>::infinity();
  std::vector<double> coarse_d(static_cast<std::size_t>(n_F) * n_F, 0.0);
  for (int i = 0; i < n_F && !overlap; ++i)
    for (int j = i + 1; j < n_F; ++j) {
      if (overlaps(i, j)) {
        overlap = true;
        break;
      }
      const double d = min_dist(coarse[i], coarse[j]);
      coarse_d[i * n_F + j] = d;
      coarse_best = std::min(coarse_best, d);
    }

  if (overlap) {
    report.min_separation_nm = 0.0;
  } else if (n_F >= 2) {
    for (int i = 0; i < n_F; ++i)
      for (int j = i + 1; j < n_F; ++j)
        if (coarse_d[i * n_F + j] < coarse_best + 50.0) close_pairs.emplace_back(i, j);
    for (auto [i, j] : close_pairs) {
      const auto fine_i = boundary(i, 8192);
      const auto fine_j = boundary(j, 8192);
      report.min_separation_nm = std::min(report.min_separation_nm, min_dist(fine_i, fine_j));
    }
  }

  if (n_F < 2) report.min_separation_nm = std::numeric_limits<double>::infinity();
  report.msd_ok = report.min_separation_nm >= fab.msd_nm - 1e-9 || n_F < 2;
  report.mfs_ok = report.min_feature_nm >= fab.mfs_nm - 1e-9;
  return report;
}

}  // namespace photos::opt
