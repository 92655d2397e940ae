#include "photos/fdfd.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace photos::fdfd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kSourceOffsetCells = 6;

/// Stretch factors s(u) = 1 + i sigma_max u^m at cell centers and faces.
/// u runs from 0 at the PML interface to 1 at the domain edge.
struct Stretch {
  std::vector<Complex> center;  // size n
  std::vector<Complex> face;    // size n + 1, face f at coordinate f*dx
};

Stretch make_stretch(int n, int pml, double sigma_max, int order) {
  Stretch s;
  s.center.assign(n, Complex(1.0, 0.0));
  s.face.assign(n + 1, Complex(1.0, 0.0));
  if (pml <= 0) return s;
  auto profile = [&](double depth_cells) {
    const double u = depth_cells / pml;
    return Complex(1.0, sigma_max * std::pow(u, order));
  };
  for (int i = 0; i < n; ++i) {
    const double c = i + 0.5;
    if (c < pml) s.center[i] = profile(pml - c);
    if (c > n - pml) s.center[i] = profile(c - (n - pml));
  }
  for (int f = 0; f <= n; ++f) {
    if (f < pml) s.face[f] = profile(pml - f);
    if (f > n - pml) s.face[f] = profile(f - (n - pml));
  }
  return s;
}

VectorXcd checked_solve(const Eigen::SparseLU<SparseC>& lu, const SparseC& K,
                        const VectorXcd& J) {
  VectorXcd E = lu.solve(J);
  const double jn = J.norm();
  const double resid = jn > 0.0 ? (K * E - J).norm() / jn : (K * E).norm();
  if (!(resid < 1e-10))
    throw std::runtime_error("FDFD solve residual " + std::to_string(resid) +
                             " exceeds 1e-10 (system near-singular?)");
  return E;
}

long port_cell(const SimDomain& d, const PortSpec& p, int t) {
  // t is the transverse cell index.
  return p.axis == Axis::Y ? (t + static_cast<long>(d.nx()) * p.position)
                           : (p.position + static_cast<long>(d.nx()) * t);
}

Complex overlap(const VectorXcd& E, const SimDomain& d, const PortSpec& p,
                const ModeProfile& mode) {
  Complex a(0.0, 0.0);
  for (int t = p.span_lo; t < p.span_hi; ++t)
    a += mode.amplitude(t - p.span_lo) * E(port_cell(d, p, t));
  return a;
}

}  // namespace

MatrixXd SimDomain::design_cell_centers() const {
  MatrixXd coords(2, design_cells());
  long e = 0;
  for (int jy = 0; jy < design_ny; ++jy)
    for (int ix = 0; ix < design_nx; ++ix, ++e) {
      coords(0, e) = (design_x0() + ix + 0.5) * dx_nm;
      coords(1, e) = (design_y0() + jy + 0.5) * dx_nm;
    }
  return coords;
}

MatrixXd SimDomain::compose_eps(const MatrixXd& background, const VectorXd& design_eps) const {
  if (background.rows() != nx() || background.cols() != ny())
    throw std::invalid_argument("compose_eps: background shape mismatch");
  if (design_eps.size() != design_cells())
    throw std::invalid_argument("compose_eps: design vector size mismatch");
  MatrixXd eps = background;
  long e = 0;
  for (int jy = 0; jy < design_ny; ++jy)
    for (int ix = 0; ix < design_nx; ++ix, ++e)
      eps(design_x0() + ix, design_y0() + jy) = design_eps(e);
  return eps;
}

ModeProfile solve_mode_1d(const VectorXd& eps_slice, double lambda_nm, double dx_nm,
                          int order, int refine) {
  const int n = static_cast<int>(eps_slice.size());
  if (n < 8) throw std::invalid_argument("solve_mode_1d: slice too short");
  if (eps_slice.maxCoeff() <= eps_slice.minCoeff() + 1e-12)
    throw std::runtime_error("solve_mode_1d: slice has no guiding core");
  const double k0 = kTwoPi / lambda_nm;
  const int nf = n * refine;
  const double df = dx_nm / refine;

  MatrixXd M = MatrixXd::Zero(nf, nf);
  for (int k = 0; k < nf; ++k) {
    M(k, k) = -2.0 / (df * df) + k0 * k0 * eps_slice(k / refine);
    if (k > 0) M(k, k - 1) = 1.0 / (df * df);
    if (k + 1 < nf) M(k, k + 1) = 1.0 / (df * df);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("solve_mode_1d: eigensolver failed");

  // Guided modes: eps_min < n_eff^2 < eps_max, beta descending.
  const double lo = eps_slice.minCoeff() * k0 * k0;
  const double hi = eps_slice.maxCoeff() * k0 * k0;
  std::vector<int> guided;
  for (int k = nf - 1; k >= 0; --k) {
    const double ev = eig.eigenvalues()(k);
    if (ev > lo && ev < hi) guided.push_back(k);
  }
  if (static_cast<int>(guided.size()) <= order)
    throw std::runtime_error("solve_mode_1d: no guided mode of order " +
                             std::to_string(order) + " (found " +
                             std::to_string(guided.size()) + ")");

  const int pick = guided[order];
  ModeProfile mode;
  mode.order = order;
  mode.lambda_nm = lambda_nm;
  mode.beta = std::sqrt(eig.eigenvalues()(pick));
  mode.n_eff = mode.beta / k0;

  // Restrict the fine eigenvector to coarse cells by block averaging.
  mode.amplitude.resize(n);
  for (int j = 0; j < n; ++j)
    mode.amplitude(j) = eig.eigenvectors().col(pick).segment(j * refine, refine).mean();
  // Deterministic sign: peak positive.
  int peak = 0;
  mode.amplitude.cwiseAbs().maxCoeff(&peak);
  if (mode.amplitude(peak) < 0.0) mode.amplitude = -mode.amplitude;
  mode.amplitude /= mode.amplitude.norm();
  return mode;
}

System assemble_system(const MatrixXd& eps, double lambda_nm, const SimDomain& domain) {
  const int nx = domain.nx(), ny = domain.ny();
  if (eps.rows() != nx || eps.cols() != ny)
    throw std::invalid_argument("assemble_system: eps shape mismatch");
  if (!eps.allFinite()) throw std::runtime_error("assemble_system: non-finite permittivity");

  System sys;
  sys.nx = nx;
  sys.ny = ny;
  sys.k0 = kTwoPi / lambda_nm;

  double sigma_max = 0.0;
  if (domain.pml_cells > 0) {
    const double L = domain.pml_cells * domain.dx_nm;
    sigma_max = (domain.pml_order + 1) * std::log(1.0 / domain.pml_R0) / (2.0 * sys.k0 * L);
  }
  const Stretch sx = make_stretch(nx, domain.pml_cells, sigma_max, domain.pml_order);
  const Stretch sy = make_stretch(ny, domain.pml_cells, sigma_max, domain.pml_order);

  const double inv_dx2 = 1.0 / (domain.dx_nm * domain.dx_nm);
  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(static_cast<std::size_t>(5) * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const long e = i + static_cast<long>(nx) * j;
      const Complex cxp = sy.center[j] / sx.face[i + 1] * inv_dx2;
      const Complex cxm = sy.center[j] / sx.face[i] * inv_dx2;
      const Complex cyp = sx.center[i] / sy.face[j + 1] * inv_dx2;
      const Complex cym = sx.center[i] / sy.face[j] * inv_dx2;
      Complex diag = -(cxp + cxm + cyp + cym) +
                     sx.center[i] * sy.center[j] * sys.k0 * sys.k0 * eps(i, j);
      if (i + 1 < nx) trip.emplace_back(e, e + 1, cxp);
      if (i > 0) trip.emplace_back(e, e - 1, cxm);
      if (j + 1 < ny) trip.emplace_back(e, e + nx, cyp);
      if (j > 0) trip.emplace_back(e, e - nx, cym);
      trip.emplace_back(e, e, diag);
    }
  }
  sys.K.resize(nx * static_cast<long>(ny), nx * static_cast<long>(ny));
  sys.K.setFromTriplets(trip.begin(), trip.end());
  sys.K.makeCompressed();
  return sys;
}

VectorXcd solve(const System& system, const VectorXcd& J) {
  if (J.size() != system.K.rows()) throw std::invalid_argument("solve: J size mismatch");
  Eigen::SparseLU<SparseC> lu;
  lu.compute(system.K);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("FDFD factorization failed (singular system?)");
  return checked_solve(lu, system.K, J);
}

const ScatterEntry& ScatterSpectra::at(double lambda_nm, int port) const {
  const ScatterEntry* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& e : entries) {
    if (e.port != port) continue;
    const double d = std::abs(e.lambda_nm - lambda_nm);
    if (d < best_d) {
      best_d = d;
      best = &e;
    }
  }
  if (!best) throw std::out_of_range("ScatterSpectra::at: no entry for port");
  return *best;
}

struct ScatterSim::PerWavelength {
  double lambda = 0.0;
  double k0 = 0.0;
  std::vector<ModeProfile> modes;  // per port
  VectorXcd J;
  Complex a_inc{0.0, 0.0};
  VectorXcd Eref_line;  // field of the reference run on the input span
  // populated by forward():
  SparseC K;
  std::unique_ptr<Eigen::SparseLU<SparseC>> lu;
  VectorXcd E;
};

ScatterSim::~ScatterSim() = default;
ScatterSim::ScatterSim(ScatterSim&&) noexcept = default;
ScatterSim& ScatterSim::operator=(ScatterSim&&) noexcept = default;

ScatterSim::ScatterSim(const SimDomain& domain, std::vector<PortSpec> ports, int input_port,
                       const MatrixXd& eps_background, const MatrixXd& eps_reference,
                       std::vector<double> wavelengths)
    : domain_(domain),
      ports_(std::move(ports)),
      input_port_(input_port),
      wavelengths_(std::move(wavelengths)) {
  if (ports_.empty()) throw std::invalid_argument("ScatterSim: no ports");
  if (input_port_ < 0 || input_port_ >= static_cast<int>(ports_.size()))
    throw std::invalid_argument("ScatterSim: bad input port index");
  for (const auto& p : ports_) {
    const int n_trans = p.axis == Axis::Y ? domain_.nx() : domain_.ny();
    const int n_prop = p.axis == Axis::Y ? domain_.ny() : domain_.nx();
    if (p.span_lo < domain_.pml_cells || p.span_hi > n_trans - domain_.pml_cells)
      throw std::invalid_argument("ScatterSim: port span reaches into the PML");
    if (p.position <= domain_.pml_cells || p.position >= n_prop - domain_.pml_cells)
      throw std::invalid_argument("ScatterSim: monitor line must sit outside the PML");
  }

  for (double lambda : wavelengths_) {
    auto pw = std::make_unique<PerWavelength>();
    pw->lambda = lambda;
    pw->k0 = kTwoPi / lambda;

    for (const auto& p : ports_) {
      // Transverse permittivity slice of the background at the monitor line,
      // over the full non-PML extent; restrict the mode to the span after.
      const int n_trans = p.axis == Axis::Y ? domain_.nx() : domain_.ny();
      const int lo = domain_.pml_cells, hi = n_trans - domain_.pml_cells;
      VectorXd slice(hi - lo);
      for (int t = lo; t < hi; ++t)
        slice(t - lo) = p.axis == Axis::Y ? eps_background(t, p.position)
                                          : eps_background(p.position, t);
      ModeProfile wide = solve_mode_1d(slice, lambda, domain_.dx_nm, p.mode_order);
      ModeProfile mode = wide;
      mode.amplitude = wide.amplitude.segment(p.span_lo - lo, p.span());
      mode.amplitude /= mode.amplitude.norm();
      pw->modes.push_back(std::move(mode));
    }

    // Mode current source a few cells behind the input monitor.
    const PortSpec& in = ports_[input_port_];
    const ModeProfile& in_mode = pw->modes[input_port_];
    PortSpec source_line = in;
    source_line.position = in.position - in.direction * kSourceOffsetCells;
    const int n_prop = in.axis == Axis::Y ? domain_.ny() : domain_.nx();
    if (source_line.position <= domain_.pml_cells ||
        source_line.position >= n_prop - domain_.pml_cells)
      throw std::invalid_argument("ScatterSim: source line falls inside the PML");
    pw->J = VectorXcd::Zero(domain_.cells());
    for (int t = in.span_lo; t < in.span_hi; ++t)
      pw->J(port_cell(domain_, source_line, t)) = in_mode.amplitude(t - in.span_lo);

    // Reference run: incident normalization and the field to subtract at the
    // input monitor.
    System ref = assemble_system(eps_reference, lambda, domain_);
    VectorXcd Eref = solve(ref, pw->J);
    pw->Eref_line.resize(in.span());
    for (int t = in.span_lo; t < in.span_hi; ++t)
      pw->Eref_line(t - in.span_lo) = Eref(port_cell(domain_, in, t));
    pw->a_inc = Complex(0.0, 0.0);
    for (int t = 0; t < in.span(); ++t)
      pw->a_inc += pw->Eref_line(t) * in_mode.amplitude(t);
    if (std::abs(pw->a_inc) < 1e-12)
      throw std::runtime_error("ScatterSim: reference run couples no power into the mode");

    per_wavelength_.push_back(std::move(pw));
  }
}

const ScatterSpectra& ScatterSim::forward(const MatrixXd& eps) {
  spectra_.entries.clear();
  spectra_.wavelengths = wavelengths_;
  for (auto& pw : per_wavelength_) {
    System sys = assemble_system(eps, pw->lambda, domain_);
    pw->K = std::move(sys.K);
    pw->lu = std::make_unique<Eigen::SparseLU<SparseC>>();
    pw->lu->compute(pw->K);
    if (pw->lu->info() != Eigen::Success)
      throw std::runtime_error("FDFD factorization failed");
    pw->E = checked_solve(*pw->lu, pw->K, pw->J);

    const ModeProfile& in_mode = pw->modes[input_port_];
    for (int p = 0; p < static_cast<int>(ports_.size()); ++p) {
      Complex a = overlap(pw->E, domain_, ports_[p], pw->modes[p]);
      ScatterEntry entry;
      entry.lambda_nm = pw->lambda;
      entry.port = p;
      entry.mode_order = ports_[p].mode_order;
      if (p == input_port_) {
        entry.S = (a - pw->a_inc) / pw->a_inc;
      } else {
        entry.S = a / pw->a_inc * std::sqrt(pw->modes[p].beta / in_mode.beta);
      }
      spectra_.entries.push_back(entry);
    }
  }
  return spectra_;
}

VectorXd ScatterSim::adjoint(const std::vector<Complex>& cotangents) const {
  if (cotangents.size() != spectra_.entries.size())
    throw std::invalid_argument("adjoint: cotangent count mismatch");
  VectorXd grad = VectorXd::Zero(domain_.design_cells());
  std::size_t entry_idx = 0;
  for (const auto& pw : per_wavelength_) {
    if (!pw->lu) throw std::logic_error("adjoint: forward() must run first");
    VectorXcd rhs = VectorXcd::Zero(domain_.cells());
    const ModeProfile& in_mode = pw->modes[input_port_];
    for (int p = 0; p < static_cast<int>(ports_.size()); ++p, ++entry_idx) {
      const Complex g = cotangents[entry_idx];
      if (g == Complex(0.0, 0.0)) continue;
      // S = c * (v^T E) + const with c below; rhs += conj(g) c v.
      Complex c = Complex(1.0, 0.0) / pw->a_inc;
      if (p != input_port_) c *= std::sqrt(pw->modes[p].beta / in_mode.beta);
      const Complex w = std::conj(g) * c;
      const PortSpec& port = ports_[p];
      for (int t = port.span_lo; t < port.span_hi; ++t)
        rhs(port_cell(domain_, port, t)) += w * pw->modes[p].amplitude(t - port.span_lo);
    }
    if (rhs.isZero(0.0)) continue;
    VectorXcd mu = checked_solve(*pw->lu, pw->K, rhs);
    // dK/deps_e is diagonal: sx sy k0^2 = k0^2 in the design window.
    const double k02 = pw->k0 * pw->k0;
    long e = 0;
    for (int jy = 0; jy < domain_.design_ny; ++jy)
      for (int ix = 0; ix < domain_.design_nx; ++ix, ++e) {
        const long g_idx = (domain_.design_x0() + ix) +
                           static_cast<long>(domain_.nx()) * (domain_.design_y0() + jy);
        grad(e) += -k02 * (mu(g_idx) * pw->E(g_idx)).real();
      }
  }
  return grad;
}

MatrixXcd ScatterSim::field(double lambda_nm) const {
  const PerWavelength* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& pw : per_wavelength_) {
    const double d = std::abs(pw->lambda - lambda_nm);
    if (d < best_d) {
      best_d = d;
      best = pw.get();
    }
  }
  if (!best || best->E.size() == 0)
    throw std::logic_error("ScatterSim::field: no forward solve available");
  MatrixXcd out(domain_.nx(), domain_.ny());
  for (int j = 0; j < domain_.ny(); ++j)
    for (int i = 0; i < domain_.nx(); ++i)
      out(i, j) = best->E(i + static_cast<long>(domain_.nx()) * j);
  return out;
}

const ModeProfile& ScatterSim::mode(int wavelength_index, int port) const {
  return per_wavelength_.at(wavelength_index)->modes.at(port);
}

ScatterSpectra scatter_spectra(const MatrixXd& eps, const SimDomain& domain,
                               const std::vector<PortSpec>& ports, int input_port,
                               const MatrixXd& eps_reference,
                               const std::vector<double>& wavelengths) {
  ScatterSim sim(domain, ports, input_port, eps_reference, eps_reference, wavelengths);
  return sim.forward(eps);
}

}  // namespace photos::fdfd
