#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <memory>
#include <vector>

namespace photos::fdfd {

using Eigen::MatrixXd;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Complex = std::complex<double>;
using SparseC = Eigen::SparseMatrix<Complex>;

/// Simulation grid: a square design window padded by a buffer and a PML ring.
/// Cell (i, j) has its center at ((i+0.5) dx, (j+0.5) dx); linear index
/// g = i + nx * j.
struct SimDomain {
  double dx_nm = 20.0;
  int design_nx = 80, design_ny = 80;
  int pad_cells = 20;
  int pml_cells = 12;
  double pml_R0 = 1e-5;  // target amplitude reflection of the graded profile
  int pml_order = 3;

  int nx() const { return design_nx + 2 * (pad_cells + pml_cells); }
  int ny() const { return design_ny + 2 * (pad_cells + pml_cells); }
  int design_x0() const { return pml_cells + pad_cells; }
  int design_y0() const { return pml_cells + pad_cells; }
  long cells() const { return static_cast<long>(nx()) * ny(); }
  long design_cells() const { return static_cast<long>(design_nx) * design_ny; }

  /// Centers of the design-window cells (nm), ordered x-fastest.
  MatrixXd design_cell_centers() const;
  /// Scatter design-window values into a copy of `background`.
  MatrixXd compose_eps(const MatrixXd& background, const VectorXd& design_eps) const;
};

enum class Axis { X, Y };

/// Mode monitor line. `position` indexes the cell line along the propagation
/// axis; the span is the transverse cell range [span_lo, span_hi).
/// `direction` is the propagation direction of the wave the port carries
/// outward (+1 along +axis). The line must sit between the PML and the
/// design window.
struct PortSpec {
  Axis axis = Axis::X;
  int position = 0;
  int span_lo = 0, span_hi = 0;
  int direction = +1;
  int mode_order = 0;

  int span() const { return span_hi - span_lo; }
};

struct ModeProfile {
  VectorXd amplitude;  // over the span, self-overlap sum(phi^2) = 1
  double beta = 0.0;   // rad/nm
  double n_eff = 0.0;
  int order = 0;
  double lambda_nm = 0.0;
};

/// Transverse slab eigenproblem (d^2/dy^2 + k0^2 eps(y)) phi = beta^2 phi on
/// an internally refined grid, restricted back to the coarse cells.
/// Throws when fewer guided modes than `order`+1 exist.
ModeProfile solve_mode_1d(const VectorXd& eps_slice, double lambda_nm, double dx_nm,
                          int order, int refine = 4);

struct System {
  SparseC K;        // symmetric (unconjugated) with reciprocal PML weighting
  double k0 = 0.0;  // 2 pi / lambda, 1/nm
  int nx = 0, ny = 0;
};

/// 5-point Helmholtz operator with stretched-coordinate PML absorbed into the
/// difference coefficients; row e scaled by sx(i) sy(j) so K^T = K.
System assemble_system(const MatrixXd& eps, double lambda_nm, const SimDomain& domain);

/// Direct sparse factorization; asserts |K E - J| / |J| < 1e-10.
VectorXcd solve(const System& system, const VectorXcd& J);

struct ScatterEntry {
  double lambda_nm = 0.0;
  int port = 0;
  int mode_order = 0;
  Complex S{0.0, 0.0};
};

struct ScatterSpectra {
  std::vector<ScatterEntry> entries;
  std::vector<double> wavelengths;
  const ScatterEntry& at(double lambda_nm, int port) const;
};

/// Forward/adjoint engine for one port layout. Ports[input_port] carries the
/// excitation. eps_background supplies the mode slices (all waveguides
/// present); eps_reference is the straight input guide used for incident
/// normalization and reflection subtraction, solved once per wavelength.
class ScatterSim {
 public:
  ScatterSim(const SimDomain& domain, std::vector<PortSpec> ports, int input_port,
             const MatrixXd& eps_background, const MatrixXd& eps_reference,
             std::vector<double> wavelengths);
  ~ScatterSim();
  ScatterSim(ScatterSim&&) noexcept;
  ScatterSim& operator=(ScatterSim&&) noexcept;

  /// Solves every wavelength against `eps` (full grid) and keeps the
  /// factorizations and fields for a following adjoint() call.
  const ScatterSpectra& forward(const MatrixXd& eps);

  /// Gradient of sum_t Re[conj(cot_t) * S_t] w.r.t. the design-window
  /// permittivities (x-fastest order). Cotangents align with
  /// last_spectra().entries.
  VectorXd adjoint(const std::vector<Complex>& cotangents) const;

  const ScatterSpectra& last_spectra() const { return spectra_; }
  /// Full-grid field of the forward solve at the wavelength nearest to
  /// lambda_nm, reshaped nx x ny.
  MatrixXcd field(double lambda_nm) const;
  const std::vector<PortSpec>& ports() const { return ports_; }
  const ModeProfile& mode(int wavelength_index, int port) const;
  const SimDomain& domain() const { return domain_; }
  const std::vector<double>& wavelengths() const { return wavelengths_; }
  int input_port() const { return input_port_; }

 private:
  struct PerWavelength;
  SimDomain domain_;
  std::vector<PortSpec> ports_;
  int input_port_ = 0;
  std::vector<double> wavelengths_;
  std::vector<std::unique_ptr<PerWavelength>> per_wavelength_;
  ScatterSpectra spectra_;
};

/// One-call spectra for a fixed epsilon map (ports[0] is the input). Used by
/// reference physics checks and the CLI render path.
ScatterSpectra scatter_spectra(const MatrixXd& eps, const SimDomain& domain,
                               const std::vector<PortSpec>& ports, int input_port,
                               const MatrixXd& eps_reference,
                               const std::vector<double>& wavelengths);

}  // namespace photos::fdfd
