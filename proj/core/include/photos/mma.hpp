#pragma once

#include <Eigen/Dense>

namespace photos::opt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct MmaOptions {
  double move_limit = 0.01;  // per-variable step cap, in variable units
  double asy_init = 0.5;
  double asy_incr = 1.2;
  double asy_decr = 0.7;
  double albefa = 0.1;
  double raa0 = 1e-5;
  double epsimin = 1e-10;  // interior-point relaxation floor
  double c_penalty = 1000.0;
  int max_subsolve_iters = 200;
};

/// Method of moving asymptotes (Svanberg 2007 flavor). The convex separable
/// subproblem is solved by a primal-dual Newton method driven to KKT residual
/// below epsimin * 0.9 < 1e-9.
class Mma {
 public:
  Mma(int n_vars, int n_constraints, VectorXd x_min, VectorXd x_max,
      MmaOptions options = {});

  /// One design update. dg is n_constraints x n_vars. Keeps the two previous
  /// iterates and the asymptotes internally.
  VectorXd update(const VectorXd& x, double f, const VectorXd& df, const VectorXd& g,
                  const MatrixXd& dg);

  int iteration() const { return iter_; }
  const VectorXd& asymptote_low() const { return low_; }
  const VectorXd& asymptote_high() const { return upp_; }

 private:
  VectorXd subsolve(const VectorXd& alfa, const VectorXd& beta, const VectorXd& p0,
                    const VectorXd& q0, const MatrixXd& P, const MatrixXd& Q,
                    const VectorXd& b) const;

  int n_, m_;
  VectorXd xmin_, xmax_;
  MmaOptions opt_;
  int iter_ = 0;
  VectorXd xold1_, xold2_, low_, upp_;
};

}  // namespace photos::opt
