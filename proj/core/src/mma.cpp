#include "photos/mma.hpp"

#include <cmath>
#include <stdexcept>

namespace photos::opt {

Mma::Mma(int n_vars, int n_constraints, VectorXd x_min, VectorXd x_max, MmaOptions options)
    : n_(n_vars), m_(n_constraints), xmin_(std::move(x_min)), xmax_(std::move(x_max)),
      opt_(options) {
  if (xmin_.size() != n_ || xmax_.size() != n_)
    throw std::invalid_argument("Mma: bounds size mismatch");
  low_ = xmin_;
  upp_ = xmax_;
}

VectorXd Mma::update(const VectorXd& x, double f, const VectorXd& df, const VectorXd& g,
                     const MatrixXd& dg) {
  (void)f;
  if (x.size() != n_ || df.size() != n_ || g.size() != m_ || dg.rows() != m_ ||
      dg.cols() != n_)
    throw std::invalid_argument("Mma::update: dimension mismatch");
  if (!df.allFinite() || !dg.allFinite() || !g.allFinite())
    throw std::invalid_argument("Mma::update: non-finite gradients");

  const VectorXd range = (xmax_ - xmin_).cwiseMax(1e-5);

  if (iter_ < 2) {
    low_ = x - opt_.asy_init * range;
    upp_ = x + opt_.asy_init * range;
  } else {
    for (int j = 0; j < n_; ++j) {
      const double zzz = (x(j) - xold1_(j)) * (xold1_(j) - xold2_(j));
      double factor = 1.0;
      if (zzz > 0.0) factor = opt_.asy_incr;
      else if (zzz < 0.0) factor = opt_.asy_decr;
      low_(j) = x(j) - factor * (xold1_(j) - low_(j));
      upp_(j) = x(j) + factor * (upp_(j) - xold1_(j));
      low_(j) = std::clamp(low_(j), x(j) - 10.0 * range(j), x(j) - 0.01 * range(j));
      upp_(j) = std::clamp(upp_(j), x(j) + 0.01 * range(j), x(j) + 10.0 * range(j));
    }
  }

  // Inner bounds: asymptote margin, box bounds, and the hard move limit.
  VectorXd alfa(n_), beta(n_);
  for (int j = 0; j < n_; ++j) {
    alfa(j) = std::max({xmin_(j), low_(j) + opt_.albefa * (x(j) - low_(j)),
                        x(j) - opt_.move_limit});
    beta(j) = std::min({xmax_(j), upp_(j) - opt_.albefa * (upp_(j) - x(j)),
                        x(j) + opt_.move_limit});
  }

  // Separable approximation coefficients.
  VectorXd p0(n_), q0(n_), b = -g;
  MatrixXd P(m_, n_), Q(m_, n_);
  for (int j = 0; j < n_; ++j) {
    const double ux = upp_(j) - x(j);
    const double xl = x(j) - low_(j);
    const double dfp = std::max(df(j), 0.0);
    const double dfm = std::max(-df(j), 0.0);
    const double pq0 = 0.001 * (dfp + dfm) + opt_.raa0 / range(j);
    p0(j) = (dfp + pq0) * ux * ux;
    q0(j) = (dfm + pq0) * xl * xl;
    for (int i = 0; i < m_; ++i) {
      const double dgp = std::max(dg(i, j), 0.0);
      const double dgm = std::max(-dg(i, j), 0.0);
      const double pq = 0.001 * (dgp + dgm) + opt_.raa0 / range(j);
      P(i, j) = (dgp + pq) * ux * ux;
      Q(i, j) = (dgm + pq) * xl * xl;
      b(i) += P(i, j) / ux + Q(i, j) / xl;
    }
  }

  const VectorXd x_new = subsolve(alfa, beta, p0, q0, P, Q, b);

  xold2_ = iter_ >= 1 ? xold1_ : x;
  xold1_ = x;
  ++iter_;
  return x_new;
}

VectorXd Mma::subsolve(const VectorXd& alfa, const VectorXd& beta, const VectorXd& p0,
                       const VectorXd& q0, const MatrixXd& P, const MatrixXd& Q,
                       const VectorXd& b) const {
  const int n = n_, m = m_;
  const double a0 = 1.0;
  const VectorXd a = VectorXd::Zero(m);
  const VectorXd c = VectorXd::Constant(m, opt_.c_penalty);
  const VectorXd d = VectorXd::Ones(m);

  VectorXd x = 0.5 * (alfa + beta);
  VectorXd y = VectorXd::Ones(m);
  double z = 1.0;
  VectorXd lam = VectorXd::Ones(m);
  VectorXd xsi = (x - alfa).cwiseInverse().cwiseMax(1.0);
  VectorXd eta = (beta - x).cwiseInverse().cwiseMax(1.0);
  VectorXd mu = (0.5 * c).cwiseMax(1.0);
  double zet = 1.0;
  VectorXd s = VectorXd::Ones(m);

  auto residual = [&](const VectorXd& xv, const VectorXd& yv, double zv,
                      const VectorXd& lamv, const VectorXd& xsiv, const VectorXd& etav,
                      const VectorXd& muv, double zetv, const VectorXd& sv, double epsi,
                      double* out_max) {
    const VectorXd ux1 = upp_ - xv, xl1 = xv - low_;
    const VectorXd plam = p0 + P.transpose() * lamv;
    const VectorXd qlam = q0 + Q.transpose() * lamv;
    const VectorXd gvec = P * ux1.cwiseInverse() + Q * xl1.cwiseInverse();
    const VectorXd rex = plam.cwiseQuotient(ux1.cwiseAbs2()) -
                         qlam.cwiseQuotient(xl1.cwiseAbs2()) - xsiv + etav;
    const VectorXd rey = c + d.cwiseProduct(yv) - muv - lamv;
    const double rez = a0 - zetv - a.dot(lamv);
    const VectorXd relam = gvec - a * zv - yv + sv - b;
    const VectorXd rexsi = xsiv.cwiseProduct(xv - alfa).array() - epsi;
    const VectorXd reeta = etav.cwiseProduct(beta - xv).array() - epsi;
    const VectorXd remu = muv.cwiseProduct(yv).array() - epsi;
    const double rezet = zetv * zv - epsi;
    const VectorXd res = lamv.cwiseProduct(sv).array() - epsi;

    double sq = rex.squaredNorm() + rey.squaredNorm() + rez * rez + relam.squaredNorm() +
                rexsi.squaredNorm() + reeta.squaredNorm() + remu.squaredNorm() +
                rezet * rezet + res.squaredNorm();
    double mx = std::max({rex.cwiseAbs().maxCoeff(), rey.size() ? rey.cwiseAbs().maxCoeff() : 0.0,
                          std::abs(rez), relam.size() ? relam.cwiseAbs().maxCoeff() : 0.0,
                          rexsi.cwiseAbs().maxCoeff(), reeta.cwiseAbs().maxCoeff(),
                          remu.size() ? remu.cwiseAbs().maxCoeff() : 0.0, std::abs(rezet),
                          res.size() ? res.cwiseAbs().maxCoeff() : 0.0});
    if (out_max) *out_max = mx;
    return std::sqrt(sq);
  };

  double epsi = 1.0;
  while (epsi > opt_.epsimin) {
    double residumax = 0.0;
    double residunorm = residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi, &residumax);

    int ittt = 0;
    while (residumax > 0.9 * epsi) {
      if (++ittt > opt_.max_subsolve_iters)
        throw std::runtime_error("MMA subproblem did not converge, residual " +
                                 std::to_string(residumax));
      const VectorXd ux1 = upp_ - x, xl1 = x - low_;
      const VectorXd ux2 = ux1.cwiseAbs2(), xl2 = xl1.cwiseAbs2();
      const VectorXd ux3 = ux1.cwiseProduct(ux2), xl3 = xl1.cwiseProduct(xl2);
      const VectorXd plam = p0 + P.transpose() * lam;
      const VectorXd qlam = q0 + Q.transpose() * lam;
      const VectorXd gvec = P * ux1.cwiseInverse() + Q * xl1.cwiseInverse();
      MatrixXd GG(m, n);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          GG(i, j) = P(i, j) / ux2(j) - Q(i, j) / xl2(j);

      const VectorXd dpsidx =
          plam.cwiseQuotient(ux2) - qlam.cwiseQuotient(xl2);
      VectorXd delx(n);
      for (int j = 0; j < n; ++j)
        delx(j) = dpsidx(j) - epsi / (x(j) - alfa(j)) + epsi / (beta(j) - x(j));
      const VectorXd dely =
          c + d.cwiseProduct(y) - lam - epsi * y.cwiseInverse();
      const double delz = a0 - a.dot(lam) - epsi / z;
      const VectorXd dellam =
          gvec - a * z - y - b + epsi * lam.cwiseInverse();

      VectorXd diagx(n);
      for (int j = 0; j < n; ++j)
        diagx(j) = 2.0 * (plam(j) / ux3(j) + qlam(j) / xl3(j)) +
                   xsi(j) / (x(j) - alfa(j)) + eta(j) / (beta(j) - x(j));
      const VectorXd diagy = d + mu.cwiseQuotient(y);
      const VectorXd diaglamyi = s.cwiseQuotient(lam) + diagy.cwiseInverse();

      // Solve the (m+1) reduced system (m << n here).
      VectorXd blam = dellam + dely.cwiseQuotient(diagy) -
                      GG * delx.cwiseQuotient(diagx);
      MatrixXd Alam = diaglamyi.asDiagonal();
      Alam += GG * diagx.cwiseInverse().asDiagonal() * GG.transpose();
      MatrixXd AA(m + 1, m + 1);
      AA.topLeftCorner(m, m) = Alam;
      AA.topRightCorner(m, 1) = a;
      AA.bottomLeftCorner(1, m) = a.transpose();
      AA(m, m) = -zet / z;
      VectorXd bb(m + 1);
      bb.head(m) = blam;
      bb(m) = delz;
      const VectorXd solut = AA.fullPivLu().solve(bb);
      const VectorXd dlam = solut.head(m);
      const double dz = solut(m);
      const VectorXd dx =
          -delx.cwiseQuotient(diagx) - (GG.transpose() * dlam).cwiseQuotient(diagx);
      const VectorXd dy = -dely.cwiseQuotient(diagy) + dlam.cwiseQuotient(diagy);
      VectorXd dxsi(n), deta(n);
      for (int j = 0; j < n; ++j) {
        dxsi(j) = -xsi(j) + epsi / (x(j) - alfa(j)) - xsi(j) * dx(j) / (x(j) - alfa(j));
        deta(j) = -eta(j) + epsi / (beta(j) - x(j)) + eta(j) * dx(j) / (beta(j) - x(j));
      }
      const VectorXd dmu =
          -mu + epsi * y.cwiseInverse() - mu.cwiseProduct(dy).cwiseQuotient(y);
      const double dzet = -zet + epsi / z - zet * dz / z;
      const VectorXd ds =
          -s + epsi * lam.cwiseInverse() - s.cwiseProduct(dlam).cwiseQuotient(lam);

      // Fraction-to-boundary step length.
      double stmax = 1.0;
      auto cap = [&stmax](double v, double dv) {
        if (dv < 0.0) stmax = std::max(stmax, -1.01 * dv / v);
      };
      for (int i = 0; i < m; ++i) {
        cap(y(i), dy(i));
        cap(lam(i), dlam(i));
        cap(mu(i), dmu(i));
        cap(s(i), ds(i));
      }
      cap(z, dz);
      cap(zet, dzet);
      for (int j = 0; j < n; ++j) {
        cap(xsi(j), dxsi(j));
        cap(eta(j), deta(j));
        cap(x(j) - alfa(j), dx(j));
        cap(beta(j) - x(j), -dx(j));
      }
      double steg = 1.0 / stmax;

      const VectorXd xo = x, yo = y, lamo = lam, xsio = xsi, etao = eta, muo = mu, so = s;
      const double zo = z, zeto = zet;
      double resinew = 2.0 * residunorm;
      int itto = 0;
      while (resinew > residunorm && itto < 50) {
        ++itto;
        x = xo + steg * dx;
        y = yo + steg * dy;
        z = zo + steg * dz;
        lam = lamo + steg * dlam;
        xsi = xsio + steg * dxsi;
        eta = etao + steg * deta;
        mu = muo + steg * dmu;
        zet = zeto + steg * dzet;
        s = so + steg * ds;
        resinew = residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi, &residumax);
        steg *= 0.5;
      }
      residunorm = resinew;
    }
    epsi *= 0.1;
  }
  return x;
}

}  // namespace photos::opt
