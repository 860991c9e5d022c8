#include "mrnav/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mrnav {
namespace {

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

struct ActiveSet {
  std::vector<Eigen::Index> rows;
  std::vector<int> side;  // -1 lower, +1 upper, 0 equality
};

// Solve the equality-constrained QP on the detected active set via a
// regularized KKT system with iterative refinement, then verify KKT
// conditions of the candidate against the original problem.
bool try_polish(const QpProblem& prob, const ActiveSet& act, double delta, QpResult& out) {
  const Eigen::Index n = prob.num_vars();
  const Eigen::Index na = static_cast<Eigen::Index>(act.rows.size());
  const Eigen::Index dim = n + na;

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
  kkt.topLeftCorner(n, n) = prob.P;
  kkt.topLeftCorner(n, n).diagonal().array() += delta;
  kkt.bottomRightCorner(na, na).diagonal().array() -= delta;

  Eigen::VectorXd rhs(dim);
  rhs.head(n) = -prob.q;
  for (Eigen::Index k = 0; k < na; ++k) {
    const Eigen::Index i = act.rows[static_cast<std::size_t>(k)];
    kkt.block(n + k, 0, 1, n) = prob.A.row(i);
    kkt.block(0, n + k, n, 1) = prob.A.row(i).transpose();
    rhs(n + k) = act.side[static_cast<std::size_t>(k)] > 0 ? prob.upper(i) : prob.lower(i);
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
  Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return false;

  // Refine against the unregularized KKT matrix.
  for (int it = 0; it < 3; ++it) {
    Eigen::VectorXd residual = rhs;
    residual.head(n).noalias() -= prob.P * sol.head(n);
    for (Eigen::Index k = 0; k < na; ++k) {
      const Eigen::Index i = act.rows[static_cast<std::size_t>(k)];
      residual.head(n).noalias() -= prob.A.row(i).transpose() * sol(n + k);
      residual(n + k) -= prob.A.row(i).dot(sol.head(n));
    }
    sol += lu.solve(residual);
  }

  Eigen::VectorXd x = sol.head(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(prob.num_constraints());
  for (Eigen::Index k = 0; k < na; ++k) {
    y(act.rows[static_cast<std::size_t>(k)]) = sol(n + k);
  }

  const Eigen::VectorXd ax = prob.A * x;
  const double feas_tol = 1e-9 * (1.0 + inf_norm(x));
  for (Eigen::Index i = 0; i < prob.num_constraints(); ++i) {
    if (std::isfinite(prob.lower(i)) && ax(i) < prob.lower(i) - feas_tol) return false;
    if (std::isfinite(prob.upper(i)) && ax(i) > prob.upper(i) + feas_tol) return false;
  }
  const double dual_tol = 1e-8 * (1.0 + inf_norm(y));
  for (Eigen::Index k = 0; k < na; ++k) {
    const Eigen::Index i = act.rows[static_cast<std::size_t>(k)];
    if (act.side[static_cast<std::size_t>(k)] > 0 && y(i) < -dual_tol) return false;
    if (act.side[static_cast<std::size_t>(k)] < 0 && y(i) > dual_tol) return false;
  }
  Eigen::VectorXd stat = prob.P * x + prob.q + prob.A.transpose() * y;
  const double stat_scale =
      1.0 +
      std::max({inf_norm(prob.P * x), inf_norm(prob.q), inf_norm(prob.A.transpose() * y)});
  if (inf_norm(stat) > 1e-8 * stat_scale) return false;

  out.x = std::move(x);
  out.y = std::move(y);
  out.z = ax;
  out.polished = true;
  out.primal_residual = 0.0;
  out.dual_residual = inf_norm(stat);
  return true;
}

// Modified Ruiz equilibration: diagonal variable scaling d_var, constraint
// scaling d_con, and a scalar cost factor, applied in place to (ps, qs, as).
// Recover unscaled quantities via x = d_var .* xs, y = d_con .* ys / cost,
// z = zs ./ d_con.
struct Scaling {
  Eigen::VectorXd d_var;
  Eigen::VectorXd d_con;
  double cost = 1.0;
};

Scaling ruiz_equilibrate(Eigen::MatrixXd& ps, Eigen::VectorXd& qs, Eigen::MatrixXd& as,
                         int iterations) {
  const Eigen::Index n = ps.rows();
  const Eigen::Index m = as.rows();
  Scaling s;
  s.d_var = Eigen::VectorXd::Ones(n);
  s.d_con = Eigen::VectorXd::Ones(m);

  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd dv(n), dc(m);
    for (Eigen::Index j = 0; j < n; ++j) {
      double norm = ps.col(j).cwiseAbs().maxCoeff();
      if (m > 0) norm = std::max(norm, as.col(j).cwiseAbs().maxCoeff());
      dv(j) = norm > 1e-12 ? 1.0 / std::sqrt(norm) : 1.0;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const double norm = as.row(i).cwiseAbs().maxCoeff();
      dc(i) = norm > 1e-12 ? 1.0 / std::sqrt(norm) : 1.0;
    }
    ps = dv.asDiagonal() * ps * dv.asDiagonal();
    qs = dv.asDiagonal() * qs;
    as = dc.asDiagonal() * as * dv.asDiagonal();
    s.d_var.array() *= dv.array();
    s.d_con.array() *= dc.array();

    // Keep the cost block on the same footing as the constraints.
    double mean_col = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) mean_col += ps.col(j).cwiseAbs().maxCoeff();
    mean_col /= static_cast<double>(std::max<Eigen::Index>(n, 1));
    const double gamma = 1.0 / std::max({mean_col, inf_norm(qs), 1e-8});
    if (std::isfinite(gamma) && gamma > 0.0) {
      ps *= gamma;
      qs *= gamma;
      s.cost *= gamma;
    }
  }
  return s;
}

}  // namespace

QpResult solve_qp(const QpProblem& prob, const QpSettings& settings,
                  const std::optional<QpWarmStart>& warm) {
  const Eigen::Index n = prob.num_vars();
  const Eigen::Index m = prob.num_constraints();

  QpResult result;
  result.x = Eigen::VectorXd::Zero(n);
  result.y = Eigen::VectorXd::Zero(m);

  Eigen::MatrixXd ps = prob.P;
  Eigen::VectorXd qs = prob.q;
  Eigen::MatrixXd as = prob.A;
  Scaling scale;
  if (settings.scale_rows) {
    scale = ruiz_equilibrate(ps, qs, as, 10);
  } else {
    scale.d_var = Eigen::VectorXd::Ones(n);
    scale.d_con = Eigen::VectorXd::Ones(m);
  }
  Eigen::VectorXd ls(m), us(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    ls(i) = std::isfinite(prob.lower(i)) ? prob.lower(i) * scale.d_con(i) : prob.lower(i);
    us(i) = std::isfinite(prob.upper(i)) ? prob.upper(i) * scale.d_con(i) : prob.upper(i);
  }

  Eigen::VectorXd xs = warm ? Eigen::VectorXd((warm->x.array() / scale.d_var.array()).matrix())
                            : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd ys;
  if (warm && warm->y.size() == m) {
    ys = scale.cost * (warm->y.array() / scale.d_con.array()).matrix();
  } else {
    ys = Eigen::VectorXd::Zero(m);
  }
  Eigen::VectorXd zs = (as * xs).cwiseMax(ls).cwiseMin(us);

  double rho = settings.rho;
  Eigen::LLT<Eigen::MatrixXd> llt;
  const Eigen::MatrixXd ata = as.transpose() * as;
  auto refactor = [&]() {
    Eigen::MatrixXd w = ps + rho * ata;
    w.diagonal().array() += settings.sigma;
    llt.compute(w);
  };
  refactor();
  if (llt.info() != Eigen::Success) {
    result.converged = false;
    return result;
  }

  auto unscale_x = [&](const Eigen::VectorXd& v) {
    return Eigen::VectorXd((scale.d_var.array() * v.array()).matrix());
  };
  auto unscale_y = [&](const Eigen::VectorXd& v) {
    return Eigen::VectorXd((scale.d_con.array() * v.array()).matrix() / scale.cost);
  };
  auto unscale_z = [&](const Eigen::VectorXd& v) {
    return Eigen::VectorXd((v.array() / scale.d_con.array()).matrix());
  };

  int next_polish = 0;
  const int polish_start = std::min(25, settings.max_iterations);
  int iter = 0;
  for (iter = 1; iter <= settings.max_iterations; ++iter) {
    Eigen::VectorXd rhs = settings.sigma * xs - qs + as.transpose() * (rho * zs - ys);
    Eigen::VectorXd x_tilde = llt.solve(rhs);
    Eigen::VectorXd z_tilde = as * x_tilde;

    xs = settings.alpha * x_tilde + (1.0 - settings.alpha) * xs;
    Eigen::VectorXd z_relaxed = settings.alpha * z_tilde + (1.0 - settings.alpha) * zs;
    Eigen::VectorXd z_next = (z_relaxed + ys / rho).cwiseMax(ls).cwiseMin(us);
    ys += rho * (z_relaxed - z_next);
    zs = z_next;

    if (iter % settings.check_interval != 0 && iter != settings.max_iterations) continue;
    if (!xs.allFinite()) break;

    // Residuals in the unscaled problem.
    const Eigen::VectorXd x = unscale_x(xs);
    const Eigen::VectorXd y = unscale_y(ys);
    const Eigen::VectorXd z = unscale_z(zs);
    const Eigen::VectorXd ax = prob.A * x;
    const double r_prim = inf_norm(ax - z);
    const Eigen::VectorXd px = prob.P * x;
    const Eigen::VectorXd aty = prob.A.transpose() * y;
    const double r_dual = inf_norm(px + prob.q + aty);

    const double eps_prim =
        settings.eps_abs + settings.eps_rel * std::max(inf_norm(ax), inf_norm(z));
    const double eps_dual =
        settings.eps_abs +
        settings.eps_rel * std::max({inf_norm(px), inf_norm(prob.q), inf_norm(aty)});

    result.primal_residual = r_prim;
    result.dual_residual = r_dual;

    const bool admm_converged = r_prim <= eps_prim && r_dual <= eps_dual;

    // Polish attempts are cheap relative to the iterations they save: a
    // verified polish terminates immediately at machine precision. After a
    // failed attempt, back off so the KKT solves stay a small cost share.
    if (admm_converged || (iter >= polish_start && iter >= next_polish)) {
      ActiveSet act;
      const double bnd_tol = 1e-7 * (1.0 + inf_norm(zs));
      for (Eigen::Index i = 0; i < m; ++i) {
        if (ls(i) == us(i)) {
          act.rows.push_back(i);
          act.side.push_back(0);
        } else if (ys(i) < -bnd_tol || (std::isfinite(ls(i)) && zs(i) - ls(i) <= bnd_tol)) {
          act.rows.push_back(i);
          act.side.push_back(-1);
        } else if (ys(i) > bnd_tol || (std::isfinite(us(i)) && us(i) - zs(i) <= bnd_tol)) {
          act.rows.push_back(i);
          act.side.push_back(+1);
        }
      }
      QpResult polished = result;
      if (static_cast<Eigen::Index>(act.rows.size()) <= n &&
          try_polish(prob, act, settings.polish_delta, polished)) {
        polished.iterations = iter;
        polished.converged = true;
        polished.objective = 0.5 * polished.x.dot(prob.P * polished.x) + prob.q.dot(polished.x);
        return polished;
      }
      next_polish = iter + 25;
    }

    if (admm_converged) {
      result.x = x;
      result.y = y;
      result.z = z;
      result.iterations = iter;
      result.converged = true;
      result.objective = 0.5 * x.dot(px) + prob.q.dot(x);
      return result;
    }

    if (settings.adaptive_rho && iter % 25 == 0) {
      const double prim_rel = r_prim / std::max(1e-12, std::max(inf_norm(ax), inf_norm(z)));
      const double dual_rel =
          r_dual / std::max(1e-12, std::max({inf_norm(px), inf_norm(prob.q), inf_norm(aty)}));
      const double ratio = std::sqrt(prim_rel / std::max(1e-16, dual_rel));
      if (ratio > 2.0 || ratio < 0.5) {
        rho = std::clamp(rho * ratio, 1e-6, 1e6);
        refactor();
      }
    }
  }

  result.x = unscale_x(xs);
  result.y = unscale_y(ys);
  result.z = unscale_z(zs);
  result.iterations = std::min(iter, settings.max_iterations);
  result.converged = false;
  result.objective = 0.5 * result.x.dot(prob.P * result.x) + prob.q.dot(result.x);
  return result;
}

}  // namespace mrnav
