#include "ddc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "ddc/kkt.hpp"
#include "ddc/simd/kernels.hpp"

namespace ddc::qp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

std::span<const double> cspan(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
std::span<double> mspan(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Problem in the stacked form  l <= C x <= u  with equality rows first.
struct Stacked {
  Matrix P;
  Vector q;
  Matrix C;
  Vector l, u;
  Eigen::Index n_eq = 0;
};

Stacked stack(const QpProblem& p) {
  Stacked s;
  s.P = p.H;
  s.q = p.f;
  const auto e = p.num_eq();
  const auto m = e + p.num_in();
  s.n_eq = e;
  s.C.resize(m, p.dim());
  s.l.resize(m);
  s.u.resize(m);
  if (e > 0) {
    s.C.topRows(e) = p.A_eq;
    s.l.head(e) = p.b_eq;
    s.u.head(e) = p.b_eq;
  }
  if (p.num_in() > 0) {
    s.C.bottomRows(p.num_in()) = p.A_in;
    s.l.tail(p.num_in()).setConstant(-kInf);
    s.u.tail(p.num_in()) = p.b_in;
  }
  return s;
}

// Ruiz equilibration: Pbar = c D P D, qbar = c D q, Cbar = E C D.
struct Scaling {
  Vector D, E;
  double c = 1.0;
};

double clamp_scale(double norm) {
  if (norm < 1e-4) return 1.0;
  return 1.0 / std::sqrt(std::min(norm, 1e4));
}

Scaling equilibrate(Stacked& s, int iterations) {
  const auto n = s.P.rows();
  const auto m = s.C.rows();
  Scaling sc{Vector::Ones(n), Vector::Ones(m), 1.0};
  for (int it = 0; it < iterations; ++it) {
    Vector dcol(n), erow(m);
    for (Eigen::Index j = 0; j < n; ++j) {
      double norm = s.P.col(j).lpNorm<Eigen::Infinity>();
      if (m > 0) norm = std::max(norm, s.C.col(j).lpNorm<Eigen::Infinity>());
      dcol(j) = clamp_scale(norm);
    }
    for (Eigen::Index i = 0; i < m; ++i) erow(i) = clamp_scale(s.C.row(i).lpNorm<Eigen::Infinity>());
    s.P = dcol.asDiagonal() * s.P * dcol.asDiagonal();
    s.q = s.q.cwiseProduct(dcol);
    s.C = erow.asDiagonal() * s.C * dcol.asDiagonal();
    sc.D = sc.D.cwiseProduct(dcol);
    sc.E = sc.E.cwiseProduct(erow);

    double mean_col = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) mean_col += s.P.col(j).lpNorm<Eigen::Infinity>();
    mean_col /= static_cast<double>(std::max<Eigen::Index>(n, 1));
    const double gamma = clamp_scale(std::max(mean_col, inf_norm(s.q)));
    const double g = gamma * gamma;  // clamp_scale returns 1/sqrt
    s.P *= g;
    s.q *= g;
    sc.c *= g;
  }
  s.l = s.l.cwiseProduct(sc.E);
  s.u = s.u.cwiseProduct(sc.E);
  return sc;
}

// Candidate point in the original problem's variables.
struct Candidate {
  Vector z, lambda, nu;
  KktReport kkt;
  double score = kInf;
};

Candidate make_candidate(const QpProblem& p, Vector z, Vector lambda, Vector nu) {
  Candidate c{std::move(z), std::move(lambda), std::move(nu), {}, kInf};
  c.kkt = check_kkt(p, c.z, c.lambda, c.nu);
  c.score = c.kkt.max();
  if (!std::isfinite(c.score)) c.score = kInf;
  return c;
}

// Solve the equality-constrained problem defined by all equality rows plus the
// inequality rows flagged in `active`, then correct the active set
// (primal-dual active set rule) until it is consistent.
Candidate polish(const QpProblem& p, std::vector<char> active) {
  const auto n = p.dim();
  const auto e = p.num_eq();
  const auto q = p.num_in();
  const double reg = 1e-11 * (1.0 + p.H.lpNorm<Eigen::Infinity>());
  Candidate best;
  std::vector<std::vector<char>> seen;

  for (int round = 0; round < 30; ++round) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < q; ++i) {
      if (active[static_cast<std::size_t>(i)]) rows.push_back(i);
    }
    const auto a = e + static_cast<Eigen::Index>(rows.size());
    Matrix K = Matrix::Zero(n + a, n + a);
    K.topLeftCorner(n, n) = p.H;
    Vector rhs(n + a);
    rhs.head(n) = -p.f;
    if (e > 0) {
      K.block(n, 0, e, n) = p.A_eq;
      rhs.segment(n, e) = p.b_eq;
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto r = n + e + static_cast<Eigen::Index>(k);
      K.row(r).head(n) = p.A_in.row(rows[k]);
      rhs(r) = p.b_in(rows[k]);
    }
    K.topRightCorner(n, a) = K.bottomLeftCorner(a, n).transpose();
    Matrix Kreg = K;
    Kreg.topLeftCorner(n, n).diagonal().array() += reg;
    Kreg.bottomRightCorner(a, a).diagonal().array() -= reg;

    Eigen::PartialPivLU<Matrix> lu(Kreg);
    Vector sol = lu.solve(rhs);
    for (int refine = 0; refine < 8; ++refine) {
      const Vector r = rhs - K * sol;
      if (!(inf_norm(r) > 1e-15 * (1.0 + inf_norm(rhs)))) break;
      sol += lu.solve(r);
    }

    Vector z = sol.head(n);
    Vector lambda = sol.segment(n, e);
    Vector nu = Vector::Zero(q);
    for (std::size_t k = 0; k < rows.size(); ++k) nu(rows[k]) = sol(n + e + static_cast<Eigen::Index>(k));
    Candidate c = make_candidate(p, z, lambda, nu);

    // Primal-dual active-set correction.
    std::vector<char> next(active.size(), 0);
    bool changed = false;
    if (q > 0) {
      const Vector slack = p.b_in - p.A_in * z;
      const double feas_tol = 1e-13 * (1.0 + inf_norm(p.b_in));
      for (Eigen::Index i = 0; i < q; ++i) {
        const auto si = static_cast<std::size_t>(i);
        next[si] = active[si] ? (nu(i) >= -1e-12) : (slack(i) < -feas_tol);
        changed = changed || next[si] != active[si];
      }
    }
    if (c.score < best.score) best = std::move(c);
    if (!changed) break;
    if (std::find(seen.begin(), seen.end(), next) != seen.end()) break;  // cycling
    seen.push_back(active);
    active = std::move(next);
  }
  return best;
}

std::vector<char> guess_active_set(const QpProblem& p, const Vector& z, const Vector& nu) {
  std::vector<char> active(static_cast<std::size_t>(p.num_in()), 0);
  if (p.num_in() == 0) return active;
  const Vector slack = p.b_in - p.A_in * z;
  for (Eigen::Index i = 0; i < p.num_in(); ++i) active[static_cast<std::size_t>(i)] = nu(i) > slack(i);
  return active;
}

bool primal_infeasible(const Stacked& orig, const Vector& dy, double eps) {
  const double scale = inf_norm(dy);
  if (!(scale > 0.0)) return false;
  const Vector d = dy / scale;
  if (inf_norm(orig.C.transpose() * d) > eps) return false;
  double support = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) > 0.0) {
      if (!std::isfinite(orig.u(i))) return false;
      support += orig.u(i) * d(i);
    } else if (d(i) < 0.0) {
      if (!std::isfinite(orig.l(i))) return false;
      support += orig.l(i) * d(i);
    }
  }
  return support < -eps;
}

}  // namespace

const char* to_string(Status status) {
  switch (status) {
    case Status::Optimal:
      return "optimal";
    case Status::Infeasible:
      return "infeasible";
    case Status::MaxIterations:
      return "max_iterations";
  }
  return "unknown";
}

void QpProblem::validate() const {
  const auto d = H.rows();
  if (H.cols() != d || f.size() != d) throw DimensionError("qp: H must be d x d and f length d");
  if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != d)) {
    throw DimensionError("qp: equality constraints have inconsistent shape");
  }
  if (A_in.rows() != b_in.size() || (A_in.rows() > 0 && A_in.cols() != d)) {
    throw DimensionError("qp: inequality constraints have inconsistent shape");
  }
  const double scale = 1.0 + H.lpNorm<Eigen::Infinity>();
  if ((H - H.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * scale) {
    throw DimensionError("qp: H is not symmetric");
  }
}

QpSolution solve(const QpProblem& problem, double tol, int max_iter) {
  Settings s;
  s.tol = tol;
  s.max_iter = max_iter;
  return solve(problem, s);
}

QpSolution solve(const QpProblem& problem, const Settings& settings,
                 const std::optional<WarmStart>& warm_start) {
  problem.validate();
  const auto& kernels = simd::active_kernels();
  const auto n = problem.dim();
  const auto e = problem.num_eq();
  const auto q = problem.num_in();
  const auto m = e + q;

  const Stacked orig = stack(problem);
  Stacked s = orig;
  const Scaling sc = equilibrate(s, settings.scaling_iterations);

  QpSolution out;
  Candidate best;
  auto finish = [&](Candidate c, Status status, int iterations, bool polished) {
    out.z_star = std::move(c.z);
    out.eq_multipliers = std::move(c.lambda);
    out.in_multipliers = std::move(c.nu);
    out.objective = problem.objective(out.z_star);
    out.kkt_residual = c.score;
    out.status = status;
    out.iterations = iterations;
    out.polished = polished;
    return out;
  };
  auto consider = [&](Candidate c) {
    if (c.score < best.score) best = c;
    return c.score <= settings.tol;
  };

  // Scaled ADMM iterates.
  Vector x = Vector::Zero(n);
  Vector z = Vector::Zero(m);
  Vector y = Vector::Zero(m);
  if (warm_start) {
    if (warm_start->z.size() == n) x = warm_start->z.cwiseQuotient(sc.D);
    if (warm_start->eq_multipliers.size() == e && warm_start->in_multipliers.size() == q) {
      Vector yo(m);
      yo << warm_start->eq_multipliers, warm_start->in_multipliers;
      y = yo.cwiseQuotient(sc.E) * sc.c;
    }
    z = (s.C * x).cwiseMax(s.l).cwiseMin(s.u);
  }

  if (settings.polish && warm_start && warm_start->z.size() == n &&
      warm_start->in_multipliers.size() == q) {
    Candidate c = polish(problem, guess_active_set(problem, warm_start->z, warm_start->in_multipliers));
    if (consider(std::move(c))) return finish(best, Status::Optimal, 0, true);
  }

  Vector rho_vec(m);
  double rho = settings.rho;
  auto set_rho = [&] {
    for (Eigen::Index i = 0; i < m; ++i) rho_vec(i) = (i < e) ? rho * 1e3 : rho;
  };
  set_rho();
  Eigen::LLT<Matrix> llt;
  auto factor = [&] {
    Matrix K = s.P;
    K.diagonal().array() += settings.sigma;
    if (m > 0) K.noalias() += s.C.transpose() * rho_vec.asDiagonal() * s.C;
    llt.compute(K);
  };
  factor();

  Vector xt(n), zt(m), y_prev(m), rhs(n);
  double next_polish_level = 1e-3;
  std::vector<char> last_polished;
  int iter = 0;
  for (iter = 1; iter <= settings.max_iter; ++iter) {
    y_prev = y;
    rhs = settings.sigma * x - s.q;
    if (m > 0) rhs.noalias() += s.C.transpose() * (rho_vec.cwiseProduct(z) - y);
    xt = llt.solve(rhs);
    if (m > 0) zt.noalias() = s.C * xt;
    kernels.relax(cspan(xt), mspan(x), settings.alpha);
    if (m > 0) {
      kernels.project_dual(cspan(zt), mspan(z), mspan(y), cspan(s.l), cspan(s.u), cspan(rho_vec),
                           settings.alpha);
    }

    if (iter % settings.check_interval != 0 && iter != settings.max_iter) continue;

    // Residuals in original units.
    const Vector cx = m > 0 ? Vector(s.C * x) : Vector();
    const Vector px = s.P * x;
    const Vector cty = m > 0 ? Vector(s.C.transpose() * y) : Vector::Zero(n);
    double prim = 0.0, prim_scale = 0.0;
    if (m > 0) {
      const Vector r = (cx - z).cwiseQuotient(sc.E);
      prim = kernels.max_abs(cspan(r));
      prim_scale = std::max(inf_norm(cx.cwiseQuotient(sc.E)), inf_norm(z.cwiseQuotient(sc.E)));
    }
    const Vector rd = (px + s.q + cty).cwiseQuotient(sc.D) / sc.c;
    const double dual = kernels.max_abs(cspan(rd));
    const double dual_scale =
        std::max({inf_norm(px.cwiseQuotient(sc.D)), inf_norm(cty.cwiseQuotient(sc.D)),
                  inf_norm(s.q.cwiseQuotient(sc.D))}) / sc.c;
    const double prim_rel = prim / (1.0 + prim_scale);
    const double dual_rel = dual / (1.0 + dual_scale);

    if (!std::isfinite(prim) || !std::isfinite(dual)) break;

    Vector x_orig = sc.D.cwiseProduct(x);
    Vector y_orig = sc.E.cwiseProduct(y) / sc.c;
    auto admm_candidate = [&] {
      Vector nu = y_orig.tail(q).cwiseMax(0.0);
      return make_candidate(problem, x_orig, y_orig.head(e), nu);
    };

    if (std::max(prim_rel, dual_rel) <= settings.tol) {
      if (consider(admm_candidate())) return finish(best, Status::Optimal, iter, false);
    }
    if (settings.polish && std::max(prim_rel, dual_rel) <= next_polish_level) {
      auto guess = guess_active_set(problem, x_orig, y_orig.tail(q));
      if (guess != last_polished) {
        Candidate c = polish(problem, guess);
        if (consider(std::move(c))) return finish(best, Status::Optimal, iter, true);
        last_polished = std::move(guess);
      }
      next_polish_level = std::max(next_polish_level * 0.1, settings.tol);
    }

    if (m > 0 && prim_rel > settings.tol) {
      const Vector dy = sc.E.cwiseProduct(y - y_prev);
      if (primal_infeasible(orig, dy, settings.infeasibility_tol)) {
        consider(admm_candidate());
        return finish(admm_candidate(), Status::Infeasible, iter, false);
      }
    }

    // Step-size adaptation balancing the scaled residuals.
    if (m > 0) {
      const double sp = inf_norm(s.C * x - z) / (1e-30 + std::max(inf_norm(s.C * x), inf_norm(z)));
      const double sd = inf_norm(px + s.q + cty) /
                        (1e-30 + std::max({inf_norm(px), inf_norm(cty), inf_norm(s.q)}));
      if (sp > 0.0 && sd > 0.0) {
        const double ratio = std::sqrt(sp / sd);
        if (ratio > 5.0 || ratio < 0.2) {
          rho = std::clamp(rho * ratio, 1e-6, 1e6);
          set_rho();
          factor();
        }
      }
    }
  }
  iter = std::min(iter, settings.max_iter);

  {
    Vector x_orig = sc.D.cwiseProduct(x);
    Vector y_orig = sc.E.cwiseProduct(y) / sc.c;
    if (x_orig.allFinite() && y_orig.allFinite()) {
      consider(make_candidate(problem, x_orig, y_orig.head(e), y_orig.tail(q).cwiseMax(0.0)));
      auto guess = guess_active_set(problem, x_orig, y_orig.tail(q));
      if (settings.polish && guess != last_polished) {
        if (consider(polish(problem, std::move(guess)))) return finish(best, Status::Optimal, iter, true);
      }
    }
  }
  if (best.z.size() != n) best = make_candidate(problem, Vector::Zero(n), Vector::Zero(e), Vector::Zero(q));
  return finish(best, Status::MaxIterations, iter, false);
}

void dump_problem(std::ostream& os, const QpProblem& p) {
  const auto old_precision = os.precision(17);
  auto block = [&](const char* name, const Matrix& mtx) {
    os << "%% " << name << "\n" << mtx.rows() << ' ' << mtx.cols() << '\n';
    for (Eigen::Index j = 0; j < mtx.cols(); ++j) {
      for (Eigen::Index i = 0; i < mtx.rows(); ++i) os << mtx(i, j) << '\n';
    }
  };
  os << "%%MatrixMarket matrix array real general\n";
  block("H", p.H);
  block("f", p.f);
  block("A_eq", p.A_eq);
  block("b_eq", p.b_eq);
  block("A_in", p.A_in);
  block("b_in", p.b_in);
  os.precision(old_precision);
}

}  // namespace ddc::qp
