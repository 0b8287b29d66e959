#include "dc2ac/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "dc2ac/errors.hpp"

namespace dc2ac {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kReg = 1e-9;      // static KKT regularization
constexpr double kStepFrac = 0.995;
// Degenerate active sets can wreck the iterate after it has already reached
// near-optimal residuals; a best-so-far point at this level is accepted.
constexpr double kSalvageTol = 1e-6;

enum class RowOrigin { User, Ub, Lb };

struct Internal {
  // min 1/2 x'Hx + c'x  s.t.  Ae x = be,  Ai x + s = bi, s >= 0
  Eigen::SparseMatrix<double> H, Ae, Ai;
  Eigen::VectorXd c, be, bi;
  std::vector<RowOrigin> origin;   // per Ai row
  std::vector<int> origin_index;   // user row / variable index
  std::vector<int> fixed_vars;     // variables pinned by lb == ub
  bool inconsistent_bounds = false;
};

Internal standardize(const QpProblem& p) {
  const int n = static_cast<int>(p.c.size());
  if (n == 0) throw DimensionMismatch("empty objective");

  Internal w;
  w.c = p.c;
  if (p.H.rows() == 0 && p.H.cols() == 0) {
    w.H.resize(n, n);
  } else if (p.H.rows() == n && p.H.cols() == n) {
    w.H = p.H;
  } else {
    throw DimensionMismatch("H is " + std::to_string(p.H.rows()) + "x" +
                            std::to_string(p.H.cols()) + " for n=" + std::to_string(n));
  }

  Eigen::VectorXd lb = p.lb.size() ? p.lb : Eigen::VectorXd::Constant(n, -kInf);
  Eigen::VectorXd ub = p.ub.size() ? p.ub : Eigen::VectorXd::Constant(n, kInf);
  if (lb.size() != n || ub.size() != n)
    throw DimensionMismatch("bound vectors do not match n=" + std::to_string(n));

  const int me_user = static_cast<int>(p.A_eq.rows());
  const int mi_user = static_cast<int>(p.A_in.rows());
  if (me_user > 0 && p.A_eq.cols() != n)
    throw DimensionMismatch("A_eq has " + std::to_string(p.A_eq.cols()) + " columns");
  if (mi_user > 0 && p.A_in.cols() != n)
    throw DimensionMismatch("A_in has " + std::to_string(p.A_in.cols()) + " columns");
  if (p.b_eq.size() != me_user)
    throw DimensionMismatch("b_eq does not match A_eq rows");
  if (p.b_in.size() != mi_user)
    throw DimensionMismatch("b_in does not match A_in rows");

  std::vector<Eigen::Triplet<double>> te, ti;
  std::vector<double> be, bi;
  for (int r = 0; r < me_user; ++r) be.push_back(p.b_eq[r]);
  for (int k = 0; k < p.A_eq.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A_eq, k); it; ++it)
      te.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                      it.value());

  for (int r = 0; r < mi_user; ++r) {
    bi.push_back(p.b_in[r]);
    w.origin.push_back(RowOrigin::User);
    w.origin_index.push_back(r);
  }
  for (int k = 0; k < p.A_in.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A_in, k); it; ++it)
      ti.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                      it.value());

  for (int i = 0; i < n; ++i) {
    if (lb[i] > ub[i]) w.inconsistent_bounds = true;
    if (std::isfinite(lb[i]) && lb[i] == ub[i]) {
      const int r = static_cast<int>(be.size());
      te.emplace_back(r, i, 1.0);
      be.push_back(lb[i]);
      w.fixed_vars.push_back(i);
      continue;
    }
    if (std::isfinite(ub[i])) {
      const int r = static_cast<int>(bi.size());
      ti.emplace_back(r, i, 1.0);
      bi.push_back(ub[i]);
      w.origin.push_back(RowOrigin::Ub);
      w.origin_index.push_back(i);
    }
    if (std::isfinite(lb[i])) {
      const int r = static_cast<int>(bi.size());
      ti.emplace_back(r, i, -1.0);
      bi.push_back(-lb[i]);
      w.origin.push_back(RowOrigin::Lb);
      w.origin_index.push_back(i);
    }
  }

  w.Ae.resize(static_cast<int>(be.size()), n);
  w.Ae.setFromTriplets(te.begin(), te.end());
  w.Ai.resize(static_cast<int>(bi.size()), n);
  w.Ai.setFromTriplets(ti.begin(), ti.end());
  w.be = Eigen::Map<Eigen::VectorXd>(be.data(), static_cast<int>(be.size()));
  w.bi = Eigen::Map<Eigen::VectorXd>(bi.data(), static_cast<int>(bi.size()));
  return w;
}

// Symmetric KKT matrix [H + Ai'DAi + reg*I, Ae'; Ae, -reg*I].
Eigen::SparseMatrix<double> kkt_matrix(const Internal& w, const Eigen::VectorXd& d,
                                       double reg) {
  const int n = static_cast<int>(w.c.size());
  const int me = static_cast<int>(w.Ae.rows());
  Eigen::SparseMatrix<double> add;
  if (w.Ai.rows() > 0) {
    Eigen::SparseMatrix<double> dai = d.asDiagonal() * w.Ai;
    add = Eigen::SparseMatrix<double>(w.Ai.transpose()) * dai;
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(w.H.nonZeros() + (add.rows() ? add.nonZeros() : 0) +
               2 * w.Ae.nonZeros() + n + me);
  for (int k = 0; k < w.H.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(w.H, k); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                        it.value());
  if (add.rows())
    for (int k = 0; k < add.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(add, k); it; ++it)
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                          it.value());
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, reg);
  for (int k = 0; k < w.Ae.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(w.Ae, k); it; ++it) {
      trip.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()),
                        it.value());
      trip.emplace_back(static_cast<int>(it.col()), n + static_cast<int>(it.row()),
                        it.value());
    }
  for (int r = 0; r < me; ++r) trip.emplace_back(n + r, n + r, -reg);

  Eigen::SparseMatrix<double> m(n + me, n + me);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

// Factorizes with escalating regularization; throws NumericalBreakdown.
// Keeps the assembled matrix in *kkt for iterative refinement.
void factorize(Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu,
               Eigen::SparseMatrix<double>* kkt, const Internal& w,
               const Eigen::VectorXd& d) {
  double reg = kReg;
  for (int attempt = 0; attempt < 4; ++attempt) {
    *kkt = kkt_matrix(w, d, reg);
    lu.compute(*kkt);
    if (lu.info() == Eigen::Success) return;
    reg *= 100.0;
  }
  throw NumericalBreakdown("KKT factorization failed at regularization " +
                           std::to_string(reg / 100.0));
}

// LU solve plus refinement passes; the scaling matrix spans many orders of
// magnitude near convergence and a bare solve loses direction accuracy.
Eigen::VectorXd refined_solve(const Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu,
                              const Eigen::SparseMatrix<double>& kkt,
                              const Eigen::VectorXd& rhs) {
  Eigen::VectorXd x = lu.solve(rhs);
  const double scale = 1.0 + rhs.cwiseAbs().maxCoeff();
  for (int pass = 0; pass < 3; ++pass) {
    Eigen::VectorXd resid = rhs - kkt * x;
    if (resid.cwiseAbs().maxCoeff() <= 1e-13 * scale) break;
    x += lu.solve(resid);
  }
  return x;
}

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (int i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

void extract_duals(const Internal& w, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& z, int me_user, int mi_user, int n,
                   QpSolution* sol) {
  sol->duals_eq = y.head(me_user);
  sol->duals_in = Eigen::VectorXd::Zero(mi_user);
  sol->mu_lb = Eigen::VectorXd::Zero(n);
  sol->mu_ub = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < z.size(); ++r) {
    switch (w.origin[r]) {
      case RowOrigin::User: sol->duals_in[w.origin_index[r]] = z[r]; break;
      case RowOrigin::Ub: sol->mu_ub[w.origin_index[r]] = z[r]; break;
      case RowOrigin::Lb: sol->mu_lb[w.origin_index[r]] = z[r]; break;
    }
  }
  for (std::size_t k = 0; k < w.fixed_vars.size(); ++k) {
    const int i = w.fixed_vars[k];
    const double dual = y[me_user + static_cast<int>(k)];
    if (dual >= 0.0)
      sol->mu_ub[i] = dual;
    else
      sol->mu_lb[i] = -dual;
  }
}

}  // namespace

QpSolution solve_qp(const QpProblem& prob, double tol, int max_iter) {
  Internal w = standardize(prob);
  const int n = static_cast<int>(w.c.size());
  const int me = static_cast<int>(w.Ae.rows());
  const int m = static_cast<int>(w.Ai.rows());
  const int me_user = static_cast<int>(prob.A_eq.rows());
  const int mi_user = static_cast<int>(prob.A_in.rows());

  QpSolution sol;
  if (w.inconsistent_bounds) {
    sol.status = QpStatus::Infeasible;
    sol.x = Eigen::VectorXd::Zero(n);
    sol.duals_eq = Eigen::VectorXd::Zero(me_user);
    sol.duals_in = Eigen::VectorXd::Zero(mi_user);
    sol.mu_lb = Eigen::VectorXd::Zero(n);
    sol.mu_ub = Eigen::VectorXd::Zero(n);
    return sol;
  }

  auto objective = [&](const Eigen::VectorXd& x) {
    return 0.5 * x.dot(w.H * x) + w.c.dot(x);
  };

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Eigen::SparseMatrix<double> kkt;

  if (m == 0) {
    // Pure equality-constrained QP: one regularized KKT solve.
    factorize(lu, &kkt, w, Eigen::VectorXd());
    Eigen::VectorXd rhs(n + me);
    rhs.head(n) = -w.c;
    rhs.tail(me) = w.be;
    Eigen::VectorXd xy = refined_solve(lu, kkt, rhs);
    sol.x = xy.head(n);
    Eigen::VectorXd y = xy.tail(me);
    Eigen::VectorXd r_d = w.H * sol.x + w.c + w.Ae.transpose() * y;
    Eigen::VectorXd r_e = w.Ae * sol.x - w.be;
    sol.iterations = 1;
    sol.objective = objective(sol.x);
    const bool ok = inf_norm(r_d) <= tol * (1.0 + inf_norm(w.c)) &&
                    inf_norm(r_e) <= tol * (1.0 + inf_norm(w.be));
    sol.status = ok ? QpStatus::Optimal
                    : (inf_norm(sol.x) > 1e10 ? QpStatus::Unbounded : QpStatus::MaxIter);
    extract_duals(w, y, Eigen::VectorXd(), me_user, mi_user, n, &sol);
    return sol;
  }

  // Starting point: regularized equality solve, slacks pushed interior.
  Eigen::VectorXd x, y, s, z;
  {
    Eigen::SparseMatrix<double> h_save = w.H;
    Eigen::SparseMatrix<double> eye(n, n);
    eye.setIdentity();
    w.H = h_save + eye;
    factorize(lu, &kkt, w, Eigen::VectorXd::Zero(m));
    w.H = h_save;
    Eigen::VectorXd rhs(n + me);
    rhs.head(n) = -w.c;
    rhs.tail(me) = w.be;
    Eigen::VectorXd xy = refined_solve(lu, kkt, rhs);
    x = xy.head(n);
    y = xy.tail(me);
    Eigen::VectorXd slack = w.bi - w.Ai * x;
    s = slack.cwiseMax(1.0);
    z = Eigen::VectorXd::Ones(m);
  }

  const double c_scale = 1.0 + inf_norm(w.c);
  const double be_scale = 1.0 + inf_norm(w.be);
  const double bi_scale = 1.0 + inf_norm(w.bi);
  std::vector<double> prim_history;

  const double salvage = std::max(tol, kSalvageTol);
  double best_worst = kInf;
  Eigen::VectorXd best_x, best_y, best_z;
  double best_obj = 0.0;
  int best_iter = 0, since_best = 0;

  for (int iter = 0; iter <= max_iter; ++iter) {
    Eigen::VectorXd r_d = w.H * x + w.c + w.Ai.transpose() * z;
    if (me > 0) r_d += w.Ae.transpose() * y;
    Eigen::VectorXd r_e = me > 0 ? Eigen::VectorXd(w.Ae * x - w.be) : Eigen::VectorXd();
    Eigen::VectorXd r_p = w.Ai * x + s - w.bi;
    const double mu = s.dot(z) / m;
    const double obj = objective(x);

    const double prim = std::max(inf_norm(r_e) / be_scale, inf_norm(r_p) / bi_scale);
    const double stat = inf_norm(r_d) / c_scale;
    const double comp = mu / (1.0 + std::abs(obj));
    prim_history.push_back(prim);

    if (prim <= tol && stat <= tol && comp <= tol) {
      sol.status = QpStatus::Optimal;
      sol.iterations = iter;
      sol.x = x;
      sol.objective = obj;
      extract_duals(w, y, z, me_user, mi_user, n, &sol);
      return sol;
    }
    const double worst = std::max({prim, stat, comp});
    if (worst < best_worst) {
      best_worst = worst;
      best_x = x;
      best_y = y;
      best_z = z;
      best_obj = obj;
      best_iter = iter;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (best_worst <= salvage &&
        (worst > 100.0 * best_worst || since_best >= 15)) {
      sol.status = QpStatus::Optimal;
      sol.iterations = iter;
      sol.x = best_x;
      sol.objective = best_obj;
      extract_duals(w, best_y, best_z, me_user, mi_user, n, &sol);
      return sol;
    }
    if (inf_norm(x) > 1e10 || obj < -1e16) {
      sol.status = QpStatus::Unbounded;
      sol.iterations = iter;
      sol.x = x;
      sol.objective = obj;
      extract_duals(w, y, z, me_user, mi_user, n, &sol);
      return sol;
    }
    const double dual_mag = std::max(inf_norm(y), inf_norm(z));
    if (iter >= 10 && prim > 1e-6 && dual_mag > 1e8) {
      const auto recent =
          std::min_element(prim_history.end() - 10, prim_history.end());
      const auto older =
          std::min_element(prim_history.begin(), prim_history.end() - 10);
      if (*recent > 0.9 * *older) {
        sol.status = QpStatus::Infeasible;
        sol.iterations = iter;
        sol.x = x;
        sol.objective = obj;
        extract_duals(w, y, z, me_user, mi_user, n, &sol);
        return sol;
      }
    }
    if (iter == max_iter) break;

    Eigen::VectorXd d = z.cwiseQuotient(s);
    factorize(lu, &kkt, w, d);

    auto solve_step = [&](const Eigen::VectorXd& r_c, Eigen::VectorXd* dx,
                          Eigen::VectorXd* dy, Eigen::VectorXd* ds,
                          Eigen::VectorXd* dz) {
      Eigen::VectorXd rhs(n + me);
      rhs.head(n) =
          -r_d - w.Ai.transpose() *
                     (r_c.cwiseQuotient(s) + d.cwiseProduct(r_p));
      if (me > 0) rhs.tail(me) = -r_e;
      Eigen::VectorXd dxy = refined_solve(lu, kkt, rhs);
      *dx = dxy.head(n);
      *dy = dxy.tail(me);
      *ds = -r_p - w.Ai * *dx;
      *dz = r_c.cwiseQuotient(s) - d.cwiseProduct(*ds);
    };

    // Predictor.
    Eigen::VectorXd dx_a, dy_a, ds_a, dz_a;
    Eigen::VectorXd r_c_aff = -s.cwiseProduct(z);
    solve_step(r_c_aff, &dx_a, &dy_a, &ds_a, &dz_a);
    const double ap_a = max_step(s, ds_a);
    const double ad_a = max_step(z, dz_a);
    const double mu_aff =
        (s + ap_a * ds_a).dot(z + ad_a * dz_a) / m;
    double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3.0) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector.
    Eigen::VectorXd r_c = -s.cwiseProduct(z) - ds_a.cwiseProduct(dz_a) +
                          Eigen::VectorXd::Constant(m, sigma * mu);
    Eigen::VectorXd dx, dy, ds, dz;
    solve_step(r_c, &dx, &dy, &ds, &dz);

    const double ap = std::min(1.0, kStepFrac * max_step(s, ds));
    const double ad = std::min(1.0, kStepFrac * max_step(z, dz));
    x += ap * dx;
    s += ap * ds;
    y += ad * dy;
    z += ad * dz;
  }

  if (best_worst <= salvage) {
    sol.status = QpStatus::Optimal;
    sol.iterations = best_iter;
    sol.x = best_x;
    sol.objective = best_obj;
    extract_duals(w, best_y, best_z, me_user, mi_user, n, &sol);
    return sol;
  }
  sol.status = QpStatus::MaxIter;
  sol.iterations = max_iter;
  sol.x = x;
  sol.objective = objective(x);
  extract_duals(w, y, z, me_user, mi_user, n, &sol);
  return sol;
}

}  // namespace dc2ac
