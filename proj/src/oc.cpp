#include "oc.hpp"

#include <cmath>
#include <stdexcept>

namespace fa {

void OCProblem::validate() const {
  if (times.size() < 2) throw std::invalid_argument("OCProblem: empty grid");
  if (!(times.front() > 0.0) || times.back() != 0.0)
    throw std::invalid_argument("OCProblem: grid must run from t0 > 0 to 0");
  for (size_t i = 1; i < times.size(); ++i)
    if (!(times[i] < times[i - 1]))
      throw std::invalid_argument("OCProblem: grid not strictly decreasing");
  if (a.size() != times.size() - 1)
    throw std::invalid_argument("OCProblem: drift count != interval count");
  if (!(eta > 0.0)) throw std::invalid_argument("OCProblem: eta must be > 0");
  if (std::fabs(1.0 - eta * times.front()) < 1e-9)
    throw std::invalid_argument("OCProblem: eta * t0 ~ 1 singularity");
  require_same_dim(x_start, x_src, "OCProblem");
  for (const Vec& ai : a) require_same_dim(ai, x_start, "OCProblem drift");
}

ControlSeq closed_form_control(const OCProblem& prob) {
  prob.validate();
  int n = prob.n_intervals();
  double t0 = prob.times.front();

  Vec v0(prob.x_start.size(), 0.0);  // left-endpoint quadrature of the drift
  for (int i = 0; i < n; ++i)
    axpy(prob.times[i + 1] - prob.times[i], prob.a[i], v0);

  Vec lambda = add(prob.x_start, v0);
  lambda = sub(lambda, prob.x_src);
  lambda = scaled(lambda, prob.eta / (1.0 + prob.eta * t0));

  ControlSeq ctrl;
  ctrl.u.reserve(n);
  for (int i = 0; i < n; ++i) ctrl.u.push_back(add(prob.a[i], lambda));
  return ctrl;
}

Vec oc_terminal(const OCProblem& prob, const ControlSeq& ctrl) {
  Vec x = prob.x_start;
  for (int i = 0; i < prob.n_intervals(); ++i)
    axpy(prob.times[i + 1] - prob.times[i], ctrl.u[i], x);
  return x;
}

double oc_objective(const OCProblem& prob, const ControlSeq& ctrl) {
  double J = 0.0;
  for (int i = 0; i < prob.n_intervals(); ++i) {
    double w = std::fabs(prob.times[i + 1] - prob.times[i]);
    J += 0.5 * w * sq_dist(ctrl.u[i], prob.a[i]);
  }
  J += 0.5 * prob.eta * sq_dist(oc_terminal(prob, ctrl), prob.x_src);
  return J;
}

OCSolveResult discrete_oc_solve(const OCProblem& prob, int max_iters,
                                double lr) {
  prob.validate();
  int n = prob.n_intervals();
  int d = static_cast<int>(prob.x_start.size());

  if (lr <= 0.0) {
    // step from the quadratic bound: Hessian norm <= max|dt| + eta sum dt^2
    double max_dt = 0.0, sum_dt2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double dt = prob.times[i + 1] - prob.times[i];
      max_dt = std::max(max_dt, std::fabs(dt));
      sum_dt2 += dt * dt;
    }
    lr = 1.0 / (max_dt + prob.eta * sum_dt2);
  }

  OCSolveResult res;
  res.control.u.assign(n, Vec(d, 0.0));
  const double tol = 1e-10;
  for (int it = 0; it < max_iters; ++it) {
    Vec delta = sub(oc_terminal(prob, res.control), prob.x_src);
    double g2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double dt = prob.times[i + 1] - prob.times[i];
      double w = std::fabs(dt);
      Vec& u = res.control.u[i];
      for (int j = 0; j < d; ++j) {
        double g = (u[j] - prob.a[i][j]) * w + prob.eta * delta[j] * dt;
        g2 += g * g;
        u[j] -= lr * g;
      }
    }
    res.iterations = it + 1;
    res.grad_norm = std::sqrt(g2);
    if (res.grad_norm <= tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

std::vector<Vec> reconstruct_costate(const OCProblem& prob,
                                     const ControlSeq& ctrl) {
  std::vector<Vec> p;
  p.reserve(ctrl.u.size());
  for (size_t i = 0; i < ctrl.u.size(); ++i)
    p.push_back(sub(ctrl.u[i], prob.a[i]));
  return p;
}

std::vector<double> prop1_residual(const TrajectoryLog& log) {
  std::vector<double> out;
  int n = static_cast<int>(log.rows.size());
  if (n == 0) return out;
  int d = static_cast<int>(log.rows.front().x.size());

  // drift per logged step
  std::vector<Vec> drift(n);
  for (int i = 0; i < n; ++i) drift[i] = sub(log.rows[i].v_p, log.rows[i].v_q);

  for (int i = 0; i < n; ++i) {
    // running integral of the drift from t_i to 0: trapezoid between logged
    // points, left value on the final interval down to t = 0
    Vec integral(d, 0.0);
    for (int j = i; j < n - 1; ++j) {
      double dt = log.rows[j + 1].t - log.rows[j].t;
      for (int k = 0; k < d; ++k)
        integral[k] += 0.5 * (drift[j][k] + drift[j + 1][k]) * dt;
    }
    axpy(0.0 - log.rows[n - 1].t, drift[n - 1], integral);

    double r2 = 0.0;
    const LogRow& row = log.rows[i];
    for (int k = 0; k < d; ++k) {
      double lhs = row.x[k] + integral[k] - log.x_src[k];
      double rhs = row.ep0[k] - row.eq0[k];
      double diff = lhs - rhs;
      r2 += diff * diff;
    }
    out.push_back(std::sqrt(r2));
  }
  return out;
}

}  // namespace fa
