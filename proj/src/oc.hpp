#pragma once

#include <vector>

#include "core.hpp"
#include "edit.hpp"

namespace fa {

/// Discretized time-reversal control problem: Euler dynamics x <- x + u dt
/// over a decreasing time grid t0 > ... > 0, running cost 0.5 |u - a|^2
/// weighted by |dt| and terminal cost (eta/2) |x(0) - x_src|^2.
struct OCProblem {
  std::vector<double> times;  // strictly decreasing, front() = t0 > 0, back() = 0
  std::vector<Vec> a;         // exogenous drift, one per interval
  Vec x_start;
  Vec x_src;
  double eta = 1.0;
  void validate() const;
  int n_intervals() const { return static_cast<int>(times.size()) - 1; }
};

struct ControlSeq {
  std::vector<Vec> u;  // one per interval
};

// Closed-form optimum: constant costate, u_i = a_i + lambda with
// lambda = eta (x_start + v0 - x_src) / (1 + eta t0), where v0 is the
// left-endpoint quadrature of the drift (matching the Euler dynamics).
ControlSeq closed_form_control(const OCProblem& prob);

struct OCSolveResult {
  ControlSeq control;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

// Brute-force gradient descent on the exact discrete objective; independent
// check of the closed form. lr <= 0 picks a step from the quadratic bound.
OCSolveResult discrete_oc_solve(const OCProblem& prob, int max_iters = 20000,
                                double lr = 0.0);

double oc_objective(const OCProblem& prob, const ControlSeq& ctrl);
Vec oc_terminal(const OCProblem& prob, const ControlSeq& ctrl);

// Costate reconstruction u_i - a_i; constant at the optimum and equal to
// eta (x(0) - x_src) there.
std::vector<Vec> reconstruct_costate(const OCProblem& prob,
                                     const ControlSeq& ctrl);

// Per-step deviation between the running-integral form of the costate term
// and the Tweedie-difference approximation, evaluated on a logged edit run.
std::vector<double> prop1_residual(const TrajectoryLog& log);

}  // namespace fa
