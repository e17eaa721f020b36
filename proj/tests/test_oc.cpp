#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oc.hpp"

using namespace fa;

namespace {

OCProblem random_problem(int d, int n, double eta, RandomStream& s) {
  OCProblem prob;
  prob.times = make_time_grid(n, 1.0, 0).times;
  prob.eta = eta;
  prob.a.assign(n, Vec(d));
  for (auto& ai : prob.a)
    for (auto& v : ai) v = s.normal();
  prob.x_start = s.normal_vec(d);
  prob.x_src = s.normal_vec(d);
  return prob;
}

}  // namespace

TEST_CASE("problem validation") {
  OCProblem prob;
  CHECK_THROWS(prob.validate());  // empty

  prob.times = {1.0, 0.5, 0.0};
  prob.a = {Vec{0.0}, Vec{0.0}};
  prob.x_start = Vec{0.0};
  prob.x_src = Vec{0.0};
  prob.eta = 2.0;
  CHECK_NOTHROW(prob.validate());

  OCProblem bad = prob;
  bad.times = {1.0, 0.5, 0.1};  // does not end at zero
  CHECK_THROWS(bad.validate());
  bad = prob;
  bad.times = {1.0, 1.0, 0.0};  // not strictly decreasing
  CHECK_THROWS(bad.validate());
  bad = prob;
  bad.eta = -1.0;
  CHECK_THROWS(bad.validate());
  bad = prob;
  bad.eta = 1.0 + 1e-12;  // eta * t0 ~ 1
  CHECK_THROWS(bad.validate());
  bad = prob;
  bad.a.pop_back();
  CHECK_THROWS(bad.validate());
}

TEST_CASE("zero drift at the target needs no control") {
  OCProblem prob;
  prob.times = make_time_grid(16, 1.0, 0).times;
  prob.a.assign(16, Vec(2, 0.0));
  prob.x_start = Vec{0.3, -0.4};
  prob.x_src = prob.x_start;
  prob.eta = 2.0;

  ControlSeq closed = closed_form_control(prob);
  for (const Vec& u : closed.u)
    for (double v : u) CHECK(v == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(oc_terminal(prob, closed) == prob.x_start);

  OCSolveResult solved = discrete_oc_solve(prob);
  CHECK(solved.converged);
  for (const Vec& u : solved.control.u)
    for (double v : u) CHECK(std::fabs(v) < 1e-9);
}

TEST_CASE("hand-worked constant-drift case") {
  // d = 1, a = c on [0, 1], start = source = 0: the optimal control shifts
  // the drift by a constant so the terminal lands at -c/(1+eta)
  double c = 0.8, eta = 3.0;
  OCProblem prob;
  prob.times = make_time_grid(128, 1.0, 0).times;
  prob.a.assign(128, Vec{c});
  prob.x_start = Vec{0.0};
  prob.x_src = Vec{0.0};
  prob.eta = eta;

  ControlSeq closed = closed_form_control(prob);
  for (const Vec& u : closed.u)
    CHECK(u[0] == doctest::Approx(c / (1.0 + eta)).epsilon(1e-12));
  CHECK(oc_terminal(prob, closed)[0] ==
        doctest::Approx(-c / (1.0 + eta)).epsilon(1e-12));

  OCSolveResult solved = discrete_oc_solve(prob, 100000);
  CHECK(solved.converged);
  CHECK(solved.control.u[0][0] == doctest::Approx(c / (1.0 + eta)).epsilon(1e-8));

  // as eta grows the terminal is pulled onto the source
  prob.eta = 1e6;
  CHECK(std::fabs(oc_terminal(prob, closed_form_control(prob))[0]) < 1e-5);
}

TEST_CASE("closed form matches the brute-force solver") {
  RandomStream s(14);
  for (double eta : {0.5, 2.0, 10.0}) {
    OCProblem prob = random_problem(2, 32, eta, s);
    ControlSeq closed = closed_form_control(prob);
    OCSolveResult solved = discrete_oc_solve(prob, 200000);
    CHECK(solved.converged);
    for (size_t i = 0; i < closed.u.size(); ++i)
      CHECK(max_abs(sub(closed.u[i], solved.control.u[i])) < 1e-4);
    CHECK(std::fabs(oc_objective(prob, closed) -
                    oc_objective(prob, solved.control)) < 1e-8);
  }
}

TEST_CASE("costate is constant and satisfies the boundary condition") {
  RandomStream s(15);
  OCProblem prob = random_problem(3, 48, 2.0, s);
  ControlSeq closed = closed_form_control(prob);
  auto costate = reconstruct_costate(prob, closed);
  for (size_t i = 1; i < costate.size(); ++i)
    CHECK(max_abs(sub(costate[i], costate[0])) < 1e-12);
  Vec boundary =
      scaled(sub(oc_terminal(prob, closed), prob.x_src), prob.eta);
  CHECK(max_abs(sub(costate[0], boundary)) < 1e-10);
}

TEST_CASE("closed-form cost beats random perturbations") {
  RandomStream s(16);
  OCProblem prob = random_problem(2, 24, 2.0, s);
  ControlSeq closed = closed_form_control(prob);
  double J = oc_objective(prob, closed);
  for (int k = 0; k < 100; ++k) {
    ControlSeq pert = closed;
    for (auto& u : pert.u)
      for (auto& v : u) v += 0.1 * s.normal();
    CHECK(oc_objective(prob, pert) >= J);
  }
}

TEST_CASE("descent on the objective is monotone") {
  RandomStream s(17);
  OCProblem prob = random_problem(2, 16, 2.0, s);
  double prev = 1e300;
  for (int iters : {1, 5, 25, 125}) {
    OCSolveResult r = discrete_oc_solve(prob, iters);
    double J = oc_objective(prob, r.control);
    CHECK(J <= prev + 1e-12);
    prev = J;
  }
}

TEST_CASE("residual vanishes for a constant drift log") {
  // build a synthetic log whose velocities are constant, with internally
  // consistent x, p, q and Tweedie entries
  TimeGrid g = make_time_grid(12, 1.0, 0);
  Vec drift{0.7, -0.3};
  Vec x_src{0.1, 0.2};
  TrajectoryLog log;
  log.x_src = x_src;
  Vec x = x_src;
  for (int i = 0; i < g.n_steps; ++i) {
    double t = g.times[i];
    LogRow row;
    row.t = t;
    row.x = x;
    row.q = Vec{0.0, 0.0};
    row.p = sub(x, x_src);
    row.v_q = Vec{0.0, 0.0};
    row.v_p = drift;
    row.eq0 = scaled(row.q, 1.0);
    row.ep0 = sub(row.p, scaled(drift, t));
    log.rows.push_back(row);
    axpy(g.times[i + 1] - t, drift, x);
  }
  for (double r : prop1_residual(log)) CHECK(r < 1e-12);
}
