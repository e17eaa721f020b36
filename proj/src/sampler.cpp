#include "sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "edit.hpp"

namespace fa {

IntegrateResult integrate(const VelocityFn& v, const Vec& x_start,
                          const TimeGrid& grid, Direction direction) {
  IntegrateResult res;
  res.path.push_back(x_start);
  Vec x = x_start;
  int n = grid.n_steps;
  for (int s = 0; s < n; ++s) {
    int i = (direction == Direction::Forward) ? s : n - s;
    int j = (direction == Direction::Forward) ? s + 1 : n - s - 1;
    double t = grid.times[i];
    double dt = grid.times[j] - grid.times[i];
    Vec vel = v(x, t);
    require_same_dim(vel, x, "integrate");
    axpy(dt, vel, x);
    if (!all_finite(x))
      throw std::runtime_error("integrate: non-finite state at step " +
                               std::to_string(s) + ", t = " + std::to_string(t));
    res.path.push_back(x);
  }
  res.terminal = x;
  return res;
}

Vec generate(const CondField& field, int label, const TimeGrid& grid,
             RandomStream& stream) {
  Vec eps = stream.normal_vec(field.dim());
  auto fn = [&](const Vec& x, double t) { return field(x, t, label); };
  return integrate(fn, eps, grid, Direction::Forward).terminal;
}

Vec ddib_edit(const CondField& field, const Vec& x_src, int c_src, int c_tgt,
              const TimeGrid& grid, double omega) {
  (void)c_src;  // inversion runs under the null condition
  int null = field.null_label();
  auto null_fn = [&](const Vec& x, double t) { return field(x, t, null); };
  Vec latent = integrate(null_fn, x_src, grid, Direction::Reversed).terminal;
  auto guided_fn = [&](const Vec& x, double t) {
    return cfg_velocity(field, x, t, null, c_tgt, omega);
  };
  return integrate(guided_fn, latent, grid, Direction::Forward).terminal;
}

Vec sdedit_edit(const CondField& field, const Vec& x_src, int c_tgt,
                const TimeGrid& grid, double t_start, double omega,
                RandomStream& stream) {
  if (t_start < 0.0 || t_start > 1.0)
    throw std::invalid_argument("sdedit_edit: t_start outside [0,1]");
  if (t_start == 0.0) return x_src;

  Vec eps = stream.normal_vec(field.dim());
  Vec x = affine_path(x_src, eps, t_start);

  // Sub-grid from t_start down to 0: t_start itself, then every grid point
  // strictly below it.
  TimeGrid sub;
  sub.times.push_back(t_start);
  for (double t : grid.times)
    if (t < t_start) sub.times.push_back(t);
  sub.n_steps = static_cast<int>(sub.times.size()) - 1;

  int null = field.null_label();
  auto guided_fn = [&](const Vec& xx, double t) {
    return cfg_velocity(field, xx, t, null, c_tgt, omega);
  };
  return integrate(guided_fn, x, sub, Direction::Forward).terminal;
}

}  // namespace fa
