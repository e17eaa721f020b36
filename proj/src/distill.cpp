#include "distill.hpp"

#include <cmath>
#include <stdexcept>

#include "edit.hpp"

namespace fa {

LinearGenerator LinearGenerator::identity(int d) {
  LinearGenerator gen;
  gen.d = d;
  gen.m = d;
  View v;
  v.A.assign(d, Vec(d, 0.0));
  for (int i = 0; i < d; ++i) v.A[i][i] = 1.0;
  v.b.assign(d, 0.0);
  gen.views.push_back(std::move(v));
  return gen;
}

Vec LinearGenerator::render(const Vec& psi, int view) const {
  if (view < 0 || view >= static_cast<int>(views.size()))
    throw std::invalid_argument("LinearGenerator: unknown view");
  if (static_cast<int>(psi.size()) != m)
    throw std::invalid_argument("LinearGenerator: parameter size mismatch");
  const View& v = views[view];
  Vec out(d);
  for (int i = 0; i < d; ++i) out[i] = v.b[i] + dot(v.A[i], psi);
  return out;
}

Vec LinearGenerator::apply_jacobian_t(const Vec& g, int view) const {
  const View& v = views[view];
  if (static_cast<int>(g.size()) != d)
    throw std::invalid_argument("LinearGenerator: gradient size mismatch");
  Vec out(m, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < m; ++j) out[j] += v.A[i][j] * g[i];
  return out;
}

Vec flowalign_param_grad(const CondField& field, const LinearGenerator& gen,
                         const Vec& psi, const Vec& psi_src, int view, double t,
                         int c_src, int c_tgt, double omega, double gamma_w,
                         bool cfg_base_src, RandomStream& stream) {
  if (!(t > 0.0 && t <= 1.0))
    throw std::invalid_argument("flowalign_param_grad: need 0 < t <= 1");

  Vec x_src = gen.render(psi_src, view);
  Vec x_t = gen.render(psi, view);
  int d = gen.d;
  Vec eps = stream.normal_vec(d);

  Vec q(d), p(d);
  for (int i = 0; i < d; ++i) {
    q[i] = (1.0 - t) * x_src[i] + t * eps[i];
    p[i] = x_t[i] - x_src[i] + q[i];
  }
  int base = cfg_base_src ? c_src : field.null_label();
  Vec v_p = cfg_velocity(field, p, t, base, c_tgt, omega);
  Vec v_q = field(q, t, c_src);

  Vec bracket(d);
  for (int i = 0; i < d; ++i) {
    double ep0 = p[i] - t * v_p[i];
    double eq0 = q[i] - t * v_q[i];
    bracket[i] = v_p[i] - v_q[i] + gamma_w * (ep0 - eq0);
  }
  return gen.apply_jacobian_t(bracket, view);
}

DistillResult distill_optimize(const CondField& field,
                               const ConditionalMixture& mix,
                               const LinearGenerator& gen, const Vec& psi_init,
                               const Vec& psi_src, int c_src, int c_tgt,
                               const DistillConfig& cfg) {
  if (!(cfg.t_max <= 1.0 && cfg.t_min > 0.0 && cfg.t_min <= cfg.t_max))
    throw std::invalid_argument("distill_optimize: bad time range");
  if (cfg.steps < 0 || gen.views.empty())
    throw std::invalid_argument("distill_optimize: bad config");

  DistillResult res;
  res.psi = psi_init;
  RandomStream master(cfg.seed);
  for (int step = 0; step < cfg.steps; ++step) {
    double frac = (cfg.steps > 1)
                      ? static_cast<double>(step) / (cfg.steps - 1)
                      : 0.0;
    double t = cfg.t_max + frac * (cfg.t_min - cfg.t_max);
    RandomStream sub = master.substream(step);
    int view = static_cast<int>(sub.next_u64() % gen.views.size());
    Vec grad = flowalign_param_grad(field, gen, res.psi, psi_src, view, t,
                                    c_src, c_tgt, cfg.omega, cfg.gamma_w,
                                    cfg.cfg_base_src, sub);
    axpy(-cfg.lr, grad, res.psi);
    if (!all_finite(res.psi))
      throw std::runtime_error("distill_optimize: parameters diverged at step " +
                               std::to_string(step));
    res.trace.push_back(log_density(mix, c_tgt, gen.render(res.psi, 0)));
  }
  return res;
}

}  // namespace fa
