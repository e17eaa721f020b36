#include "edit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fa {

double gamma_eval(double eta, double t) {
  double denom = 1.0 - eta * t;
  if (std::fabs(denom) < 1e-9)
    throw std::invalid_argument("gamma_eval: singular at eta*t ~ 1");
  return -eta / denom;
}

Vec cfg_velocity(const CondField& field, const Vec& x, double t, int c_base,
                 int c_tgt, double omega) {
  Vec v_base = field(x, t, c_base);
  Vec v_tgt = field(x, t, c_tgt);
  if (omega == 1.0) return v_tgt;
  if (omega == 0.0) return v_base;
  Vec r(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    r[i] = v_base[i] + omega * (v_tgt[i] - v_base[i]);
  return r;
}

std::pair<Vec, LogRow> flowalign_step(const CondField& field, const Vec& x_t,
                                      const Vec& x_src, double t, double dt,
                                      int c_src, int c_tgt, double omega,
                                      double zeta, bool cfg_base_src,
                                      RandomStream& stream) {
  if (!(t > 0.0 && t <= 1.0))
    throw std::invalid_argument("flowalign_step: need 0 < t <= 1");
  if (!(dt < 0.0)) throw std::invalid_argument("flowalign_step: need dt < 0");
  require_same_dim(x_t, x_src, "flowalign_step");

  int d = static_cast<int>(x_t.size());
  Vec eps = stream.normal_vec(d);

  LogRow row;
  row.t = t;
  row.x = x_t;
  row.q.resize(d);
  row.p.resize(d);
  for (int i = 0; i < d; ++i) {
    row.q[i] = (1.0 - t) * x_src[i] + t * eps[i];
    row.p[i] = x_t[i] - x_src[i] + row.q[i];
  }

  int base = cfg_base_src ? c_src : field.null_label();
  row.v_p = cfg_velocity(field, row.p, t, base, c_tgt, omega);
  row.v_q = field(row.q, t, c_src);
  row.ep0.resize(d);
  row.eq0.resize(d);
  for (int i = 0; i < d; ++i) {
    row.ep0[i] = row.p[i] - t * row.v_p[i];
    row.eq0[i] = row.q[i] - t * row.v_q[i];
  }

  Vec x_next(d);
  for (int i = 0; i < d; ++i)
    x_next[i] = x_t[i] + (row.v_p[i] - row.v_q[i]) * dt;
  if (zeta != 0.0)
    for (int i = 0; i < d; ++i)
      x_next[i] += zeta * (row.eq0[i] - row.ep0[i]);

  if (!all_finite(x_next))
    throw std::runtime_error("flowalign_step: non-finite state at t = " +
                             std::to_string(t));
  return {std::move(x_next), std::move(row)};
}

std::pair<Vec, TrajectoryLog> flowalign_edit(const CondField& field,
                                             const Vec& x_src, int c_src,
                                             int c_tgt,
                                             const EditParams& params) {
  if (params.mode == EditMode::FlowEdit)
    return flowedit_edit(field, x_src, c_src, c_tgt, params.grid,
                         params.omega_src, params.omega_tgt, params.seed);

  double omega = (params.mode == EditMode::Plain) ? 1.0 : params.omega;
  double zeta = (params.mode == EditMode::Plain) ? 0.0 : params.zeta;

  TrajectoryLog log;
  log.x_src = x_src;
  Vec x = x_src;
  RandomStream master(params.seed);
  const auto& times = params.grid.times;
  for (int i = params.grid.skip; i < params.grid.n_steps; ++i) {
    double t = times[i];
    double dt = times[i + 1] - times[i];
    double zeta_i = zeta;
    if (params.zeta_from_eta) zeta_i = -gamma_eval(params.eta, t) * dt;
    RandomStream sub = master.substream(i);
    auto [x_next, row] = flowalign_step(field, x, x_src, t, dt, c_src, c_tgt,
                                        omega, zeta_i, params.cfg_base_src, sub);
    row.noise_id = static_cast<std::uint64_t>(i);
    log.rows.push_back(std::move(row));
    x = std::move(x_next);
  }
  return {std::move(x), std::move(log)};
}

std::pair<Vec, TrajectoryLog> flowedit_edit(const CondField& field,
                                            const Vec& x_src, int c_src,
                                            int c_tgt, const TimeGrid& grid,
                                            double omega_src, double omega_tgt,
                                            std::uint64_t seed) {
  int d = static_cast<int>(x_src.size());
  TrajectoryLog log;
  log.x_src = x_src;
  Vec x = x_src;
  RandomStream master(seed);
  int null = field.null_label();
  for (int i = grid.skip; i < grid.n_steps; ++i) {
    double t = grid.times[i];
    double dt = grid.times[i + 1] - grid.times[i];
    RandomStream sub = master.substream(i);
    Vec eps = sub.normal_vec(d);

    LogRow row;
    row.t = t;
    row.noise_id = static_cast<std::uint64_t>(i);
    row.x = x;
    row.q.resize(d);
    row.p.resize(d);
    for (int j = 0; j < d; ++j) {
      row.q[j] = (1.0 - t) * x_src[j] + t * eps[j];
      row.p[j] = x[j] - x_src[j] + row.q[j];
    }
    row.v_p = cfg_velocity(field, row.p, t, null, c_tgt, omega_tgt);
    row.v_q = cfg_velocity(field, row.q, t, null, c_src, omega_src);
    row.ep0.resize(d);
    row.eq0.resize(d);
    for (int j = 0; j < d; ++j) {
      row.ep0[j] = row.p[j] - t * row.v_p[j];
      row.eq0[j] = row.q[j] - t * row.v_q[j];
    }
    for (int j = 0; j < d; ++j) x[j] += (row.v_p[j] - row.v_q[j]) * dt;
    if (!all_finite(x))
      throw std::runtime_error("flowedit_edit: non-finite state at t = " +
                               std::to_string(t));
    log.rows.push_back(std::move(row));
  }
  return {std::move(x), std::move(log)};
}

Vec backward_edit(const CondField& field, const Vec& x_edited, int c_src,
                  int c_tgt, const EditParams& params) {
  return flowalign_edit(field, x_edited, c_tgt, c_src, params).first;
}

void TrajectoryLog::to_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("TrajectoryLog: cannot write " + path);
  int d = rows.empty() ? 0 : static_cast<int>(rows.front().x.size());
  out << "step,t,noise_id";
  const char* blocks[] = {"x", "q", "p", "v_q", "v_p", "eq0", "ep0"};
  for (const char* b : blocks)
    for (int j = 0; j < d; ++j) out << "," << b << j;
  out << "\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << "," << buf;
  };
  for (size_t i = 0; i < rows.size(); ++i) {
    const LogRow& r = rows[i];
    out << i;
    put(r.t);
    out << "," << r.noise_id;
    for (const Vec* v : {&r.x, &r.q, &r.p, &r.v_q, &r.v_p, &r.eq0, &r.ep0})
      for (double x : *v) put(x);
    out << "\n";
  }
}

}  // namespace fa
