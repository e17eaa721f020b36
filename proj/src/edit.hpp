#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "sampler.hpp"

namespace fa {

enum class EditMode { FlowAlign, FlowEdit, Plain };

struct EditParams {
  double omega = 7.5;      // guidance scale on the target trajectory
  double zeta = 0.01;      // source-consistency scale; 0 disables the term
  TimeGrid grid;
  std::uint64_t seed = 0;
  EditMode mode = EditMode::FlowAlign;
  // FlowEdit carries its own guidance pair
  double omega_src = 3.0;
  double omega_tgt = 13.5;
  // Guidance base for v(p_t): null label by default; set to use c_src instead.
  bool cfg_base_src = false;
  // Optional per-step schedule zeta_i = -gamma(eta, t_i) * dt_i.
  bool zeta_from_eta = false;
  double eta = 0.0;
};

struct LogRow {
  double t = 0.0;
  Vec x, q, p;      // current edit state and the two anchored trajectories
  Vec v_q, v_p;     // v(q_t, c_src) and the guided velocity at p_t
  Vec eq0, ep0;     // Tweedie estimates E[q0|q_t], E[p0|p_t]
  std::uint64_t noise_id = 0;
};

struct TrajectoryLog {
  Vec x_src;
  std::vector<LogRow> rows;
  void to_csv(const std::string& path) const;
};

// gamma(t) = -eta / (1 - eta t); rejects the eta*t = 1 singularity.
double gamma_eval(double eta, double t);

// v(x, c_base) + omega * [v(x, c_tgt) - v(x, c_base)]; two field evaluations.
Vec cfg_velocity(const CondField& field, const Vec& x, double t, int c_base,
                 int c_tgt, double omega);

// One update of the regularized two-trajectory simulation (dt < 0).
std::pair<Vec, LogRow> flowalign_step(const CondField& field, const Vec& x_t,
                                      const Vec& x_src, double t, double dt,
                                      int c_src, int c_tgt, double omega,
                                      double zeta, bool cfg_base_src,
                                      RandomStream& stream);

std::pair<Vec, TrajectoryLog> flowalign_edit(const CondField& field,
                                             const Vec& x_src, int c_src,
                                             int c_tgt,
                                             const EditParams& params);

std::pair<Vec, TrajectoryLog> flowedit_edit(const CondField& field,
                                            const Vec& x_src, int c_src,
                                            int c_tgt, const TimeGrid& grid,
                                            double omega_src, double omega_tgt,
                                            std::uint64_t seed);

// Reconstruction pass: rerun the edit with roles swapped, starting from the
// edited state and driving back toward the source condition.
Vec backward_edit(const CondField& field, const Vec& x_edited, int c_src,
                  int c_tgt, const EditParams& params);

}  // namespace fa
