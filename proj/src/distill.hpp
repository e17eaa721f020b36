#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "core.hpp"
#include "mixture.hpp"
#include "sampler.hpp"

namespace fa {

/// Differentiable toy generator: per view a fixed affine map psi -> A psi + b.
/// The identity generator (m = d, A = I, b = 0) is the degenerate case.
struct LinearGenerator {
  int d = 0;
  int m = 0;
  struct View {
    std::vector<Vec> A;  // d rows of length m
    Vec b;               // length d
  };
  std::vector<View> views;

  static LinearGenerator identity(int d);

  Vec render(const Vec& psi, int view) const;       // A psi + b
  Vec apply_jacobian_t(const Vec& g, int view) const;  // A^T g
};

// Parameter gradient of the edit drift through the generator: the bracketed
// velocity-plus-consistency vector pushed through A^T (the exact Jacobian).
Vec flowalign_param_grad(const CondField& field, const LinearGenerator& gen,
                         const Vec& psi, const Vec& psi_src, int view, double t,
                         int c_src, int c_tgt, double omega, double gamma_w,
                         bool cfg_base_src, RandomStream& stream);

struct DistillConfig {
  int steps = 600;
  double t_max = 0.98;
  double t_min = 0.02;
  double lr = 0.05;
  double omega = 7.5;
  double gamma_w = 0.3;  // constant weight mirroring zeta
  bool cfg_base_src = false;
  std::uint64_t seed = 0;
};

struct DistillResult {
  Vec psi;
  std::vector<double> trace;  // target-class log-density of the first view
};

DistillResult distill_optimize(const CondField& field,
                               const ConditionalMixture& mix,
                               const LinearGenerator& gen, const Vec& psi_init,
                               const Vec& psi_src, int c_src, int c_tgt,
                               const DistillConfig& cfg);

}  // namespace fa
