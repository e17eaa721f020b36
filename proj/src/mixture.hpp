#pragma once

#include <cstdint>
#include <vector>

#include "core.hpp"

namespace fa {

/// Label-conditional Gaussian mixture with closed-form posterior means.
/// Labels 0..n_classes-1 are the real conditions; null_label() is the
/// marginal (uniform mixture over every labeled component), which is what
/// guidance extrapolates against.
struct ConditionalMixture {
  int d = 0;
  int n_classes = 0;
  int edit_dims = 0;
  double sigma = 0.15;                  // isotropic per-component std
  std::vector<double> weights;          // per-class component weights, sum 1
  std::vector<std::vector<Vec>> means;  // [class][component]

  int null_label() const { return n_classes; }
  int components_per_class() const { return static_cast<int>(weights.size()); }
  void check_label(int label) const;
};

struct EditTask {
  int c_src = 0;
  int c_tgt = 1;
  Vec x_src;
  std::vector<bool> preserve_mask;  // true = background coordinate
};

/// Classes share component weights and all coordinates beyond the first
/// edit_dims, so the preserved-coordinate marginals coincide exactly and the
/// trailing d - edit_dims coordinates are exact ground-truth background.
ConditionalMixture make_paired_mixture(int n_classes, int d, int edit_dims,
                                       std::uint64_t seed);

// Exact E[x0 | x_t = x, label] under x_t = (1-t) x0 + t eps. Rejects t = 0.
Vec analytic_posterior_mean(const ConditionalMixture& mix, int label,
                            const Vec& x, double t);

// Marginal velocity (x - E[x0|x,t]) / t; the Tweedie identity holds exactly.
Vec analytic_velocity(const ConditionalMixture& mix, int label, const Vec& x,
                      double t);

Vec sample(const ConditionalMixture& mix, int label, RandomStream& stream);
double log_density(const ConditionalMixture& mix, int label, const Vec& x);
int assign_mode(const ConditionalMixture& mix, int label, const Vec& x);

// Class with the highest log-density at x; the semantic-alignment proxy.
int classify(const ConditionalMixture& mix, const Vec& x);

std::vector<EditTask> make_tasks(const ConditionalMixture& mix, int count,
                                 std::uint64_t seed);

// Largest coordinate span of the component means; the PSNR range convention.
double coordinate_span(const ConditionalMixture& mix);

}  // namespace fa
