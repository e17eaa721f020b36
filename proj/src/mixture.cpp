#include "mixture.hpp"

#include <cmath>
#include <stdexcept>

namespace fa {

namespace {

struct Comp {
  double log_w;
  const Vec* mean;
  int class_id;
  int comp_id;
};

std::vector<Comp> components_for(const ConditionalMixture& mix, int label) {
  std::vector<Comp> out;
  auto push_class = [&](int c, double w_scale) {
    for (size_t k = 0; k < mix.weights.size(); ++k)
      out.push_back({std::log(mix.weights[k] * w_scale), &mix.means[c][k],
                     c, static_cast<int>(k)});
  };
  if (label == mix.null_label()) {
    for (int c = 0; c < mix.n_classes; ++c)
      push_class(c, 1.0 / mix.n_classes);
  } else {
    push_class(label, 1.0);
  }
  return out;
}

double log_sum_exp(const std::vector<double>& v) {
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

void ConditionalMixture::check_label(int label) const {
  if (label < 0 || label > n_classes)
    throw std::invalid_argument("unknown label " + std::to_string(label));
}

ConditionalMixture make_paired_mixture(int n_classes, int d, int edit_dims,
                                       std::uint64_t seed) {
  if (n_classes < 2)
    throw std::invalid_argument("make_paired_mixture: n_classes < 2");
  if (edit_dims < 1 || edit_dims >= d)
    throw std::invalid_argument("make_paired_mixture: need 1 <= edit_dims < d");

  ConditionalMixture mix;
  mix.d = d;
  mix.n_classes = n_classes;
  mix.edit_dims = edit_dims;
  mix.sigma = 0.15;
  mix.weights = {0.6, 0.4};

  RandomStream stream(seed);

  // Class centers on the edit coordinates, rejection-separated so modes
  // stay distinguishable at sigma = 0.15.
  std::vector<Vec> centers;
  for (int c = 0; c < n_classes; ++c) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      Vec cand(edit_dims);
      for (int j = 0; j < edit_dims; ++j) cand[j] = 2.0 * stream.uniform() - 1.0;
      bool ok = true;
      for (const Vec& prev : centers)
        if (std::sqrt(sq_dist(cand, prev)) < 1.0) { ok = false; break; }
      if (ok) {
        centers.push_back(cand);
        break;
      }
    }
    if (static_cast<int>(centers.size()) != c + 1)
      throw std::runtime_error("make_paired_mixture: failed to separate class centers");
  }

  int K = static_cast<int>(mix.weights.size());
  // Shared across classes: per-component edit-dim jitter and tail means.
  std::vector<Vec> jitter(K, Vec(edit_dims));
  std::vector<Vec> tails(K, Vec(d - edit_dims));
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < edit_dims; ++j) jitter[k][j] = 0.5 * stream.uniform() - 0.25;
    for (int j = 0; j < d - edit_dims; ++j) tails[k][j] = 2.0 * stream.uniform() - 1.0;
  }

  mix.means.assign(n_classes, std::vector<Vec>(K, Vec(d)));
  for (int c = 0; c < n_classes; ++c)
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < edit_dims; ++j)
        mix.means[c][k][j] = centers[c][j] + jitter[k][j];
      for (int j = edit_dims; j < d; ++j)
        mix.means[c][k][j] = tails[k][j - edit_dims];
    }
  return mix;
}

Vec analytic_posterior_mean(const ConditionalMixture& mix, int label,
                            const Vec& x, double t) {
  mix.check_label(label);
  if (!(t > 0.0 && t <= 1.0))
    throw std::invalid_argument("analytic_posterior_mean: need 0 < t <= 1");
  if (static_cast<int>(x.size()) != mix.d)
    throw std::invalid_argument("analytic_posterior_mean: dimension mismatch");

  auto comps = components_for(mix, label);
  double a = 1.0 - t;
  double s2 = a * a * mix.sigma * mix.sigma + t * t;  // marginal var of x_t | comp
  double shrink = a * mix.sigma * mix.sigma / s2;

  std::vector<double> logits(comps.size());
  for (size_t k = 0; k < comps.size(); ++k)
    logits[k] = comps[k].log_w - 0.5 * sq_dist(x, scaled(*comps[k].mean, a)) / s2;
  double lse = log_sum_exp(logits);

  Vec out(mix.d, 0.0);
  for (size_t k = 0; k < comps.size(); ++k) {
    double resp = std::exp(logits[k] - lse);
    const Vec& mu = *comps[k].mean;
    for (int j = 0; j < mix.d; ++j)
      out[j] += resp * (mu[j] + shrink * (x[j] - a * mu[j]));
  }
  return out;
}

Vec analytic_velocity(const ConditionalMixture& mix, int label, const Vec& x,
                      double t) {
  Vec post = analytic_posterior_mean(mix, label, x, t);
  Vec v(mix.d);
  for (int j = 0; j < mix.d; ++j) v[j] = (x[j] - post[j]) / t;
  return v;
}

Vec sample(const ConditionalMixture& mix, int label, RandomStream& stream) {
  mix.check_label(label);
  auto comps = components_for(mix, label);
  double u = stream.uniform();
  size_t pick = comps.size() - 1;
  double acc = 0.0;
  for (size_t k = 0; k < comps.size(); ++k) {
    acc += std::exp(comps[k].log_w);
    if (u < acc) { pick = k; break; }
  }
  Vec x = *comps[pick].mean;
  for (int j = 0; j < mix.d; ++j) x[j] += mix.sigma * stream.normal();
  return x;
}

double log_density(const ConditionalMixture& mix, int label, const Vec& x) {
  mix.check_label(label);
  if (static_cast<int>(x.size()) != mix.d)
    throw std::invalid_argument("log_density: dimension mismatch");
  auto comps = components_for(mix, label);
  double s2 = mix.sigma * mix.sigma;
  double log_norm = -0.5 * mix.d * std::log(2.0 * M_PI * s2);
  std::vector<double> logits(comps.size());
  for (size_t k = 0; k < comps.size(); ++k)
    logits[k] = comps[k].log_w + log_norm - 0.5 * sq_dist(x, *comps[k].mean) / s2;
  return log_sum_exp(logits);
}

int assign_mode(const ConditionalMixture& mix, int label, const Vec& x) {
  mix.check_label(label);
  auto comps = components_for(mix, label);
  double s2 = mix.sigma * mix.sigma;
  size_t best = 0;
  double best_logit = -1e300;
  for (size_t k = 0; k < comps.size(); ++k) {
    double logit = comps[k].log_w - 0.5 * sq_dist(x, *comps[k].mean) / s2;
    if (logit > best_logit) { best_logit = logit; best = k; }
  }
  return static_cast<int>(best);
}

int classify(const ConditionalMixture& mix, const Vec& x) {
  int best = 0;
  double best_ld = -1e300;
  for (int c = 0; c < mix.n_classes; ++c) {
    double ld = log_density(mix, c, x);
    if (ld > best_ld) { best_ld = ld; best = c; }
  }
  return best;
}

std::vector<EditTask> make_tasks(const ConditionalMixture& mix, int count,
                                 std::uint64_t seed) {
  std::vector<EditTask> tasks;
  RandomStream master(seed);
  for (int i = 0; i < count; ++i) {
    RandomStream s = master.substream(i);
    EditTask task;
    task.c_src = static_cast<int>(s.next_u64() % mix.n_classes);
    task.c_tgt = (task.c_src + 1 + static_cast<int>(s.next_u64() % (mix.n_classes - 1))) % mix.n_classes;
    task.x_src = sample(mix, task.c_src, s);
    task.preserve_mask.assign(mix.d, false);
    for (int j = mix.edit_dims; j < mix.d; ++j) task.preserve_mask[j] = true;
    tasks.push_back(std::move(task));
  }
  return tasks;
}

double coordinate_span(const ConditionalMixture& mix) {
  double lo = 1e300, hi = -1e300;
  for (const auto& cls : mix.means)
    for (const Vec& mu : cls)
      for (double v : mu) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  double span = hi - lo;
  return span > 0.0 ? span : 1.0;
}

}  // namespace fa
