#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core.hpp"
#include "mixture.hpp"

namespace fa {

struct NetConfig {
  int d = 8;
  int n_labels = 2;   // real labels; one extra embedding row is the null label
  int hidden = 128;
  int layers = 3;
  int freq = 8;       // sinusoidal time feature pairs
  int embed = 16;
  std::uint64_t init_seed = 0;
};

/// Small conditional velocity MLP with hand-rolled reverse-mode gradients.
/// Input features: [x, sin/cos time features, label embedding]; tanh hidden
/// layers; linear head of width d.
class VelocityNet {
 public:
  explicit VelocityNet(const NetConfig& cfg, bool zero_init = false);

  Vec forward(const Vec& x, double t, int label) const;

  // loss = || (eps - x0) - net((1-t)x0 + t*eps, t, label) ||^2.
  // If grad != nullptr it must have n_params() entries; gradients are
  // accumulated (+=) so batches can share one buffer.
  double cfm_loss(const Vec& x0, const Vec& eps, double t, int label,
                  std::vector<double>* grad) const;

  int dim() const { return cfg_.d; }
  int null_label() const { return cfg_.n_labels; }
  const NetConfig& config() const { return cfg_; }
  size_t n_params() const { return w_.size(); }
  const std::vector<double>& params() const { return w_; }
  std::vector<double>& params() { return w_; }

  void save(const std::string& path) const;
  static VelocityNet load(const std::string& path);

 private:
  struct Trace;
  void forward_trace(const Vec& x, double t, int label, Trace& tr) const;
  Vec features(const Vec& x, double t, int label) const;

  NetConfig cfg_;
  std::vector<double> w_;
  // offsets into w_
  std::vector<size_t> w_off_, b_off_;  // per hidden layer
  size_t head_w_ = 0, head_b_ = 0, emb_ = 0;
  int in_dim_ = 0;
};

struct TrainConfig {
  int batch = 64;
  int steps = 3000;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double p_drop = 0.1;  // label dropout; trains the null row for guidance
  std::uint64_t seed = 0;
  void validate() const;
};

VelocityNet train(const ConditionalMixture& mix, const TrainConfig& cfg,
                  std::vector<double>* loss_curve = nullptr);

// E[x0 | x_t = x] estimate: x - t * net(x, t, label).
Vec tweedie(const VelocityNet& net, const Vec& x, double t, int label);

}  // namespace fa
