#pragma once

#include <functional>
#include <memory>
#include <utility>

#include "core.hpp"
#include "mixture.hpp"
#include "net.hpp"

namespace fa {

/// Conditional velocity source with an evaluation counter (the NFE unit).
/// Backed by a trained net or by the analytic mixture field.
class CondField {
 public:
  virtual ~CondField() = default;
  Vec operator()(const Vec& x, double t, int label) const {
    ++n_evals;
    return eval(x, t, label);
  }
  virtual int null_label() const = 0;
  virtual int dim() const = 0;
  mutable long long n_evals = 0;

 protected:
  virtual Vec eval(const Vec& x, double t, int label) const = 0;
};

class NetField : public CondField {
 public:
  explicit NetField(const VelocityNet& net) : net_(&net) {}
  int null_label() const override { return net_->null_label(); }
  int dim() const override { return net_->dim(); }

 protected:
  Vec eval(const Vec& x, double t, int label) const override {
    return net_->forward(x, t, label);
  }

 private:
  const VelocityNet* net_;
};

class AnalyticField : public CondField {
 public:
  explicit AnalyticField(const ConditionalMixture& mix) : mix_(&mix) {}
  int null_label() const override { return mix_->null_label(); }
  int dim() const override { return mix_->d; }

 protected:
  Vec eval(const Vec& x, double t, int label) const override {
    // t = 0 limit of the marginal rectified-flow velocity: E[eps] - x0 = -x
    if (t == 0.0) return scaled(x, -1.0);
    return analytic_velocity(*mix_, label, x, t);
  }

 private:
  const ConditionalMixture* mix_;
};

// Unconditional velocity callable for the generic integrator.
using VelocityFn = std::function<Vec(const Vec&, double)>;

enum class Direction { Forward, Reversed };  // forward follows the grid 1 -> 0

struct IntegrateResult {
  Vec terminal;
  std::vector<Vec> path;  // includes start and terminal states
};

// Euler steps x <- x + v(x, t) * dt along the grid (skip is ignored here;
// callers slice the grid when they want a partial horizon).
IntegrateResult integrate(const VelocityFn& v, const Vec& x_start,
                          const TimeGrid& grid, Direction direction);

// Sample by integrating the flow from noise at t = 1 down to t = 0.
Vec generate(const CondField& field, int label, const TimeGrid& grid,
             RandomStream& stream);

// Invert under the null condition, then sample under guidance toward c_tgt.
Vec ddib_edit(const CondField& field, const Vec& x_src, int c_src, int c_tgt,
              const TimeGrid& grid, double omega);

// Noise x_src to t_start, then integrate down under guidance toward c_tgt.
Vec sdedit_edit(const CondField& field, const Vec& x_src, int c_tgt,
                const TimeGrid& grid, double t_start, double omega,
                RandomStream& stream);

}  // namespace fa
