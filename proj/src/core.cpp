#include "core.hpp"

#include <cmath>
#include <stdexcept>

namespace fa {

void require_same_dim(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
}

Vec add(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "add");
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Vec sub(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "sub");
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vec scaled(const Vec& a, double s) {
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
  return r;
}

void axpy(double s, const Vec& x, Vec& y) {
  require_same_dim(x, y, "axpy");
  for (size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

double dot(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "dot");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

double max_abs(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

double sq_dist(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "sq_dist");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

bool all_finite(const Vec& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

void require_finite(const Vec& a, const char* what) {
  if (!all_finite(a))
    throw std::runtime_error(std::string(what) + ": non-finite value");
}

// Resolution-shift warp; identity at shift = 1, fixed points at t = 0 and 1.
static double warp_time(double t, double shift) {
  return shift * t / (1.0 + (shift - 1.0) * t);
}

TimeGrid make_time_grid(int n_steps, double shift, int skip) {
  if (n_steps < 1) throw std::invalid_argument("make_time_grid: n_steps < 1");
  if (shift < 1.0) throw std::invalid_argument("make_time_grid: shift < 1");
  if (skip < 0 || skip >= n_steps)
    throw std::invalid_argument("make_time_grid: skip out of range");
  TimeGrid g;
  g.n_steps = n_steps;
  g.shift = shift;
  g.skip = skip;
  g.times.resize(n_steps + 1);
  g.times[0] = 1.0;
  g.times[n_steps] = 0.0;
  for (int i = 1; i < n_steps; ++i) {
    double u = 1.0 - static_cast<double>(i) / n_steps;
    g.times[i] = warp_time(u, shift);
  }
  return g;
}

Vec affine_path(const Vec& x0, const Vec& x1, double t) {
  require_same_dim(x0, x1, "affine_path");
  if (t < 0.0 || t > 1.0)
    throw std::invalid_argument("affine_path: t outside [0,1]");
  Vec r(x0.size());
  for (size_t i = 0; i < x0.size(); ++i) r[i] = (1.0 - t) * x0[i] + t * x1[i];
  return r;
}

Vec conditional_velocity(const Vec& x0, const Vec& x1) {
  return sub(x1, x0);
}

// ---------------------------------------------------------------------------
// RandomStream

static std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

static std::uint64_t mix_state(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t s = seed ^ (0x632be59bd9b4e019ULL * (counter + 1));
  // scramble twice so adjacent (seed, counter) pairs decorrelate
  splitmix64(s);
  splitmix64(s);
  return s;
}

RandomStream::RandomStream(std::uint64_t seed)
    : seed_(seed), state_(mix_state(seed, 0)) {}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t state)
    : seed_(seed), state_(state) {}

RandomStream RandomStream::substream(std::uint64_t counter) const {
  return RandomStream(seed_, mix_state(seed_, counter + 1));
}

std::uint64_t RandomStream::next_u64() { return splitmix64(state_); }

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // Box-Muller; u1 in (0,1] so the log is finite
  double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

Vec RandomStream::normal_vec(int d) {
  Vec r(d);
  for (int i = 0; i < d; ++i) r[i] = normal();
  return r;
}

}  // namespace fa
