#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fa {

using Vec = std::vector<double>;

Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scaled(const Vec& a, double s);
void axpy(double s, const Vec& x, Vec& y);  // y += s*x
double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);
double max_abs(const Vec& a);
double sq_dist(const Vec& a, const Vec& b);
bool all_finite(const Vec& a);
void require_finite(const Vec& a, const char* what);
void require_same_dim(const Vec& a, const Vec& b, const char* what);

/// Discretization of t in [0,1], stored strictly decreasing from 1 to 0.
/// `skip` marks how many leading grid points are skipped before updates
/// begin; the grid itself always spans the full interval.
struct TimeGrid {
  std::vector<double> times;  // size n_steps + 1, times[0] = 1, back() = 0
  int n_steps = 0;
  double shift = 1.0;
  int skip = 0;
};

TimeGrid make_time_grid(int n_steps, double shift, int skip);

// Affine interpolation with a_t = 1 - t (data side) and b_t = t (noise side).
Vec affine_path(const Vec& x0, const Vec& x1, double t);
Vec conditional_velocity(const Vec& x0, const Vec& x1);  // x1 - x0

/// Counter-seeded random stream. Equal seeds give bit-identical draw
/// sequences; substreams are derived by counter so adding a consumer in one
/// place never perturbs draws elsewhere.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  RandomStream substream(std::uint64_t counter) const;

  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double normal();   // standard normal, Box-Muller, pair-cached
  Vec normal_vec(int d);

  std::uint64_t seed() const { return seed_; }

 private:
  RandomStream(std::uint64_t seed, std::uint64_t state);
  std::uint64_t seed_;
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace fa
