#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "core.hpp"

using namespace fa;

TEST_CASE("vector helpers") {
  Vec a{1.0, 2.0, -3.0}, b{0.5, -1.0, 2.0};
  CHECK(add(a, b) == Vec{1.5, 1.0, -1.0});
  CHECK(sub(a, b) == Vec{0.5, 3.0, -5.0});
  CHECK(scaled(a, 2.0) == Vec{2.0, 4.0, -6.0});
  CHECK(dot(a, b) == doctest::Approx(0.5 - 2.0 - 6.0));
  CHECK(norm(Vec{3.0, 4.0}) == doctest::Approx(5.0));
  CHECK(max_abs(a) == 3.0);
  CHECK(sq_dist(a, b) == doctest::Approx(0.25 + 9.0 + 25.0));

  Vec y{1.0, 1.0, 1.0};
  axpy(2.0, a, y);
  CHECK(y == Vec{3.0, 5.0, -5.0});

  CHECK(all_finite(a));
  Vec bad{1.0, std::nan(""), 0.0};
  CHECK(!all_finite(bad));
  CHECK_THROWS(require_finite(bad, "probe"));
  CHECK_THROWS(require_same_dim(a, Vec{1.0}, "probe"));
}

TEST_CASE("time grid shape") {
  TimeGrid g = make_time_grid(8, 1.0, 0);
  REQUIRE(g.times.size() == 9);
  CHECK(g.times.front() == 1.0);
  CHECK(g.times.back() == 0.0);
  for (size_t i = 1; i < g.times.size(); ++i)
    CHECK(g.times[i] < g.times[i - 1]);
  // uniform when shift = 1
  CHECK(g.times[4] == doctest::Approx(0.5));

  TimeGrid w = make_time_grid(8, 3.0, 0);
  CHECK(w.times.front() == 1.0);
  CHECK(w.times.back() == 0.0);
  // warp(1/2) = 3*(1/2) / (1 + 2*(1/2)) = 3/4
  CHECK(w.times[4] == doctest::Approx(0.75));
  // shift > 1 spends more of the grid at high t
  CHECK(w.times[4] > g.times[4]);
}

TEST_CASE("time grid refinement nests") {
  TimeGrid c = make_time_grid(16, 3.0, 0);
  TimeGrid f = make_time_grid(32, 3.0, 0);
  for (int i = 0; i <= 16; ++i)
    CHECK(f.times[2 * i] == doctest::Approx(c.times[i]).epsilon(1e-15));
}

TEST_CASE("time grid validation") {
  CHECK_THROWS(make_time_grid(0, 1.0, 0));
  CHECK_THROWS(make_time_grid(8, 0.5, 0));
  CHECK_THROWS(make_time_grid(8, 1.0, -1));
  CHECK_THROWS(make_time_grid(8, 1.0, 8));
  CHECK_NOTHROW(make_time_grid(8, 1.0, 7));
}

TEST_CASE("affine path") {
  Vec x0{1.0, -1.0}, x1{3.0, 1.0};
  CHECK(affine_path(x0, x1, 0.0) == x0);
  CHECK(affine_path(x0, x1, 1.0) == x1);
  Vec mid = affine_path(x0, x1, 0.5);
  CHECK(mid[0] == doctest::Approx(2.0));
  CHECK(mid[1] == doctest::Approx(0.0));
  CHECK_THROWS(affine_path(x0, x1, -0.1));
  CHECK_THROWS(affine_path(x0, x1, 1.1));
  CHECK_THROWS(affine_path(x0, Vec{1.0}, 0.5));
  CHECK(conditional_velocity(x0, x1) == Vec{2.0, 2.0});
}

TEST_CASE("random stream determinism") {
  RandomStream a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    std::uint64_t va = a.next_u64();
    all_equal = all_equal && (va == b.next_u64());
    any_diff = any_diff || (va != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("substreams are insulated from parent consumption") {
  RandomStream a(7);
  RandomStream s1 = a.substream(3);
  double first = s1.uniform();
  // consume the parent heavily, re-derive the substream
  for (int i = 0; i < 50; ++i) a.uniform();
  RandomStream s2 = a.substream(3);
  CHECK(s2.uniform() == first);
  // distinct counters give distinct draws
  CHECK(a.substream(4).uniform() != first);
}

TEST_CASE("uniform range and normal moments") {
  RandomStream s(123);
  const int n = 200000;
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = s.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < n; ++i) {
    double z = s.normal();
    mean += z;
    var += z * z;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));

  Vec v = s.normal_vec(5);
  CHECK(v.size() == 5);
}
