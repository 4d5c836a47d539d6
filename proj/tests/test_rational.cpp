// Copyright (c) 2026 The billiards developers
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <doctest.h>

#include "mrb/approximant.hpp"
#include "mrb/geometry.hpp"
#include "mrb/rational.hpp"

using namespace mrb;

TEST_CASE("convergents of sqrt(2)") {
  const auto cs = convergents(std::sqrt(2.0), 5);
  REQUIRE(cs.size() == 5);
  const std::int64_t ps[] = {1, 3, 7, 17, 41};
  const std::int64_t qs[] = {1, 2, 5, 12, 29};
  for (int i = 0; i < 5; ++i) {
    CHECK(cs[i].p == ps[i]);
    CHECK(cs[i].q == qs[i]);
  }
}

TEST_CASE("convergents of 1/sqrt(2) include 12/17") {
  const auto cs = convergents(1.0 / std::sqrt(2.0), 6);
  bool found = false;
  for (const auto& c : cs)
    if (c.p == 12 && c.q == 17) found = true;
  CHECK(found);
  CHECK(std::abs(1.0 / std::sqrt(2.0) - 12.0 / 17.0) < 1.0 / 289.0);
}

TEST_CASE("convergents of a rational terminate") {
  const auto cs = convergents(0.5, 10);
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].p == 1);
  CHECK(cs[0].q == 2);
  CHECK(std::abs(0.5 - cs[0].value()) == 0.0);
}

TEST_CASE("every convergent satisfies the 1/q^2 certificate") {
  std::mt19937_64 rng(20260810);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double x = 0.05 + 10.0 * uni(rng);
    for (const auto& c : convergents(x, 12)) {
      CHECK(c.p >= 1);
      CHECK(c.q >= 1);
      CHECK(std::gcd(c.p, c.q) == 1);
      CHECK(std::abs(x - c.value()) < c.error_bound());
    }
  }
}

TEST_CASE("convergent denominators strictly increase") {
  for (double x : {std::sqrt(3.0), M_PI, 0.123456, std::sqrt(2.0) / 2}) {
    const auto cs = convergents(x, 10);
    for (std::size_t i = 1; i < cs.size(); ++i) CHECK(cs[i].q > cs[i - 1].q);
  }
}

TEST_CASE("dirichlet_simultaneous on (sqrt2, sqrt3), N = 10") {
  const auto s = dirichlet_simultaneous({std::sqrt(2.0), std::sqrt(3.0)}, 10);
  CHECK(s.C == 7);
  REQUIRE(s.Ks.size() == 2);
  CHECK(s.Ks[0] == 10);
  CHECK(s.Ks[1] == 12);
  CHECK(s.achieved_error < std::pow(10.0, -0.5));
  CHECK(std::abs(7 * std::sqrt(2.0) - 10.0) == doctest::Approx(0.1005).epsilon(0.01));
  CHECK(std::abs(7 * std::sqrt(3.0) - 12.0) == doctest::Approx(0.1244).epsilon(0.01));
}

TEST_CASE("dirichlet_simultaneous trivial cases") {
  const auto ints = dirichlet_simultaneous({2.0, 5.0, 9.0}, 12);
  CHECK(ints.C == 1);
  CHECK(ints.achieved_error == 0.0);

  const auto rat = dirichlet_simultaneous({3.0 / 7.0}, 20);
  CHECK(rat.C == 7);
  CHECK(rat.achieved_error < 1e-12);
}

TEST_CASE("dirichlet bound holds exhaustively for n <= 3, N <= 50") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int n = 1; n <= 3; ++n)
    for (std::int64_t N = 1; N <= 50; ++N)
      for (int trial = 0; trial < 8; ++trial) {
        std::vector<double> xs(n);
        for (auto& x : xs) x = 10.0 * uni(rng);
        const auto s = dirichlet_simultaneous(xs, N);
        CHECK(s.achieved_error < std::pow(static_cast<double>(N), -1.0 / n));
      }
}

TEST_CASE("refinement through a linear relation reaches the 1/m exponent") {
  const double y = std::sqrt(2.0);
  const std::vector<double> xs = {y, 2.0 * y};
  const std::vector<std::vector<Rational>> coeffs = {{Rational{1, 1}}, {Rational{2, 1}}};
  const std::int64_t N = 100;
  const auto refined = refine_via_linear_relations(xs, {y}, coeffs, N);
  // coefficient sum 1 + 2 = 3 controls the refined error at exponent 1/m = 1
  CHECK(refined.achieved_error < 3.0 / static_cast<double>(N));
  // the direct two-target search is only guaranteed N^(-1/2)
  CHECK(refined.achieved_error < std::pow(static_cast<double>(N), -0.5));

  // identity relation reduces to the plain search
  const auto ident = refine_via_linear_relations({y}, {y}, {{Rational{1, 1}}}, 30);
  const auto plain = dirichlet_simultaneous({y}, 30);
  CHECK(ident.C == plain.C);
  CHECK(ident.achieved_error == doctest::Approx(plain.achieved_error));

  // denominators 1/2 and 1/3 force the lcm factor 6
  const auto lcm6 = refine_via_linear_relations({y / 2.0 + y / 3.0}, {y},
                                                {{Rational{5, 6}}}, 10);
  const auto inner = dirichlet_simultaneous({y}, 10);
  CHECK(lcm6.C == 6 * inner.C);

  CHECK_THROWS_AS(refine_via_linear_relations({1.0}, {std::sqrt(2.0)}, {{Rational{1, 1}}}, 10),
                  InvalidRelation);
}

TEST_CASE("lshape approximant follows the continued fractions of the side ratios") {
  const auto lsb = new_lshape(1.0, std::sqrt(2.0), 1.0, std::sqrt(3.0));
  const auto ap = build_approximant(lsb, 12);
  // b/a = sqrt(2): best denominator <= 12 is the convergent 17/12
  CHECK(ap.x_axis.ratios[1] == Rational{17, 12});
  CHECK(std::abs(std::sqrt(2.0) - 17.0 / 12.0) < 1.0 / 144.0);
  // d/c = sqrt(3): best denominator <= 12 is the convergent 19/11
  CHECK(ap.y_axis.ratios[1] == Rational{19, 11});
  CHECK(ap.approximant.is_doubly_rational());
  CHECK(ap.approximant.xs()[1] == doctest::Approx(17.0 / 12.0).epsilon(1e-15));

  // certificate |x_i - x_{n,i}| < x_1 / (C1 n^(1/m))
  CHECK(ap.x_axis.achieved_error[1] < ap.x_axis.certified_bound[1]);
  CHECK(ap.y_axis.achieved_error[1] < ap.y_axis.certified_bound[1]);
}

TEST_CASE("doubly rational input returns the exact self-approximant") {
  const auto dr = new_lshape(1.0, 2.0, 1.0, 3.0, Rational{2, 1}, Rational{3, 1});
  const auto ap = build_approximant(dr, 7);
  CHECK(ap.approximant.xs()[1] == 2.0);
  CHECK(ap.approximant.ys()[1] == 3.0);
  CHECK(ap.max_displacement == 0.0);
  CHECK(ap.x_axis.C1 == 1);
  CHECK(ap.x_axis.C[1] == 2);
  CHECK(ap.y_axis.C[1] == 3);
}

TEST_CASE("multi-cut approximant honors the generalized exponent bound") {
  // staircase with three irrational x ratios
  const std::vector<double> xs = {1.0, std::sqrt(2.0), std::sqrt(5.0), M_PI};
  const std::vector<double> ys = {1.0, std::sqrt(3.0), 2.4, 3.1};
  std::vector<std::vector<int>> cells = {{0, 1, 1, 0}, {0, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 0, 0}};
  const auto b = new_mrb(xs, ys, cells);
  const auto ap = build_approximant(b, 1000);
  for (int i = 1; i < 4; ++i) {
    CHECK(ap.x_axis.achieved_error[i] <
          xs[0] / (static_cast<double>(ap.x_axis.C1) * std::cbrt(1000.0)));
    // ladder identity C_i / C_1 = x_{n,i} / x_1 exactly
    CHECK(Rational::of(ap.x_axis.C[i], ap.x_axis.C1) == ap.x_axis.ratios[i]);
  }
}

TEST_CASE("deformation map fixes the shared region and moves vertices to vertices") {
  const auto lsb = new_lshape(1.0, std::sqrt(2.0), 1.0, std::sqrt(3.0));
  const auto ap = build_approximant(lsb, 12);
  const auto [a, b, c, d] = *lsb.lshape();

  // interior of the fixed region
  const Point p0 = deformation_map({0.4, 0.7}, lsb, ap);
  CHECK(p0.x == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(p0.y == doctest::Approx(0.7).epsilon(1e-14));

  // the outer corner of the horizontal arm
  const Point pb = deformation_map({b, c}, lsb, ap);
  CHECK(pb.x == doctest::Approx(ap.approximant.xs()[1]).epsilon(1e-14));
  CHECK(pb.y == doctest::Approx(ap.approximant.ys()[0]).epsilon(1e-14));

  // displacement bound b/(p q) + d/(r s)
  const double bound = b / (12.0 * 17.0) + d / (11.0 * 19.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    double x = uni(rng) * b, y = uni(rng) * d;
    if (!lsb.contains(x, y)) continue;
    const Point q = deformation_map({x, y}, lsb, ap);
    CHECK(std::hypot(q.x - x, q.y - y) < bound);
    const Point back = deformation_map_inverse(q, lsb, ap);
    CHECK(back.x == doctest::Approx(x).epsilon(1e-12));
    CHECK(back.y == doctest::Approx(y).epsilon(1e-12));
  }

  CHECK_THROWS_AS(deformation_map({b, d}, lsb, ap), OutOfDomain);
}
