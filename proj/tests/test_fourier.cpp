// Copyright (c) 2026 The billiards developers
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <set>

#include <doctest.h>

#include "mrb/fourier.hpp"
#include "mrb/geometry.hpp"
#include "quadrature.hpp"

using namespace mrb;

namespace {

double quad_overlap(int other_idx, int own_idx, double other_period, double own_period, double lo,
                    double hi, double other_anchor) {
  return testoracle::integrate(
      [&](long double t) {
        return std::sin(other_idx * M_PIl * (t - other_anchor) / other_period) *
               std::sin(own_idx * M_PIl * (t - lo) / own_period);
      },
      lo, hi, 1e-14);
}

}  // namespace

TEST_CASE("overlap closed form against adaptive quadrature, randomized") {
  std::mt19937_64 rng(0xa11ce);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> idx(1, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    const int r = idx(rng), n = idx(rng);
    const double own = 0.3 + 2.5 * uni(rng);
    double other = 0.3 + 2.5 * uni(rng);
    const double lo = 2.0 * uni(rng) - 1.0;
    const double hi = lo + own;  // assembled systems integrate over the own period
    const double anchor = lo - 1.5 * uni(rng);
    // every 8th trial sits within 1e-6 of resonance
    if (trial % 8 == 0) other = own * static_cast<double>(r) / n * (1.0 + 1e-6 * (uni(rng) - 0.5));
    const auto got = sine_overlap<double>(r, n, other, own, lo, hi, anchor);
    const double want = quad_overlap(r, n, other, own, lo, hi, anchor);
    CHECK(std::abs(got.value - want) <= 1e-10 * std::max(std::abs(want), 1e-3 * own));
  }
}

TEST_CASE("overlap closed form on general intervals shorter than the own period") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> idx(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const int r = idx(rng), n = idx(rng);
    const double own = 0.5 + uni(rng);
    const double other = 0.4 + 1.5 * uni(rng);
    const double lo = uni(rng);
    const double hi = lo + 0.2 + 0.6 * uni(rng) * own;
    const double anchor = lo - uni(rng);
    const auto got = sine_overlap<double>(r, n, other, own, lo, hi, anchor);
    const double want = quad_overlap(r, n, other, own, lo, hi, anchor);
    CHECK(std::abs(got.value - want) <= 1e-11 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("resonant overlaps take the exact limiting value") {
  // equal intervals, equal index: half the length, flagged resonant
  const auto full = alpha(3, 3, 1.0, 1.0, 0.0, 1.0, 0.0);
  CHECK(full.resonant);
  CHECK(full.value == 0.5);

  // rational side ratio puts (kp, kq) exactly on resonance: value a/2
  const double a = 1.0, b = 2.0;
  for (int k = 1; k <= 3; ++k) {
    const auto res = beta(k * 1, k * 2, a, b, 0.0, a, 0.0);
    CHECK(res.resonant);
    CHECK(res.value == a / 2);
  }

  // doubly rational transverse pair (ls, lr) with c/d = r/s: value c/2
  const double c = 1.0, d = 3.0;
  for (int l = 1; l <= 3; ++l) {
    const auto res = alpha(l * 3, l * 1, d, c, 0.0, c, 0.0);
    CHECK(res.resonant);
    CHECK(res.value == c / 2);
  }
}

TEST_CASE("specific overlap values") {
  // c = 1, d = sqrt(2), r = n = 1 on [0, 1]
  const auto a1 = alpha(1, 1, std::sqrt(2.0), 1.0, 0.0, 1.0, 0.0);
  CHECK_FALSE(a1.resonant);
  CHECK(a1.value ==
        doctest::Approx(quad_overlap(1, 1, std::sqrt(2.0), 1.0, 0.0, 1.0, 0.0)).epsilon(1e-12));
  CHECK(a1.value == doctest::Approx(0.5065).epsilon(1e-3));

  // orthogonality on identical intervals
  const auto orth = beta(2, 5, 1.0, 1.0, 0.0, 1.0, 0.0);
  CHECK(orth.value == doctest::Approx(0.0).scale(1.0));

  CHECK_THROWS_AS(alpha(1, 1, 1.0, 1.0, 0.5, 0.5, 0.0), DegenerateInterval);
  CHECK_THROWS_AS(alpha(0, 1, 1.0, 1.0, 0.0, 1.0, 0.0), DegenerateInterval);
}

TEST_CASE("basis frequencies for mixed boundary conditions") {
  BasisSpec dd;  // Dirichlet both ends
  CHECK(dd.frequency(3, 2.0) == doctest::Approx(3.0 * M_PI / 2.0));
  BasisSpec dn{Bc::dirichlet, Bc::neumann};
  const double L = 1.7;
  for (int m = 1; m <= 5; ++m) {
    const double f = dn.frequency(m, L);
    CHECK(f == doctest::Approx((m + 0.5) * M_PI / L));
    // Dirichlet at the near end, vanishing slope at the far end
    CHECK(dn.eval(m, L, 0.0) == 0.0);
    CHECK(std::abs(std::cos(f * L)) < 1e-12);
    if (m > 1) CHECK(f > dn.frequency(m - 1, L));
  }
}

TEST_CASE("derivative tables: pure differentiation with zero traces") {
  const Rect ch{0.0, 0.0, 2.0, 1.0};
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(4, 4);
  X(0, 0) = 0.7;
  X(2, 1) = -0.4;
  const auto d = derivative_coeffs(X, ChannelTraces{}, ch);
  for (int m = 1; m <= 4; ++m)
    for (int n = 1; n <= 4; ++n) {
      CHECK(d.xx(m - 1, n - 1) ==
            doctest::Approx(-std::pow(m * M_PI / 2.0, 2) * X(m - 1, n - 1)));
      CHECK(d.yy(m - 1, n - 1) == doctest::Approx(-std::pow(n * M_PI, 2) * X(m - 1, n - 1)));
      CHECK(d.xy(m - 1, n - 1) ==
            doctest::Approx(m * M_PI / 2.0 * n * M_PI * X(m - 1, n - 1)));
    }
}

TEST_CASE("derivative tables: trace correction of the second y-derivative") {
  // single coefficient plus a top trace: the y^2 table picks up the
  // inhomogeneous term -2 (-1)^n pi n / c^2 h_m
  const double b = 2.0, c = 1.0;
  const Rect ch{0.0, 0.0, b, c};
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(3, 3);
  X(0, 0) = 1.0;
  ChannelTraces tr;
  tr.top = Eigen::VectorXd::Zero(3);
  tr.top(0) = 0.25;  // h_1
  const auto d = derivative_coeffs(X, tr, ch);
  const double expected = 2.0 * M_PI * 0.25 / (c * c) - std::pow(M_PI / c, 2);
  CHECK(d.yy(0, 0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("derivative tables match quadrature coefficients of a smooth function") {
  const double a = 1.3, b = 0.9;
  const Rect ch{0.0, 0.0, a, b};
  // vanishes on the left and right sides, free on top and bottom
  auto F = [&](double x, double y) {
    return std::sin(M_PI * x / a) * std::exp(0.7 * y - 0.3 * y * y);
  };
  auto Fy = [&](double x, double y) { return (0.7 - 0.6 * y) * F(x, y); };
  auto Fyy = [&](double x, double y) {
    return ((0.7 - 0.6 * y) * (0.7 - 0.6 * y) - 0.6) * F(x, y);
  };
  const int M = 2, N = 4;
  auto sine_coeff = [&](auto&& G, int m, int n) {
    return 4.0 / (a * b) *
           testoracle::integrate2d(
               [&](long double x, long double y) {
                 return G(static_cast<double>(x), static_cast<double>(y)) *
                        std::sin(m * M_PI * x / a) * std::sin(n * M_PI * y / b);
               },
               0.0, a, 0.0, b, 1e-12);
  };
  auto cos_y_coeff = [&](auto&& G, int m, int n) {
    return 4.0 / (a * b) *
           testoracle::integrate2d(
               [&](long double x, long double y) {
                 return G(static_cast<double>(x), static_cast<double>(y)) *
                        std::sin(m * M_PI * x / a) * std::cos(n * M_PI * y / b);
               },
               0.0, a, 0.0, b, 1e-12);
  };

  Eigen::MatrixXd X(M, N);
  for (int m = 1; m <= M; ++m)
    for (int n = 1; n <= N; ++n) X(m - 1, n - 1) = sine_coeff(F, m, n);
  ChannelTraces tr;
  tr.top.resize(M);
  tr.bottom.resize(M);
  for (int m = 1; m <= M; ++m) {
    tr.top(m - 1) = 2.0 / a * testoracle::integrate([&](long double x) {
      return F(static_cast<double>(x), b) * std::sin(m * M_PI * x / a);
    }, 0.0, a);
    tr.bottom(m - 1) = 2.0 / a * testoracle::integrate([&](long double x) {
      return F(static_cast<double>(x), 0.0) * std::sin(m * M_PI * x / a);
    }, 0.0, a);
  }
  const auto d = derivative_coeffs(X, tr, ch);
  for (int m = 1; m <= M; ++m)
    for (int n = 1; n <= N; ++n) {
      CHECK(d.y(m - 1, n - 1) == doctest::Approx(cos_y_coeff(Fy, m, n)).epsilon(1e-9));
      CHECK(d.yy(m - 1, n - 1) == doctest::Approx(sine_coeff(Fyy, m, n)).epsilon(1e-9));
      // x-direction has genuinely zero traces here
      CHECK(d.xx(m - 1, n - 1) ==
            doctest::Approx(-std::pow(m * M_PI / a, 2) * X(m - 1, n - 1)).epsilon(1e-12));
    }

  // supplying a trace on a side that must stay boundary blocks the mixed table
  ChannelTraces bad = tr;
  bad.left = Eigen::VectorXd::Ones(N);
  CHECK_THROWS_AS(derivative_coeffs(X, bad, ch), MissingTrace);
}

TEST_CASE("series evaluation") {
  const Rect ch{0.0, 0.0, 2.0, 1.0};
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(5, 5);
  X(0, 0) = 1.0;
  // vanishes on the channel edges
  CHECK(eval_series(X, ch, 0.0, 0.37) == 0.0);
  CHECK(std::abs(eval_series(X, ch, 2.0, 0.37)) < 1e-14);
  CHECK(std::abs(eval_series(X, ch, 1.3, 1.0)) < 1e-14);
  // single mode at the centre
  CHECK(eval_series(X, ch, 1.0, 0.5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(eval_series(X, ch, 2.5, 0.5), OutOfDomain);
}

TEST_CASE("doubly rational product mode agrees between the two arms") {
  // sides (1, 2, 1, 3): the mode sin(pi x) sin(pi y) is the (2,1) sine of the
  // horizontal arm and the (1,3) sine of the vertical arm
  const Rect harm{0.0, 0.0, 2.0, 1.0};
  const Rect varm{0.0, 0.0, 1.0, 3.0};
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(4, 4);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(4, 4);
  H(1, 0) = 1.0;
  V(0, 2) = 1.0;
  const double x = 0.3, y = 0.7;
  const double expected = std::sin(M_PI * x) * std::sin(M_PI * y);
  CHECK(eval_series(H, harm, x, y) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(eval_series(V, varm, x, y) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("lshape boundary traces from a single excited coefficient") {
  const double a = 1.0, b = std::sqrt(2.0), c = 1.0, d = std::sqrt(3.0);
  const auto lsb = new_lshape(a, b, c, d);
  const auto lay = build_matching_layout(lsb, 6, 6);
  REQUIRE(lay.h_channels.size() == 1);
  REQUIRE(lay.v_channels.size() == 1);
  REQUIRE(lay.crossings.size() == 1);

  const int m0 = 3, n0 = 2;
  std::vector<Eigen::MatrixXd> tables(2, Eigen::MatrixXd::Zero(6, 6));
  tables[0](m0 - 1, n0 - 1) = 1.0;  // horizontal-arm coefficient
  const auto tr = boundary_traces(lay, tables);

  for (int n = 1; n <= 6; ++n) {
    const double expected =
        2.0 / d * alpha(n, n0, d, c, 0.0, c, 0.0).value * std::sin(m0 * M_PI * a / b);
    CHECK(tr.v_right[0](n - 1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(tr.v_left[0](n - 1) == 0.0);
  }
  // nothing excites the horizontal trace
  for (int m = 1; m <= 6; ++m) CHECK(tr.h_top[0](m - 1) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("doubly rational product mode has vanishing traces") {
  const auto dr = new_lshape(1.0, 2.0, 1.0, 3.0, Rational{2, 1}, Rational{3, 1});
  const auto lay = build_matching_layout(dr, 6, 6);
  std::vector<Eigen::MatrixXd> tables(2, Eigen::MatrixXd::Zero(6, 6));
  tables[0](1, 0) = 1.0;  // H arm: (2, 1)
  tables[1](0, 2) = 1.0;  // V arm: (1, 3)
  const auto tr = boundary_traces(lay, tables);
  CHECK(tr.h_top[0].lpNorm<Eigen::Infinity>() < 1e-13);
  CHECK(tr.v_right[0].lpNorm<Eigen::Infinity>() < 1e-13);

  // zero amplitudes give zero traces
  std::vector<Eigen::MatrixXd> zeros(2, Eigen::MatrixXd::Zero(6, 6));
  const auto tz = boundary_traces(lay, zeros);
  CHECK(tz.h_top[0].norm() == 0.0);
  CHECK(tz.v_right[0].norm() == 0.0);
}

TEST_CASE("trace couplings reproduce the four-strip contribution matrices") {
  const auto b = new_mrb({1.0, 2.0, 3.0, 4.0}, {1.0, 2.0, 3.0, 4.0},
                         {{0, 1, 1, 0}, {0, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 0, 0}});
  const auto lay = build_matching_layout(b, 3, 3);

  std::vector<std::set<int>> h_contrib(4), v_contrib(4);
  for (const auto& ct : lay.crossings) {
    const auto& H = lay.channel(ct.h);
    const auto& V = lay.channel(ct.v);
    if (ct.v_at_h_top) h_contrib[H.index - 1].insert(V.index);
    if (ct.h_at_v_right) v_contrib[V.index - 1].insert(H.index);
  }
  // cut y_i is the top of horizontal channel i; printed contribution rows
  CHECK(h_contrib[0] == std::set<int>{2, 3});
  CHECK(h_contrib[1] == std::set<int>{2, 3, 4});
  CHECK(h_contrib[2] == std::set<int>{1, 2});
  CHECK(h_contrib[3] == std::set<int>{});  // the top side is outer boundary
  // cut x_i is the right side of vertical channel i
  CHECK(v_contrib[0] == std::set<int>{3, 4});
  CHECK(v_contrib[1] == std::set<int>{1, 2, 3});
  CHECK(v_contrib[2] == std::set<int>{2, 3});
  CHECK(v_contrib[3] == std::set<int>{});
}

TEST_CASE("one-sided reduction: derivative matchings follow from the value matching") {
  // F supported on two modes of the long segment; expansions on [0, a] and
  // [0, b] with a < b
  const double a = 1.0, b = std::sqrt(2.0);
  const double B1 = 1.0, B2 = 0.4;
  auto F = [&](double x) {
    return B1 * std::sin(M_PI * x / b) + B2 * std::sin(2.0 * M_PI * x / b);
  };

  const int M = 8;
  for (int m = 1; m <= M; ++m) {
    const double alpha_m1 = quad_overlap(1, m, b, a, 0.0, a, 0.0);
    const double alpha_m2 = quad_overlap(2, m, b, a, 0.0, a, 0.0);
    // group 1: value identification
    const double A_m = testoracle::integrate([&](long double x) {
      return F(static_cast<double>(x)) * std::sin(m * M_PI * x / a);
    }, 0.0, a) * 2.0 / a;
    const double A_from_B = 2.0 / a * (alpha_m1 * B1 + alpha_m2 * B2);
    CHECK(A_m == doctest::Approx(A_from_B).epsilon(1e-11));

    // group 2: first derivatives, with the trace relation supplying A'_m
    const double Bp1 = M_PI / b * B1, Bp2 = 2.0 * M_PI / b * B2;  // F(0) = F(b) = 0
    const double Ap_m = ((m % 2 == 0) ? 1.0 : -1.0) * 2.0 / a * F(a) + m * M_PI / a * A_m;
    const double Ap_from_B =
        2.0 / a * (a * 1.0 / (b * m) * alpha_m1 * Bp1 + a * 2.0 / (b * m) * alpha_m2 * Bp2);
    CHECK(Ap_m == doctest::Approx(Ap_from_B).epsilon(1e-10));

    // group 3: second derivatives
    const double Bpp1 = -std::pow(M_PI / b, 2) * B1, Bpp2 = -std::pow(2.0 * M_PI / b, 2) * B2;
    const double App_m = -((m % 2 == 0) ? 1.0 : -1.0) * 2.0 * M_PI * m / (a * a) * F(a) -
                         std::pow(m * M_PI / a, 2) * A_m;
    const double App_from_B = 2.0 / a * (alpha_m1 * Bpp1 + alpha_m2 * Bpp2);
    CHECK(App_m == doctest::Approx(App_from_B).epsilon(1e-10));
  }
}

TEST_CASE("antisymmetric extension reconstructs a smooth function, error shrinks with order") {
  const double a = 1.4, b = 0.8;
  const Rect ch{0.0, 0.0, a, b};
  // product polynomial vanishing on the boundary; exact sine coefficients
  auto coeff1d = [](int m) { return (m % 2 == 1) ? 8.0 / std::pow(M_PI * m, 3) : 0.0; };
  auto F = [&](double x, double y) {
    const double u = x / a, v = y / b;
    return u * (1.0 - u) * v * (1.0 - v);
  };
  double prev_err = 1e9;
  for (int K : {4, 8, 16, 32}) {
    Eigen::MatrixXd X(K, K);
    for (int m = 1; m <= K; ++m)
      for (int n = 1; n <= K; ++n) X(m - 1, n - 1) = coeff1d(m) * coeff1d(n);
    double err = 0.0;
    for (int i = 1; i < 12; ++i)
      for (int j = 1; j < 12; ++j) {
        const double x = a * i / 12.0, y = b * j / 12.0;
        err = std::max(err, std::abs(eval_series(X, ch, x, y) - F(x, y)));
      }
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 2e-4);
}
