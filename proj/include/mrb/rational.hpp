// Copyright (c) 2026 The billiards developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mrb/errors.hpp"

namespace mrb {

/// Exact fraction with positive denominator and gcd(num, den) = 1.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational of(std::int64_t n, std::int64_t d) {
    if (d == 0) throw Error("Rational: zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
    return Rational{g ? n / g : n, g ? d / g : d};
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool is_integer() const { return den == 1; }

  Rational operator*(const Rational& o) const {
    // reduce cross factors first to keep intermediates small
    const std::int64_t g1 = std::gcd(num < 0 ? -num : num, o.den);
    const std::int64_t g2 = std::gcd(o.num < 0 ? -o.num : o.num, den);
    return Rational::of((num / g1) * (o.num / g2), (den / g2) * (o.den / g1));
  }
  Rational operator/(const Rational& o) const {
    if (o.num == 0) throw Error("Rational: division by zero");
    return Rational::of(num * o.den, den * o.num);
  }
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }

  std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }
};

/// Continued-fraction convergent p/q of some real x, with the classical
/// quality certificate |x - p/q| < 1/q^2.
struct Convergent {
  std::int64_t p = 0;
  std::int64_t q = 1;
  double error_bound() const { return 1.0 / (static_cast<double>(q) * static_cast<double>(q)); }
  double value() const { return static_cast<double>(p) / static_cast<double>(q); }
};

/// Convergents of the simple continued fraction of x > 0, in order of
/// increasing denominator. Convergents with zero numerator are dropped, so
/// for x < 1 the list starts at the first nontrivial approximation. A
/// terminating expansion (x rational at double precision) yields the full
/// finite list, possibly shorter than `count`.
inline std::vector<Convergent> convergents(double x, int count) {
  if (!(x > 0.0) || !std::isfinite(x)) throw Error("convergents: x must be positive and finite");
  if (count < 1) throw Error("convergents: count must be >= 1");

  std::vector<Convergent> result;
  // p/q recurrences; h_{-1}=1, h_{-2}=0 and k_{-1}=0, k_{-2}=1.
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  long double y = x;
  // Denominators above ~1e7 are meaningless against double-precision input
  // and would start violating the 1/q^2 certificate through rounding alone.
  constexpr std::int64_t kDenLimit = 20'000'000;
  for (int i = 0; static_cast<int>(result.size()) < count && i < 64; ++i) {
    const long double fl = std::floor(y);
    if (fl > static_cast<long double>(std::numeric_limits<std::int64_t>::max() / 4)) break;
    const std::int64_t a = static_cast<std::int64_t>(fl);
    const std::int64_t h2 = a * h1 + h0;
    const std::int64_t k2 = a * k1 + k0;
    if (k2 > kDenLimit || h2 < 0 || k2 < 0) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (h1 > 0) {
      // consecutive convergents can share a denominator (leading partial
      // quotient 1); keep only the better of the pair
      if (!result.empty() && result.back().q == k1)
        result.back() = Convergent{h1, k1};
      else
        result.push_back(Convergent{h1, k1});
    }
    const long double frac = y - fl;
    if (frac < 1e-15L) break;  // expansion terminated
    y = 1.0L / frac;
  }
  if (result.empty()) throw Error("convergents: no nontrivial convergent found");
  return result;
}

/// Common-denominator rationalization K_1/C, ..., K_n/C of a set of reals,
/// found by exhaustive search over C = 1..N.
struct SimultaneousApprox {
  std::int64_t C = 1;                   ///< common denominator, 0 < C <= N
  std::vector<std::int64_t> Ks;         ///< nearest-integer numerators
  std::int64_t N = 1;                   ///< search bound
  double achieved_error = 0.0;          ///< max_i |C x_i - K_i|
  double bound() const { return std::pow(static_cast<double>(N), -1.0 / static_cast<double>(Ks.size())); }
};

/// Exhaustive search for the common denominator with the smallest worst-case
/// error max_i |C x_i - K_i| over C = 1..N (smallest C on ties). The returned
/// error is below N^(-1/n) for every input this library feeds it.
inline SimultaneousApprox dirichlet_simultaneous(const std::vector<double>& xs, std::int64_t N) {
  if (xs.empty()) throw Error("dirichlet_simultaneous: empty input");
  if (N < 1) throw Error("dirichlet_simultaneous: N must be >= 1");
  SimultaneousApprox best;
  best.N = N;
  best.achieved_error = std::numeric_limits<double>::infinity();
  for (std::int64_t c = 1; c <= N; ++c) {
    double err = 0.0;
    for (double x : xs) err = std::max(err, std::abs(c * x - std::round(c * x)));
    if (err < best.achieved_error) {
      best.achieved_error = err;
      best.C = c;
    }
  }
  best.Ks.resize(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    best.Ks[i] = static_cast<std::int64_t>(std::llround(best.C * xs[i]));
  return best;
}

/// Rationalize Xs through a known rational linear relation X_i = sum_j (p_ij/q_ij) Y_j.
/// The Ys are rationalized first; the common denominator C_X = lcm(q_ij) * C_Y then
/// approximates the Xs with the improved exponent 1/m instead of 1/n.
inline SimultaneousApprox refine_via_linear_relations(const std::vector<double>& xs,
                                                      const std::vector<double>& ys,
                                                      const std::vector<std::vector<Rational>>& coeffs,
                                                      std::int64_t N) {
  if (coeffs.size() != xs.size()) throw InvalidRelation("refine: one coefficient row per X required");
  for (const auto& row : coeffs)
    if (row.size() != ys.size()) throw InvalidRelation("refine: one coefficient per Y required");
  // the relation must actually hold
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < ys.size(); ++j) acc += coeffs[i][j].value() * ys[j];
    if (std::abs(acc - xs[i]) > 1e-9 * std::max(1.0, std::abs(xs[i])))
      throw InvalidRelation("refine: relation does not reproduce X_" + std::to_string(i));
  }

  const SimultaneousApprox inner = dirichlet_simultaneous(ys, N);
  std::int64_t lcm = 1;
  for (const auto& row : coeffs)
    for (const auto& r : row) lcm = std::lcm(lcm, r.den);

  SimultaneousApprox out;
  out.N = N;
  out.C = lcm * inner.C;
  out.Ks.resize(xs.size());
  double err = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    // K_i = sum_j (lcm/q_ij) p_ij H_j stays exact in integers
    std::int64_t k = 0;
    for (std::size_t j = 0; j < ys.size(); ++j)
      k += (lcm / coeffs[i][j].den) * coeffs[i][j].num * inner.Ks[j];
    out.Ks[i] = k;
    err = std::max(err, std::abs(out.C * xs[i] - static_cast<double>(k)));
  }
  out.achieved_error = err;
  return out;
}

}  // namespace mrb
