// Copyright (c) 2026 The billiards developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "mrb/errors.hpp"
#include "mrb/geometry.hpp"
#include "mrb/rational.hpp"

namespace mrb {

/// Rationalization of one coordinate axis: every cut becomes an exact rational
/// multiple of the first one, x_{n,i} = (p_i/q_i) x_1, sharing the scaled
/// integer ladder C_i = C_1 p_i / q_i with C_1 = lcm of the q_i.
struct AxisApprox {
  std::vector<Rational> ratios;         ///< ratio of cut i to cut 1, exact
  std::vector<std::int64_t> C;          ///< integer ladder, C[i] = C1 * ratios[i]
  std::int64_t C1 = 1;
  std::vector<double> achieved_error;   ///< |x_i - x_{n,i}| per cut (0 for cut 1)
  std::vector<double> certified_bound;  ///< x_1 / (C1 * n^(1/m)) per cut
};

/// Doubly rational approximant of a staircase billiard together with the
/// certified deformation bounds.
struct DrmrbApprox {
  MultiRectBilliard approximant;
  AxisApprox x_axis, y_axis;
  std::int64_t quality = 1;       ///< the search bound n
  double max_displacement = 0.0;  ///< sup-norm of the piecewise-affine deformation
};

namespace detail {

inline AxisApprox rationalize_axis(const std::vector<double>& cuts,
                                   const std::vector<std::optional<Rational>>& tags,
                                   std::int64_t n) {
  AxisApprox ax;
  const std::size_t P = cuts.size();
  ax.ratios.resize(P);
  ax.ratios[0] = Rational{1, 1};

  bool all_tagged = true;
  for (std::size_t i = 1; i < P; ++i) all_tagged = all_tagged && tags[i].has_value();

  if (all_tagged) {
    // already doubly rational on this axis: the approximant is the billiard itself
    for (std::size_t i = 1; i < P; ++i) ax.ratios[i] = *tags[i];
  } else if (P == 1) {
    // a single cut is rational by itself
  } else {
    std::vector<double> ratios(P - 1);
    for (std::size_t i = 1; i < P; ++i) ratios[i - 1] = cuts[i] / cuts[0];
    const SimultaneousApprox sim = dirichlet_simultaneous(ratios, n);
    for (std::size_t i = 1; i < P; ++i) ax.ratios[i] = Rational::of(sim.Ks[i - 1], sim.C);
  }

  std::int64_t lcm = 1;
  for (const auto& r : ax.ratios) lcm = std::lcm(lcm, r.den);
  ax.C1 = lcm;
  ax.C.resize(P);
  for (std::size_t i = 0; i < P; ++i) ax.C[i] = lcm / ax.ratios[i].den * ax.ratios[i].num;

  const double m = static_cast<double>(std::max<std::size_t>(P - 1, 1));
  const double bound = cuts[0] / (static_cast<double>(ax.C1) * std::pow(static_cast<double>(n), 1.0 / m));
  ax.achieved_error.resize(P);
  ax.certified_bound.resize(P);
  for (std::size_t i = 0; i < P; ++i) {
    ax.achieved_error[i] = std::abs(cuts[i] - ax.ratios[i].value() * cuts[0]);
    ax.certified_bound[i] = i == 0 || all_tagged ? 0.0 : bound;
  }
  return ax;
}

}  // namespace detail

/// Construct the doubly rational billiard approximating `billiard` with
/// quality index n: each axis's cut ratios are rationalized over a common
/// denominator at most n. An already doubly rational billiard returns itself
/// with zero bounds.
inline DrmrbApprox build_approximant(const MultiRectBilliard& billiard, std::int64_t n) {
  if (n < 1) throw Error("build_approximant: quality index must be >= 1");

  std::vector<std::optional<Rational>> xt(billiard.cols()), yt(billiard.rows());
  for (int i = 0; i < billiard.cols(); ++i) xt[i] = billiard.x_ratio(i);
  for (int i = 0; i < billiard.rows(); ++i) yt[i] = billiard.y_ratio(i);

  DrmrbApprox out{billiard, detail::rationalize_axis(billiard.xs(), xt, n),
                  detail::rationalize_axis(billiard.ys(), yt, n), n, 0.0};

  std::vector<double> nx(billiard.cols()), ny(billiard.rows());
  std::vector<std::optional<Rational>> nxt(billiard.cols()), nyt(billiard.rows());
  for (int i = 0; i < billiard.cols(); ++i) {
    nx[i] = out.x_axis.ratios[i].value() * billiard.xs()[0];
    nxt[i] = out.x_axis.ratios[i];
    out.max_displacement = std::max(out.max_displacement, out.x_axis.achieved_error[i]);
  }
  for (int i = 0; i < billiard.rows(); ++i) {
    ny[i] = out.y_axis.ratios[i].value() * billiard.ys()[0];
    nyt[i] = out.y_axis.ratios[i];
    out.max_displacement = std::max(out.max_displacement, out.y_axis.achieved_error[i]);
  }
  for (int i = 1; i < billiard.cols(); ++i)
    if (!(nx[i] > nx[i - 1]))
      throw InvalidGeometry("approximant degenerate: quality index too small to keep cuts ordered");
  for (int i = 1; i < billiard.rows(); ++i)
    if (!(ny[i] > ny[i - 1]))
      throw InvalidGeometry("approximant degenerate: quality index too small to keep cuts ordered");

  out.approximant = MultiRectBilliard(nx, ny, billiard.cells(),
                                      {billiard.bc(Side::bottom), billiard.bc(Side::right),
                                       billiard.bc(Side::top), billiard.bc(Side::left)},
                                      !billiard.quantizable(), nxt, nyt);
  if (billiard.lshape()) {
    out.approximant.set_lshape(LshapeParams{nx[0], nx[1], ny[0], ny[1]});
  }
  return out;
}

namespace detail {

/// Piecewise-linear map sending the interval ladder `from` onto `to`
/// (both starting implicitly at 0).
inline double piecewise_affine(double t, const std::vector<double>& from,
                               const std::vector<double>& to) {
  if (t < 0.0 || t > from.back()) throw OutOfDomain("deformation: coordinate outside billiard");
  double lo = 0.0, lo2 = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (t <= from[i]) {
      const double w = (t - lo) / (from[i] - lo);
      return lo2 + w * (to[i] - lo2);
    }
    lo = from[i];
    lo2 = to[i];
  }
  return to.back();
}

}  // namespace detail

/// Image of a point of the source billiard under the cellwise-affine
/// deformation onto the approximant. Boundaries map to boundaries and vertices
/// to the corresponding vertices.
inline Point deformation_map(Point p, const MultiRectBilliard& source, const DrmrbApprox& approx) {
  if (!source.contains(p.x, p.y)) throw OutOfDomain("deformation_map: point outside billiard");
  return Point{detail::piecewise_affine(p.x, source.xs(), approx.approximant.xs()),
               detail::piecewise_affine(p.y, source.ys(), approx.approximant.ys())};
}

/// Inverse of deformation_map (approximant back onto the source).
inline Point deformation_map_inverse(Point p, const MultiRectBilliard& source,
                                     const DrmrbApprox& approx) {
  if (!approx.approximant.contains(p.x, p.y))
    throw OutOfDomain("deformation_map_inverse: point outside approximant");
  return Point{detail::piecewise_affine(p.x, approx.approximant.xs(), source.xs()),
               detail::piecewise_affine(p.y, approx.approximant.ys(), source.ys())};
}

}  // namespace mrb
