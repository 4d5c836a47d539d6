// Copyright (c) 2026 The billiards developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mrb/errors.hpp"
#include "mrb/geometry.hpp"

namespace mrb {

/// Value of a sine-sine overlap integral. `resonant` marks the case where the
/// two frequencies coincide and the limiting value was used.
template <typename Scalar>
struct Overlap {
  Scalar value{};
  bool resonant = false;
};

/// Integral over [lo, hi] of
///   sin(other_idx * pi * (t - other_anchor) / other_period) *
///   sin(own_idx   * pi * (t - lo)           / own_period).
/// The own basis is anchored at the interval start; in every assembled system
/// own_period equals the interval length, but the closed form below is valid
/// for any positive lengths. Stable arbitrarily close to frequency resonance.
template <typename Scalar>
Overlap<Scalar> sine_overlap(int other_idx, int own_idx, Scalar other_period, Scalar own_period,
                             Scalar lo, Scalar hi, Scalar other_anchor) {
  if (!(hi > lo)) throw DegenerateInterval("sine_overlap: empty interval");
  if (other_idx < 1 || own_idx < 1) throw DegenerateInterval("sine_overlap: mode indices start at 1");
  if (!(other_period > Scalar(0)) || !(own_period > Scalar(0)))
    throw DegenerateInterval("sine_overlap: half-periods must be positive");

  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar A = other_idx * pi / other_period;
  const Scalar B = own_idx * pi / own_period;
  const Scalar L = hi - lo;
  const Scalar o = lo - other_anchor;

  Overlap<Scalar> out;
  const Scalar diff = A - B;
  if (std::abs(diff) < Scalar(1e-12) * std::max(A, B)) {
    out.resonant = true;
    // limit value; the trailing term vanishes identically when the own basis
    // closes an integer number of half-waves on the interval
    out.value = (L / 2) * std::cos(A * o);
    if (own_period != L) out.value -= std::cos(A * (L + o)) * std::sin(A * L) / (2 * A);
    return out;
  }
  // product-to-sum; each term is smooth in (A - B), no cancellation anywhere
  const Scalar half = diff * L / 2;
  const Scalar t1 = std::cos(A * o + half) * (std::sin(half) / diff);
  const Scalar t2 = std::cos(A * o + (A + B) * L / 2) * std::sin((A + B) * L / 2) / (A + B);
  out.value = t1 - t2;
  return out;
}

/// Integral over [lo, hi] of
///   cos(other_idx * pi * (t - other_anchor) / other_period) *
///   sin(own_idx   * pi * (t - lo)           / own_period),
/// the overlap needed when matching first derivatives across a crossing.
template <typename Scalar>
Scalar cos_sine_overlap(int other_idx, int own_idx, Scalar other_period, Scalar own_period,
                        Scalar lo, Scalar hi, Scalar other_anchor) {
  if (!(hi > lo)) throw DegenerateInterval("cos_sine_overlap: empty interval");
  if (other_idx < 0 || own_idx < 1) throw DegenerateInterval("cos_sine_overlap: bad mode indices");
  if (!(other_period > Scalar(0)) || !(own_period > Scalar(0)))
    throw DegenerateInterval("cos_sine_overlap: half-periods must be positive");

  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar A = other_idx * pi / other_period;
  const Scalar B = own_idx * pi / own_period;
  const Scalar L = hi - lo;
  const Scalar o = lo - other_anchor;

  // cos(A(t+o)) sin(Bt) = [sin((A+B)t + Ao) - sin((A-B)t + Ao)] / 2
  const Scalar sum = A + B;
  const Scalar t1 = std::sin(A * o + sum * L / 2) * std::sin(sum * L / 2) / sum;
  const Scalar diff = A - B;
  Scalar t2;
  if (std::abs(diff) < Scalar(1e-12) * std::max(A, B)) {
    t2 = (L / 2) * std::sin(A * o);
  } else {
    t2 = std::sin(A * o + diff * L / 2) * std::sin(diff * L / 2) / diff;
  }
  return t1 - t2;
}

/// Transverse overlap between a vertical channel's y-basis (index r, period
/// delta_v, anchor y_q) and a horizontal channel's y-basis (index n, period
/// delta_h) over the crossing interval [y_lo, y_hi].
inline Overlap<double> alpha(int r, int n, double delta_v, double delta_h, double y_lo, double y_hi,
                             double y_q) {
  return sine_overlap<double>(r, n, delta_v, delta_h, y_lo, y_hi, y_q);
}

/// Longitudinal overlap between a vertical channel's x-basis (index m, period
/// lambda_v, anchored at x_lo) and a horizontal channel's x-basis (index r,
/// period lambda_h, anchor x_p) over [x_lo, x_hi].
inline Overlap<double> beta(int m, int r, double lambda_v, double lambda_h, double x_lo, double x_hi,
                            double x_p) {
  return sine_overlap<double>(r, m, lambda_h, lambda_v, x_lo, x_hi, x_p);
}

/// Frequency rule of a one-dimensional channel basis. Dirichlet on both ends
/// gives integer multiples, Dirichlet near / Neumann far the half-integer
/// shifted sequence.
struct BasisSpec {
  Bc bc_near = Bc::dirichlet;
  Bc bc_far = Bc::dirichlet;

  double frequency(int m, double length) const {
    if (m < 1) throw Error("BasisSpec: mode indices start at 1");
    if (bc_near != Bc::dirichlet) throw Error("BasisSpec: near side must be Dirichlet");
    const double k = bc_far == Bc::dirichlet ? static_cast<double>(m) : m + 0.5;
    return k * M_PI / length;
  }
  double eval(int m, double length, double t) const { return std::sin(frequency(m, length) * t); }
};

/// Sine-projected boundary values of a channel rectangle. top/bottom are
/// projections of Psi along the horizontal sides onto the channel's x-basis
/// (length M), left/right along the vertical sides onto the y-basis (length
/// N). Sides lying on the billiard boundary have identically zero traces and
/// may be left empty.
struct ChannelTraces {
  Eigen::VectorXd top, bottom, left, right;
};

struct DerivativeTables {
  Eigen::MatrixXd x, y, xy, xx, yy;
};

/// Coefficient tables of the partial derivatives of a sine-sine series on the
/// channel rectangle. Differentiation does not commute with the antisymmetric
/// periodic extension; the boundary traces supply the correction terms.
/// The mixed table needs first-derivative traces along one pair of sides and
/// is therefore only formed when that pair lies on the billiard boundary
/// (trace identically zero) — the configuration every channel of a Dirichlet
/// staircase is in.
inline DerivativeTables derivative_coeffs(const Eigen::MatrixXd& X, const ChannelTraces& traces,
                                          const Rect& channel) {
  const int M = static_cast<int>(X.rows());
  const int N = static_cast<int>(X.cols());
  const double lam = channel.width();
  const double del = channel.height();

  auto vec_or_zero = [](const Eigen::VectorXd& v, int size, const char* side) {
    if (v.size() == 0) return Eigen::VectorXd(Eigen::VectorXd::Zero(size));
    if (v.size() != size)
      throw MissingTrace(std::string("derivative_coeffs: trace on ") + side +
                         " has wrong length");
    return v;
  };
  const Eigen::VectorXd T = vec_or_zero(traces.top, M, "top");
  const Eigen::VectorXd Bm = vec_or_zero(traces.bottom, M, "bottom");
  const Eigen::VectorXd R = vec_or_zero(traces.right, N, "right");
  const Eigen::VectorXd Lf = vec_or_zero(traces.left, N, "left");

  DerivativeTables d;
  d.x.resize(M, N);
  d.y.resize(M, N);
  d.xy.resize(M, N);
  d.xx.resize(M, N);
  d.yy.resize(M, N);

  for (int m = 1; m <= M; ++m) {
    const double sm = (m % 2 == 0) ? 1.0 : -1.0;  // (-1)^m
    for (int n = 1; n <= N; ++n) {
      const double sn = (n % 2 == 0) ? 1.0 : -1.0;
      const double xl = sm * R(n - 1) - Lf(n - 1);   // x-direction boundary jump
      const double yl = sn * T(m - 1) - Bm(m - 1);   // y-direction boundary jump
      const double fx = m * M_PI / lam;
      const double fy = n * M_PI / del;
      d.x(m - 1, n - 1) = 2.0 / lam * xl + fx * X(m - 1, n - 1);
      d.y(m - 1, n - 1) = 2.0 / del * yl + fy * X(m - 1, n - 1);
      d.xx(m - 1, n - 1) = -2.0 * fx / lam * xl - fx * fx * X(m - 1, n - 1);
      d.yy(m - 1, n - 1) = -2.0 * fy / del * yl - fy * fy * X(m - 1, n - 1);
    }
  }

  const bool lr_zero = traces.left.size() == 0 && traces.right.size() == 0;
  const bool tb_zero = traces.top.size() == 0 && traces.bottom.size() == 0;
  if (lr_zero) {
    for (int m = 1; m <= M; ++m) d.xy.row(m - 1) = (m * M_PI / lam) * d.y.row(m - 1);
  } else if (tb_zero) {
    for (int n = 1; n <= N; ++n) d.xy.col(n - 1) = (n * M_PI / del) * d.x.col(n - 1);
  } else {
    throw MissingTrace(
        "derivative_coeffs: mixed derivative needs one pair of opposite sides on the boundary");
  }
  return d;
}

/// Partial sum of the channel series at a point of the channel rectangle.
template <typename Scalar = double>
Scalar eval_series(const Eigen::MatrixXd& X, const Rect& channel, double x, double y) {
  if (!channel.contains(x, y)) throw OutOfDomain("eval_series: point outside channel rectangle");
  const int M = static_cast<int>(X.rows());
  const int N = static_cast<int>(X.cols());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sx(M), sy(N);
  const Scalar u = Scalar(x - channel.x0) / Scalar(channel.width());
  const Scalar v = Scalar(y - channel.y0) / Scalar(channel.height());
  for (int m = 1; m <= M; ++m) sx(m - 1) = std::sin(m * std::numbers::pi_v<Scalar> * u);
  for (int n = 1; n <= N; ++n) sy(n - 1) = std::sin(n * std::numbers::pi_v<Scalar> * v);
  return sx.dot(X.cast<Scalar>() * sy);
}

// ---------------------------------------------------------------------------
// Matching layout: the kappa-independent data shared by the trace formulas and
// the assembled linear system — independent channels, active crossings, their
// overlap tables and the sine factors of the boundary traces.
// ---------------------------------------------------------------------------

struct CrossingTables {
  int h = -1;  ///< index into MatchingLayout::channels
  int v = -1;
  Rect cell;
  /// beta(m, r): V x-mode m against H x-mode r, both 1-based; M x M.
  Eigen::MatrixXd beta;
  /// alpha(r, n): V y-mode r against H y-mode n; N x N.
  Eigen::MatrixXd alpha;

  // Which sides of the two channels this crossing feeds a trace into, with the
  // corresponding transverse sine factors (zero vectors when it does not).
  bool v_at_h_top = false, v_at_h_bottom = false;
  Eigen::VectorXd sin_v_at_h_top, sin_v_at_h_bottom;  // length N, index = V y-mode
  bool h_at_v_right = false, h_at_v_left = false;
  Eigen::VectorXd sin_h_at_v_right, sin_h_at_v_left;  // length M, index = H x-mode

  // First-derivative matching across the crossing. The differentiated series
  // pick up cosine factors in one direction; these tables carry their
  // projections onto the sine test functions.
  int m_test = 0, n_test = 0;  ///< matching test ranges (equal to M, N)
  Eigen::MatrixXd cos_x;  ///< cos_x(m, r): H x-cosine r against V x-sine m; M x M
  Eigen::MatrixXd dxx;    ///< dxx(m, m'): V x-cosine m' against V x-sine m; M x M
  Eigen::MatrixXd cos_y;  ///< cos_y(n, s): V y-cosine s against H y-sine n; N x N
  Eigen::MatrixXd dyy;    ///< dyy(n, s): H y-cosine s against H y-sine n; N x N
};

struct MatchingLayout {
  MultiRectBilliard billiard;
  std::vector<PocChannel> channels;      ///< full decomposition
  std::vector<int> h_channels;           ///< independent horizontal, indices into channels
  std::vector<int> v_channels;           ///< independent vertical
  std::vector<CrossingTables> crossings; ///< active crossings only
  int M = 0, N = 0;

  const PocChannel& channel(int i) const { return channels[i]; }
  int h_block(int hi) const { return hi * M; }                                   ///< column offset
  int v_block(int vi) const { return static_cast<int>(h_channels.size()) * M + vi * N; }
  int cols() const {
    return static_cast<int>(h_channels.size()) * M + static_cast<int>(v_channels.size()) * N;
  }
};

inline MatchingLayout build_matching_layout(const MultiRectBilliard& b, int M, int N) {
  if (M < 1 || N < 1) throw Error("matching layout needs positive truncation orders");
  if (!b.quantizable()) throw InvalidGeometry("billiard with holes cannot be quantized");

  MatchingLayout lay{b, poc_decomposition(b), {}, {}, {}, M, N};
  for (int i = 0; i < static_cast<int>(lay.channels.size()); ++i) {
    const auto& ch = lay.channels[i];
    if (!ch.independent) continue;
    (ch.orientation == Orientation::horizontal ? lay.h_channels : lay.v_channels).push_back(i);
  }

  for (int hi : lay.h_channels) {
    const PocChannel& H = lay.channels[hi];
    for (int vi : lay.v_channels) {
      const PocChannel& V = lay.channels[vi];
      const Rect cell = H.extent.intersect(V.extent);
      if (cell.empty()) continue;

      CrossingTables ct;
      ct.h = hi;
      ct.v = vi;
      ct.cell = cell;
      ct.m_test = M;
      ct.n_test = N;
      ct.beta.resize(ct.m_test, M);
      for (int m = 1; m <= ct.m_test; ++m)
        for (int r = 1; r <= M; ++r)
          ct.beta(m - 1, r - 1) =
              beta(m, r, V.lambda(), H.lambda(), cell.x0, cell.x1, H.offset_x()).value;
      ct.alpha.resize(N, ct.n_test);
      for (int r = 1; r <= N; ++r)
        for (int n = 1; n <= ct.n_test; ++n)
          ct.alpha(r - 1, n - 1) =
              alpha(r, n, V.delta(), H.delta(), cell.y0, cell.y1, V.offset_y()).value;

      ct.cos_x.resize(M, M);
      ct.dxx.resize(M, M);
      for (int m = 1; m <= M; ++m)
        for (int r = 1; r <= M; ++r) {
          ct.cos_x(m - 1, r - 1) = cos_sine_overlap<double>(r, m, H.lambda(), V.lambda(), cell.x0,
                                                            cell.x1, H.offset_x());
          ct.dxx(m - 1, r - 1) =
              cos_sine_overlap<double>(r, m, V.lambda(), V.lambda(), cell.x0, cell.x1, cell.x0);
        }
      ct.cos_y.resize(N, N);
      ct.dyy.resize(N, N);
      for (int n = 1; n <= N; ++n)
        for (int s = 1; s <= N; ++s) {
          ct.cos_y(n - 1, s - 1) = cos_sine_overlap<double>(s, n, V.delta(), H.delta(), cell.y0,
                                                            cell.y1, V.offset_y());
          ct.dyy(n - 1, s - 1) =
              cos_sine_overlap<double>(s, n, H.delta(), H.delta(), cell.y0, cell.y1, cell.y0);
        }

      auto v_sines = [&](double y_edge) {
        Eigen::VectorXd s(N);
        for (int n = 1; n <= N; ++n) s(n - 1) = std::sin(n * M_PI * (y_edge - V.offset_y()) / V.delta());
        return s;
      };
      auto h_sines = [&](double x_edge) {
        Eigen::VectorXd s(M);
        for (int m = 1; m <= M; ++m) s(m - 1) = std::sin(m * M_PI * (x_edge - H.offset_x()) / H.lambda());
        return s;
      };
      // a channel feeds the trace on a side of the other iff its open extent
      // crosses that side's line
      ct.v_at_h_top = V.extent.y0 < H.extent.y1 && H.extent.y1 < V.extent.y1;
      ct.v_at_h_bottom = V.extent.y0 < H.extent.y0 && H.extent.y0 < V.extent.y1;
      if (ct.v_at_h_top) ct.sin_v_at_h_top = v_sines(H.extent.y1);
      if (ct.v_at_h_bottom) ct.sin_v_at_h_bottom = v_sines(H.extent.y0);
      ct.h_at_v_right = H.extent.x0 < V.extent.x1 && V.extent.x1 < H.extent.x1;
      ct.h_at_v_left = H.extent.x0 < V.extent.x0 && V.extent.x0 < H.extent.x1;
      if (ct.h_at_v_right) ct.sin_h_at_v_right = h_sines(V.extent.x1);
      if (ct.h_at_v_left) ct.sin_h_at_v_left = h_sines(V.extent.x0);

      lay.crossings.push_back(std::move(ct));
    }
  }
  return lay;
}

/// Sine-projected boundary traces of every independent channel, computed by
/// substituting the perpendicular series into the trace integrals. `tables`
/// holds one full coefficient table (M x N, x-mode by y-mode) per entry of
/// h_channels followed by v_channels.
struct BoundaryTraces {
  std::vector<Eigen::VectorXd> h_top, h_bottom;  ///< per independent H channel, length M
  std::vector<Eigen::VectorXd> v_right, v_left;  ///< per independent V channel, length N
};

inline BoundaryTraces boundary_traces(const MatchingLayout& lay,
                                      const std::vector<Eigen::MatrixXd>& tables) {
  const int nh = static_cast<int>(lay.h_channels.size());
  const int nv = static_cast<int>(lay.v_channels.size());
  if (static_cast<int>(tables.size()) != nh + nv)
    throw Error("boundary_traces: need one table per independent channel");

  BoundaryTraces tr;
  tr.h_top.assign(nh, Eigen::VectorXd::Zero(lay.M));
  tr.h_bottom.assign(nh, Eigen::VectorXd::Zero(lay.M));
  tr.v_right.assign(nv, Eigen::VectorXd::Zero(lay.N));
  tr.v_left.assign(nv, Eigen::VectorXd::Zero(lay.N));

  auto h_pos = [&](int ch) {
    return static_cast<int>(std::find(lay.h_channels.begin(), lay.h_channels.end(), ch) -
                            lay.h_channels.begin());
  };
  auto v_pos = [&](int ch) {
    return static_cast<int>(std::find(lay.v_channels.begin(), lay.v_channels.end(), ch) -
                            lay.v_channels.begin());
  };

  for (const auto& ct : lay.crossings) {
    const PocChannel& H = lay.channel(ct.h);
    const PocChannel& V = lay.channel(ct.v);
    const int hp = h_pos(ct.h);
    const int vp = v_pos(ct.v);
    const Eigen::MatrixXd& vtab = tables[nh + vp];  // V^(j)_{r,n}: x-mode r, y-mode n
    const Eigen::MatrixXd& htab = tables[hp];

    // horizontal-side traces of H: (2/lambda_H) sum_{r,n} sin_n beta(r, m) V_{r n}
    const Eigen::MatrixXd beta_sq = ct.beta.topRows(lay.M);
    if (ct.v_at_h_top)
      tr.h_top[hp] += (2.0 / H.lambda()) * (beta_sq.transpose() * (vtab * ct.sin_v_at_h_top));
    if (ct.v_at_h_bottom)
      tr.h_bottom[hp] += (2.0 / H.lambda()) * (beta_sq.transpose() * (vtab * ct.sin_v_at_h_bottom));

    // vertical-side traces of V: (2/delta_V) sum_{m,s} sin_m alpha(n, s) H_{m s}
    const Eigen::MatrixXd alpha_sq = ct.alpha.leftCols(lay.N);
    if (ct.h_at_v_right)
      tr.v_right[vp] += (2.0 / V.delta()) * (alpha_sq * (htab.transpose() * ct.sin_h_at_v_right));
    if (ct.h_at_v_left)
      tr.v_left[vp] += (2.0 / V.delta()) * (alpha_sq * (htab.transpose() * ct.sin_h_at_v_left));
  }
  return tr;
}

}  // namespace mrb
