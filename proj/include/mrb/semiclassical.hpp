// Copyright (c) 2026 The billiards developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mrb/approximant.hpp"
#include "mrb/errors.hpp"
#include "mrb/fourier.hpp"
#include "mrb/geometry.hpp"
#include "mrb/quantization.hpp"

namespace mrb {

/// One sine level of a periodic-orbit channel.
struct PocLevel {
  int channel = 0;  ///< PocChannel::index
  int m = 0, n = 0;
  double kappa2 = 0.0;
};

/// All channel levels up to kappa2_max, sorted ascending.
inline std::vector<PocLevel> poc_spectrum(const PocChannel& channel, double kappa2_max) {
  std::vector<PocLevel> out;
  for (int m = 1; channel.level(m, 1) <= kappa2_max; ++m)
    for (int n = 1; channel.level(m, n) <= kappa2_max; ++n)
      out.push_back(PocLevel{channel.index, m, n, channel.level(m, n)});
  std::sort(out.begin(), out.end(), [](const PocLevel& a, const PocLevel& b) {
    return a.kappa2 < b.kappa2;
  });
  return out;
}

/// Exact product-sine eigenmode of a doubly rational billiard. Globally the
/// mode is sin(px x) sin(py y) restricted to the domain; per channel it is a
/// single sine-basis mode with a parity prefactor that glues adjacent pieces
/// continuously. It vanishes on the boundary and on every singular diagonal.
struct SemiclassicalMode {
  struct Piece {
    int channel = 0;  ///< PocChannel::index within its orientation
    Rect rect;
    double sign = 1.0;
    int mx = 0, ny = 0;  ///< sine indices inside the piece

    double eval(double x, double y) const {
      return sign * std::sin(mx * M_PI * (x - rect.x0) / rect.width()) *
             std::sin(ny * M_PI * (y - rect.y0) / rect.height());
    }
    double level() const {
      const double fx = mx * M_PI / rect.width();
      const double fy = ny * M_PI / rect.height();
      return fx * fx + fy * fy;
    }
  };

  int k = 0, l = 0;
  double kappa_sc2 = 0.0;
  double px = 0.0, py = 0.0;  ///< global momenta
  std::vector<Piece> h_pieces, v_pieces;

  const Piece* piece_at(const std::vector<Piece>& pieces, double x, double y) const {
    for (const auto& p : pieces)
      if (p.rect.contains(x, y)) return &p;
    return nullptr;
  }

  /// Value through the horizontal-channel representation (zero outside).
  double eval(double x, double y) const {
    const Piece* p = piece_at(h_pieces, x, y);
    return p ? p->eval(x, y) : 0.0;
  }
  /// Value through the vertical-channel representation.
  double eval_vertical(double x, double y) const {
    const Piece* p = piece_at(v_pieces, x, y);
    return p ? p->eval(x, y) : 0.0;
  }
  /// The same mode as one global product of sines.
  double eval_global(double x, double y) const { return std::sin(px * x) * std::sin(py * y); }
  /// Negative Laplacian through the piecewise representation.
  double neg_laplacian(double x, double y) const {
    const Piece* p = piece_at(h_pieces, x, y);
    return p ? p->level() * p->eval(x, y) : 0.0;
  }
};

/// Build the (k, l) product-sine eigenmode of a doubly rational approximant.
inline SemiclassicalMode semiclassical_mode(const DrmrbApprox& approx, int k, int l) {
  if (k < 1 || l < 1) throw Error("semiclassical_mode: indices start at 1");
  const MultiRectBilliard& b = approx.approximant;
  if (!b.is_doubly_rational())
    throw RequiresDoublyRational("semiclassical_mode: approximant lacks exact rational ratios");

  SemiclassicalMode mode;
  mode.k = k;
  mode.l = l;
  mode.px = M_PI * k * static_cast<double>(approx.x_axis.C1) / b.xs()[0];
  mode.py = M_PI * l * static_cast<double>(approx.y_axis.C1) / b.ys()[0];
  mode.kappa_sc2 = mode.px * mode.px + mode.py * mode.py;

  // integer ladder at column/row boundaries; index 0 is the origin
  auto ladder = [](const std::vector<std::int64_t>& c, int boundary) {
    return boundary == 0 ? std::int64_t(0) : c[boundary - 1];
  };
  for (const auto& ch : poc_decomposition(b)) {
    SemiclassicalMode::Piece p;
    p.channel = ch.index;
    p.rect = ch.extent;
    std::int64_t cx0, cx1, cy0, cy1;
    if (ch.orientation == Orientation::horizontal) {
      cx0 = ladder(approx.x_axis.C, ch.run_lo);
      cx1 = ladder(approx.x_axis.C, ch.run_hi + 1);
      cy0 = ladder(approx.y_axis.C, ch.strip);
      cy1 = ladder(approx.y_axis.C, ch.strip + 1);
    } else {
      cx0 = ladder(approx.x_axis.C, ch.strip);
      cx1 = ladder(approx.x_axis.C, ch.strip + 1);
      cy0 = ladder(approx.y_axis.C, ch.run_lo);
      cy1 = ladder(approx.y_axis.C, ch.run_hi + 1);
    }
    p.mx = static_cast<int>(k * (cx1 - cx0));
    p.ny = static_cast<int>(l * (cy1 - cy0));
    p.sign = ((k * cx0 + l * cy0) % 2 == 0) ? 1.0 : -1.0;
    (ch.orientation == Orientation::horizontal ? mode.h_pieces : mode.v_pieces).push_back(p);
  }
  return mode;
}

/// Residuals left over when a single channel mode (m0, n0) is forced to be a
/// stationary state of the two-arm billiard on its own. f(m) are the trace
/// conditions, g(m, n) the matching conditions on the crossing rectangle; a
/// nonzero entry certifies that the lone excitation fails the corresponding
/// equation.
struct PurePocResiduals {
  Eigen::VectorXd f;
  Eigen::MatrixXd g;
  double kappa2 = 0.0;  ///< the channel level of the forced mode
  double sin_h = 0.0;   ///< sin(m0 pi a / b), exactly zero for tagged rational ratios
};

inline PurePocResiduals pure_poc_residuals(const MultiRectBilliard& billiard, int m0, int n0, int M,
                                           int N) {
  if (!billiard.lshape()) throw InvalidGeometry("pure_poc_residuals: two-arm billiard required");
  const auto [a, b, c, d] = *billiard.lshape();
  if (m0 < 1 || n0 < 1 || m0 > M || n0 > N)
    throw Error("pure_poc_residuals: mode indices must lie within the truncation");

  PurePocResiduals out;
  const double ka2 = std::pow(m0 * M_PI / b, 2) + std::pow(n0 * M_PI / c, 2);
  out.kappa2 = ka2;

  // exact sine zeros from the rational ratio tags
  const auto& rb = billiard.x_ratio(1);  // b/a
  const auto& rd = billiard.y_ratio(1);  // d/c
  auto sin_exact = [](int idx, double num_ratio, const std::optional<Rational>& tag) {
    // sin(idx * pi * num_ratio) with num_ratio = a/b known as q/p of tag p/q
    if (tag && (static_cast<std::int64_t>(idx) * tag->den) % tag->num == 0) return 0.0;
    return std::sin(idx * M_PI * num_ratio);
  };
  // a/b = tag_den / tag_num for the tagged ratio b/a = p/q
  out.sin_h = sin_exact(m0, a / b, rb);

  auto lev_ad = [&](int m, int n) {
    return std::pow(m * M_PI / a, 2) + std::pow(n * M_PI / d, 2);
  };
  auto guard = [&](double den, bool numerator_zero) {
    if (std::abs(den) < 1e-12 * ka2 && !numerator_zero)
      throw ResonantDenominator("pure_poc_residuals: channel levels collide", 0, m0, n0);
  };

  // trace residuals
  out.f = Eigen::VectorXd::Zero(M);
  for (int m = 1; m <= M; ++m) {
    double acc = 0.0;
    for (int kk = 1; kk <= M; ++kk) {
      const double bet = beta(kk, m, a, b, 0.0, a, 0.0).value;
      for (int ll = 1; ll <= N; ++ll) {
        const double s = sin_exact(ll, c / d, rd);
        if (s == 0.0) continue;
        const double den = ka2 - lev_ad(kk, ll);
        guard(den, false);
        const double al = alpha(ll, n0, d, c, 0.0, c, 0.0).value;
        acc += ((kk % 2 == 0) ? 1.0 : -1.0) * kk * bet * al * s / den;
      }
    }
    out.f(m - 1) = acc;
  }

  // matching residuals
  out.g = Eigen::MatrixXd::Zero(M, N);
  for (int m = 1; m <= M; ++m) {
    double sum_part = 0.0;
    const double bet_mm0 = beta(m, m0, a, b, 0.0, a, 0.0).value;
    for (int n = 1; n <= N; ++n) {
      if (out.sin_h != 0.0) {
        double acc = 0.0;
        for (int kk = 1; kk <= N; ++kk) {
          const double den = ka2 - lev_ad(m, kk);
          guard(den, false);
          acc += alpha(kk, n0, d, c, 0.0, c, 0.0).value * alpha(kk, n, d, c, 0.0, c, 0.0).value / den;
        }
        sum_part = ((m % 2 == 0) ? 1.0 : -1.0) * 4.0 * M_PI * m / (a * c * d) * out.sin_h * acc;
      }
      out.g(m - 1, n - 1) = sum_part - (n == n0 ? bet_mm0 : 0.0);
    }
  }
  return out;
}

/// Diagnostics of one semiclassical target against the located spectrum.
struct SuperscarReport {
  int k = 0, l = 0;
  std::int64_t quality = 0;
  double kappa_sc2 = 0.0;
  double kappa_exact2 = std::numeric_limits<double>::quiet_NaN();
  double delta = std::numeric_limits<double>::quiet_NaN();    ///< kappa_exact2 - kappa_sc2
  double rel_dev = std::numeric_limits<double>::quiet_NaN();  ///< |kappa_sc2/kappa_exact2 - 1|
  double dominance_h = 0.0, dominance_v = 0.0;
  double overlap = 0.0;
  double sin_cert_h = 0.0, sin_cert_v = 0.0;  ///< largest mode sine at an interior cut
  double bound_h = 0.0, bound_v = 0.0;        ///< certified bounds on those sines
  bool found = true;                          ///< false = NoNearbyLevel
  double window = 0.0;
};

namespace detail {

/// Nodes and weights of n-point Gauss-Legendre quadrature on [-1, 1].
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

/// L2 inner products of two fields over the billiard, cellwise tensor
/// Gauss-Legendre with enough nodes for the oscillation.
template <typename F, typename G>
void billiard_inner(const MultiRectBilliard& b, double kappa, F&& f, G&& g, double& fg, double& ff,
                    double& gg) {
  fg = ff = gg = 0.0;
  for (int r = 0; r < b.rows(); ++r)
    for (int cc = 0; cc < b.cols(); ++cc) {
      if (!b.cell(r, cc)) continue;
      const Rect cell = b.cell_rect(r, cc);
      const auto pts = [&](double len) {
        return std::min(200, static_cast<int>(std::ceil(4.0 * kappa * len / (2.0 * M_PI))) + 10);
      };
      std::vector<double> xn, xw, yn, yw;
      gauss_legendre(pts(cell.width()), xn, xw);
      gauss_legendre(pts(cell.height()), yn, yw);
      for (std::size_t i = 0; i < xn.size(); ++i)
        for (std::size_t j = 0; j < yn.size(); ++j) {
          const double x = cell.x0 + 0.5 * cell.width() * (xn[i] + 1.0);
          const double y = cell.y0 + 0.5 * cell.height() * (yn[j] + 1.0);
          const double wgt = 0.25 * cell.area() * xw[i] * yw[j];
          const double fv = f(x, y);
          const double gv = g(x, y);
          fg += wgt * fv * gv;
          ff += wgt * fv * fv;
          gg += wgt * gv * gv;
        }
    }
}

}  // namespace detail

/// Certificate of the near-integer alignment of the mode sines at the
/// interior cuts of one axis; first = largest sine value, second = certified
/// bound on it.
inline std::pair<double, double> small_sine_certificate(const MultiRectBilliard& billiard,
                                                        const DrmrbApprox& approx, int factor,
                                                        Orientation orientation) {
  const bool horizontal = orientation == Orientation::horizontal;
  const auto& cuts = horizontal ? billiard.xs() : billiard.ys();
  const auto& axis = horizontal ? approx.x_axis : approx.y_axis;
  const auto& approx_cuts = horizontal ? approx.approximant.xs() : approx.approximant.ys();

  auto cut_value = [&](int i) { return i == 0 ? 0.0 : cuts[i - 1]; };
  auto approx_cut = [&](int i) { return i == 0 ? 0.0 : approx_cuts[i - 1]; };
  auto ladder = [&](int i) { return i == 0 ? std::int64_t(0) : axis.C[i - 1]; };

  double cert = 0.0, bound = 0.0;
  for (const auto& ch : poc_decomposition(billiard)) {
    if (!ch.independent) continue;
    const bool along = (ch.orientation == Orientation::horizontal) == horizontal;
    if (!along) continue;
    const int lo = ch.run_lo;
    const int hi = ch.run_hi + 1;
    const double len = cut_value(hi) - cut_value(lo);
    const std::int64_t mode_idx = factor * (ladder(hi) - ladder(lo));
    for (int cut = lo + 1; cut < hi; ++cut) {
      const double arg = static_cast<double>(mode_idx) * (cut_value(cut) - cut_value(lo)) / len;
      cert = std::max(cert, std::abs(std::sin(M_PI * arg)));
      // exact deviation of the argument from its integer target
      const double e_lo = approx_cut(lo) - cut_value(lo);
      const double e_hi = approx_cut(hi) - cut_value(hi);
      const double e_cut = approx_cut(cut) - cut_value(cut);
      const double inner = (e_hi - e_lo) * (cut_value(cut) - cut_value(lo)) / len - (e_cut - e_lo);
      const double dev = factor * static_cast<double>(axis.C1) /
                         (horizontal ? billiard.xs()[0] : billiard.ys()[0]) * inner;
      bound = std::max(bound, M_PI * std::abs(dev));
    }
  }
  return {cert, bound};
}

/// Match one semiclassical target (k, l) of the approximant against a scanned
/// spectrum of the original billiard.
inline SuperscarReport superscar_match(const MultiRectBilliard& billiard, const DrmrbApprox& approx,
                                       int k, int l, const SpectrumResult& spectrum,
                                       const std::vector<AmplitudeSet>& amplitudes) {
  const SemiclassicalMode mode = semiclassical_mode(approx, k, l);
  SuperscarReport rep;
  rep.k = k;
  rep.l = l;
  rep.quality = approx.quality;
  rep.kappa_sc2 = mode.kappa_sc2;

  // proximity window: spread of the channel levels this mode excites in the
  // original geometry
  const auto channels = poc_decomposition(billiard);
  double spread = 0.0;
  auto piece_level_in_original = [&](const SemiclassicalMode::Piece& p, Orientation orient) {
    for (const auto& ch : channels)
      if (ch.orientation == orient && ch.index == p.channel)
        return std::pow(p.mx * M_PI / ch.lambda(), 2) + std::pow(p.ny * M_PI / ch.delta(), 2);
    return mode.kappa_sc2;
  };
  for (const auto& p : mode.h_pieces)
    spread = std::max(spread, std::abs(piece_level_in_original(p, Orientation::horizontal) -
                                       mode.kappa_sc2));
  for (const auto& p : mode.v_pieces)
    spread = std::max(spread,
                      std::abs(piece_level_in_original(p, Orientation::vertical) - mode.kappa_sc2));
  rep.window = 10.0 * std::max(spread, 1e-6 * mode.kappa_sc2);

  auto [ch_cert, ch_bound] = small_sine_certificate(billiard, approx, k, Orientation::horizontal);
  rep.sin_cert_h = ch_cert;
  rep.bound_h = ch_bound;
  auto [cv_cert, cv_bound] = small_sine_certificate(billiard, approx, l, Orientation::vertical);
  rep.sin_cert_v = cv_cert;
  rep.bound_v = cv_bound;

  // nearest level in kappa^2 within the window
  int best = -1;
  double best_dist = rep.window;
  for (std::size_t i = 0; i < spectrum.levels.size(); ++i) {
    const double k2 = spectrum.levels[i] * spectrum.levels[i];
    const double dist = std::abs(k2 - mode.kappa_sc2);
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) {
    rep.found = false;
    return rep;
  }
  const double k2 = spectrum.levels[best] * spectrum.levels[best];
  rep.kappa_exact2 = k2;
  rep.delta = k2 - mode.kappa_sc2;
  rep.rel_dev = std::abs(mode.kappa_sc2 / k2 - 1.0);

  // dominance and overlap need the recovered amplitudes at that level
  const AmplitudeSet* amp = nullptr;
  double amp_dist = std::numeric_limits<double>::infinity();
  for (const auto& a : amplitudes) {
    const double dist = std::abs(a.kappa - spectrum.levels[best]);
    if (dist < amp_dist) {
      amp_dist = dist;
      amp = &a;
    }
  }
  if (!amp || amp_dist > 1e-6 * spectrum.levels[best]) return rep;

  constexpr double kDominanceCap = 1e12;
  auto dominance_of = [&](Orientation orient) {
    double worst = kDominanceCap;
    bool any = false;
    for (const auto& block : amp->blocks) {
      if (block.orientation != orient) continue;
      const auto& pieces = orient == Orientation::horizontal ? mode.h_pieces : mode.v_pieces;
      const SemiclassicalMode::Piece* piece = nullptr;
      for (const auto& p : pieces) {
        // match by channel index within orientation
        for (const auto& ch : channels)
          if (ch.orientation == orient && ch.index == p.channel && ch.extent == block.extent)
            piece = &p;
      }
      if (!piece || piece->mx > amp->M || piece->ny > amp->N) continue;
      const Eigen::MatrixXd table = amp->full_table(block);
      const double dom = std::abs(table(piece->mx - 1, piece->ny - 1));
      double rest = 0.0;
      for (int m = 0; m < table.rows(); ++m)
        for (int n = 0; n < table.cols(); ++n)
          if (m != piece->mx - 1 || n != piece->ny - 1) rest = std::max(rest, std::abs(table(m, n)));
      const double ratio = rest > dom / kDominanceCap ? dom / rest : kDominanceCap;
      worst = std::min(worst, ratio);
      any = true;
    }
    return any ? worst : 0.0;
  };
  rep.dominance_h = dominance_of(Orientation::horizontal);
  rep.dominance_v = dominance_of(Orientation::vertical);

  const LevelEvaluator exact(*amp, billiard);
  double fg = 0.0, ff = 0.0, gg = 0.0;
  detail::billiard_inner(
      billiard, std::sqrt(k2), [&](double x, double y) { return exact(x, y); },
      [&](double x, double y) { return mode.eval_global(x, y); }, fg, ff, gg);
  rep.overlap = (ff > 0.0 && gg > 0.0) ? std::abs(fg) / std::sqrt(ff * gg) : 0.0;
  return rep;
}

/// Relative drift of the lowest levels between a billiard and a sequence of
/// its approximants.
struct DriftTable {
  std::vector<double> base_levels;            ///< kappa of the source billiard
  std::vector<std::vector<double>> levels;    ///< per approximant
  std::vector<std::vector<double>> rel_drift; ///< |kappa'_m / kappa_m - 1|
  std::vector<double> max_drift;              ///< per approximant
  std::vector<double> displacement;           ///< deformation sup-norm per approximant
};

/// Lowest `count` levels by scanning from just below the bounding-box ground
/// state, widening the window until enough levels are found.
inline std::vector<double> lowest_levels(const MultiRectBilliard& billiard, int count,
                                         const TruncationSpec& trunc, const ScanOptions& opts = {},
                                         int grid_per_unit = 220) {
  const Rect box = billiard.bounding_box();
  const double k2_floor =
      M_PI * M_PI * (1.0 / (box.width() * box.width()) + 1.0 / (box.height() * box.height()));
  double k_lo = 0.98 * std::sqrt(k2_floor);
  double k_hi = std::sqrt(k2_floor + 4.0 * M_PI * (count + 2) / billiard.area());
  for (int attempt = 0; attempt < 6; ++attempt) {
    const int pts = std::max(64, static_cast<int>((k_hi - k_lo) * grid_per_unit));
    SpectrumResult res = scan_spectrum(billiard, k_lo, k_hi, pts, trunc, opts);
    if (static_cast<int>(res.levels.size()) >= count) {
      res.levels.resize(count);
      return res.levels;
    }
    k_hi = k_lo + 1.4 * (k_hi - k_lo);
  }
  throw Error("lowest_levels: could not locate the requested number of levels");
}

inline DriftTable spectral_drift(const MultiRectBilliard& billiard,
                                 const std::vector<DrmrbApprox>& approx_sequence, int level_count,
                                 const TruncationSpec& trunc, const ScanOptions& opts = {}) {
  DriftTable table;
  table.base_levels = lowest_levels(billiard, level_count, trunc, opts);
  for (const auto& ap : approx_sequence) {
    std::vector<double> lev = lowest_levels(ap.approximant, level_count, trunc, opts);
    std::vector<double> drift(level_count);
    double mx = 0.0;
    for (int i = 0; i < level_count; ++i) {
      drift[i] = std::abs(lev[i] / table.base_levels[i] - 1.0);
      mx = std::max(mx, drift[i]);
    }
    table.levels.push_back(std::move(lev));
    table.rel_drift.push_back(std::move(drift));
    table.max_drift.push_back(mx);
    table.displacement.push_back(ap.max_displacement);
  }
  return table;
}

}  // namespace mrb
