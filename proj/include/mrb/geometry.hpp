// Copyright (c) 2026 The billiards developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mrb/errors.hpp"
#include "mrb/rational.hpp"

namespace mrb {

enum class Bc { dirichlet, neumann };
enum class Orientation { horizontal, vertical };

/// Outer sides of the bounding box, used for boundary-condition tags.
enum class Side { bottom = 0, right = 1, top = 2, left = 3 };

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Closed axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool empty() const { return x1 <= x0 || y1 <= y0; }

  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool contains_open(double x, double y) const { return x > x0 && x < x1 && y > y0 && y < y1; }
  bool contains_rect(const Rect& r) const {
    return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1;
  }
  bool operator==(const Rect& r) const {
    return x0 == r.x0 && x1 == r.x1 && y0 == r.y0 && y1 == r.y1;
  }

  Rect intersect(const Rect& r) const {
    return Rect{std::max(x0, r.x0), std::max(y0, r.y0), std::min(x1, r.x1), std::min(y1, r.y1)};
  }
};

/// Parameters (a, b, c, d) of the two-arm specialization:
/// the union ([0,b] x [0,c]) u ([0,a] x [0,d]) with 0 < a < b and 0 < c < d.
struct LshapeParams {
  double a, b, c, d;
};

namespace detail {
using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
}

/// Rectilinear staircase domain: a union of lattice cells cut out of the grid
/// defined by the ascending coordinate lists xs (vertical cut lines) and ys
/// (horizontal cut lines). cells(row, col) says whether the cell
/// [x_{col-1}, x_col] x [y_{row-1}, y_row] belongs to the domain, rows counted
/// bottom to top. Immutable after construction.
class MultiRectBilliard {
public:
  MultiRectBilliard(std::vector<double> xs, std::vector<double> ys, detail::BoolGrid cells,
                    std::array<Bc, 4> bc = all_dirichlet(), bool allow_holes = false,
                    std::vector<std::optional<Rational>> x_ratios = {},
                    std::vector<std::optional<Rational>> y_ratios = {})
      : xs_(std::move(xs)),
        ys_(std::move(ys)),
        cells_(std::move(cells)),
        bc_(bc),
        x_ratios_(std::move(x_ratios)),
        y_ratios_(std::move(y_ratios)) {
    validate(allow_holes);
  }

  static std::array<Bc, 4> all_dirichlet() {
    return {Bc::dirichlet, Bc::dirichlet, Bc::dirichlet, Bc::dirichlet};
  }

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  int cols() const { return static_cast<int>(xs_.size()); }
  int rows() const { return static_cast<int>(ys_.size()); }
  bool cell(int row, int col) const { return cells_(row, col); }
  const detail::BoolGrid& cells() const { return cells_; }
  Bc bc(Side s) const { return bc_[static_cast<int>(s)]; }

  /// Interval bounds of column `col`: [x_lo(col), x_hi(col)], with x_lo(0) = 0.
  double x_lo(int col) const { return col == 0 ? 0.0 : xs_[col - 1]; }
  double x_hi(int col) const { return xs_[col]; }
  double y_lo(int row) const { return row == 0 ? 0.0 : ys_[row - 1]; }
  double y_hi(int row) const { return ys_[row]; }

  Rect cell_rect(int row, int col) const {
    return Rect{x_lo(col), y_lo(row), x_hi(col), y_hi(row)};
  }
  Rect bounding_box() const { return Rect{0.0, 0.0, xs_.back(), ys_.back()}; }

  double area() const {
    double a = 0.0;
    for (int r = 0; r < rows(); ++r)
      for (int c = 0; c < cols(); ++c)
        if (cells_(r, c)) a += cell_rect(r, c).area();
    return a;
  }

  bool has_holes() const { return has_holes_; }
  /// Holed domains are representable but refuse spectral work.
  bool quantizable() const { return !has_holes_; }

  /// Exact ratio x_i / x_1 when known, indexed like xs().
  const std::optional<Rational>& x_ratio(int i) const { return x_ratios_[i]; }
  const std::optional<Rational>& y_ratio(int i) const { return y_ratios_[i]; }
  bool x_axis_rational() const { return all_tagged(x_ratios_); }
  bool y_axis_rational() const { return all_tagged(y_ratios_); }
  /// All horizontal ratios and all vertical ratios carry exact rational tags.
  bool is_doubly_rational() const { return x_axis_rational() && y_axis_rational(); }

  const std::optional<LshapeParams>& lshape() const { return lshape_; }
  void set_lshape(LshapeParams p) { lshape_ = p; }

  /// Closed-domain membership.
  bool contains(double x, double y) const {
    const auto [r0, r1] = intervals_of(ys_, y);
    const auto [c0, c1] = intervals_of(xs_, x);
    if (r0 < 0 || c0 < 0) return false;
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c)
        if (cells_(r, c)) return true;
    return false;
  }

  /// Open-domain membership (true only strictly inside).
  bool interior(double x, double y) const {
    if (x <= 0.0 || y <= 0.0 || x >= xs_.back() || y >= ys_.back()) return false;
    const auto [r0, r1] = intervals_of(ys_, y);
    const auto [c0, c1] = intervals_of(xs_, x);
    if (r0 < 0 || c0 < 0) return false;
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c)
        if (!cells_(r, c)) return false;
    return true;
  }

private:
  static bool all_tagged(const std::vector<std::optional<Rational>>& v) {
    if (v.empty()) return false;
    return std::all_of(v.begin(), v.end(), [](const auto& t) { return t.has_value(); });
  }

  /// Indices of the coordinate intervals containing t; a pair when t sits
  /// exactly on a cut. Returns {-1,-1} outside [0, last].
  static std::pair<int, int> intervals_of(const std::vector<double>& cuts, double t) {
    if (t < 0.0 || t > cuts.back()) return {-1, -1};
    int lo = 0;
    while (lo < static_cast<int>(cuts.size()) && cuts[lo] < t) ++lo;
    // interval lo covers [cuts[lo-1], cuts[lo]]
    int hi = lo;
    if (lo < static_cast<int>(cuts.size()) && cuts[lo] == t && lo + 1 < static_cast<int>(cuts.size()))
      hi = lo + 1;
    if (lo >= static_cast<int>(cuts.size())) return {-1, -1};
    return {std::min(lo, hi), std::min(hi, static_cast<int>(cuts.size()) - 1)};
  }

  void validate(bool allow_holes);

  std::vector<double> xs_, ys_;
  detail::BoolGrid cells_;
  std::array<Bc, 4> bc_;
  std::vector<std::optional<Rational>> x_ratios_, y_ratios_;
  std::optional<LshapeParams> lshape_;
  bool has_holes_ = false;
};

inline void MultiRectBilliard::validate(bool allow_holes) {
  const int P = cols(), Q = rows();
  if (P < 1 || Q < 1) throw InvalidGeometry("billiard needs at least one cell");
  if (cells_.rows() != Q || cells_.cols() != P)
    throw InvalidGeometry("cell grid shape does not match coordinate lists");

  auto check_ascending = [](const std::vector<double>& v, const char* name) {
    double prev = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > prev))
        throw InvalidGeometry(std::string(name) + " coordinates must be strictly positive and "
                              "increasing (offending pair: " + std::to_string(prev) + ", " +
                              std::to_string(v[i]) + ")");
      prev = v[i];
    }
  };
  check_ascending(xs_, "x");
  check_ascending(ys_, "y");

  if (x_ratios_.empty()) x_ratios_.assign(P, std::nullopt);
  if (y_ratios_.empty()) y_ratios_.assign(Q, std::nullopt);
  if (static_cast<int>(x_ratios_.size()) != P || static_cast<int>(y_ratios_.size()) != Q)
    throw InvalidGeometry("ratio tag lists must match coordinate lists");
  x_ratios_[0] = Rational{1, 1};  // the first cut's ratio to itself
  y_ratios_[0] = Rational{1, 1};

  int occupied = 0;
  for (int r = 0; r < Q; ++r)
    for (int c = 0; c < P; ++c) occupied += cells_(r, c) ? 1 : 0;
  if (occupied == 0) throw InvalidGeometry("no occupied cells");

  // edge-connectivity of the occupied set
  {
    detail::BoolGrid seen = detail::BoolGrid::Constant(Q, P, false);
    std::vector<std::pair<int, int>> stack;
    for (int r = 0; r < Q && stack.empty(); ++r)
      for (int c = 0; c < P && stack.empty(); ++c)
        if (cells_(r, c)) stack.push_back({r, c});
    seen(stack[0].first, stack[0].second) = true;
    int reached = 0;
    while (!stack.empty()) {
      auto [r, c] = stack.back();
      stack.pop_back();
      ++reached;
      const int dr[] = {1, -1, 0, 0}, dc[] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int rr = r + dr[k], cc = c + dc[k];
        if (rr < 0 || rr >= Q || cc < 0 || cc >= P) continue;
        if (cells_(rr, cc) && !seen(rr, cc)) {
          seen(rr, cc) = true;
          stack.push_back({rr, cc});
        }
      }
    }
    if (reached != occupied) throw InvalidGeometry("occupied cell set is not edge-connected");
  }

  // pinched vertices: two diagonal cells meeting at a lattice vertex with both
  // orthogonal neighbours absent would create an angle that is neither pi/2
  // nor 3pi/2
  for (int r = 0; r + 1 < Q; ++r)
    for (int c = 0; c + 1 < P; ++c) {
      const bool sw = cells_(r, c), se = cells_(r, c + 1);
      const bool nw = cells_(r + 1, c), ne = cells_(r + 1, c + 1);
      if ((sw && ne && !se && !nw) || (se && nw && !sw && !ne))
        throw InvalidGeometry("cells touch only at a corner near vertex (" +
                              std::to_string(xs_[c]) + ", " + std::to_string(ys_[r]) + ")");
    }

  // holes: flood-fill the complement from outside on a grid padded by one ring
  {
    detail::BoolGrid outside = detail::BoolGrid::Constant(Q + 2, P + 2, false);
    std::vector<std::pair<int, int>> stack{{0, 0}};
    outside(0, 0) = true;
    auto occupied_at = [&](int r, int c) {
      return r >= 1 && r <= Q && c >= 1 && c <= P && cells_(r - 1, c - 1);
    };
    while (!stack.empty()) {
      auto [r, c] = stack.back();
      stack.pop_back();
      const int dr[] = {1, -1, 0, 0}, dc[] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int rr = r + dr[k], cc = c + dc[k];
        if (rr < 0 || rr >= Q + 2 || cc < 0 || cc >= P + 2) continue;
        if (!occupied_at(rr, cc) && !outside(rr, cc)) {
          outside(rr, cc) = true;
          stack.push_back({rr, cc});
        }
      }
    }
    for (int r = 0; r < Q; ++r)
      for (int c = 0; c < P; ++c)
        if (!cells_(r, c) && !outside(r + 1, c + 1)) has_holes_ = true;
    if (has_holes_ && !allow_holes)
      throw InvalidGeometry("occupied cell set encloses a hole");
  }
}

/// Build the two-arm staircase ([0,b] x [0,c]) u ([0,a] x [0,d]).
inline MultiRectBilliard new_lshape(double a, double b, double c, double d,
                                    std::optional<Rational> b_over_a = std::nullopt,
                                    std::optional<Rational> d_over_c = std::nullopt) {
  if (!(a > 0.0) || !(a < b))
    throw InvalidGeometry("lshape requires 0 < a < b (got a=" + std::to_string(a) +
                          ", b=" + std::to_string(b) + ")");
  if (!(c > 0.0) || !(c < d))
    throw InvalidGeometry("lshape requires 0 < c < d (got c=" + std::to_string(c) +
                          ", d=" + std::to_string(d) + ")");
  detail::BoolGrid cells(2, 2);
  cells << true, true, true, false;  // bottom row full, top row only the left cell
  std::vector<std::optional<Rational>> xr{Rational{1, 1}, b_over_a};
  std::vector<std::optional<Rational>> yr{Rational{1, 1}, d_over_c};
  MultiRectBilliard b2({a, b}, {c, d}, std::move(cells), MultiRectBilliard::all_dirichlet(), false,
                       std::move(xr), std::move(yr));
  b2.set_lshape(LshapeParams{a, b, c, d});
  return b2;
}

/// Build a staircase billiard from cut coordinates and the occupancy grid
/// (rows bottom to top).
inline MultiRectBilliard new_mrb(const std::vector<double>& xs, const std::vector<double>& ys,
                                 const std::vector<std::vector<int>>& cells,
                                 bool allow_holes = false,
                                 std::vector<std::optional<Rational>> x_ratios = {},
                                 std::vector<std::optional<Rational>> y_ratios = {}) {
  detail::BoolGrid grid(static_cast<int>(cells.size()),
                        cells.empty() ? 0 : static_cast<int>(cells[0].size()));
  for (std::size_t r = 0; r < cells.size(); ++r) {
    if (cells[r].size() != cells[0].size())
      throw InvalidGeometry("ragged cell grid");
    for (std::size_t c = 0; c < cells[r].size(); ++c) grid(r, c) = cells[r][c] != 0;
  }
  return MultiRectBilliard(xs, ys, std::move(grid), MultiRectBilliard::all_dirichlet(),
                           allow_holes, std::move(x_ratios), std::move(y_ratios));
}

/// One periodic-orbit channel: a maximal rectangle obtained by cutting the
/// billiard along the singular diagonals of one orientation. lambda is always
/// the horizontal extent and delta the vertical one; the sine basis is
/// anchored at the lower-left corner.
struct PocChannel {
  Orientation orientation = Orientation::horizontal;
  int index = 0;  ///< 1-based within its orientation
  Rect extent;
  bool independent = true;
  int strip = 0;                 ///< row (horizontal) or column (vertical), 0-based
  int run_lo = 0, run_hi = 0;    ///< inclusive cell range along the channel, 0-based

  double lambda() const { return extent.width(); }
  double delta() const { return extent.height(); }
  double offset_x() const { return extent.x0; }
  double offset_y() const { return extent.y0; }

  /// Channel eigenvalue kappa^2 of the (m, n) sine mode; m counts x half-waves.
  double level(int m, int n) const {
    const double fx = m * M_PI / lambda();
    const double fy = n * M_PI / delta();
    return fx * fx + fy * fy;
  }
};

/// Cut the billiard along all horizontal, then all vertical singular
/// diagonals. Horizontal channels are enumerated bottom-to-top (runs left to
/// right within a row), vertical ones left-to-right. A channel whose rectangle
/// is strictly contained in a perpendicular one carries no information of its
/// own and is flagged non-independent.
inline std::vector<PocChannel> poc_decomposition(const MultiRectBilliard& b) {
  std::vector<PocChannel> channels;
  int h_count = 0, v_count = 0;

  for (int r = 0; r < b.rows(); ++r) {
    for (int c = 0; c < b.cols(); ++c) {
      if (!b.cell(r, c)) continue;
      int c1 = c;
      while (c1 + 1 < b.cols() && b.cell(r, c1 + 1)) ++c1;
      PocChannel ch;
      ch.orientation = Orientation::horizontal;
      ch.index = ++h_count;
      ch.extent = Rect{b.x_lo(c), b.y_lo(r), b.x_hi(c1), b.y_hi(r)};
      ch.strip = r;
      ch.run_lo = c;
      ch.run_hi = c1;
      channels.push_back(ch);
      c = c1;
    }
  }
  for (int c = 0; c < b.cols(); ++c) {
    for (int r = 0; r < b.rows(); ++r) {
      if (!b.cell(r, c)) continue;
      int r1 = r;
      while (r1 + 1 < b.rows() && b.cell(r1 + 1, c)) ++r1;
      PocChannel ch;
      ch.orientation = Orientation::vertical;
      ch.index = ++v_count;
      ch.extent = Rect{b.x_lo(c), b.y_lo(r), b.x_hi(c), b.y_hi(r1)};
      ch.strip = c;
      ch.run_lo = r;
      ch.run_hi = r1;
      channels.push_back(ch);
      r = r1;
    }
  }

  for (auto& ch : channels) {
    for (const auto& other : channels) {
      if (other.orientation == ch.orientation) continue;
      if (other.extent.contains_rect(ch.extent) && !(other.extent == ch.extent)) {
        ch.independent = false;
        break;
      }
    }
  }
  return channels;
}

/// Crossing of a horizontal and a vertical channel. Active crossings carry
/// matching equations; a crossing is active when the two rectangles overlap
/// with positive area and both channels are independent.
struct CrossingRect {
  int h_index = 0;  ///< PocChannel::index of the horizontal channel
  int v_index = 0;
  Rect rect;        ///< overlap rectangle (degenerate if the channels do not cross)
  bool active = false;
};

inline std::vector<CrossingRect> crossing_rectangles(const MultiRectBilliard& /*billiard*/,
                                                     const std::vector<PocChannel>& pocs) {
  std::vector<CrossingRect> out;
  for (const auto& h : pocs) {
    if (h.orientation != Orientation::horizontal) continue;
    for (const auto& v : pocs) {
      if (v.orientation != Orientation::vertical) continue;
      CrossingRect cr;
      cr.h_index = h.index;
      cr.v_index = v.index;
      cr.rect = h.extent.intersect(v.extent);
      cr.active = !cr.rect.empty() && h.independent && v.independent;
      out.push_back(cr);
    }
  }
  return out;
}

}  // namespace mrb
