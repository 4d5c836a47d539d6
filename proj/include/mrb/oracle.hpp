// Copyright (c) 2026 The billiards developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "mrb/errors.hpp"
#include "mrb/geometry.hpp"

namespace mrb {
namespace oracle {

/// Sorted Dirichlet levels pi^2 (m^2/w^2 + n^2/h^2) of a rectangle.
inline std::vector<double> rectangle_exact(double w, double h, int count) {
  if (!(w > 0.0) || !(h > 0.0)) throw InvalidGeometry("rectangle_exact: sides must be positive");
  if (count < 1) throw Error("rectangle_exact: count must be >= 1");
  auto level = [&](int m, int n) {
    return M_PI * M_PI * (m * m / (w * w) + n * n / (h * h));
  };
  // enough modes per direction to be sure the lowest `count` are present
  const int span = static_cast<int>(std::ceil(std::sqrt(2.0 * count))) + 2 +
                   static_cast<int>(std::ceil(std::max(w / h, h / w)));
  std::vector<double> levels;
  for (int m = 1; m <= span; ++m)
    for (int n = 1; n <= span; ++n) levels.push_back(level(m, n));
  std::sort(levels.begin(), levels.end());
  levels.resize(count);
  return levels;
}

/// Staircase billiard with every cut snapped onto the uniform grid of spacing
/// h, plus the largest displacement the snap introduced. Feeding the snapped
/// billiard to fd_eigenvalues at both h and h/2 keeps the domain fixed across
/// the Richardson pair.
inline std::pair<MultiRectBilliard, double> snap_billiard(const MultiRectBilliard& b, double h) {
  auto snap_axis = [&](const std::vector<double>& cuts, double& max_disp) {
    std::vector<double> out(cuts.size());
    long long prev = 0;
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      const long long idx = std::llround(cuts[i] / h);
      if (idx <= prev)
        throw GridMismatch("snap: cuts " + std::to_string(i ? cuts[i - 1] : 0.0) + " and " +
                           std::to_string(cuts[i]) + " collide on the h = " + std::to_string(h) +
                           " grid");
      max_disp = std::max(max_disp, std::abs(cuts[i] - idx * h));
      out[i] = idx * h;
      prev = idx;
    }
    return out;
  };
  double disp = 0.0;
  std::vector<double> xs = snap_axis(b.xs(), disp);
  std::vector<double> ys = snap_axis(b.ys(), disp);
  return {MultiRectBilliard(xs, ys, b.cells(),
                            {b.bc(Side::bottom), b.bc(Side::right), b.bc(Side::top),
                             b.bc(Side::left)},
                            !b.quantizable()),
          disp};
}

/// Index map of the interior nodes of the five-point grid.
struct FdGrid {
  double h = 0.0;
  int nx = 0, ny = 0;                  ///< node counts per direction (including boundary)
  Eigen::ArrayXXi node_index;          ///< ny rows by nx cols; -1 = boundary/outside
  int interior_count = 0;
  double snap_displacement = 0.0;

  FdGrid(const MultiRectBilliard& billiard, double spacing) {
    auto [snapped, disp] = snap_billiard(billiard, spacing);
    snap_displacement = disp;
    h = spacing;
    nx = static_cast<int>(std::llround(snapped.bounding_box().x1 / h)) + 1;
    ny = static_cast<int>(std::llround(snapped.bounding_box().y1 / h)) + 1;

    // occupancy of the fine cells; snapped cuts lie on grid lines, so a fine
    // cell never straddles a cut and its centre decides membership
    Eigen::ArrayXXi fine = Eigen::ArrayXXi::Zero(ny - 1, nx - 1);
    for (int j = 0; j < ny - 1; ++j)
      for (int i = 0; i < nx - 1; ++i)
        fine(j, i) = snapped.contains((i + 0.5) * h, (j + 0.5) * h) ? 1 : 0;

    node_index = Eigen::ArrayXXi::Constant(ny, nx, -1);
    for (int j = 1; j < ny - 1; ++j)
      for (int i = 1; i < nx - 1; ++i) {
        const bool inside = fine(j - 1, i - 1) && fine(j - 1, i) && fine(j, i - 1) && fine(j, i);
        if (inside) node_index(j, i) = interior_count++;
      }
    if (interior_count == 0) throw GridMismatch("fd grid: no interior nodes at this spacing");
  }

  /// Five-point Dirichlet Laplacian, symmetric positive definite.
  Eigen::SparseMatrix<double> laplacian() const {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(interior_count) * 5);
    const double ih2 = 1.0 / (h * h);
    for (int j = 1; j < ny - 1; ++j)
      for (int i = 1; i < nx - 1; ++i) {
        const int id = node_index(j, i);
        if (id < 0) continue;
        trips.emplace_back(id, id, 4.0 * ih2);
        const int nb[4][2] = {{j, i - 1}, {j, i + 1}, {j - 1, i}, {j + 1, i}};
        for (const auto& p : nb) {
          const int nid = node_index(p[0], p[1]);
          if (nid >= 0) trips.emplace_back(id, nid, -ih2);
        }
      }
    Eigen::SparseMatrix<double> A(interior_count, interior_count);
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
  }
};

namespace detail {

/// Lowest eigenvalues of a sparse SPD matrix by inverse subspace iteration
/// with Rayleigh-Ritz extraction. Deterministic start.
inline std::vector<double> lowest_eigenvalues(const Eigen::SparseMatrix<double>& A, int count,
                                              double rel_tol = 1e-9, int max_iter = 200) {
  const int n = static_cast<int>(A.rows());
  const int p = std::min(n, count + std::max(4, count / 2));
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success) throw Error("fd eigensolver: factorization failed");

  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd X(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = gauss(rng);

  Eigen::VectorXd ritz_old = Eigen::VectorXd::Zero(p);
  for (int it = 0; it < max_iter; ++it) {
    X = solver.solve(X);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    X = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    const Eigen::MatrixXd AX = A * X;
    const Eigen::MatrixXd H = X.transpose() * AX;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    X = X * es.eigenvectors();
    const Eigen::VectorXd ritz = es.eigenvalues();
    double change = 0.0;
    for (int i = 0; i < count; ++i)
      change = std::max(change, std::abs(ritz(i) - ritz_old(i)) / std::abs(ritz(i)));
    ritz_old = ritz;
    if (it >= 4 && change < rel_tol) break;
  }
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = ritz_old(i);
  return out;
}

}  // namespace detail

/// Smallest `count` Dirichlet eigenvalues of the five-point Laplacian on the
/// snapped billiard. O(h^2) discretization error on convex corners, slower
/// near re-entrant ones.
inline std::vector<double> fd_eigenvalues(const MultiRectBilliard& billiard, double h, int count) {
  FdGrid grid(billiard, h);
  return detail::lowest_eigenvalues(grid.laplacian(), count);
}

/// Eliminate the O(h^2) error from a matched pair of level lists.
inline std::vector<double> richardson(const std::vector<double>& levels_h,
                                      const std::vector<double>& levels_h2) {
  if (levels_h.size() != levels_h2.size())
    throw Error("richardson: level lists must have matching lengths");
  std::vector<double> out(levels_h.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (4.0 * levels_h2[i] - levels_h[i]) / 3.0;
  return out;
}

/// Oracle pipeline: snap once, solve at h and h/2 on the fixed snapped domain,
/// extrapolate.
struct OracleReport {
  std::vector<double> lambda_h, lambda_h2, extrapolated, est_error;
  double snap_displacement = 0.0;
};

inline OracleReport fd_oracle(const MultiRectBilliard& billiard, double h, int count) {
  auto [snapped, disp] = snap_billiard(billiard, h);
  OracleReport rep;
  rep.snap_displacement = disp;
  rep.lambda_h = fd_eigenvalues(snapped, h, count);
  rep.lambda_h2 = fd_eigenvalues(snapped, h / 2.0, count);
  rep.extrapolated = richardson(rep.lambda_h, rep.lambda_h2);
  rep.est_error.resize(count);
  for (int i = 0; i < count; ++i)
    rep.est_error[i] = std::abs(rep.extrapolated[i] - rep.lambda_h2[i]);
  return rep;
}

}  // namespace oracle
}  // namespace mrb
