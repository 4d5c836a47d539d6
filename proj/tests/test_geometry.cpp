// Copyright (c) 2026 The billiards developers
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>

#include <doctest.h>

#include "mrb/geometry.hpp"

using namespace mrb;

namespace {

// the four-strip staircase used throughout: rows bottom to top
MultiRectBilliard four_strip(const std::vector<double>& xs, const std::vector<double>& ys) {
  return new_mrb(xs, ys, {{0, 1, 1, 0}, {0, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 0, 0}});
}

const PocChannel& channel(const std::vector<PocChannel>& pocs, Orientation o, int index) {
  for (const auto& ch : pocs)
    if (ch.orientation == o && ch.index == index) return ch;
  throw std::runtime_error("channel not found");
}

}  // namespace

TEST_CASE("lshape construction and validation") {
  const auto b = new_lshape(1.0, std::sqrt(2.0), 1.0, std::sqrt(3.0));
  CHECK(b.lshape().has_value());
  CHECK(b.area() == doctest::Approx(std::sqrt(2.0) + std::sqrt(3.0) - 1.0));
  CHECK_FALSE(b.is_doubly_rational());

  const auto dr = new_lshape(1.0, 2.0, 1.0, 3.0, Rational{2, 1}, Rational{3, 1});
  CHECK(dr.is_doubly_rational());

  CHECK_THROWS_AS(new_lshape(2.0, 1.0, 1.0, 3.0), InvalidGeometry);
  CHECK_THROWS_AS(new_lshape(1.0, 2.0, 3.0, 3.0), InvalidGeometry);
}

TEST_CASE("mrb validation rejects broken cell sets") {
  // two diagonal cells touching only at a corner
  CHECK_THROWS_AS(new_mrb({1, 2}, {1, 2}, {{1, 0}, {0, 1}}), InvalidGeometry);
  // disconnected
  CHECK_THROWS_AS(new_mrb({1, 2, 3}, {1}, {{1, 0, 1}}), InvalidGeometry);
  // holed set rejected unless explicitly allowed, then refuses quantization
  const std::vector<std::vector<int>> ring = {{1, 1, 1}, {1, 0, 1}, {1, 1, 1}};
  CHECK_THROWS_AS(new_mrb({1, 2, 3}, {1, 2, 3}, ring), InvalidGeometry);
  const auto holed = new_mrb({1, 2, 3}, {1, 2, 3}, ring, true);
  CHECK(holed.has_holes());
  CHECK_FALSE(holed.quantizable());
  // unordered coordinates
  CHECK_THROWS_AS(new_mrb({2, 1}, {1}, {{1, 1}}), InvalidGeometry);
}

TEST_CASE("four-strip staircase reproduces the printed channel table") {
  const std::vector<double> xs = {1.0, 1.9, 2.7, 4.0};
  const std::vector<double> ys = {0.8, 1.7, 2.9, 3.6};
  const auto b = four_strip(xs, ys);
  const auto pocs = poc_decomposition(b);

  int h_count = 0, v_count = 0;
  for (const auto& ch : pocs) (ch.orientation == Orientation::horizontal ? h_count : v_count)++;
  CHECK(h_count == 4);
  CHECK(v_count == 4);

  const double x1 = xs[0], x2 = xs[1], x3 = xs[2], x4 = xs[3];
  const double y1 = ys[0], y2 = ys[1], y3 = ys[2], y4 = ys[3];

  struct Entry {
    double lambda, delta, xp, yq;
  };
  const std::map<int, Entry> horizontal = {
      {1, {x3 - x1, y1, x1, 0.0}},
      {2, {x4 - x1, y2 - y1, x1, y1}},
      {3, {x4, y3 - y2, 0.0, y2}},
      {4, {x2, y4 - y3, 0.0, y3}},
  };
  const std::map<int, Entry> vertical = {
      {1, {x1, y4 - y2, 0.0, y2}},
      {2, {x2 - x1, y4, x1, 0.0}},
      {3, {x3 - x2, y3, x2, 0.0}},
      {4, {x4 - x3, y3 - y1, x3, y1}},
  };
  for (const auto& [idx, e] : horizontal) {
    const auto& ch = channel(pocs, Orientation::horizontal, idx);
    CHECK(ch.lambda() == doctest::Approx(e.lambda));
    CHECK(ch.delta() == doctest::Approx(e.delta));
    CHECK(ch.offset_x() == doctest::Approx(e.xp));
    CHECK(ch.offset_y() == doctest::Approx(e.yq));
    CHECK(ch.independent);
  }
  for (const auto& [idx, e] : vertical) {
    const auto& ch = channel(pocs, Orientation::vertical, idx);
    CHECK(ch.lambda() == doctest::Approx(e.lambda));
    CHECK(ch.delta() == doctest::Approx(e.delta));
    CHECK(ch.offset_x() == doctest::Approx(e.xp));
    CHECK(ch.offset_y() == doctest::Approx(e.yq));
    CHECK(ch.independent);
  }
}

TEST_CASE("four-strip crossing activity matrix") {
  const auto b = four_strip({1.0, 2.0, 3.0, 4.0}, {1.0, 2.0, 3.0, 4.0});
  const auto pocs = poc_decomposition(b);
  const auto crossings = crossing_rectangles(b, pocs);
  REQUIRE(crossings.size() == 16);

  const int expected[4][4] = {{0, 1, 1, 0}, {0, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 0, 0}};
  for (const auto& cr : crossings) {
    CHECK(cr.active == (expected[cr.h_index - 1][cr.v_index - 1] == 1));
    if (cr.active) {
      const auto& h = channel(pocs, Orientation::horizontal, cr.h_index);
      const auto& v = channel(pocs, Orientation::vertical, cr.v_index);
      CHECK(cr.rect.width() == doctest::Approx(v.lambda()));
      CHECK(cr.rect.height() == doctest::Approx(h.delta()));
      // active crossings lie inside the domain
      CHECK(b.interior(0.5 * (cr.rect.x0 + cr.rect.x1), 0.5 * (cr.rect.y0 + cr.rect.y1)));
    }
  }
}

TEST_CASE("lshape channels and the single independent crossing") {
  const double a = 1.0, bb = std::sqrt(2.0), c = 1.0, d = std::sqrt(3.0);
  const auto b = new_lshape(a, bb, c, d);
  const auto pocs = poc_decomposition(b);
  REQUIRE(pocs.size() == 4);

  const auto& h1 = channel(pocs, Orientation::horizontal, 1);
  CHECK(h1.lambda() == doctest::Approx(bb));
  CHECK(h1.delta() == doctest::Approx(c));
  CHECK(h1.independent);
  const auto& h2 = channel(pocs, Orientation::horizontal, 2);
  CHECK_FALSE(h2.independent);
  CHECK(h2.lambda() == doctest::Approx(a));
  const auto& v1 = channel(pocs, Orientation::vertical, 1);
  CHECK(v1.lambda() == doctest::Approx(a));
  CHECK(v1.delta() == doctest::Approx(d));
  CHECK(v1.independent);
  const auto& v2 = channel(pocs, Orientation::vertical, 2);
  CHECK_FALSE(v2.independent);

  int active = 0;
  for (const auto& cr : crossing_rectangles(b, pocs))
    if (cr.active) {
      ++active;
      CHECK(cr.rect.width() == doctest::Approx(a));
      CHECK(cr.rect.height() == doctest::Approx(c));
    }
  CHECK(active == 1);
}

TEST_CASE("rectangle decomposes into one pair of coincident channels") {
  const auto b = new_mrb({2.0}, {1.0}, {{1}});
  const auto pocs = poc_decomposition(b);
  REQUIRE(pocs.size() == 2);
  CHECK(pocs[0].extent == pocs[1].extent);
  CHECK(pocs[0].independent);
  CHECK(pocs[1].independent);
  const auto crossings = crossing_rectangles(b, pocs);
  REQUIRE(crossings.size() == 1);
  CHECK(crossings[0].active);
  CHECK(crossings[0].rect.area() == doctest::Approx(2.0));
  CHECK(b.is_doubly_rational());  // a single cut per axis is trivially rational
}

TEST_CASE("area additivity of the decomposition") {
  const auto b = four_strip({1.0, 1.5, 2.2, 3.9}, {0.7, 1.1, 2.4, 3.3});
  const auto pocs = poc_decomposition(b);
  double h_area = 0.0, v_area = 0.0;
  for (const auto& ch : pocs)
    (ch.orientation == Orientation::horizontal ? h_area : v_area) += ch.extent.area();
  CHECK(h_area == doctest::Approx(b.area()));
  CHECK(v_area == doctest::Approx(b.area()));
}

TEST_CASE("decomposition is deterministic") {
  const auto b = four_strip({1.0, 1.5, 2.2, 3.9}, {0.7, 1.1, 2.4, 3.3});
  const auto p1 = poc_decomposition(b);
  const auto p2 = poc_decomposition(b);
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1[i].orientation == p2[i].orientation);
    CHECK(p1[i].index == p2[i].index);
    CHECK(p1[i].extent == p2[i].extent);
  }
}

TEST_CASE("membership queries") {
  const auto b = new_lshape(1.0, 2.0, 1.0, 3.0);
  CHECK(b.contains(1.5, 0.5));
  CHECK(b.interior(1.5, 0.5));
  CHECK(b.contains(2.0, 1.0));        // outer corner
  CHECK_FALSE(b.interior(2.0, 1.0));
  CHECK(b.interior(1.0, 0.5));        // on the singular diagonal, inside the domain
  CHECK_FALSE(b.interior(1.5, 1.0));  // on the boundary above the horizontal arm
  CHECK_FALSE(b.contains(1.5, 2.0));  // outside, above the horizontal arm
  CHECK(b.interior(0.5, 1.0));        // on the horizontal singular diagonal
}
