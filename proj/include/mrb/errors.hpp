// Copyright (c) 2026 The billiards developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mrb {

/// Base class of all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Staircase domain violates an invariant (ordering, connectivity, holes, pinched vertices).
class InvalidGeometry : public Error {
public:
  using Error::Error;
};

/// Overlap integral requested on an empty or inverted interval.
class DegenerateInterval : public Error {
public:
  using Error::Error;
};

/// A trace needed by a derivative-coefficient relation was not supplied.
class MissingTrace : public Error {
public:
  using Error::Error;
};

/// Point lies outside the region a series or map is defined on.
class OutOfDomain : public Error {
public:
  using Error::Error;
};

/// Nonpositive or otherwise unusable energy parameter.
class InvalidEnergy : public Error {
public:
  using Error::Error;
};

/// A reduction denominator vanished and no reference-index swap can repair it.
class ResonantDenominator : public Error {
public:
  ResonantDenominator(const std::string& what, int channel, int m, int n)
      : Error(what), channel(channel), m(m), n(n) {}
  int channel;
  int m, n;
};

/// Scan interval empty or inverted.
class InvalidRange : public Error {
public:
  using Error::Error;
};

/// Amplitude recovery requested at a point that is not an energy level.
class NotAnEigenvalue : public Error {
public:
  using Error::Error;
};

/// Finite-difference grid cannot represent the billiard (coordinates collide after snapping).
class GridMismatch : public Error {
public:
  using Error::Error;
};

/// A doubly rational approximant is required but the ratios carry no exact tags.
class RequiresDoublyRational : public Error {
public:
  using Error::Error;
};

/// Linear-relation table passed to the refinement step is inconsistent.
class InvalidRelation : public Error {
public:
  using Error::Error;
};

}  // namespace mrb
