#pragma once

#include <cstddef>
#include <vector>

namespace head::geo {

// All operations assume curvature k = 1; the k field is carried for clarity
// and validated on use. Coordinates are doubles throughout: the downstream
// tolerance chain (exp -> arcosh round trips at 1e-6) does not survive floats.

// Point on the hyperboloid {x : <x,x>_L = -k, x0 > 0}. Time coordinate first.
struct LorentzVec {
  std::vector<double> coords;  // d+1 entries
  double curvature = 1.0;

  std::size_t ambient_dim() const { return coords.size(); }   // d+1
  std::size_t space_dim() const { return coords.size() - 1; } // d
};

// Tangent vector at the origin: first coordinate is exactly zero.
struct TangentVec {
  std::vector<double> coords;  // d+1 entries, coords[0] == 0

  std::size_t ambient_dim() const { return coords.size(); }
};

// Point in the open unit ball (k * ||x||^2 < 1).
struct PoincareVec {
  std::vector<double> coords;  // d entries
  double curvature = 1.0;
};

// The origin (sqrt(k), 0, ..., 0) of the d-dimensional hyperboloid.
LorentzVec lorentz_origin(std::size_t space_dim, double curvature = 1.0);

// Tangent vector at the origin whose space part is `space`.
TangentVec tangent_at_origin(const std::vector<double>& space);

// -x0*y0 + sum_i xi*yi. Throws UsageError on dimension mismatch.
double lorentz_inner(const LorentzVec& x, const LorentzVec& y);
double lorentz_inner(const LorentzVec& x, const TangentVec& v);
double lorentz_inner(const TangentVec& u, const TangentVec& v);

// sqrt(k) * arcosh(-<x,y>_L / k), arcosh argument clamped to >= 1.
// Throws NumericError if either point violates the hyperboloid constraint
// by more than 1e-4.
double lorentz_dist(const LorentzVec& x, const LorentzVec& y);

// cosh(||v||) * o + sinh(||v||) * v / ||v||. Returns the origin exactly for
// ||v|| < 1e-12.
LorentzVec exp_origin(const TangentVec& v);

// Inverse of exp_origin. Returns the zero tangent vector for x == origin.
TangentVec log_origin(const LorentzVec& x);

// sqrt(k) * arcosh(1 + 2k||x-y||^2 / ((k-||x||^2)(k-||y||^2))), argument
// clamped to >= 1. Throws NumericError if a point is on or outside the
// boundary.
double poincare_dist(const PoincareVec& x, const PoincareVec& y);

// Stereographic projection p_i = x_i / (1 + x0); an isometry between the two
// distance functions.
PoincareVec lorentz_to_poincare(const LorentzVec& x);

// How far <x,x>_L is from -k.
double lorentz_constraint_residual(const LorentzVec& x);

}  // namespace head::geo
