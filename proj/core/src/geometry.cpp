#include "head/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "head/errors.hpp"

namespace head::geo {

namespace {

constexpr double kCurvatureTol = 1e-12;
constexpr double kConstraintTol = 1e-4;
constexpr double kZeroNorm = 1e-12;

void require_unit_curvature(double k, const char* where) {
  if (std::abs(k - 1.0) > kCurvatureTol) {
    throw UsageError(std::string(where) + ": curvature must be 1, got " + std::to_string(k));
  }
}

void require_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw UsageError(std::string(where) + ": dimension mismatch (" + std::to_string(a) +
                     " vs " + std::to_string(b) + ")");
  }
}

double inner_raw(const std::vector<double>& x, const std::vector<double>& y) {
  double s = -x[0] * y[0];
  for (std::size_t i = 1; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double space_norm(const std::vector<double>& coords) {
  double s = 0.0;
  for (std::size_t i = 1; i < coords.size(); ++i) s += coords[i] * coords[i];
  return std::sqrt(s);
}

}  // namespace

LorentzVec lorentz_origin(std::size_t space_dim, double curvature) {
  require_unit_curvature(curvature, "lorentz_origin");
  LorentzVec o;
  o.coords.assign(space_dim + 1, 0.0);
  o.coords[0] = std::sqrt(curvature);
  o.curvature = curvature;
  return o;
}

TangentVec tangent_at_origin(const std::vector<double>& space) {
  TangentVec v;
  v.coords.reserve(space.size() + 1);
  v.coords.push_back(0.0);
  v.coords.insert(v.coords.end(), space.begin(), space.end());
  return v;
}

double lorentz_inner(const LorentzVec& x, const LorentzVec& y) {
  require_same_dim(x.coords.size(), y.coords.size(), "lorentz_inner");
  return inner_raw(x.coords, y.coords);
}

double lorentz_inner(const LorentzVec& x, const TangentVec& v) {
  require_same_dim(x.coords.size(), v.coords.size(), "lorentz_inner");
  return inner_raw(x.coords, v.coords);
}

double lorentz_inner(const TangentVec& u, const TangentVec& v) {
  require_same_dim(u.coords.size(), v.coords.size(), "lorentz_inner");
  return inner_raw(u.coords, v.coords);
}

double lorentz_constraint_residual(const LorentzVec& x) {
  return std::abs(inner_raw(x.coords, x.coords) + x.curvature);
}

double lorentz_dist(const LorentzVec& x, const LorentzVec& y) {
  require_unit_curvature(x.curvature, "lorentz_dist");
  require_unit_curvature(y.curvature, "lorentz_dist");
  require_same_dim(x.coords.size(), y.coords.size(), "lorentz_dist");
  if (lorentz_constraint_residual(x) > kConstraintTol ||
      lorentz_constraint_residual(y) > kConstraintTol) {
    throw NumericError("lorentz_dist: point violates <x,x>_L = -k beyond 1e-4");
  }
  if (x.coords == y.coords) return 0.0;  // identity of indiscernibles, exactly
  const double k = x.curvature;
  const double arg = -inner_raw(x.coords, y.coords) / k;
  return std::sqrt(k) * std::acosh(std::max(1.0, arg));
}

LorentzVec exp_origin(const TangentVec& v) {
  if (v.coords.empty() || v.coords[0] != 0.0) {
    throw UsageError("exp_origin: tangent vector must have coords[0] == 0");
  }
  const std::size_t d = v.coords.size() - 1;
  const double n = space_norm(v.coords);
  if (n < kZeroNorm) return lorentz_origin(d);
  LorentzVec x;
  x.coords.resize(d + 1);
  x.coords[0] = std::cosh(n);
  const double scale = std::sinh(n) / n;
  for (std::size_t i = 1; i <= d; ++i) x.coords[i] = scale * v.coords[i];
  x.curvature = 1.0;
  return x;
}

TangentVec log_origin(const LorentzVec& x) {
  require_unit_curvature(x.curvature, "log_origin");
  if (lorentz_constraint_residual(x) > kConstraintTol) {
    throw NumericError("log_origin: point violates <x,x>_L = -k beyond 1e-4");
  }
  const std::size_t d = x.coords.size() - 1;
  TangentVec v;
  v.coords.assign(d + 1, 0.0);
  const double sn = space_norm(x.coords);
  if (sn < kZeroNorm) return v;  // x == origin
  const double dist = std::acosh(std::max(1.0, x.coords[0]));
  const double scale = dist / sn;
  for (std::size_t i = 1; i <= d; ++i) v.coords[i] = scale * x.coords[i];
  return v;
}

double poincare_dist(const PoincareVec& x, const PoincareVec& y) {
  require_unit_curvature(x.curvature, "poincare_dist");
  require_unit_curvature(y.curvature, "poincare_dist");
  require_same_dim(x.coords.size(), y.coords.size(), "poincare_dist");
  const double k = x.curvature;
  double nx = 0.0, ny = 0.0, dxy = 0.0;
  for (std::size_t i = 0; i < x.coords.size(); ++i) {
    nx += x.coords[i] * x.coords[i];
    ny += y.coords[i] * y.coords[i];
    const double diff = x.coords[i] - y.coords[i];
    dxy += diff * diff;
  }
  if (k * nx >= 1.0 || k * ny >= 1.0) {
    throw NumericError("poincare_dist: point on or outside the unit ball");
  }
  const double arg = 1.0 + 2.0 * k * dxy / ((k - nx) * (k - ny));
  return std::sqrt(k) * std::acosh(std::max(1.0, arg));
}

PoincareVec lorentz_to_poincare(const LorentzVec& x) {
  require_unit_curvature(x.curvature, "lorentz_to_poincare");
  PoincareVec p;
  p.curvature = x.curvature;
  p.coords.resize(x.coords.size() - 1);
  const double denom = 1.0 + x.coords[0];
  for (std::size_t i = 1; i < x.coords.size(); ++i) p.coords[i - 1] = x.coords[i] / denom;
  return p;
}

}  // namespace head::geo
