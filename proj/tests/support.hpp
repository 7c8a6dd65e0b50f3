#pragma once

#include "mvg/dataset.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

namespace mvg::test {

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1.0);
}

inline double vec_err(const Vec3& got, const Vec3& want) {
  return (got - want).norm() / std::max(want.norm(), 1.0);
}

struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
  Vec3 vec(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }
  Vec3 unit() {
    std::normal_distribution<double> n;
    Vec3 v(n(engine), n(engine), n(engine));
    return v.normalized();
  }
  Vec3 image_point(double half = 0.5) { return {uniform(-half, half), uniform(-half, half), 1.0}; }
  Mat3 rotation() { return rodrigues(unit() * uniform(0.0, 3.0)); }
};

// Frontal circle of radius r centered on the optical axis at depth z.
inline CurveJet<double> frontal_circle(double r, double z, double s) {
  CurveJet<double> j;
  j.point = {r * std::cos(s), r * std::sin(s), z};
  j.d1 = {-r * std::sin(s), r * std::cos(s), 0.0};
  j.d2 = {-r * std::cos(s), -r * std::sin(s), 0.0};
  j.d3 = {r * std::sin(s), -r * std::cos(s), 0.0};
  return j;
}

}  // namespace mvg::test
