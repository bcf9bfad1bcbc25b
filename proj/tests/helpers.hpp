#pragma once

#include <random>

#include "ephs/geom.hpp"

namespace test_helpers {

using namespace ephs::geom;

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(0x5eed5eedULL);
  return gen;
}

inline double uniform(double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng());
}

inline Vec3 random_vec3(double scale = 1.0) {
  return Vec3(uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale));
}

inline Vec3 random_unit() {
  Vec3 v = random_vec3();
  while (v.norm() < 1e-3) v = random_vec3();
  return v.normalized();
}

inline Twist random_twist(double scale = 1.0) {
  return Twist{random_vec3(scale), random_vec3(scale)};
}

inline Wrench random_wrench(double scale = 1.0) {
  return Wrench{random_vec3(scale), random_vec3(scale)};
}

inline Mat3 random_rotation(double max_angle = 2.5) {
  return exp_so3(random_unit() * uniform(0.0, max_angle));
}

inline GroupElement random_element(Convention c, double max_angle = 2.5) {
  GroupElement q;
  q.convention = c;
  q.R = random_rotation(max_angle);
  q.r = random_vec3(2.0);
  return q;
}

}  // namespace test_helpers
