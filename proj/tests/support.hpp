#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <random>

#include "vdg/geometry.hpp"

namespace vdg::test {

inline std::mt19937_64 rng_for(std::uint64_t seed) {
  std::seed_seq seq{seed, std::uint64_t{0x5eed}};
  return std::mt19937_64(seq);
}

inline Eigen::Vector3d random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-6) v = Eigen::Vector3d(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline RigidTransform random_transform(std::mt19937_64& rng, FrameId to, FrameId from,
                                       double translation_scale = 1.0) {
  return RigidTransform(std::move(to), std::move(from), random_rotation(rng),
                        random_vec(rng, translation_scale));
}

}  // namespace vdg::test
