#pragma once

// Planar two-link arm
//
//   M(theta) theta_dd + C(theta, theta_d) + G(theta) = tau
//
// with point masses m1, m2 at the link tips, viscous joint damping d1, d2 and
// angles measured from the upright position (theta = 0 is the upper
// equilibrium, theta = (-pi, 0) the lower one). Torque is held constant over
// each sampling interval and the ODE is integrated with classical RK4.

#include <cstdint>
#include <stdexcept>

#include <Eigen/Core>

#include "ddc/random.hpp"
#include "ddc/types.hpp"

namespace ddc::plant {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Which velocity-product vector C(theta, theta_d) to use.
///
/// Lagrangian is the Euler-Lagrange vector for the inertia matrix below
/// (second entry  m2 l1 l2 theta1_d^2 sin(theta2)); it conserves energy when
/// undamped. AsPrinted uses  -m2 l1 l2 theta1_d theta2_d sin(theta2)  for the
/// second entry, as the model is often quoted; it is not energy consistent.
enum class CoriolisModel { Lagrangian, AsPrinted };

struct RobotParams {
  double m1 = 0.3;   ///< kg
  double m2 = 0.1;   ///< kg
  double l1 = 0.4;   ///< m
  double l2 = 0.2;   ///< m
  double d1 = 0.001; ///< kg m^2 / s
  double d2 = 0.001; ///< kg m^2 / s
  double g = 9.81;   ///< gravitational acceleration, m/s^2
  CoriolisModel coriolis = CoriolisModel::Lagrangian;

  /// Throws std::invalid_argument unless masses, lengths, g > 0 and damping >= 0.
  void validate() const;
};

struct PlantState {
  Vec2 theta = Vec2::Zero();
  Vec2 theta_dot = Vec2::Zero();
};

/// Raised when the integrated state stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Mat2 inertia(const RobotParams& p, const Vec2& theta);
Vec2 velocity_terms(const RobotParams& p, const Vec2& theta, const Vec2& theta_dot);
Vec2 gravity_terms(const RobotParams& p, const Vec2& theta);

/// theta_dd = M^{-1} (tau - C - G). Throws std::invalid_argument on non-finite input.
Vec2 acceleration(const RobotParams& p, const Vec2& theta, const Vec2& theta_dot, const Vec2& tau);

/// RK4 over dt with `substeps` equal internal steps, tau held constant.
PlantState step(const RobotParams& p, const PlantState& s, const Vec2& tau, double dt,
                int substeps = 10);

/// 1/2 theta_d' M theta_d + (m1 + m2) g l1 cos(theta1) + m2 g l2 cos(theta1 + theta2)
double mechanical_energy(const RobotParams& p, const PlantState& s);

struct NoiseModel {
  double bound = 1e-3;  ///< infinity-norm bound, rad
  std::uint64_t seed = 0;
};

/// Stateful i.i.d. noise stream, each component uniform on [-bound, bound].
class MeasurementNoise {
 public:
  explicit MeasurementNoise(const NoiseModel& model) : bound_(model.bound), rng_(model.seed) {}
  Vec2 sample();
  double bound() const { return bound_; }

 private:
  double bound_;
  Rng rng_;
};

/// y = theta + noise; bound 0 gives y == theta exactly.
Vec2 measure(const PlantState& s, MeasurementNoise& noise);

}  // namespace ddc::plant
