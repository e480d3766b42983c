#include "ddc/plant.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace ddc::plant {

void RobotParams::validate() const {
  if (!(m1 > 0 && m2 > 0 && l1 > 0 && l2 > 0 && g > 0)) {
    throw std::invalid_argument("robot: masses, lengths and g must be positive");
  }
  if (!(d1 >= 0 && d2 >= 0)) throw std::invalid_argument("robot: damping must be nonnegative");
}

Mat2 inertia(const RobotParams& p, const Vec2& theta) {
  const double mt = p.m1 + p.m2;
  const double c2 = std::cos(theta(1));
  Mat2 M;
  M(0, 0) = mt * p.l1 * p.l1 + p.m2 * p.l2 * p.l2 + 2.0 * p.m2 * p.l1 * p.l2 * c2;
  M(1, 0) = p.m2 * p.l2 * p.l2 + p.m2 * p.l1 * p.l2 * c2;
  M(0, 1) = M(1, 0);
  M(1, 1) = p.m2 * p.l2 * p.l2;
  return M;
}

Vec2 velocity_terms(const RobotParams& p, const Vec2& theta, const Vec2& theta_dot) {
  const double h = p.m2 * p.l1 * p.l2 * std::sin(theta(1));
  const double w1 = theta_dot(0);
  const double w2 = theta_dot(1);
  Vec2 c;
  c(0) = -h * (2.0 * w1 * w2 + w2 * w2) + p.d1 * w1;
  if (p.coriolis == CoriolisModel::Lagrangian) {
    c(1) = h * w1 * w1 + p.d2 * w2;
  } else {
    c(1) = -h * w1 * w2 + p.d2 * w2;
  }
  return c;
}

Vec2 gravity_terms(const RobotParams& p, const Vec2& theta) {
  const double mt = p.m1 + p.m2;
  const double s12 = std::sin(theta(0) + theta(1));
  return Vec2(-mt * p.g * p.l1 * std::sin(theta(0)) - p.m2 * p.g * p.l2 * s12,
              -p.m2 * p.g * p.l2 * s12);
}

namespace {

Vec2 accel(const RobotParams& p, const Vec2& theta, const Vec2& theta_dot, const Vec2& tau) {
  const Vec2 rhs = tau - velocity_terms(p, theta, theta_dot) - gravity_terms(p, theta);
  return inertia(p, theta).ldlt().solve(rhs);
}

}  // namespace

Vec2 acceleration(const RobotParams& p, const Vec2& theta, const Vec2& theta_dot, const Vec2& tau) {
  if (!theta.allFinite() || !theta_dot.allFinite() || !tau.allFinite()) {
    throw std::invalid_argument("acceleration: non-finite state or torque");
  }
  return accel(p, theta, theta_dot, tau);
}

PlantState step(const RobotParams& p, const PlantState& s, const Vec2& tau, double dt,
                int substeps) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  if (substeps < 1) throw std::invalid_argument("step: substeps must be positive");
  if (!s.theta.allFinite() || !s.theta_dot.allFinite() || !tau.allFinite()) {
    throw std::invalid_argument("step: non-finite state or torque");
  }
  const double h = dt / substeps;
  Vec2 q = s.theta;
  Vec2 w = s.theta_dot;
  for (int i = 0; i < substeps; ++i) {
    const Vec2 k1q = w;
    const Vec2 k1w = accel(p, q, w, tau);
    const Vec2 k2q = w + 0.5 * h * k1w;
    const Vec2 k2w = accel(p, q + 0.5 * h * k1q, k2q, tau);
    const Vec2 k3q = w + 0.5 * h * k2w;
    const Vec2 k3w = accel(p, q + 0.5 * h * k2q, k3q, tau);
    const Vec2 k4q = w + h * k3w;
    const Vec2 k4w = accel(p, q + h * k3q, k4q, tau);
    q += (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    w += (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    if (!q.allFinite() || !w.allFinite()) throw DivergenceError("plant state diverged");
  }
  return PlantState{q, w};
}

double mechanical_energy(const RobotParams& p, const PlantState& s) {
  const double kinetic = 0.5 * s.theta_dot.dot(inertia(p, s.theta) * s.theta_dot);
  const double potential = (p.m1 + p.m2) * p.g * p.l1 * std::cos(s.theta(0)) +
                           p.m2 * p.g * p.l2 * std::cos(s.theta(0) + s.theta(1));
  return kinetic + potential;
}

Vec2 MeasurementNoise::sample() {
  const double a = rng_.uniform(-bound_, bound_);
  const double b = rng_.uniform(-bound_, bound_);
  return Vec2(a, b);
}

Vec2 measure(const PlantState& s, MeasurementNoise& noise) { return s.theta + noise.sample(); }

}  // namespace ddc::plant
