#pragma once

#include <cmath>
#include <string>

#include "gcstiff/errors.hpp"

namespace gcstiff {

/// Spring-based gravity compensator spanning one actuated joint.
///
/// Node P2 sits on the joint axis, P1 is the spring attachment on the
/// moving link at distance L from P2, and P0 is the attachment on the
/// preceding link located by (a_x, a_y) relative to P2. The spring runs
/// P0-P1; its length depends on the joint angle q through the angle
/// alpha + q between P2P0 and P2P1.
template <typename Scalar>
class CompensatorParams {
 public:
  /// `stiffness` is K_c in N/m, lengths in m, `joint_index` 1-based.
  CompensatorParams(Scalar stiffness, Scalar free_length, Scalar link_length, Scalar ax, Scalar ay,
                    int joint_index)
      : stiffness_(stiffness),
        free_length_(free_length),
        link_length_(link_length),
        ax_(ax),
        ay_(ay),
        joint_index_(joint_index) {
    using std::atan2;
    using std::hypot;
    if (!(stiffness_ >= Scalar(0)) || !std::isfinite(static_cast<double>(stiffness_))) {
      throw InvalidModelError("compensator stiffness must be finite and non-negative");
    }
    if (!(link_length_ > Scalar(0))) throw InvalidModelError("compensator L must be positive");
    if (!(free_length_ >= Scalar(0))) throw InvalidModelError("compensator s0 must be non-negative");
    if (ax_ == Scalar(0) && ay_ == Scalar(0)) {
      throw InvalidModelError("compensator attachment (a_x, a_y) must not be at the joint axis");
    }
    if (joint_index_ < 1) throw InvalidModelError("compensator joint index is 1-based");
    a_ = hypot(ax_, ay_);
    alpha_ = atan2(ay_, ax_);
  }

  Scalar stiffness() const { return stiffness_; }
  Scalar freeLength() const { return free_length_; }
  Scalar linkLength() const { return link_length_; }
  Scalar ax() const { return ax_; }
  Scalar ay() const { return ay_; }
  int jointIndex() const { return joint_index_; }

  /// |P0 P2|
  Scalar a() const { return a_; }
  /// Angle of P2P0 at q = 0.
  Scalar alpha() const { return alpha_; }

  CompensatorParams withStiffness(Scalar stiffness) const {
    return CompensatorParams(stiffness, free_length_, link_length_, ax_, ay_, joint_index_);
  }

 private:
  Scalar stiffness_;
  Scalar free_length_;
  Scalar link_length_;
  Scalar ax_;
  Scalar ay_;
  int joint_index_;
  Scalar a_;
  Scalar alpha_;
};

namespace detail {

template <typename Scalar>
Scalar checkedLength(const CompensatorParams<Scalar>& p, Scalar q) {
  using std::cos;
  using std::sqrt;
  const Scalar a = p.a();
  const Scalar L = p.linkLength();
  // a^2 + L^2 + 2aL cos(x), written so that it stays non-negative when folded.
  const Scalar half_cos = cos((p.alpha() + q) / Scalar(2));
  const Scalar s = sqrt((a - L) * (a - L) + Scalar(4) * a * L * half_cos * half_cos);
  if (!(s > Scalar(1e-12) * (a + L))) {
    throw SingularGeometryError("compensator spring folded to zero length");
  }
  return s;
}

}  // namespace detail

/// Spring length s(q); always within [|a - L|, a + L].
template <typename Scalar>
Scalar springLength(const CompensatorParams<Scalar>& p, Scalar q) {
  using std::cos;
  using std::sqrt;
  const Scalar a = p.a();
  const Scalar L = p.linkLength();
  const Scalar half_cos = cos((p.alpha() + q) / Scalar(2));
  return sqrt((a - L) * (a - L) + Scalar(4) * a * L * half_cos * half_cos);
}

/// F_s = K_c (s - s0). Negative when the spring is shorter than free length.
template <typename Scalar>
Scalar springForce(const CompensatorParams<Scalar>& p, Scalar q) {
  return p.stiffness() * (springLength(p, q) - p.freeLength());
}

/// Angle phi between P0P1 and P1P2, from sin(phi) = (a / s) sin(alpha + q).
template <typename Scalar>
Scalar transmissionAngle(const CompensatorParams<Scalar>& p, Scalar q) {
  using std::asin;
  using std::sin;
  const Scalar s = detail::checkedLength(p, q);
  Scalar ratio = p.a() / s * sin(p.alpha() + q);
  // |a sin(alpha + q)| <= s holds geometrically; only rounding can exceed it.
  if (ratio > Scalar(1)) ratio = Scalar(1);
  if (ratio < Scalar(-1)) ratio = Scalar(-1);
  return asin(ratio);
}

/// Compensator torque on the joint, M_c = K_c (1 - s0 / s) a L sin(alpha + q).
template <typename Scalar>
Scalar torque(const CompensatorParams<Scalar>& p, Scalar q) {
  using std::sin;
  const Scalar s = detail::checkedLength(p, q);
  return p.stiffness() * (Scalar(1) - p.freeLength() / s) * p.a() * p.linkLength() *
         sin(p.alpha() + q);
}

/// Dimensionless stiffness coefficient eta_q.
template <typename Scalar>
Scalar eta(const CompensatorParams<Scalar>& p, Scalar q) {
  using std::cos;
  using std::sin;
  const Scalar s = detail::checkedLength(p, q);
  const Scalar x = p.alpha() + q;
  const Scalar sx = sin(x);
  const Scalar cx = cos(x);
  const Scalar aL = p.a() * p.linkLength();
  return cx - p.freeLength() / s * (aL / (s * s) * sx * sx + cx);
}

/// K_c a L eta_q in N*m/rad, equal to dM_c/dq. Can be negative.
template <typename Scalar>
Scalar jointStiffnessContribution(const CompensatorParams<Scalar>& p, Scalar q) {
  return p.stiffness() * p.a() * p.linkLength() * eta(p, q);
}

using CompensatorParamsd = CompensatorParams<double>;

}  // namespace gcstiff
