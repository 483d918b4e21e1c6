#include "gcstiff/identification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>

#include "gcstiff/csv.hpp"
#include "gcstiff/errors.hpp"

namespace gcstiff {

namespace {

constexpr double kMm = 1e3;
/// Two-sided 95% quantile of the standard normal distribution.
constexpr double kZ95 = 1.959963984540054;

/// Per-sample precomputation. With J and F fixed, the translational
/// deflection is linear in the joint compliances: dp = lever * (1 / K).
struct SampleTerms {
  Eigen::Matrix<double, 3, Eigen::Dynamic> lever;
  double compensated_angle = 0.0;
};

std::vector<SampleTerms> precompute(const RobotModeld& geometry, int compensator_joint,
                                    const std::vector<CalibrationSample>& samples) {
  std::vector<SampleTerms> terms;
  terms.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.q.size() != geometry.dof()) {
      throw InvalidModelError("calibration sample has " + std::to_string(s.q.size()) + " joints, model has " +
                              std::to_string(geometry.dof()));
    }
    const auto jac = jacobianTheta(geometry, Configurationd(s.q));
    const Eigen::VectorXd joint_torque = jac.transpose() * s.force.vector();
    SampleTerms t;
    t.lever = jac.topRows<3>() * joint_torque.asDiagonal();
    t.compensated_angle = s.q(compensator_joint - 1);
    terms.push_back(std::move(t));
  }
  return terms;
}

/// Maps between physical parameters and the unconstrained search space.
Eigen::VectorXd toSearch(const ParameterLayout& layout, const Eigen::VectorXd& values) {
  Eigen::VectorXd x = values;
  for (Eigen::Index i = 0; i < layout.size(); ++i) {
    if (layout.isPositive(i)) x(i) = std::log(values(i));
  }
  return x;
}

Eigen::VectorXd fromSearch(const ParameterLayout& layout, const Eigen::VectorXd& x) {
  Eigen::VectorXd values = x;
  for (Eigen::Index i = 0; i < layout.size(); ++i) {
    if (layout.isPositive(i)) values(i) = std::exp(x(i));
  }
  return values;
}

Eigen::VectorXd predict(const ParameterLayout& layout, int compensator_joint, const std::vector<SampleTerms>& terms,
                        const Eigen::VectorXd& values) {
  const CompensatorParamsd comp = unpackCompensator(values, layout.dof, compensator_joint);
  const Eigen::VectorXd base_stiffness = values.head(layout.dof).cwiseInverse();
  Eigen::VectorXd out(3 * static_cast<Eigen::Index>(terms.size()));
  Eigen::VectorXd inv_stiffness(layout.dof);
  for (std::size_t s = 0; s < terms.size(); ++s) {
    Eigen::VectorXd K = base_stiffness;
    K(compensator_joint - 1) += jointStiffnessContribution(comp, terms[s].compensated_angle);
    inv_stiffness = K.cwiseInverse();
    out.segment<3>(3 * static_cast<Eigen::Index>(s)) = terms[s].lever * inv_stiffness;
  }
  return out;
}

std::string describeCombination(const ParameterLayout& layout, const Eigen::VectorXd& direction) {
  std::string text;
  for (Eigen::Index i = 0; i < direction.size(); ++i) {
    if (std::abs(direction(i)) < 0.1) continue;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s%.2f*%s", text.empty() ? "" : (direction(i) < 0 ? " - " : " + "),
                  text.empty() ? direction(i) : std::abs(direction(i)), layout.name(i).c_str());
    text += buf;
  }
  return text;
}

}  // namespace

std::string ParameterLayout::name(Eigen::Index i) const {
  if (i < dof) return "k" + std::to_string(i + 1);
  static const char* names[] = {"kc", "s0", "L", "ax", "ay"};
  return names[i - dof];
}

std::string ParameterLayout::reportUnit(Eigen::Index i) const {
  if (i < dof) return "rad/(N*m)";
  if (i == kc()) return "m/N";
  return "mm";
}

Eigen::VectorXd packParameters(const RobotModeld& model, const CompensatorParamsd& comp) {
  const ParameterLayout layout{model.dof()};
  Eigen::VectorXd values(layout.size());
  values.head(layout.dof) = model.compliances();
  values(layout.kc()) = 1.0 / comp.stiffness();
  values(layout.s0()) = comp.freeLength();
  values(layout.L()) = comp.linkLength();
  values(layout.ax()) = comp.ax();
  values(layout.ay()) = comp.ay();
  return values;
}

RobotModeld unpackModel(const RobotModeld& geometry, const Eigen::VectorXd& values) {
  return geometry.withCompliances(values.head(geometry.dof()));
}

CompensatorParamsd unpackCompensator(const Eigen::VectorXd& values, Eigen::Index dof, int joint_index) {
  const ParameterLayout layout{dof};
  if (values.size() != layout.size()) {
    throw InvalidModelError("parameter vector has " + std::to_string(values.size()) + " entries, expected " +
                            std::to_string(layout.size()));
  }
  return CompensatorParamsd(1.0 / values(layout.kc()), values(layout.s0()), values(layout.L()),
                            values(layout.ax()), values(layout.ay()), joint_index);
}

SimulationResult simulateCalibration(const RobotModeld& model, const std::vector<CompensatorParamsd>& comps_true,
                                     const std::vector<Eigen::VectorXd>& poses, const std::vector<Wrenchd>& forces,
                                     double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw InvalidConfigurationError("noise sigma must be non-negative");
  if (poses.size() != forces.size()) {
    throw InvalidConfigurationError("calibration plan has " + std::to_string(poses.size()) + " poses but " +
                                    std::to_string(forces.size()) + " wrenches");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);

  SimulationResult out;
  out.samples.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    CalibrationSample sample{poses[i], forces[i], Eigen::Vector3d::Zero()};
    try {
      const Configurationd cfg(poses[i]);
      sample.measured_dp =
          deflectionUnderLoad(model, jointStiffness(model, comps_true, poses[i]), cfg, forces[i]).d_position;
    } catch (const SingularConfigurationError&) {
      out.excluded.push_back(i);
      continue;
    } catch (const SingularGeometryError&) {
      out.excluded.push_back(i);
      continue;
    }
    if (noise_sigma > 0.0) {
      for (int k = 0; k < 3; ++k) sample.measured_dp(k) += noise(rng);
    }
    out.samples.push_back(std::move(sample));
  }
  return out;
}

ExcitationPlan randomExcitation(const Eigen::VectorXd& center, const Eigen::VectorXd& spread, std::size_t count,
                                double force_min, double force_max, double moment_max, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> magnitude(force_min, force_max);
  std::normal_distribution<double> gauss(0.0, 1.0);

  ExcitationPlan plan;
  plan.poses.reserve(count);
  plan.forces.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::VectorXd q(center.size());
    for (Eigen::Index j = 0; j < q.size(); ++j) q(j) = center(j) + spread(j) * unit(rng);
    Eigen::Vector3d direction;
    do {
      direction = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
    } while (direction.norm() < 1e-6);
    Wrenchd w;
    w.force = direction.normalized() * magnitude(rng);
    w.moment = Eigen::Vector3d(unit(rng), unit(rng), unit(rng)) * moment_max;
    plan.poses.push_back(std::move(q));
    plan.forces.push_back(w);
  }
  return plan;
}

Eigen::VectorXd predictDeflections(const RobotModeld& geometry, int compensator_joint,
                                   const std::vector<CalibrationSample>& samples, const Eigen::VectorXd& values) {
  const ParameterLayout layout{geometry.dof()};
  return predict(layout, compensator_joint, precompute(geometry, compensator_joint, samples), values);
}

Eigen::Index parameterIndex(const ParameterLayout& layout, const std::string& name) {
  for (Eigen::Index i = 0; i < layout.size(); ++i) {
    if (layout.name(i) == name) return i;
  }
  throw InvalidConfigurationError("unknown parameter '" + name + "'");
}

ParameterEstimate identify(const RobotModeld& geometry, int compensator_joint,
                           const std::vector<CalibrationSample>& samples, const Eigen::VectorXd& initial_guess,
                           const IdentificationOptions& options) {
  const ParameterLayout layout{geometry.dof()};
  const Eigen::Index p = layout.size();
  if (compensator_joint < 1 || compensator_joint > geometry.dof()) {
    throw InvalidConfigurationError("compensator joint index " + std::to_string(compensator_joint) +
                                    " outside 1.." + std::to_string(geometry.dof()));
  }
  if (initial_guess.size() != p) {
    throw InvalidModelError("initial guess has " + std::to_string(initial_guess.size()) + " entries, expected " +
                            std::to_string(p));
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    if (layout.isPositive(i) && !(initial_guess(i) > 0.0)) {
      throw InvalidModelError("initial guess for " + layout.name(i) + " must be positive");
    }
  }
  std::vector<bool> fixed(static_cast<std::size_t>(p), false);
  for (const Eigen::Index i : options.fixed) {
    if (i < 0 || i >= p) throw InvalidConfigurationError("fixed parameter index " + std::to_string(i) + " out of range");
    fixed[static_cast<std::size_t>(i)] = true;
  }
  // Columns of the search: the free parameters in layout order.
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!fixed[static_cast<std::size_t>(i)]) free.push_back(i);
  }
  const auto pf = static_cast<Eigen::Index>(free.size());
  if (pf == 0) throw InvalidConfigurationError("every parameter is fixed");

  const Eigen::Index m = 3 * static_cast<Eigen::Index>(samples.size());
  if (m < pf) {
    throw UnidentifiableError("need at least " + std::to_string(pf) + " scalar equations, have " +
                                  std::to_string(m),
                              {});
  }

  const auto terms = precompute(geometry, compensator_joint, samples);
  Eigen::VectorXd measured(m);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    measured.segment<3>(3 * static_cast<Eigen::Index>(s)) = samples[s].measured_dp;
  }

  // Residual in search space; infinite when the trial point is not a
  // physically valid compensator.
  const auto residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) -> double {
    try {
      r = measured - predict(layout, compensator_joint, terms, fromSearch(layout, x));
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
    const double sse = r.squaredNorm();
    return std::isfinite(sse) ? sse : std::numeric_limits<double>::infinity();
  };
  const auto stepFor = [&](const Eigen::VectorXd& x, Eigen::Index i) {
    return layout.isPositive(i) ? options.relative_step : options.relative_step * std::max(std::abs(x(i)), 1e-3);
  };
  const auto jacobian = [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd jac(m, pf);
    Eigen::VectorXd plus(m), minus(m);
    for (Eigen::Index c = 0; c < pf; ++c) {
      const Eigen::Index i = free[static_cast<std::size_t>(c)];
      const double h = stepFor(x, i);
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      if (!std::isfinite(residual(xp, plus)) || !std::isfinite(residual(xm, minus))) {
        throw NonConvergenceError("parameter Jacobian left the valid compensator region at " + layout.name(i),
                                  std::numeric_limits<double>::infinity());
      }
      // r = measured - predicted, so d(predicted)/dx = -(dr/dx).
      jac.col(c) = (minus - plus) / (2.0 * h);
    }
    return jac;
  };
  // Column scaling makes the conditioning test independent of units.
  const auto scaledNormal = [&](const Eigen::MatrixXd& jac, Eigen::VectorXd& scale) {
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    scale = normal.diagonal().cwiseSqrt();
    for (Eigen::Index i = 0; i < pf; ++i) scale(i) = scale(i) > 0.0 ? 1.0 / scale(i) : 0.0;
    return Eigen::MatrixXd(scale.asDiagonal() * normal * scale.asDiagonal());
  };
  const auto checkIdentifiable = [&](const Eigen::MatrixXd& jac) {
    Eigen::VectorXd scale;
    const Eigen::MatrixXd normal = scaledNormal(jac, scale);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double lmax = lambda(pf - 1);
    const double threshold = lmax / options.max_condition;
    if (lambda(0) > threshold) return;
    std::vector<std::string> combos;
    for (Eigen::Index k = 0; k < pf && lambda(k) <= threshold; ++k) {
      Eigen::VectorXd direction = Eigen::VectorXd::Zero(p);
      for (Eigen::Index c = 0; c < pf; ++c) direction(free[static_cast<std::size_t>(c)]) = eig.eigenvectors()(c, k);
      combos.push_back(describeCombination(layout, direction));
    }
    const double cond = lambda(0) > 0.0 ? lmax / lambda(0) : std::numeric_limits<double>::infinity();
    std::string what = "calibration data do not identify all parameters (condition " + std::to_string(cond) +
                       "); null-space combinations:";
    for (const auto& c : combos) what += " [" + c + "]";
    throw UnidentifiableError(what, combos);
  };

  Eigen::VectorXd x = toSearch(layout, initial_guess);
  Eigen::VectorXd r(m), trial_r(m);
  double sse = residual(x, r);
  if (!std::isfinite(sse)) throw InvalidModelError("initial guess is not a valid compensator geometry");

  Eigen::MatrixXd jac = jacobian(x);
  checkIdentifiable(jac);

  double mu = 1e-3;
  int iter = 0;
  bool converged = false;
  while (iter < options.max_iterations) {
    ++iter;
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    const Eigen::VectorXd gradient = jac.transpose() * r;
    Eigen::MatrixXd damped = normal;
    damped.diagonal() += mu * normal.diagonal();
    const Eigen::VectorXd step = damped.ldlt().solve(gradient);
    Eigen::VectorXd trial = x;
    for (Eigen::Index c = 0; c < pf; ++c) trial(free[static_cast<std::size_t>(c)]) += step(c);
    const double trial_sse = residual(trial, trial_r);

    if (trial_sse < sse) {
      double step_size = 0.0;
      for (Eigen::Index c = 0; c < pf; ++c) {
        const Eigen::Index i = free[static_cast<std::size_t>(c)];
        const double rel = layout.isPositive(i) ? 1.0 : 1.0 / std::max(std::abs(x(i)), 1e-3);
        step_size = std::max(step_size, std::abs(step(c)) * rel);
      }
      const double improvement = (sse - trial_sse) / sse;
      const double predicted = step.dot(2.0 * gradient - normal * step) / sse;
      x = trial;
      r = trial_r;
      sse = trial_sse;
      mu = std::max(mu / 10.0, 1e-12);
      if (step_size < 1e-12 || (improvement < 1e-12 && predicted < 1e-12) || sse == 0.0) {
        converged = true;
        break;
      }
      jac = jacobian(x);
    } else {
      mu *= 10.0;
      // No descent direction left at working precision: at the minimum.
      if (mu > 1e16) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    throw NonConvergenceError("identification did not converge in " + std::to_string(options.max_iterations) +
                                  " iterations, residual rms " + std::to_string(std::sqrt(sse / m)) + " m",
                              std::sqrt(sse / m));
  }

  jac = jacobian(x);
  checkIdentifiable(jac);

  ParameterEstimate est;
  est.layout = layout;
  est.values = fromSearch(layout, x);
  est.iterations = iter;
  est.sample_count = static_cast<int>(samples.size());
  est.residual_rms = std::sqrt(sse / static_cast<double>(m));
  est.fixed = fixed;

  const Eigen::Index dof_resid = m - pf;
  const double sigma_sq = dof_resid > 0 ? sse / static_cast<double>(dof_resid)
                                        : (sse > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  Eigen::VectorXd scale;
  const Eigen::MatrixXd normal_scaled = scaledNormal(jac, scale);
  const Eigen::MatrixXd inv_scaled = normal_scaled.ldlt().solve(Eigen::MatrixXd::Identity(pf, pf));
  const Eigen::MatrixXd cov_free = sigma_sq * (scale.asDiagonal() * inv_scaled * scale.asDiagonal());

  // Delta method back to physical units: d value / d log value = value.
  est.covariance = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index a = 0; a < pf; ++a) {
    const Eigen::Index i = free[static_cast<std::size_t>(a)];
    const double ci = layout.isPositive(i) ? est.values(i) : 1.0;
    for (Eigen::Index b = 0; b < pf; ++b) {
      const Eigen::Index j = free[static_cast<std::size_t>(b)];
      const double cj = layout.isPositive(j) ? est.values(j) : 1.0;
      est.covariance(i, j) = ci * cov_free(a, b) * cj;
    }
  }
  est.covariance = (0.5 * (est.covariance + est.covariance.transpose())).eval();
  est.ci95 = kZ95 * est.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  est.unidentifiable.resize(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto k = static_cast<std::size_t>(i);
    est.unidentifiable[k] = !fixed[k] && !(est.ci95(i) <= 10.0 * std::abs(est.values(i)));
  }
  return est;
}

void writeSamplesCsv(std::ostream& out, const std::vector<CalibrationSample>& samples, Eigen::Index dof) {
  using csv::formatExact;
  out << "# units: q rad; Fx,Fy,Fz N; Mx,My,Mz N*m; dx,dy,dz mm\n";
  for (Eigen::Index j = 1; j <= dof; ++j) out << 'q' << j << ',';
  out << "Fx,Fy,Fz,Mx,My,Mz,dx,dy,dz\n";
  for (const auto& s : samples) {
    for (Eigen::Index j = 0; j < dof; ++j) out << formatExact(s.q(j)) << ',';
    const auto w = s.force.vector();
    for (int k = 0; k < 6; ++k) out << formatExact(w(k)) << ',';
    out << formatExact(s.measured_dp(0) * kMm) << ',' << formatExact(s.measured_dp(1) * kMm) << ','
        << formatExact(s.measured_dp(2) * kMm) << '\n';
  }
}

std::vector<CalibrationSample> readSamplesCsv(std::istream& in, Eigen::Index dof) {
  std::vector<std::string> expected;
  for (Eigen::Index j = 1; j <= dof; ++j) expected.push_back("q" + std::to_string(j));
  for (const char* name : {"Fx", "Fy", "Fz", "Mx", "My", "Mz", "dx", "dy", "dz"}) expected.emplace_back(name);

  std::vector<CalibrationSample> samples;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = csv::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = csv::splitFields(text);
    if (!header_seen) {
      if (fields != expected) throw ParseError("unexpected samples header", line_no, "samples");
      header_seen = true;
      continue;
    }
    if (fields.size() != expected.size()) {
      throw ParseError("expected " + std::to_string(expected.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no, "samples");
    }
    CalibrationSample s;
    s.q.resize(dof);
    Eigen::Matrix<double, 6, 1> w;
    try {
      for (Eigen::Index j = 0; j < dof; ++j) s.q(j) = csv::parseDouble(fields[static_cast<std::size_t>(j)]);
      for (int k = 0; k < 6; ++k) w(k) = csv::parseDouble(fields[static_cast<std::size_t>(dof + k)]);
      for (int k = 0; k < 3; ++k) {
        s.measured_dp(k) = csv::parseDouble(fields[static_cast<std::size_t>(dof + 6 + k)]) / kMm;
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no, "samples");
    }
    if (!s.q.allFinite() || !w.allFinite() || !s.measured_dp.allFinite()) {
      throw ParseError("non-finite value", line_no, "samples");
    }
    s.force = Wrenchd::fromVector(w);
    samples.push_back(std::move(s));
  }
  if (!header_seen) throw ParseError("missing samples header", line_no, "samples");
  return samples;
}

void writeEstimateReport(std::ostream& out, const ParameterEstimate& est) {
  const auto& layout = est.layout;
  char buf[160];
  out << "# Elastostatic and compensator parameters\n";
  out << "# confidence intervals: 95% half-widths, normal approximation of sigma^2 (J^T J)^-1\n";
  std::snprintf(buf, sizeof(buf), "# samples: %d, residual rms: %.6g mm, iterations: %d\n", est.sample_count,
                est.residual_rms * kMm, est.iterations);
  out << buf;
  std::snprintf(buf, sizeof(buf), "%-10s %-10s %-16s %-16s %s\n", "parameter", "unit", "value", "ci95",
                "identifiable");
  out << buf;
  for (Eigen::Index i = 0; i < layout.size(); ++i) {
    const double factor = layout.reportUnit(i) == "mm" ? kMm : 1.0;
    std::snprintf(buf, sizeof(buf), "%-10s %-10s %-16.9g %-16.6g %s\n", layout.name(i).c_str(),
                  layout.reportUnit(i).c_str(), est.values(i) * factor, est.ci95(i) * factor,
                  est.fixed[static_cast<std::size_t>(i)] ? "fixed"
                  : est.unidentifiable[static_cast<std::size_t>(i)] ? "no"
                                                                     : "yes");
    out << buf;
  }
}

}  // namespace gcstiff
