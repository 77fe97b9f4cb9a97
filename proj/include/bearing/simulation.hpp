#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "bearing/error.hpp"
#include "bearing/graph.hpp"

namespace bearing {

enum class Method { Euler, RK4 };

constexpr std::string_view to_string(Method m) { return m == Method::Euler ? "euler" : "rk4"; }

inline Method parse_method(std::string_view s) {
  if (s == "euler") return Method::Euler;
  if (s == "rk4") return Method::RK4;
  throw Error(ErrorCode::ParseError, "unknown integration method '" + std::string(s) + "'");
}

struct IntegratorConfig {
  Method method = Method::RK4;
  double dt = 0.01;
  double max_time = 100.0;
  /// Stop once |f(x)| < tolerance * (1 + |x|). Zero disables early exit.
  double tolerance = 1e-9;
  Index record_stride = 1;
};

enum class Termination { Converged, MaxTime, Error };

constexpr std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxTime: return "max-time";
    case Termination::Error: return "error";
  }
  return "unknown";
}

/// Scalar quantity sampled alongside the state.
struct Observer {
  std::string name;
  std::function<double(const Eigen::VectorXd&)> fn;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  /// Column names of `samples`; the first is always "field_norm".
  std::vector<std::string> columns;
  std::vector<std::vector<double>> samples;
  Termination termination = Termination::MaxTime;
  std::string error;
  Index steps = 0;

  const Eigen::VectorXd& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

/// Fixed-step integration of x' = field(x).
///
/// The initial state is always the first sample. Every `record_stride`-th
/// step is stored, and the last state reached is stored regardless of the
/// stride. An `Error` thrown by the field (e.g. two agents meeting) ends the
/// run with Termination::Error and keeps everything recorded so far.
template <class Field>
Trajectory integrate(Field&& field, Eigen::VectorXd x0, const IntegratorConfig& cfg,
                     const std::vector<Observer>& observers = {}) {
  if (!(cfg.dt > 0.0) || !(cfg.max_time > 0.0)) {
    throw Error(ErrorCode::ValidationError, "integrator needs dt > 0 and max_time > 0");
  }
  const Index stride = std::max<Index>(1, cfg.record_stride);
  const auto max_steps = static_cast<Index>(std::ceil(cfg.max_time / cfg.dt - 1e-9));

  Trajectory traj;
  traj.columns.push_back("field_norm");
  for (const auto& o : observers) traj.columns.push_back(o.name);

  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd k1, k2, k3, k4;
  Index step = 0;
  Index last_recorded = -1;

  auto record = [&](double field_norm) {
    traj.times.push_back(static_cast<double>(step) * cfg.dt);
    traj.states.push_back(x);
    std::vector<double> row;
    row.reserve(traj.columns.size());
    row.push_back(field_norm);
    for (const auto& o : observers) {
      try {
        row.push_back(o.fn(x));
      } catch (const Error&) {
        row.push_back(std::nan(""));
      }
    }
    traj.samples.push_back(std::move(row));
    last_recorded = step;
  };

  try {
    k1 = field(x);
  } catch (const Error& e) {
    traj.termination = Termination::Error;
    traj.error = e.what();
    record(std::nan(""));
    return traj;
  }
  record(k1.norm());

  const double h = cfg.dt;
  while (true) {
    if (cfg.tolerance > 0.0 && k1.norm() < cfg.tolerance * (1.0 + x.norm())) {
      traj.termination = Termination::Converged;
      break;
    }
    if (step >= max_steps) {
      traj.termination = Termination::MaxTime;
      break;
    }
    try {
      if (cfg.method == Method::Euler) {
        x += h * k1;
      } else {
        k2 = field(x + 0.5 * h * k1);
        k3 = field(x + 0.5 * h * k2);
        k4 = field(x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      ++step;
      k1 = field(x);
    } catch (const Error& e) {
      traj.termination = Termination::Error;
      traj.error = e.what();
      break;
    }
    if (step % stride == 0) record(k1.norm());
  }
  if (last_recorded != step) record(traj.termination == Termination::Error ? std::nan("") : k1.norm());
  traj.steps = step;
  return traj;
}

/// Largest dt * lambda_max for which the one-step method is stable on
/// x' = -L x with L symmetric positive semi-definite.
constexpr double stability_limit(Method m) { return m == Method::Euler ? 2.0 : 2.78; }

struct StabilityVerdict {
  bool stable = false;
  double lambda_max = 0.0;
  double max_stable_dt = 0.0;  // stability_limit / lambda_max
  double suggested_dt = 0.0;   // 0.5 / lambda_max
};

inline StabilityVerdict stability_check(double lambda_max, const IntegratorConfig& cfg) {
  StabilityVerdict v;
  v.lambda_max = lambda_max;
  if (!(lambda_max > 0.0)) {
    v.stable = true;
    v.max_stable_dt = std::numeric_limits<double>::infinity();
    v.suggested_dt = cfg.dt;
    return v;
  }
  v.max_stable_dt = stability_limit(cfg.method) / lambda_max;
  v.suggested_dt = 0.5 / lambda_max;
  v.stable = cfg.dt * lambda_max < stability_limit(cfg.method);
  return v;
}

inline StabilityVerdict stability_check(const Eigen::MatrixXd& laplacian, const IntegratorConfig& cfg) {
  const double lmax = laplacian.size() == 0
                          ? 0.0
                          : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(laplacian, Eigen::EigenvaluesOnly)
                                .eigenvalues()
                                .maxCoeff();
  return stability_check(lmax, cfg);
}

/// Default step when the dynamics matrix is known.
inline double auto_dt(double lambda_max) { return lambda_max > 0.0 ? 0.5 / lambda_max : 1e-2; }

/// Default step when only the initial speed is known.
inline double auto_dt_from_speed(double diameter, double max_speed) {
  if (!(max_speed > 0.0) || !(diameter > 0.0)) return 1e-2;
  return 1e-2 * diameter / max_speed;
}

}  // namespace bearing
