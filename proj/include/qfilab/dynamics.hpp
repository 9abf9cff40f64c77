#pragma once
// Equations of motion q'' = -Gamma qd qd - V^,a on a fixed energy level,
// integrated with an embedded 5(4) Runge-Kutta pair and monitored for
// constraint and first-integral drift.

#include <optional>
#include <string>
#include <vector>

#include "qfilab/qfi.hpp"
#include "qfilab/quadrature.hpp"

namespace qfi {

struct State {
  double t = 0.0;
  std::vector<double> q;
  std::vector<double> qdot;
};

struct MonitorRecord {
  double t = 0.0;
  double energy_error = 0.0;  // H - E0
  std::vector<double> values;  // one per registered first integral
};

struct IntegratorStats {
  int steps = 0;
  int rejections = 0;
  double max_error_estimate = 0.0;
};

struct Trajectory {
  std::vector<State> states;  // every accepted step, starting with s0
  std::vector<MonitorRecord> monitors;
  std::vector<State> samples;  // dense output at the requested times
  IntegratorStats stats;
};

struct IntegrateOptions {
  double tol = 1e-10;
  std::vector<double> sample_times;
  std::vector<QfiSpec> monitors;
  /// Steps landing closer than this to an excluded locus are rejected.
  double guard = 1e-3;
  /// |H - E0| allowed at s0.
  double constraint_tol = 1e-8;
  double min_step = 1e-13;
  int max_steps = 2'000'000;
};

/// Thrown when the step size collapses; carries everything integrated so far.
class IntegrationAborted : public Error {
 public:
  IntegrationAborted(const std::string& what, Trajectory partial)
      : Error(ErrorCode::StepSizeUnderflow, what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }
  const State& last_good() const { return partial_.states.back(); }

 private:
  Trajectory partial_;
};

/// qd = alpha * direction with 1/2 alpha^2 g(dir, dir) = E0 - V(q0), alpha >= 0.
State initial_state_on_shell(const ConstrainedSystem& sys, std::span<const double> q0, std::span<const double> direction,
                             double null_tol = 1e-12);

/// q'' at (q, qd).
std::vector<double> acceleration(const ConstrainedSystem& sys, std::span<const double> q, std::span<const double> qd);

Trajectory integrate(const ConstrainedSystem& sys, const State& s0, double t_end, const IntegrateOptions& opts = {});

struct DriftRecord {
  double energy = 0.0;  // max |H - E0|
  std::vector<std::string> names;
  std::vector<double> initial;
  std::vector<double> drift;  // max |I(t) - I(0)|
  double max_relative_drift() const;  // max over integrals of drift / max(1, |I(0)|)
};

DriftRecord monitor_report(const ConstrainedSystem& sys, const Trajectory& traj, const std::vector<QfiSpec>& qfis,
                           const std::vector<std::string>& names = {});

}  // namespace qfi
