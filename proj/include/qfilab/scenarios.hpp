#pragma once
// End-to-end reproductions of the worked examples. Each scenario builds its
// system and first integrals, integrates an on-shell trajectory and returns
// numeric checks against the closed forms.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qfilab/dynamics.hpp"
#include "qfilab/expr.hpp"

namespace qfi {

struct Check {
  std::string description;
  double expected = 0.0;
  double observed = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct NamedTrajectory {
  std::string name;
  Trajectory trajectory;
  std::vector<std::string> monitor_names;
};

struct ScenarioReport {
  std::string name;
  std::map<std::string, std::string> params;
  std::vector<Check> checks;
  std::vector<std::string> artifacts;
  std::vector<NamedTrajectory> trajectories;

  bool passed() const;
  const Check* find(std::string_view prefix) const;
  void add(std::string description, double expected, double observed, double tolerance);
  /// Check that passes when observed <= bound.
  void add_bound(std::string description, double observed, double bound) { add(std::move(description), 0.0, observed, bound); }
};

struct ScenarioOptions {
  double tol = 1e-10;  // integrator tolerance
  std::optional<double> horizon;
  std::uint64_t seed = 0;
  int samples = 200;  // dense output and certification points
};

/// Overrides as text; numbers are parsed, expressions stay strings.
using Overrides = std::map<std::string, std::string>;

struct ScenarioInfo {
  std::string name;
  std::string summary;
  std::map<std::string, std::string> defaults;
  std::function<ScenarioReport(const Overrides&, const ScenarioOptions&)> run;
};

const std::vector<ScenarioInfo>& scenario_registry();
const ScenarioInfo& find_scenario(std::string_view name);
/// Unknown override keys raise BadConfig.
ScenarioReport run_scenario(std::string_view name, const Overrides& overrides = {}, const ScenarioOptions& opts = {});

ScenarioReport run_ermakov_spiral(const Overrides& o = {}, const ScenarioOptions& opts = {});
ScenarioReport run_sckv_circles(const Overrides& o = {}, const ScenarioOptions& opts = {});
ScenarioReport run_constant_curvature(const Overrides& o = {}, const ScenarioOptions& opts = {});
ScenarioReport run_flat_lorentzian(const Overrides& o = {}, const ScenarioOptions& opts = {});
ScenarioReport run_no_kv(const Overrides& o = {}, const ScenarioOptions& opts = {});
ScenarioReport run_toda(const Overrides& o = {}, const ScenarioOptions& opts = {});

/// A first integral shipped with one of the scenarios, with the on-shell
/// start and horizon that scenario uses.
struct ShippedQfi {
  std::string name;
  ConstrainedSystem system;
  QfiSpec spec;
  State start;
  double horizon = 1.0;
};

std::vector<ShippedQfi> shipped_qfis(const ScenarioOptions& opts = {});

/// V + 0.01 (1 + |V(q0)|) (q^1 - q0^1): a 1% tilt that breaks every condition.
ScalarField perturbed_potential(const ScalarField& V, std::span<const double> q0);

}  // namespace qfi
