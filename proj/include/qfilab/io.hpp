#pragma once
// Files written by the command-line tool: trajectory CSV, JSON reports and
// declarative key = value specs.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qfilab/scenarios.hpp"

namespace qfi::io {

/// Header: t, q1..qn, qd1..qdn, H_minus_E0, then one column per integral.
std::vector<std::string> csv_header(int n, const std::vector<std::string>& integrals);

/// One row per state, 17 significant digits. Integral values are evaluated
/// from the given specs, so rows can come from steps or dense samples alike.
std::string trajectory_csv(const ConstrainedSystem& sys, const std::vector<State>& states,
                           const std::vector<QfiSpec>& integrals, const std::vector<std::string>& names);

/// Accepted steps with the monitor values recorded during integration.
std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& names);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable parse_csv(const std::string& text);
/// States from a table in the trajectory schema with n coordinates.
std::vector<State> states_from_csv(const CsvTable& table);

std::string report_json(const ScenarioReport& report, int indent = 2);

/// Writes through a temporary file in the same directory and renames it.
void write_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// key = value lines; '#' starts a comment. Duplicate keys raise BadConfig.
using SpecFile = std::map<std::string, std::string>;
SpecFile parse_spec(const std::string& text);

/// "1, 2.5, -3" as numbers.
std::vector<double> parse_list(const std::string& text);

}  // namespace qfi::io
