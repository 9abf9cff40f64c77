#include "qfilab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <limits>
#include <fstream>
#include "json.hpp"
#include <sstream>

namespace qfi::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string number(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error(ErrorCode::ParseError, "not a number: '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::vector<std::string> csv_header(int n, const std::vector<std::string>& integrals) {
  std::vector<std::string> h{"t"};
  for (int a = 1; a <= n; ++a) h.push_back("q" + std::to_string(a));
  for (int a = 1; a <= n; ++a) h.push_back("qd" + std::to_string(a));
  h.push_back("H_minus_E0");
  h.insert(h.end(), integrals.begin(), integrals.end());
  return h;
}

std::string trajectory_csv(const ConstrainedSystem& sys, const std::vector<State>& states,
                           const std::vector<QfiSpec>& integrals, const std::vector<std::string>& names) {
  std::ostringstream os;
  const auto header = csv_header(sys.dim(), names);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& s : states) {
    os << number(s.t);
    for (double v : s.q) os << ',' << number(v);
    for (double v : s.qdot) os << ',' << number(v);
    os << ',' << number(sys.hamiltonian(s.q, s.qdot) - sys.E0);
    for (const auto& fi : integrals) os << ',' << number(fi.evaluate(s.t, s.q, s.qdot));
    os << '\n';
  }
  return os.str();
}

std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& names) {
  if (traj.states.size() != traj.monitors.size())
    throw Error(ErrorCode::DimensionMismatch, "trajectory has unmonitored states");
  std::ostringstream os;
  const int n = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().q.size());
  const auto header = csv_header(n, names);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const auto& s = traj.states[i];
    const auto& m = traj.monitors[i];
    if (m.values.size() != names.size()) throw Error(ErrorCode::DimensionMismatch, "monitor count differs from names");
    os << number(s.t);
    for (double v : s.q) os << ',' << number(v);
    for (double v : s.qdot) os << ',' << number(v);
    os << ',' << number(m.energy_error);
    for (double v : m.values) os << ',' << number(v);
    os << '\n';
  }
  return os.str();
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(ErrorCode::ParseError, "row with " + std::to_string(cells.size()) + " cells, header has " +
                                             std::to_string(t.header.size()));
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(to_double(c));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty() || t.header.front() != "t") throw Error(ErrorCode::ParseError, "missing trajectory header");
  return t;
}

std::vector<State> states_from_csv(const CsvTable& table) {
  int n = 0;
  while (std::find(table.header.begin(), table.header.end(), "q" + std::to_string(n + 1)) != table.header.end()) ++n;
  if (n == 0 || table.header.size() < static_cast<std::size_t>(2 * n + 2))
    throw Error(ErrorCode::ParseError, "header does not follow the trajectory schema");
  std::vector<State> out;
  for (const auto& r : table.rows) {
    State s;
    s.t = r[0];
    s.q.assign(r.begin() + 1, r.begin() + 1 + n);
    s.qdot.assign(r.begin() + 1 + n, r.begin() + 1 + 2 * n);
    out.push_back(std::move(s));
  }
  return out;
}

std::string report_json(const ScenarioReport& report, int indent) {
  nlohmann::ordered_json j;
  j["name"] = report.name;
  j["params"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.params) j["params"][k] = v;
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : report.checks)
    j["checks"].push_back({{"description", c.description},
                           {"expected", c.expected},
                           {"observed", c.observed},
                           {"tolerance", c.tolerance},
                           {"pass", c.pass}});
  j["artifacts"] = report.artifacts;
  j["passed"] = report.passed();
  return j.dump(indent) + "\n";
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    os << contents;
    os.flush();
    if (!os) throw Error(ErrorCode::BadConfig, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::BadConfig, "cannot read " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

SpecFile parse_spec(const std::string& text) {
  SpecFile out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, trim(std::string_view(line).substr(eq + 1))).second)
      throw Error(ErrorCode::BadConfig, "duplicate key '" + key + "'");
  }
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& cell : split(text, ',')) {
    if (cell.empty()) throw Error(ErrorCode::ParseError, "empty entry in list '" + text + "'");
    out.push_back(Expr::parse(cell, {}).eval<double>(std::span<const double>{}));
  }
  return out;
}

}  // namespace qfi::io
