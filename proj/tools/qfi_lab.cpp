// qfi-lab: scenario runner, symmetry verifier and trajectory exporter.
//
// Exit codes: 0 ok, 1 internal error, 2 failed check, 3 infeasible
// parameters, 4 bad configuration or parse error, 5 integration aborted.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "qfilab/catalog.hpp"
#include "qfilab/io.hpp"
#include "qfilab/scenarios.hpp"

namespace fs = std::filesystem;
using namespace qfi;

namespace {

enum Exit { kOk = 0, kInternal = 1, kCheck = 2, kInfeasible = 3, kConfig = 4, kAborted = 5 };

int exit_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::ConditionViolated:
    case ErrorCode::UncertifiedSymmetry:
    case ErrorCode::NonIntegrable:
      return kCheck;
    case ErrorCode::InfeasibleEnergy:
    case ErrorCode::BranchInfeasible:
    case ErrorCode::DegenerateParams:
    case ErrorCode::NullDirectionRequired:
    case ErrorCode::OutOfDomain:
      return kInfeasible;
    case ErrorCode::BadConfig:
    case ErrorCode::ParseError:
    case ErrorCode::UnknownFamily:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::ZeroLambda:
    case ErrorCode::NonzeroPotential:
    case ErrorCode::MixedMetric:
      return kConfig;
    case ErrorCode::StepSizeUnderflow:
      return kAborted;
    default:
      return kInternal;
  }
}

// Severity order used when several scenarios run together.
int worse(int a, int b) {
  auto rank = [](int c) { return c == kInternal ? 6 : c; };
  return rank(a) >= rank(b) ? a : b;
}

struct Config {
  double tol = 1e-10;
  std::optional<double> horizon;
  std::uint64_t seed = 0;
  std::string out = "qfi-lab-out";
  std::string format = "csv";
  int jobs = 1;

  fs::path out_dir() const {
    if (const char* env = std::getenv("QFI_LAB_OUT"); env && *env) return env;
    return out;
  }
  ScenarioOptions scenario_options() const {
    ScenarioOptions o;
    o.tol = tol;
    o.horizon = horizon;
    o.seed = seed;
    return o;
  }
};

void validate(const Config& c) {
  if (!(c.tol > 1e-14 && c.tol < 1e-2)) throw Error(ErrorCode::BadConfig, "--tol must lie in (1e-14, 1e-2)");
  if (c.horizon && !(*c.horizon > 0.0)) throw Error(ErrorCode::BadConfig, "--horizon must be positive");
  if (c.jobs < 1) throw Error(ErrorCode::BadConfig, "--jobs must be at least 1");
}

// "--k=-1" or "k=-1" extras as scenario overrides.
Overrides parse_overrides(const std::vector<std::string>& extras) {
  Overrides o;
  for (const auto& raw : extras) {
    std::string s = raw;
    while (!s.empty() && s.front() == '-') s.erase(s.begin());
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::BadConfig, "expected --key=value, got '" + raw + "'");
    o[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return o;
}

void print_report(const ScenarioReport& r) {
  std::cout << r.name << ": " << (r.passed() ? "PASS" : "FAIL") << "\n";
  for (const auto& c : r.checks)
    std::cout << "  [" << (c.pass ? "ok" : "FAIL") << "] " << c.description << ": observed " << c.observed
              << ", expected " << c.expected << " +/- " << c.tolerance << "\n";
}

struct Outcome {
  int code = kOk;
  std::string log;
};

Outcome reproduce_one(const std::string& name, const Overrides& overrides, const Config& cfg) {
  Outcome out;
  const fs::path dir = cfg.out_dir() / name;
  try {
    auto report = run_scenario(name, overrides, cfg.scenario_options());
    for (const auto& t : report.trajectories) {
      const auto file = t.name + ".csv";
      io::write_atomic(dir / file, io::trajectory_csv(t.trajectory, t.monitor_names));
      report.artifacts.push_back(name + "/" + file);
    }
    report.artifacts.push_back(name + "/report.json");
    io::write_atomic(dir / "report.json", io::report_json(report));
    std::ostringstream os;
    auto* old = std::cout.rdbuf(os.rdbuf());
    print_report(report);
    std::cout.rdbuf(old);
    out.log = os.str();
    out.code = report.passed() ? kOk : kCheck;
  } catch (const IntegrationAborted& e) {
    const auto& p = e.partial();
    std::vector<std::string> names(p.monitors.empty() ? 0 : p.monitors.front().values.size());
    for (std::size_t i = 0; i < names.size(); ++i) names[i] = "I" + std::to_string(i + 1);
    io::write_atomic(dir / "trajectory.partial.csv", io::trajectory_csv(p, names));
    out.log = name + ": " + e.what() + " (partial output in " + (dir / "trajectory.partial.csv").string() + ")\n";
    out.code = kAborted;
  } catch (const Error& e) {
    out.log = name + ": " + e.what() + "\n";
    out.code = exit_for(e.code());
  }
  return out;
}

int cmd_reproduce(std::vector<std::string> names, std::vector<std::string> extras, const Config& cfg) {
  const auto split = std::stable_partition(names.begin(), names.end(),
                                           [](const std::string& s) { return s.find('=') == std::string::npos; });
  extras.insert(extras.end(), split, names.end());
  names.erase(split, names.end());
  if (names.empty()) throw Error(ErrorCode::BadConfig, "no scenario named");
  const auto overrides = parse_overrides(extras);
  if (names.size() == 1 && names[0] == "all") {
    names.clear();
    for (const auto& s : scenario_registry()) names.push_back(s.name);
  }
  for (const auto& n : names) find_scenario(n);
  std::vector<Outcome> outcomes(names.size());
  std::size_t next = 0;
  while (next < names.size()) {
    std::vector<std::future<Outcome>> batch;
    for (int j = 0; j < cfg.jobs && next < names.size(); ++j, ++next)
      batch.push_back(std::async(std::launch::async, reproduce_one, names[next], overrides, cfg));
    for (std::size_t j = 0; j < batch.size(); ++j) outcomes[next - batch.size() + j] = batch[j].get();
  }
  int code = kOk;
  for (const auto& o : outcomes) {
    std::cout << o.log;
    code = worse(code, o.code);
  }
  return code;
}

// --- declarative specs --------------------------------------------------------

class SpecReader {
 public:
  explicit SpecReader(io::SpecFile kv) : kv_(std::move(kv)) {
    for (const auto& [k, v] : kv_)
      if (k.rfind("param.", 0) == 0) {
        used_.insert(k);
        params_[k.substr(6)] = io::parse_list(v).at(0);
      }
  }
  std::optional<std::string> get(const std::string& key) {
    used_.insert(key);
    const auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    return it->second;
  }
  std::string text(const std::string& key, const std::string& fallback) { return get(key).value_or(fallback); }
  std::string require(const std::string& key) {
    if (auto v = get(key)) return *v;
    throw Error(ErrorCode::BadConfig, "missing key '" + key + "'");
  }
  double num(const std::string& key, double fallback) {
    const auto v = get(key);
    return v ? list(*v, 1).front() : fallback;
  }
  std::vector<double> list(const std::string& v, std::size_t n) const {
    const auto out = io::parse_list(v);
    if (out.size() != n)
      throw Error(ErrorCode::BadConfig, "expected " + std::to_string(n) + " numbers, got '" + v + "'");
    return out;
  }
  const Params& params() const { return params_; }
  void finish() const {
    for (const auto& [k, v] : kv_)
      if (!used_.contains(k)) throw Error(ErrorCode::BadConfig, "unknown key '" + k + "'");
  }

 private:
  io::SpecFile kv_;
  std::set<std::string> used_;
  Params params_;
};

const std::vector<std::string>& coordinates(int n) {
  static const std::vector<std::string> three{"x", "y", "z"};
  return n == 1 ? line_coordinates() : n == 2 ? plane_coordinates() : three;
}

struct MetricChoice {
  MetricSpec metric;
  std::optional<ScalarField> f;  // off-diagonal families
};

MetricChoice metric_from(SpecReader& r) {
  const auto id = r.require("metric");
  if (id == "euclidean1") return {catalog::euclidean(1), {}};
  if (id == "euclidean2") return {catalog::euclidean(2), {}};
  if (id == "euclidean3") return {catalog::euclidean(3), {}};
  if (id == "constant-curvature") {
    const double k = r.num("k", 1.0);
    return {catalog::constant_curvature(k), catalog::constant_curvature_f(k)};
  }
  if (id == "no-kv") return {catalog::no_kv(), catalog::no_kv_f()};
  if (id == "flat-lorentzian") return {catalog::flat_lorentzian(), {}};
  if (id == "toda") {
    const double k1 = r.num("k1", 1), k2 = r.num("k2", 1), b1 = r.num("b1", 1), b2 = r.num("b2", 2), b3 = r.num("b3", 1);
    return {catalog::toda(k1, k2, b1, b2, b3), catalog::toda_f(k1, k2, b1, b2, b3)};
  }
  if (id == "offdiag") {
    const auto f = parse_field(r.require("f"), plane_coordinates(), r.params());
    const auto b = r.list(r.text("box", "0.5, -1, 2, 1"), 4);
    return {catalog::offdiag("offdiag", f, SampleBox{{b[0], b[1]}, {b[2], b[3]}}), f};
  }
  throw Error(ErrorCode::UnknownFamily, "unknown metric '" + id + "'");
}

Sym2Field tensor_from(SpecReader& r, const MetricChoice& m) {
  const int n = m.metric.dim();
  if (r.get("A1") || r.get("A2")) {
    if (!m.f) throw Error(ErrorCode::BadConfig, "A1/A2 need an off-diagonal metric");
    return catalog::offdiag_ckt(*m.f, parse_field(r.text("A1", "0"), line_coordinates(), r.params()),
                                parse_field(r.text("A2", "0"), line_coordinates(), r.params()));
  }
  std::vector<ScalarField> upper;
  for (int a = 1; a <= n; ++a)
    for (int b = a; b <= n; ++b)
      upper.push_back(parse_field(r.require("U" + std::to_string(a) + std::to_string(b)), coordinates(n), r.params()));
  return Sym2Field(n, upper);
}

std::string describe(const CktClass& c) {
  std::string out = c.is_KT ? "KT" : "CKT";
  if (c.is_proper) out += ", proper";
  if (c.is_HKT) out += ", HKT";
  if (c.is_tracefree) out += ", trace-free";
  if (c.is_gradient_type) out += ", gradient type";
  return out;
}

int cmd_verify(const std::string& file, const Config& cfg) {
  SpecReader r(io::parse_spec(io::read_file(file)));
  const auto m = metric_from(r);
  const auto kind = r.require("kind");
  const int n = m.metric.dim();
  CertifyOptions co;
  co.tol = cfg.tol;
  co.seed = cfg.seed;
  const auto points = certification_points(m.metric, co);
  ScenarioReport rep;
  rep.name = "verify";
  rep.params = {{"file", file}, {"metric", m.metric.name()}, {"kind", kind}};
  if (kind == "ckv") {
    std::vector<ScalarField> comps;
    for (int a = 1; a <= n; ++a)
      comps.push_back(parse_field(r.require("L" + std::to_string(a)), coordinates(n), r.params()));
    r.finish();
    const CovectorField L(comps);
    const auto obj = certify_ckv(m.metric, L, co);
    rep.add_bound("CKV residual", obj.certificate.max_residual, cfg.tol);
    rep.params["class"] = obj.certified(cfg.tol) ? std::string(to_string(classify_ckv(m.metric, L, points))) : "none";
  } else if (kind == "ckt") {
    const auto U = tensor_from(r, m);
    r.finish();
    const auto obj = certify_ckt(m.metric, U, co);
    rep.add_bound("CKT residual", obj.certificate.max_residual, cfg.tol);
    rep.params["class"] = obj.certified(cfg.tol) ? describe(classify_ckt(m.metric, obj, points)) : "none";
  } else if (kind == "quadratic") {
    const auto U = tensor_from(r, m);
    const ConstrainedSystem sys{m.metric, parse_field(r.text("V", "0"), coordinates(n), r.params()), r.num("E0", 0.0),
                                {}};
    const auto G = parse_field(r.require("G"), coordinates(n), r.params());
    r.finish();
    BuildOptions bo;
    bo.seed = cfg.seed;
    bo.tol = cfg.tol;
    bo.enforce = false;
    const auto spec = build_J1(sys, U, G, bo);
    for (const auto& c : spec.condition_residuals()) rep.add_bound(c.name, c.max_residual, cfg.tol);
    rep.params["class"] = "quadratic first integral";
  } else {
    throw Error(ErrorCode::BadConfig, "kind must be ckv, ckt or quadratic");
  }
  print_report(rep);
  std::cout << "  class: " << rep.params["class"] << "\n";
  io::write_atomic(cfg.out_dir() / "verify" / "report.json", io::report_json(rep));
  return rep.passed() ? kOk : kCheck;
}

struct Integration {
  std::string name;
  ConstrainedSystem sys;
  State start;
  double horizon = 1.0;
  std::vector<QfiSpec> fis;
  std::vector<std::string> names;
};

Integration integration_from(const std::string& file, const Config& cfg) {
  SpecReader r(io::parse_spec(io::read_file(file)));
  Integration in{fs::path(file).stem().string(), ConstrainedSystem{catalog::euclidean(2), ScalarField::zero(2), 0.0, {}},
                 State{}, 1.0, {}, {}};
  ScenarioOptions so = cfg.scenario_options();
  if (const auto scen = r.get("scenario")) {
    in.name = *scen;
    find_scenario(*scen);
    bool found = false;
    for (const auto& q : shipped_qfis(so)) {
      if (q.name.substr(0, q.name.find('/')) != *scen) continue;
      if (!found) {
        in.sys = q.system;
        in.start = q.start;
        in.horizon = q.horizon;
        found = true;
      }
      in.fis.push_back(q.spec);
      in.names.push_back(q.name.substr(q.name.find('/') + 1));
    }
    if (!found) throw Error(ErrorCode::BadConfig, "scenario '" + *scen + "' ships no system");
    in.horizon = r.num("horizon", in.horizon);
    r.finish();
  } else {
    const auto m = metric_from(r);
    const int n = m.metric.dim();
    in.sys = ConstrainedSystem{m.metric, parse_field(r.text("V", "0"), coordinates(n), r.params()), r.num("E0", 0.0),
                               {}};
    const auto q0 = r.list(r.require("q0"), static_cast<std::size_t>(n));
    if (const auto qd = r.get("qdot")) {
      in.start = State{0.0, q0, r.list(*qd, static_cast<std::size_t>(n))};
      if (r.get("direction")) throw Error(ErrorCode::BadConfig, "give either qdot or direction");
    } else {
      in.start = initial_state_on_shell(in.sys, q0, r.list(r.require("direction"), static_cast<std::size_t>(n)));
    }
    in.horizon = r.num("horizon", 1.0);
    in.fis.push_back(hamiltonian(in.sys));
    in.names.push_back("H");
    if (const auto lfis = r.get("lfi")) {
      if (n != 2 || m.f) throw Error(ErrorCode::BadConfig, "lfi names refer to the Euclidean plane catalog");
      BuildOptions bo;
      bo.seed = cfg.seed;
      for (const auto& e : ckv_catalog("E2")) {
        if (lfis->find(e.name) == std::string::npos) continue;
        in.fis.push_back(build_integral2(in.sys, {e.vector}, bo));
        in.names.push_back(e.name);
      }
    }
    r.finish();
  }
  if (cfg.horizon) in.horizon = *cfg.horizon;
  return in;
}

std::string json_table(const io::CsvTable& t) {
  nlohmann::ordered_json j;
  j["columns"] = t.header;
  j["rows"] = t.rows;
  return j.dump() + "\n";
}

int cmd_integrate(const std::string& file, const Config& cfg) {
  const auto in = integration_from(file, cfg);
  IntegrateOptions io_opts;
  io_opts.tol = cfg.tol;
  io_opts.monitors = in.fis;
  const fs::path dir = cfg.out_dir() / in.name;
  if (cfg.format == "plot") {
    io_opts.sample_times.clear();
    for (int i = 0; i <= 500; ++i) io_opts.sample_times.push_back(in.start.t + in.horizon * i / 500.0);
  }
  Trajectory traj;
  bool aborted = false;
  try {
    traj = integrate(in.sys, in.start, in.start.t + in.horizon, io_opts);
  } catch (const IntegrationAborted& e) {
    traj = e.partial();
    aborted = true;
    std::cerr << e.what() << "\n";
  }
  const std::string stem = aborted ? "trajectory.partial" : "trajectory";
  fs::path written;
  if (cfg.format == "plot") {
    std::ostringstream os;
    os.precision(17);
    os << "x,y\n";
    for (const auto& s : aborted ? traj.states : traj.samples) os << s.q.at(0) << ',' << s.q.at(1) << '\n';
    written = dir / (stem + ".xy.csv");
    io::write_atomic(written, os.str());
  } else {
    const auto csv = io::trajectory_csv(traj, in.names);
    written = dir / (stem + (cfg.format == "json" ? ".json" : ".csv"));
    io::write_atomic(written, cfg.format == "json" ? json_table(io::parse_csv(csv)) : csv);
  }
  const auto drift = monitor_report(in.sys, traj, in.fis, in.names);
  std::cout << in.name << ": " << traj.states.size() << " states to t = " << traj.states.back().t
            << (aborted ? " (aborted, partial output)" : "") << "\n";
  for (std::size_t i = 0; i < drift.names.size(); ++i)
    std::cout << "  drift " << drift.names[i] << " = " << drift.drift[i] << "\n";
  std::cout << "  wrote " << written.string() << "\n";
  return aborted ? kAborted : kOk;
}

int cmd_list() {
  for (const auto& s : scenario_registry()) {
    std::cout << s.name << "\n  " << s.summary << "\n  defaults:";
    for (const auto& [k, v] : s.defaults) std::cout << ' ' << k << '=' << (v.empty() ? "\"\"" : v);
    std::cout << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"construct, verify and integrate quadratic first integrals at fixed energy"};
  app.require_subcommand(1);
  Config cfg;
  double horizon = 0.0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--tol", cfg.tol, "integrator and certificate tolerance");
    sub->add_option("--horizon", horizon, "integration horizon");
    sub->add_option("--seed", cfg.seed, "seed for certification points");
    sub->add_option("--out", cfg.out, "output directory (QFI_LAB_OUT overrides)");
    sub->add_option("--format", cfg.format, "csv, json or plot")->check(CLI::IsMember({"csv", "json", "plot"}));
    sub->add_option("--jobs", cfg.jobs, "scenarios to run concurrently");
  };

  std::vector<std::string> names;
  auto* rep = app.add_subcommand("reproduce", "run worked examples; extra --key=value pairs override parameters");
  rep->add_option("scenario", names, "scenario names, or all")->required();
  rep->allow_extras();
  add_common(rep);

  std::string file;
  auto* ver = app.add_subcommand("verify", "certify a symmetry or quadratic integral from a key = value file");
  ver->add_option("file", file)->required();
  add_common(ver);

  auto* integ = app.add_subcommand("integrate", "integrate a system from a key = value file and export it");
  integ->add_option("file", file)->required();
  add_common(integ);

  auto* lst = app.add_subcommand("list", "list scenarios and their defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  try {
    for (auto* sub : {rep, ver, integ})
      if (sub->parsed() && sub->count("--horizon")) cfg.horizon = horizon;
    validate(cfg);
    if (*rep) return cmd_reproduce(names, rep->remaining(), cfg);
    if (*ver) return cmd_verify(file, cfg);
    if (*integ) return cmd_integrate(file, cfg);
    if (*lst) return cmd_list();
  } catch (const IntegrationAborted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kAborted;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
