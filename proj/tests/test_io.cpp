#include <filesystem>

#include "doctest.h"
#include "json.hpp"
#include "qfilab/io.hpp"

using namespace qfi;

TEST_CASE("trajectory csv round trip reproduces drift") {
  for (const auto& q : shipped_qfis()) {
    CAPTURE(q.name);
    IntegrateOptions opts;
    opts.monitors = {hamiltonian(q.system), q.spec};
    const auto traj = integrate(q.system, q.start, q.start.t + q.horizon, opts);
    const std::vector<std::string> names{"H", "I"};
    const auto before = monitor_report(q.system, traj, opts.monitors, names);

    const auto table = io::parse_csv(io::trajectory_csv(traj, names));
    CHECK(table.header == io::csv_header(q.system.dim(), names));
    Trajectory back;
    back.states = io::states_from_csv(table);
    REQUIRE(back.states.size() == traj.states.size());
    const auto after = monitor_report(q.system, back, opts.monitors, names);
    CHECK(std::abs(after.energy - before.energy) <= 1e-12);
    for (std::size_t i = 0; i < names.size(); ++i) CHECK(std::abs(after.drift[i] - before.drift[i]) <= 1e-12);

    // recorded columns equal a fresh evaluation of the same integrals
    const auto fresh = io::parse_csv(io::trajectory_csv(q.system, back.states, opts.monitors, names));
    for (std::size_t r = 0; r < fresh.rows.size(); ++r)
      for (std::size_t c = 0; c < fresh.rows[r].size(); ++c) CHECK(fresh.rows[r][c] == table.rows[r][c]);
  }
}

TEST_CASE("csv numbers keep 17 significant digits") {
  Trajectory t;
  t.states.push_back(State{0.1, {1.0 / 3.0}, {2.0 / 7.0}});
  t.monitors.push_back(MonitorRecord{0.1, 1e-17, {}});
  const auto table = io::parse_csv(io::trajectory_csv(t, {}));
  CHECK(table.rows[0][1] == 1.0 / 3.0);
  CHECK(table.rows[0][2] == 2.0 / 7.0);
  CHECK(table.rows[0][3] == 1e-17);
}

TEST_CASE("malformed csv is rejected") {
  CHECK_THROWS_AS(io::parse_csv("t,q1\n0,1,2\n"), Error);
  CHECK_THROWS_AS(io::parse_csv("t,q1\n0,abc\n"), Error);
  CHECK_THROWS_AS(io::parse_csv("x,y\n0,1\n"), Error);
}

TEST_CASE("report json schema") {
  const auto r = run_scenario("flat-lorentzian");
  const auto j = nlohmann::json::parse(io::report_json(r));
  CHECK(j["name"] == "flat-lorentzian");
  CHECK(j["params"]["E0"] == "1");
  CHECK(j["checks"].size() == r.checks.size());
  CHECK(j["checks"][0].contains("description"));
  CHECK(j["checks"][0]["observed"].get<double>() == r.checks[0].observed);
  CHECK(j["artifacts"].is_array());
}

TEST_CASE("spec files") {
  const auto s = io::parse_spec("# comment\nmetric = no-kv\n\n  kind=ckt # trailing\nA1 = exp(-2*s)\n");
  CHECK(s.size() == 3);
  CHECK(s.at("kind") == "ckt");
  CHECK(s.at("A1") == "exp(-2*s)");
  CHECK_THROWS_AS(io::parse_spec("a = 1\na = 2\n"), Error);
  CHECK_THROWS_AS(io::parse_spec("just words\n"), Error);
  CHECK(io::parse_list("1, -2.5, sqrt(4)") == std::vector<double>{1.0, -2.5, 2.0});
  CHECK_THROWS_AS(io::parse_list("1,,2"), Error);
}

TEST_CASE("atomic write leaves no temporary behind") {
  const auto dir = std::filesystem::temp_directory_path() / "qfilab_io_test";
  std::filesystem::remove_all(dir);
  io::write_atomic(dir / "a" / "f.txt", "one");
  io::write_atomic(dir / "a" / "f.txt", "two");
  CHECK(io::read_file(dir / "a" / "f.txt") == "two");
  CHECK_FALSE(std::filesystem::exists(dir / "a" / "f.txt.tmp"));
  std::filesystem::remove_all(dir);
}
