#include <cmath>

#include "doctest.h"
#include "qfilab/catalog.hpp"
#include "qfilab/dynamics.hpp"

using namespace qfi;

namespace {

ConstrainedSystem spiral_system() { return {catalog::euclidean(2), catalog::newton_cotes(-1.0), 0.0, {}}; }

std::vector<double> grid(double a, double b, int n) {
  std::vector<double> out;
  for (int i = 0; i <= n; ++i) out.push_back(a + (b - a) * i / n);
  return out;
}

QfiSpec ermakov(const ConstrainedSystem& sys, double k) {
  const auto rot = ckv_catalog("E2");
  std::vector<CkvCatalogEntry> one;
  for (const auto& e : rot)
    if (e.name == "rotation") one.push_back(e);
  const auto C = ckt_from_ckvs(sys.metric, ScalarField::zero(2), one, {{1.0}});
  return build_J1(sys, *C.tensor, ScalarField::constant(2, 2.0 * k));
}

}  // namespace

TEST_CASE("initial speed from the energy level") {
  SUBCASE("inverse square potential") {
    const auto s = initial_state_on_shell(spiral_system(), std::vector<double>{1, 0}, std::vector<double>{1, 1});
    // 1/2 alpha^2 * 2 = 0 - (-1)  gives alpha = 1
    CHECK(s.qdot[0] == doctest::Approx(1.0));
    CHECK(s.qdot[1] == doctest::Approx(1.0));
  }
  SUBCASE("constant curvature metric") {
    const ConstrainedSystem sys{catalog::constant_curvature(1.0), ScalarField::zero(2), 1.0, {}};
    const auto s = initial_state_on_shell(sys, std::vector<double>{1, 0}, std::vector<double>{1, 1});
    CHECK(s.qdot[0] == doctest::Approx(1.0));
    CHECK(s.qdot[1] == doctest::Approx(1.0));
    CHECK(sys.on_shell(s.q, s.qdot, 1e-14));
  }
  SUBCASE("null direction at zero energy") {
    const ConstrainedSystem sys{catalog::flat_lorentzian(), ScalarField::zero(2), 0.0, {}};
    const auto s = initial_state_on_shell(sys, std::vector<double>{1, 0}, std::vector<double>{0, 2});
    CHECK(s.qdot == std::vector<double>{0, 2});
    try {
      initial_state_on_shell(sys, std::vector<double>{1, 0}, std::vector<double>{1, 1});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NullDirectionRequired);
    }
  }
  SUBCASE("unreachable level") {
    const ConstrainedSystem sys{catalog::euclidean(2), catalog::newton_cotes(1.0), 0.0, {}};
    try {
      initial_state_on_shell(sys, std::vector<double>{1, 0}, std::vector<double>{1, 1});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InfeasibleEnergy);
    }
  }
}

TEST_CASE("free motion on the plane is a straight line") {
  const ConstrainedSystem sys{catalog::euclidean(2), ScalarField::zero(2), 0.5 * (0.3 * 0.3 + 0.7 * 0.7), {}};
  const State s0{0.0, {0.2, -0.4}, {0.3, -0.7}};
  IntegrateOptions opts;
  opts.sample_times = grid(0.0, 3.0, 12);
  const auto traj = integrate(sys, s0, 3.0, opts);
  REQUIRE(traj.samples.size() == 13);
  for (const auto& s : traj.samples) {
    CHECK(std::abs(s.q[0] - (0.2 + 0.3 * s.t)) <= 1e-10);
    CHECK(std::abs(s.q[1] - (-0.4 - 0.7 * s.t)) <= 1e-10);
  }
  for (std::size_t i = 1; i < traj.states.size(); ++i) CHECK(traj.states[i].t > traj.states[i - 1].t);
  CHECK(traj.states.back().t == 3.0);
}

TEST_CASE("logarithmic spiral of the inverse square potential") {
  const auto sys = spiral_system();
  const auto s0 = initial_state_on_shell(sys, std::vector<double>{1, 0}, std::vector<double>{1, 1});
  IntegrateOptions opts;
  opts.sample_times = grid(0.0, 2.0, 40);
  opts.monitors = {hamiltonian(sys), ermakov(sys, -1.0)};
  const auto traj = integrate(sys, s0, 2.0, opts);
  for (const auto& s : traj.samples) {
    const double r = std::sqrt(2 * s.t + 1);
    const double th = 0.5 * std::log(2 * s.t + 1);
    CHECK(std::abs(s.q[0] - r * std::cos(th)) <= 1e-6);
    CHECK(std::abs(s.q[1] - r * std::sin(th)) <= 1e-6);
    // r = e^theta
    CHECK(std::abs(std::hypot(s.q[0], s.q[1]) - std::exp(std::atan2(s.q[1], s.q[0]))) <= 1e-6);
  }
  const auto rep = monitor_report(sys, traj, opts.monitors, {"H", "Ermakov"});
  CHECK(rep.energy <= 1e-8);
  CHECK(rep.drift[0] <= 1e-8);
  CHECK(rep.drift[1] <= 1e-7);
  // angular momentum is 1 and the Ermakov value is 1 + 2k
  CHECK(rep.initial[1] == doctest::Approx(-1.0));
  CHECK(traj.monitors.size() == traj.states.size());
  CHECK(traj.monitors.back().values.size() == 2);
}

TEST_CASE("geodesics of the constant curvature metric on the a3 = 0 branch") {
  const double k = 1.0, E0 = 1.0, a2 = 1.0, c1 = 1.0, c2 = 0.5;
  const ConstrainedSystem sys{catalog::constant_curvature(k), ScalarField::zero(2), E0, {}};
  const State s0{0.0, {c1 + c2, c1 - c2}, {2 * a2 * c1, 2 * a2 * c1}};
  REQUIRE(sys.on_shell(s0.q, s0.qdot, 1e-14));
  IntegrateOptions opts;
  opts.sample_times = grid(0.0, 1.0, 20);
  const auto traj = integrate(sys, s0, 1.0, opts);
  for (const auto& s : traj.samples) {
    const double e = c1 * std::exp(2 * a2 * s.t);
    CHECK(std::abs(s.q[0] - (e + c2)) <= 1e-6 * std::max(1.0, e));
    CHECK(std::abs(s.q[1] - (e - c2)) <= 1e-6 * std::max(1.0, e));
  }
  CHECK(monitor_report(sys, traj, {}).energy <= 1e-8);
}

TEST_CASE("energy drift shrinks with the tolerance") {
  const auto sys = spiral_system();
  const auto s0 = initial_state_on_shell(sys, std::vector<double>{1, 0}, std::vector<double>{1, 1});
  auto drift = [&](double tol) {
    IntegrateOptions opts;
    opts.tol = tol;
    return monitor_report(sys, integrate(sys, s0, 2.0, opts), {}).energy;
  };
  const double coarse = drift(1e-6), fine = drift(1e-8);
  CAPTURE(coarse);
  CAPTURE(fine);
  CHECK(coarse >= 100 * fine);
}

TEST_CASE("integrating back with reversed velocity returns to the start") {
  const auto sys = spiral_system();
  const auto s0 = initial_state_on_shell(sys, std::vector<double>{1, 0}, std::vector<double>{1, 1});
  const auto fwd = integrate(sys, s0, 2.0);
  State back = fwd.states.back();
  for (auto& v : back.qdot) v = -v;
  const auto rev = integrate(sys, back, back.t + 2.0);
  const auto& end = rev.states.back();
  CHECK(std::abs(end.q[0] - 1.0) <= 1e-6);
  CHECK(std::abs(end.q[1]) <= 1e-6);
  CHECK(std::abs(end.qdot[0] + 1.0) <= 1e-6);
}

TEST_CASE("integration toward an excluded locus stops with the last good state") {
  const ConstrainedSystem sys{catalog::euclidean(2), catalog::newton_cotes(1e-9), 0.5, {}};
  const auto s0 = initial_state_on_shell(sys, std::vector<double>{-1, 0}, std::vector<double>{1, 0});
  try {
    integrate(sys, s0, 3.0);
    FAIL("expected an error");
  } catch (const IntegrationAborted& e) {
    CHECK(e.code() == ErrorCode::StepSizeUnderflow);
    CHECK(e.last_good().q[0] < -1e-3);
    CHECK(e.last_good().q[0] > -0.1);
    CHECK(e.partial().states.size() > 1);
  }
}

TEST_CASE("integrate rejects bad starts") {
  const auto sys = spiral_system();
  try {
    integrate(sys, State{0.0, {1, 0}, {1, 0}}, 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleEnergy);
  }
  try {
    integrate(sys, State{0.0, {1e-4, 0}, {1, 0}}, 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfDomain);
  }
}

TEST_CASE("quadrature") {
  CHECK(quadrature([](double) { return 0.0; }, 0.0, 1.0) == 0.0);
  CHECK(quadrature([](double x) { return std::cos(x); }, 0.0, 1.0) == doctest::Approx(std::sin(1.0)).epsilon(1e-13));
  CHECK(quadrature([](double x) { return x * x * x - x * x; }, 1.0, 3.0) ==
        doctest::Approx(0.25 * 81 - 9 - 0.25 + 1.0 / 3).epsilon(1e-13));
  try {
    quadrature([](double x) { return 1.0 / std::sqrt(std::abs(x - 0.3)) * std::sin(1.0 / (x - 0.3)); }, 0.0, 1.0, 1e-14);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonConvergent);
  }
}
