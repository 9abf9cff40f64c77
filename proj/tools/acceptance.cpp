// Acceptance run: one pass/fail line per criterion, exit 0 iff all pass.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "qfilab/catalog.hpp"
#include "qfilab/scenarios.hpp"

using namespace qfi;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void need(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
  // Requires the named check of a report and echoes its observed value.
  void check(const ScenarioReport& r, const std::string& prefix) {
    const auto* c = r.find(prefix);
    if (!c) {
      need(false, r.name + " has no check '" + prefix + "'");
      return;
    }
    need(c->pass, r.name + ": " + c->description);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", c->observed);
    detail << prefix << " = " << buf << "; ";
  }
};

ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::BadConfig;
}

void spiral(Verdict& v) {
  const auto r = run_ermakov_spiral({{"k", "-1"}, {"I2", "1"}});
  v.check(r, "spiral slope");
  v.check(r, "spiral fit residual");
  v.check(r, "r^2 - (2 I2 t + c1)");
}

void ermakov(Verdict& v) {
  const auto r = run_ermakov_spiral();
  v.check(r, "Ermakov relation");
  v.check(r, "Ermakov QFI drift");
}

void circles(Verdict& v) {
  const auto r = run_sckv_circles({{"c1", "2"}, {"M", "-0.5"}, {"I0", "0"}});
  v.check(r, "circle residual");
  v.check(r, "LFI stays at 0");
}

void constant_curvature(Verdict& v) {
  for (const auto& o : {Overrides{}, Overrides{{"E0", "-1"}, {"branch", "a3_nonzero"}}}) {
    const auto r = run_constant_curvature(o);
    v.check(r, "parametric solution");
    v.check(r, "a0 = a2^2 - a1 a3");
    for (const char* n : {"LFI I1", "LFI I2", "LFI I3"}) v.check(r, n);
    v.check(r, "Ricci scalar R");
    v.check(r, "Ricci scalar sample variance");
  }
}

void no_kv(Verdict& v) {
  const auto r = run_no_kv();
  v.check(r, "QFI drift");
  v.check(r, "orbit y = ln");
  v.check(r, "time law by quadrature");
  for (const char* e : {"0.5", "0"})
    v.need(error_of([e] { run_no_kv({{"E0", e}}); }) == ErrorCode::InfeasibleEnergy, std::string("E0 = ") + e + " rejected");
  v.detail << "E0 >= 0 rejected; ";
}

void toda(Verdict& v) {
  const auto r = run_toda();
  v.check(r, "QFI drift");
  v.check(r, "flatness detected");
  v.check(r, "max |R| with b3");
  v.check(r, "curvature detected");
  const auto flat = run_toda({{"b3", "2"}, {"horizon", "0.5"}});
  v.check(flat, "flatness detected");
}

void certificates(Verdict& v) {
  CertifyOptions co;
  co.samples = 200;
  co.tol = 1e-10;
  double worst = 0.0;
  int objects = 0;
  auto note = [&](double r, const std::string& what) {
    worst = std::max(worst, r);
    ++objects;
    v.need(r <= 1e-10, what);
  };

  const auto e2 = catalog::euclidean(2);
  const auto plane = ckv_catalog("E2");
  for (const auto& e : plane) note(certify_ckv(e2, e.vector, co).certificate.max_residual, "E2 " + e.name);
  for (double k : {1.0, -2.0}) {
    CkvFamilyParams p;
    p.k = k;
    const auto m = catalog::constant_curvature(k);
    for (const auto& e : ckv_catalog("constant-curvature", p))
      note(certify_ckv(m, e.vector, co).certificate.max_residual, "constant curvature " + e.name);
  }
  {
    CkvFamilyParams p;
    p.f = catalog::no_kv_f();
    p.F1 = make_field(1, [](auto s) { return qfi::sin(s[0]) + 2.0; });
    p.F2 = make_field(1, [](auto s) { return qfi::exp(0.3 * s[0]); });
    p.metric_name = "no-kv";
    for (const auto& e : ckv_catalog("offdiag", p))
      note(certify_ckv(catalog::no_kv(), e.vector, co).certificate.max_residual, "off-diagonal " + e.name);
  }
  note(certify_ckt(catalog::no_kv(), catalog::offdiag_ckt(catalog::no_kv_f(),
                                                          make_field(1, [](auto s) { return qfi::exp(-2.0 * s[0]); }),
                                                          ScalarField::zero(1)),
                   co)
           .certificate.max_residual,
       "no-kv tensor");
  note(certify_ckt(catalog::toda(1, 1, 1, 2, 1),
                   catalog::offdiag_ckt(catalog::toda_f(1, 1, 1, 2, 1), ScalarField::zero(1),
                                        make_field(1, [](auto s) { return qfi::exp(-std::sqrt(2.0) * s[0]); })),
                   co)
           .certificate.max_residual,
       "toda tensor");

  // products of catalog vectors with random coefficients always certify
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random_upper = [&](std::size_t m) {
    std::vector<std::vector<double>> c(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j) c[i][j] = u(rng);
    return c;
  };
  for (int trial = 0; trial < 5; ++trial) {
    const double a = u(rng), b = u(rng);
    const auto f = make_field(2, [a, b](auto q) { return a * qfi::sin(q[0]) + b * q[1] * q[1]; });
    note(ckt_from_ckvs(e2, f, plane, random_upper(plane.size()), co).certificate.max_residual, "E2 product tensor");
    CkvFamilyParams p;
    p.k = 1.0;
    const auto cc = ckv_catalog("constant-curvature", p);
    note(ckt_from_ckvs(catalog::constant_curvature(1.0), ScalarField::zero(2), cc, random_upper(cc.size()), co)
             .certificate.max_residual,
         "constant curvature product tensor");
  }
  v.detail << objects << " objects, worst residual " << worst << "; ";
}

void coupling(Verdict& v) {
  double worst_drift = 0.0, weakest_control = 1e300, worst_residual = 0.0;
  int count = 0;
  for (const auto& q : shipped_qfis()) {
    ++count;
    const double res = q.spec.max_condition_residual();
    worst_residual = std::max(worst_residual, res);
    v.need(res <= 1e-9, q.name + " condition residual");
    IntegrateOptions io;
    io.monitors = {q.spec};
    const auto traj = integrate(q.system, q.start, q.start.t + q.horizon, io);
    const double drift = monitor_report(q.system, traj, {q.spec}).drift[0];
    worst_drift = std::max(worst_drift, drift);
    v.need(drift <= 1e-7, q.name + " drift");

    auto tilted = q.system;
    tilted.V = perturbed_potential(q.system.V, q.start.q);
    const auto bent = integrate(tilted, q.start, q.start.t + q.horizon, {});
    const double control = monitor_report(tilted, bent, {q.spec}).drift[0];
    weakest_control = std::min(weakest_control, control);
    v.need(control > 1e-3, q.name + " negative control");
  }
  v.detail << count << " integrals, max residual " << worst_residual << ", max drift " << worst_drift
           << ", min perturbed drift " << weakest_control << "; ";
}

void factorization(Verdict& v) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> time(0.0, 1.0);
  double worst = 0.0;
  int states = 0;
  for (const auto& q : shipped_qfis()) {
    if (!q.spec.certified(1e-9)) continue;
    const auto& sys = q.system;
    for (const auto& p : sample_points(sys.domain(), sys.sample_box(), 100, 3)) {
      std::vector<double> qd(static_cast<std::size_t>(sys.dim()));
      for (auto& x : qd) x = gauss(rng);
      const double t = time(rng);
      const auto m = multiplier(sys, q.spec.coefficients(), t, p);
      double xq = 0.0;
      for (int a = 0; a < sys.dim(); ++a) xq += m.X[a] * qd[static_cast<std::size_t>(a)];
      const double constraint = 2.0 * (sys.hamiltonian(p, qd) - sys.E0);
      const double expected = (m.psi + xq) * constraint;
      const double got = q.spec.time_derivative(t, p, qd);
      const double err = std::abs(got - expected) / std::max(1.0, std::abs(expected));
      worst = std::max(worst, err);
      ++states;
    }
  }
  v.need(worst <= 1e-8, "factorization");
  v.detail << states << " off-shell states, worst relative mismatch " << worst << "; ";
}

void pde_residuals(Verdict& v) {
  const auto A1 = make_field(1, [](auto s) { return qfi::exp(-2.0 * s[0]); });
  double bd_no_kv = 0.0, bd_toda = 0.0, random_no_kv = 0.0, random_toda = 0.0;
  const auto f = catalog::toda_f(1, 1, 1, 2, 1);
  const auto A2 = make_field(1, [](auto s) { return qfi::exp(-std::sqrt(2.0) * s[0]); });
  const auto R1 = make_field(1, [](auto s) { return qfi::sin(1.3 * s[0]) + 0.4 * s[0] * s[0]; });
  const auto R2 = make_field(1, [](auto s) { return qfi::exp(-0.7 * s[0]) + qfi::cos(s[0]); });
  const auto nokv = catalog::no_kv();
  for (const auto& p : sample_points(nokv.domain(), nokv.box(), 200, 0)) {
    bd_no_kv = std::max(bd_no_kv, std::abs(no_kv_bd_residual(A1, p)));
    random_no_kv = std::max(random_no_kv, std::abs(no_kv_bd_residual(R1, p)));
  }
  const auto td = catalog::toda(1, 1, 1, 2, 1);
  for (const auto& p : sample_points(td.domain(), td.box(), 200, 0)) {
    bd_toda = std::max(bd_toda, std::abs(bertrand_darboux_residual(f, ScalarField::zero(1), A2, p)));
    random_toda = std::max(random_toda, std::abs(bertrand_darboux_residual(f, R1, R2, p)));
  }
  v.need(bd_no_kv <= 1e-10, "no-kv tensor PDE");
  v.need(bd_toda <= 1e-10, "toda tensor PDE");
  v.need(random_no_kv >= 1e-3, "random A1 rejected");
  v.need(random_toda >= 1e-3, "random pair rejected");
  v.detail << "residuals " << bd_no_kv << ", " << bd_toda << "; random candidates " << random_no_kv << ", "
           << random_toda << "; ";
}

}  // namespace

int main() {
  struct Criterion {
    const char* title;
    void (*run)(Verdict&);
  };
  const std::vector<Criterion> criteria{
      {"spiral reproduction", spiral},
      {"Ermakov relation", ermakov},
      {"circle orbits", circles},
      {"constant-curvature geodesics", constant_curvature},
      {"metric without Killing vectors", no_kv},
      {"Toda reduction", toda},
      {"symmetry certificates", certificates},
      {"condition and conservation coupling", coupling},
      {"multiplier factorization", factorization},
      {"PDE residual checks", pde_residuals},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].run(v);
    } catch (const std::exception& e) {
      v.need(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    v.need(secs <= 10.0, "time budget");
    std::printf("criterion %2zu %s: %s (%.2fs) %s\n", i + 1, criteria[i].title, v.pass ? "PASS" : "FAIL", secs,
                v.detail.str().c_str());
    failed += v.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
