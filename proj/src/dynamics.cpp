#include "qfilab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qfi {

State initial_state_on_shell(const ConstrainedSystem& sys, std::span<const double> q0, std::span<const double> direction,
                             double null_tol) {
  const int n = sys.dim();
  if (static_cast<int>(q0.size()) != n || static_cast<int>(direction.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "initial point and direction must match the metric");
  if (sys.domain().margin(q0) <= 0.0) throw Error(ErrorCode::OutOfDomain, "initial point lies on an excluded locus");
  const auto g = sys.metric.g().value(q0);
  double gdd = 0.0, dd = 0.0;
  for (int a = 0; a < n; ++a) {
    dd += direction[a] * direction[a];
    for (int b = 0; b < n; ++b) gdd += g[a][b] * direction[a] * direction[b];
  }
  if (dd == 0.0) throw Error(ErrorCode::BadConfig, "direction must be nonzero");
  const double rhs = sys.E0 - sys.V.value(q0);
  const double scale = std::max(1.0, std::abs(sys.E0));
  State s;
  s.q.assign(q0.begin(), q0.end());
  if (std::abs(rhs) <= null_tol * scale) {
    if (std::abs(gdd) > null_tol * dd)
      throw Error(ErrorCode::NullDirectionRequired, "E0 = V(q0) needs a null direction, g(dir, dir) = " +
                                                        std::to_string(gdd));
    s.qdot.assign(direction.begin(), direction.end());
    return s;
  }
  const double a2 = 2.0 * rhs / gdd;
  if (!(a2 > 0.0) || !std::isfinite(a2))
    throw Error(ErrorCode::InfeasibleEnergy, "no real speed reaches E0 along this direction");
  const double alpha = std::sqrt(a2);
  for (double d : direction) s.qdot.push_back(alpha * d);
  return s;
}

std::vector<double> acceleration(const ConstrainedSystem& sys, std::span<const double> q, std::span<const double> qd) {
  const int n = sys.dim();
  const auto md = kernel::metric_data<double>(sys.metric, q);
  const auto vj = kernel::scalar_jet<double>(sys.V, q);
  Vec<double> dV{};
  for (int a = 0; a < n; ++a) dV[a] = vj.d[a];
  const auto up = kernel::raise(md, dV);
  std::vector<double> acc(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    double s = -up[a];
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) s -= md.gamma[a][b][c] * qd[b] * qd[c];
    acc[a] = s;
  }
  return acc;
}

namespace {

// Dormand-Prince 5(4) tableau with Hairer's dense output.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

using Y = std::vector<double>;

struct Rhs {
  const ConstrainedSystem& sys;
  int n;
  Y operator()(const Y& y) const {
    const std::span<const double> q(y.data(), static_cast<std::size_t>(n));
    const std::span<const double> v(y.data() + n, static_cast<std::size_t>(n));
    auto acc = acceleration(sys, q, v);
    Y out(y.size());
    for (int a = 0; a < n; ++a) {
      out[a] = v[a];
      out[n + a] = acc[a];
    }
    return out;
  }
};

Y combo(const Y& y, double h, std::initializer_list<std::pair<double, const Y*>> terms) {
  Y out = y;
  for (const auto& [w, k] : terms)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * w * (*k)[i];
  return out;
}

State to_state(double t, const Y& y, int n) {
  State s;
  s.t = t;
  s.q.assign(y.begin(), y.begin() + n);
  s.qdot.assign(y.begin() + n, y.end());
  return s;
}

bool finite(const Y& y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

MonitorRecord record(const ConstrainedSystem& sys, const State& s, const std::vector<QfiSpec>& qfis) {
  MonitorRecord m;
  m.t = s.t;
  m.energy_error = sys.hamiltonian(s.q, s.qdot) - sys.E0;
  for (const auto& I : qfis) m.values.push_back(I.evaluate(s.t, s.q, s.qdot));
  return m;
}

}  // namespace

Trajectory integrate(const ConstrainedSystem& sys, const State& s0, double t_end, const IntegrateOptions& opts) {
  const int n = sys.dim();
  if (static_cast<int>(s0.q.size()) != n || static_cast<int>(s0.qdot.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "state dimension differs from the system");
  const Domain dom = sys.domain();
  if (dom.margin(s0.q) < opts.guard) throw Error(ErrorCode::OutOfDomain, "initial state is too close to a singular locus");
  const double h_err = sys.hamiltonian(s0.q, s0.qdot) - sys.E0;
  if (std::abs(h_err) > opts.constraint_tol * std::max(1.0, std::abs(sys.E0)))
    throw Error(ErrorCode::InfeasibleEnergy, "initial state is off the energy level (H - E0 = " +
                                                 std::to_string(h_err) + ")");
  if (!(opts.tol > 0.0)) throw Error(ErrorCode::BadConfig, "tolerance must be positive");

  Trajectory traj;
  traj.states.push_back(s0);
  traj.monitors.push_back(record(sys, s0, opts.monitors));

  const double dir = t_end >= s0.t ? 1.0 : -1.0;
  std::vector<double> samples = opts.sample_times;
  std::sort(samples.begin(), samples.end(), [dir](double a, double b) { return dir * a < dir * b; });
  std::size_t next_sample = 0;
  while (next_sample < samples.size() && dir * (samples[next_sample] - s0.t) < 0.0) ++next_sample;
  while (next_sample < samples.size() && samples[next_sample] == s0.t) {
    traj.samples.push_back(s0);
    ++next_sample;
  }

  const Rhs f{sys, n};
  Y y(s0.q);
  y.insert(y.end(), s0.qdot.begin(), s0.qdot.end());
  double t = s0.t;
  const double rtol = opts.tol, atol = opts.tol;
  auto scaled_norm = [&](const Y& e, const Y& ya, const Y& yb) {
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double sc = atol + rtol * std::max(std::abs(ya[i]), std::abs(yb[i]));
      s += (e[i] / sc) * (e[i] / sc);
    }
    return std::sqrt(s / static_cast<double>(e.size()));
  };

  Y k1 = f(y);
  // initial step size following Hairer and Wanner
  double h;
  {
    const double dnf = scaled_norm(k1, y, y), dny = scaled_norm(y, y, y);
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
    h = std::min(h, std::abs(t_end - t));
    const Y y1 = combo(y, dir * h, {{1.0, &k1}});
    double der2 = 0.0;
    try {
      const Y k2 = f(y1);
      Y diff(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) diff[i] = k2[i] - k1[i];
      der2 = scaled_norm(diff, y, y) / h;
    } catch (const Error&) {
      der2 = 0.0;
    }
    const double der12 = std::max(der2, dnf);
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    h = std::min({100 * h, h1, std::abs(t_end - t)});
  }

  const double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
  double facold = 1e-4;
  bool reject = false;

  while (dir * (t_end - t) > 0.0) {
    if (traj.stats.steps + traj.stats.rejections >= opts.max_steps)
      throw IntegrationAborted("step budget exhausted at t = " + std::to_string(t), traj);
    if (h < opts.min_step * std::max(1.0, std::abs(t)))
      throw IntegrationAborted("step size underflow at t = " + std::to_string(t), traj);
    if (dir * (t + dir * h - t_end) > 0.0) h = std::abs(t_end - t);
    const double hs = dir * h;

    Y k2, k3, k4, k5, k6, k7, y1;
    double err = std::numeric_limits<double>::infinity();
    bool ok = true;
    try {
      // stages and the end point must keep clear of excluded loci, and q may not
      // move farther than the distance to the nearest one
      const double reach = dom.margin(std::span<const double>(y.data(), static_cast<std::size_t>(n)));
      auto clear = [&](const Y& z) {
        if (!finite(z)) return false;
        const std::span<const double> q(z.data(), static_cast<std::size_t>(n));
        if (dom.margin(q) < opts.guard) return false;
        double d2 = 0.0;
        for (int a = 0; a < n; ++a) d2 += (z[a] - y[a]) * (z[a] - y[a]);
        return std::sqrt(d2) < reach;
      };
      auto stage = [&](const Y& z) {
        if (!clear(z)) throw Error(ErrorCode::SingularMetric, "stage too close to a singular locus");
        return f(z);
      };
      k2 = stage(combo(y, hs, {{a21, &k1}}));
      k3 = stage(combo(y, hs, {{a31, &k1}, {a32, &k2}}));
      k4 = stage(combo(y, hs, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
      k5 = stage(combo(y, hs, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
      k6 = stage(combo(y, hs, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
      y1 = combo(y, hs, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
      if (!clear(y1)) {
        ok = false;
      } else {
        k7 = f(y1);
        Y e(y.size());
        for (std::size_t i = 0; i < y.size(); ++i)
          e[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        err = scaled_norm(e, y, y1);
        if (!std::isfinite(err)) ok = false;
      }
    } catch (const Error& ex) {
      if (ex.code() != ErrorCode::SingularMetric) throw;
      ok = false;
    }
    if (!ok) {
      ++traj.stats.rejections;
      h *= 0.25;
      reject = true;
      continue;
    }

    const double fac11 = std::pow(err, expo1);
    double fac = fac11 / std::pow(facold, beta);
    fac = std::clamp(fac / safe, 1.0 / 10.0, 1.0 / 0.2);
    double hnew = h / fac;
    if (err <= 1.0) {
      facold = std::max(err, 1e-4);
      ++traj.stats.steps;
      traj.stats.max_error_estimate = std::max(traj.stats.max_error_estimate, err);
      const double tnew = t + hs;
      // dense output on [t, tnew]
      while (next_sample < samples.size() && dir * (samples[next_sample] - tnew) <= 0.0) {
        const double th = (samples[next_sample] - t) / hs;
        const double th1 = 1.0 - th;
        Y ys(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
          const double ydiff = y1[i] - y[i];
          const double bspl = hs * k1[i] - ydiff;
          const double r4 = ydiff - hs * k7[i] - bspl;
          const double r5 =
              hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
          ys[i] = y[i] + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)));
        }
        traj.samples.push_back(to_state(samples[next_sample], ys, n));
        ++next_sample;
      }
      y = std::move(y1);
      k1 = std::move(k7);
      t = tnew;
      if (dir * (t_end - t) <= std::abs(t_end) * 1e-15) t = t_end;
      traj.states.push_back(to_state(t, y, n));
      traj.monitors.push_back(record(sys, traj.states.back(), opts.monitors));
      if (reject) hnew = std::min(hnew, h);
      reject = false;
      h = hnew;
    } else {
      ++traj.stats.rejections;
      h /= std::min(5.0, fac11 / safe);
      reject = true;
    }
  }
  return traj;
}

double DriftRecord::max_relative_drift() const {
  double m = 0.0;
  for (std::size_t i = 0; i < drift.size(); ++i) m = std::max(m, drift[i] / std::max(1.0, std::abs(initial[i])));
  return m;
}

DriftRecord monitor_report(const ConstrainedSystem& sys, const Trajectory& traj, const std::vector<QfiSpec>& qfis,
                           const std::vector<std::string>& names) {
  DriftRecord r;
  for (std::size_t i = 0; i < qfis.size(); ++i)
    r.names.push_back(i < names.size() ? names[i] : std::string(to_string(qfis[i].family())) + "#" + std::to_string(i));
  r.initial.assign(qfis.size(), 0.0);
  r.drift.assign(qfis.size(), 0.0);
  if (traj.states.empty()) return r;
  const auto& s0 = traj.states.front();
  for (std::size_t i = 0; i < qfis.size(); ++i) r.initial[i] = qfis[i].evaluate(s0.t, s0.q, s0.qdot);
  for (const auto& s : traj.states) {
    r.energy = std::max(r.energy, std::abs(sys.hamiltonian(s.q, s.qdot) - sys.E0));
    for (std::size_t i = 0; i < qfis.size(); ++i)
      r.drift[i] = std::max(r.drift[i], std::abs(qfis[i].evaluate(s.t, s.q, s.qdot) - r.initial[i]));
  }
  return r;
}

}  // namespace qfi
