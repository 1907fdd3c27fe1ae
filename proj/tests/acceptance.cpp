// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "tempo/cli.hpp"

using namespace tempo;
using pald::Matrix;
using pald::Vector;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// 1. Fair-share worked examples.
Outcome fair_share_examples() {
  RMConfig cfg;
  cfg.capacity = 12;
  cfg.tenants["A"] = fixtures::tenant(1, 0, 12);
  cfg.tenants["B"] = fixtures::tenant(2, 0, 12);
  cfg.tenants["C"] = fixtures::tenant(3, 0, 12);
  auto all = fair_allocation({{"A", 100}, {"B", 100}, {"C", 100}}, cfg);
  auto idle = fair_allocation({{"A", 100}, {"B", 100}, {"C", 0}}, cfg);
  cfg.tenants["C"].max_limit = 3;
  auto capped = fair_allocation({{"A", 100}, {"B", 100}, {"C", 100}}, cfg);
  using M = std::map<std::string, int>;
  bool ok = all == M{{"A", 2}, {"B", 4}, {"C", 6}} && idle == M{{"A", 4}, {"B", 8}, {"C", 0}} &&
            capped == M{{"A", 3}, {"B", 6}, {"C", 3}};
  return {ok, "2/4/6, 4/8/0, 3/6/3"};
}

// 2. Effective versus raw utilization on the killed-task scenario.
Outcome effective_utilization_example() {
  auto s = simulate(fixtures::fig2_workload(), fixtures::fig2_config());
  double eff = effective_utilization(s, 0, 4), raw = effective_utilization(s, 0, 4, true);
  bool ok = std::abs(eff - 0.8) <= 1e-9 && std::abs(raw - 1.0) <= 1e-9;
  return {ok, "effective " + fmt(eff) + ", raw " + fmt(raw)};
}

// 3. Strict monotonicity of the proxy objective.
Outcome proxy_monotonicity() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> val(-10, 10), pos(1e-3, 1), rho(-10, 0.999), delta(1e-6, 5);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 6);
    Vector c(k), f(k), r(k);
    for (int i = 0; i < k; ++i) {
      c[i] = pos(rng);
      f[i] = val(rng);
      r[i] = val(rng);
    }
    const double p = rho(rng);
    const int i = static_cast<int>(rng() % k);
    Vector g = f;
    g[i] += delta(rng);
    if (!(pald::proxy_objective(g, r, c, p) > pald::proxy_objective(f, r, c, p))) ++failures;
  }
  return {failures == 0, std::to_string(failures) + " failures in 1000 draws"};
}

// 4. Weighted sum versus proxy on the two-candidate counterexample.
Outcome counterexample() {
  Vector c = vec2(1, 1), r = vec2(6, 6), a = vec2(5, 5), b = vec2(0, 7);
  auto pick = [&](double rho) { return pald::proxy_objective(a, r, c, rho) < pald::proxy_objective(b, r, c, rho) ? a : b; };
  QSVector qa, qb, qr;
  qa.values = {5.0, 5.0};
  qb.values = {0.0, 7.0};
  qr.values = {6.0, 6.0};
  bool ok = pick(0) == b && pick(-4) == a && pald::proxy_objective(a, r, c, -4) == 58 &&
            pald::proxy_objective(b, r, c, -4) == 59 && dominance_check(qa, qr) && !dominance_check(qb, qr);
  return {ok, "weighted sum picks (0,7); proxy 58 < 59 picks (5,5)"};
}

// 5. Grid minimizer of the proxy (with PALD's c and rho) is weakly Pareto.
Outcome grid_soundness() {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0, 1), scale(0.5, 3);
  const int n = 50;
  int violations = 0;
  for (int inst = 0; inst < 20; ++inst) {
    Vector a = vec2(u(rng), u(rng)), b = vec2(u(rng), u(rng));
    const double s1 = scale(rng), s2 = scale(rng);
    auto f = [&](const Vector& x) { return vec2(s1 * (x - a).squaredNorm(), s2 * (x - b).squaredNorm()); };
    // Threshold on the first objective, second best effort at the probe.
    Vector probe = vec2(u(rng), u(rng));
    Vector fp = f(probe);
    Vector r = vec2(fp[0] * u(rng), fp[1]);
    Matrix J(2, 2);
    J.row(0) = 2 * s1 * (probe - a).transpose();
    J.row(1) = 2 * s2 * (probe - b).transpose();
    auto violated = pald::violated_set(fp, r);
    auto wc = pald::choose_weights(J, violated);
    auto rc = pald::choose_rho(J, wc.c, violated);

    std::vector<Vector> values;
    std::size_t best = 0;
    double best_s = kInf;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        values.push_back(f(vec2(i / double(n - 1), j / double(n - 1))));
        double s = pald::proxy_objective(values.back(), r, wc.c, rc.rho);
        if (s < best_s) {
          best_s = s;
          best = values.size() - 1;
        }
      }
    for (const auto& v : values)
      if ((v.array() < values[best].array()).all()) {
        ++violations;
        break;
      }
  }
  return {violations == 0, std::to_string(violations) + " violations over 20 instances"};
}

// Shared setup for 6 and 7: two convex quadratics on [0,1]^2.
struct Quadratics {
  Vector a = vec2(0.2, 0.3), b = vec2(0.8, 0.7);
  double w2 = 1.0;
  Vector operator()(const Vector& x) const { return vec2((x - a).squaredNorm(), w2 * (x - b).squaredNorm()); }
  // Objective ranges over the unit square (corner extremes).
  Vector range() const {
    Vector lo = Vector::Constant(2, kInf), hi = Vector::Constant(2, -kInf);
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j <= 100; ++j) {
        Vector v = (*this)(vec2(i / 100.0, j / 100.0));
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
      }
    return hi - lo;
  }
};

// 6. Convergence to the Pareto frontier under noise.
Outcome noisy_convergence() {
  Quadratics f;
  const Vector range = f.range();
  // Pareto set of two isotropic quadratics: the segment between minimizers.
  std::vector<Vector> front;
  for (int i = 0; i < 1000; ++i) front.push_back(f(f.a + (f.b - f.a) * (i / 999.0)));
  int passed = 0;
  double worst = 0;
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0, 1);
    auto measure = [&](const Vector& x) {
      Vector v = f(x);
      for (int i = 0; i < 2; ++i) v[i] += 0.05 * range[i] * noise(rng);
      return v;
    };
    pald::Options o;
    o.d_max = 0.1;
    auto s = pald::make_state(vec2(seed % 2 ? 0.95 : 0.05, seed % 3 ? 0.05 : 0.95), Vector::Zero(2), {true, true}, o);
    for (int it = 0; it < 60; ++it) {
      auto res = pald::iterate(s, measure, o, 5, 5, rng);
      if (!res.need_more_samples) s.current_x = res.x_next;
    }
    Vector v = f(s.current_x);
    double dist = kInf;
    for (const auto& p : front) dist = std::min(dist, (v - p).cwiseQuotient(range).norm());
    worst = std::max(worst, dist);
    passed += dist <= 0.05;
  }
  return {passed >= 9, std::to_string(passed) + "/10 seeds within 5%, worst " + fmt(worst)};
}

// 7. Max-min fairness with two unattainable thresholds.
Outcome maxmin_fairness() {
  Quadratics f;
  f.w2 = 2.0;
  const Vector r = vec2(0.05, 0.12);
  const Vector range = f.range();
  double minimax = kInf;
  for (int i = 0; i <= 1000; ++i)
    for (int j = 0; j <= 1000; ++j) {
      Vector v = f(vec2(i / 1000.0, j / 1000.0));
      minimax = std::min(minimax, std::max(v[0] - r[0], v[1] - r[1]));
    }
  int passed = 0;
  double worst = 0;
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0, 1);
    auto measure = [&](const Vector& x) {
      Vector v = f(x);
      for (int i = 0; i < 2; ++i) v[i] += 0.02 * range[i] * noise(rng);
      return v;
    };
    pald::Options o;
    o.d_max = 0.1;
    std::uniform_real_distribution<double> u(0, 1);
    auto s = pald::make_state(vec2(u(rng), u(rng)), r, {false, false}, o);
    std::optional<Vector> prev;
    for (int it = 0; it < 60; ++it) {
      Vector fx;
      auto res = pald::iterate(s, measure, o, 5, 5, rng, &fx);
      if (prev) pald::record_outcome(s, (fx.array() <= prev->array()).all() && (fx.array() < prev->array()).any());
      prev = fx;
      if (!res.need_more_samples) s.current_x = res.x_next;
    }
    Vector v = f(s.current_x);
    double rel = (std::max(v[0] - r[0], v[1] - r[1]) - minimax) / minimax;
    worst = std::max(worst, rel);
    passed += rel <= 0.10;
  }
  return {passed >= 9, std::to_string(passed) + "/10 seeds within 10% of minimax " + fmt(minimax) +
                           ", worst excess " + fmt(100 * worst) + "%"};
}

// 8. LOESS gradients against central finite differences.
Outcome gradient_fidelity() {
  auto f = [](const Vector& x) {
    Vector v(3);
    v << std::exp(x[0] + 0.5 * x[1]) + x[0] * x[0], std::log(1 + x[0] + 2 * x[1]) + x[1] * x[1] * x[1] + 2 * x[1],
        std::sin(x[0]) + 1.5 * x[0] + std::cos(x[1]) - x[1];
    return v;
  };
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> unit(0, 1);
  const double radius = 0.05, h = 1e-6;
  double worst = 0;
  for (int p = 0; p < 100; ++p) {
    Vector x0 = vec2(u(rng), u(rng));
    pald::History hist;
    hist.add({x0, f(x0), 1});
    for (int i = 0; i < 20; ++i) {  // antithetic pairs
      Vector d = vec2(g(rng), g(rng)).normalized() * radius * std::sqrt(unit(rng));
      hist.add({x0 + d, f(x0 + d), 1});
      hist.add({x0 - d, f(x0 - d), 1});
    }
    pald::LoessOptions lo;
    lo.radius = radius;
    auto est = pald::estimate_jacobian(hist, x0, lo);
    if (!est) return {false, "LOESS asked for more samples"};
    for (int k = 0; k < 3; ++k) {
      Vector fd(2);
      for (int i = 0; i < 2; ++i) {
        Vector e = Vector::Zero(2);
        e[i] = h;
        fd[i] = (f(x0 + e)[k] - f(x0 - e)[k]) / (2 * h);
      }
      worst = std::max(worst, (est->jacobian.row(k).transpose() - fd).norm() / fd.norm());
    }
  }
  return {worst <= 0.05, "worst relative error " + fmt(100 * worst) + "% over 100 points x 3 functions"};
}

// 9. Simulator throughput on a 500k-task, 6-tenant workload.
Outcome throughput() {
  WorkloadModel m;
  for (int t = 0; t < 6; ++t) {
    TenantModel tm;
    tm.arrival_rate = 0.05 * (1 + t % 3);
    tm.duration_log_mean = std::log(20.0 + 10 * t);
    tm.duration_log_sd = 0.8;
    tm.tasks_per_job = {{1, 0.3}, {5, 0.4}, {10, 0.3}};
    m.tenants["t" + std::to_string(t)] = tm;
  }
  RMConfig cfg;
  cfg.capacity = 300;
  for (int t = 0; t < 6; ++t)
    cfg.tenants["t" + std::to_string(t)] = fixtures::tenant(1 + t, t, 300, t % 2 ? 30 : kInf, t % 3 ? 120 : kInf);
  // Mean 5.3 tasks per job at 0.6 jobs/s in total.
  auto w = synthesize(m, 500000 / (5.3 * 0.6), 9);
  const auto tasks = w.task_count();
  auto t0 = std::chrono::steady_clock::now();
  auto s = simulate(w, cfg);
  const double secs = seconds_since(t0);
  const double rate = tasks / secs;
  bool ok = tasks >= 450000 && rate >= 50000 && secs <= 10;
  return {ok, std::to_string(tasks) + " tasks (" + std::to_string(s.entries.size()) + " attempts) in " + fmt(secs) +
                  " s = " + fmt(rate) + " tasks/s"};
}

// 10. Closed loop from a throttled start with injected regressions.
Outcome end_to_end_safety() {
  std::string detail;
  bool ok = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto sc = fixtures::throttled_scenario(seed);
    LoopConfig lc;
    lc.window_length = 3600;
    lc.max_iterations = 30;
    lc.seed = seed;
    LoopHooks hooks;
    // Periodically reapply the throttled start.
    const Eigen::VectorXd throttled = encode(sc.config);
    hooks.proposal_override = [&](std::size_t it, const Eigen::VectorXd&) -> std::optional<Eigen::VectorXd> {
      if (it % 7 != 5) return std::nullopt;
      return throttled;
    };
    auto run = [&] { return run_loop(replay_source(sc.workload, lc.window_length), sc.slos, sc.config, lc, hooks); };
    auto r = run();
    auto again = run();
    std::string j1, j2;
    for (const auto& rec : r.records) j1 += to_json(rec).dump();
    for (const auto& rec : again.records) j2 += to_json(rec).dump();

    const auto& first = r.records.front().observed_qs;
    bool weakly = true;
    for (std::size_t i = 0; i < first.size(); ++i) weakly = weakly && *r.accepted_qs.values[i] <= *first.values[i];
    // An injected record that fails to dominate the accepted QS must be
    // rejected, and the next interval must run the accepted configuration.
    int injected = 0, reverted = 0;
    Eigen::VectorXd accepted_x = r.records.front().applied_x;
    QSVector accepted_qs = first;
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      const auto& rec = r.records[i];
      if (rec.injected && i > 0 && !dominance_check(rec.observed_qs, accepted_qs, lc.dominance_tolerance)) {
        ++injected;
        const bool next_ok = i + 1 >= r.records.size() || r.records[i + 1].applied_x == accepted_x;
        if (!rec.accepted && rec.next_x == accepted_x && next_ok) ++reverted;
      }
      if (rec.accepted) {
        accepted_x = rec.applied_x;
        accepted_qs = rec.observed_qs;
      }
    }
    const bool seed_ok = weakly && injected > 0 && injected == reverted && j1 == j2 && r.records.size() <= 31;
    ok = ok && seed_ok;
    detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed) + ": DL " +
              fmt(*first.values[0]) + "->" + fmt(*r.accepted_qs.values[0]) + ", AJR " + fmt(*first.values[1]) + "->" +
              fmt(*r.accepted_qs.values[1]) + ", reverted " + std::to_string(reverted) + "/" + std::to_string(injected) +
              (j1 == j2 ? "" : ", NOT deterministic");
  }
  return {ok, detail};
}

// 11. RAE/RSE through cmd_validate on hand-computed two-job fixtures.
Outcome validation_formulas() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("tempo_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto schedule = [&](const std::string& name, double f1, double f2) {
    std::ostringstream s;
    s << "# tempo-schedule v1\n# capacity 2\n# horizon 100\n[jobs]\njob_id,tenant,submit_s,deadline_s,tasks\n"
      << "j1,A,0,,1\nj2,A,0,,1\n[tasks]\ntask_id,job_id,tenant,launch_s,finish_s|PREEMPTED@t,allocation\n"
      << "j1.0,j1,A,0," << f1 << ",1\nj2.0,j2,A,0," << f2 << ",1\n";
    cli::detail::write_file((dir / name).string(), s.str());
    return (dir / name).string();
  };
  struct Case {
    double o1, o2, p1, p2, rae, rse;
  };
  // Hand values: RAE = sum|p-l| / sum|l-mean|, RSE = sqrt(sum(p-l)^2 / sum(l-mean)^2).
  const Case cases[] = {
      {10, 20, 15, 15, 1.0, 1.0},             // mean predictor
      {2, 6, 3, 9, 1.0, std::sqrt(1.25)},     // (1+3)/(2+2), sqrt((1+9)/(4+4))
      {4, 8, 4, 8, 0.0, 0.0},                 // exact
      {1, 3, 2, 5, 1.5, std::sqrt(2.5)},      // (1+2)/(1+1), sqrt((1+4)/(1+1))
  };
  bool ok = true;
  for (const auto& c : cases) {
    auto o = schedule("o.sched", c.o1, c.o2);
    auto p = schedule("p.sched", c.p1, c.p2);
    cli::cmd_validate(p, o, (dir / "v.csv").string());
    const std::string expect = "tenant,jobs,rae,rse\nA,2," + format_number(c.rae) + "," + format_number(c.rse) + "\n";
    ok = ok && cli::detail::read_file((dir / "v.csv").string()) == expect;
  }
  // Observed {0, 10} against predicted {5, 5}.
  FinishTimes obs = {{"j1", {"A", 0}}, {"j2", {"A", 10}}}, pred = {{"j1", {"A", 5}}, {"j2", {"A", 5}}};
  auto e = prediction_error(pred, obs).at("A");
  ok = ok && e.rae && *e.rae == 1.0 && e.rse && *e.rse == 1.0;
  fs::remove_all(dir);
  return {ok, "4 file fixtures plus {0,10} vs {5,5} -> RAE = RSE = 1"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"fair-share examples", fair_share_examples},
      {"effective utilization", effective_utilization_example},
      {"proxy monotonicity", proxy_monotonicity},
      {"proxy counterexample", counterexample},
      {"grid soundness", grid_soundness},
      {"noisy convergence", noisy_convergence},
      {"max-min fairness", maxmin_fairness},
      {"gradient fidelity", gradient_fidelity},
      {"simulator throughput", throughput},
      {"end-to-end dominance safety", end_to_end_safety},
      {"RAE/RSE formulas", validation_formulas},
  };
  int failed = 0, n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
