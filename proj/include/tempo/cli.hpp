#pragma once

// Command implementations behind the `tempo` executable. Each command reads
// its inputs from paths, writes its outputs, and returns a process exit code.
// Tables are comma-separated with a header row; missing values print as NA.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tempo/control.hpp"
#include "tempo/qs.hpp"
#include "tempo/rm_config.hpp"
#include "tempo/simulator.hpp"
#include "tempo/workload.hpp"

namespace tempo::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,        // invalid input or failed operation
  kMaxIterations = 10,  // optimize stopped at the iteration limit
  kAborted = 11,        // optimize gave up (see journal)
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

// Parse errors are re-raised with the file name in front.
template <class F>
auto with_file(const std::string& path, F&& f) {
  try {
    return f(read_file(path));
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw Error(path + ": " + e.what());
  }
}

inline Workload load_trace(const std::string& p) {
  return with_file(p, [](const std::string& s) { return parse_trace(std::string_view(s)); });
}
inline TaskSchedule load_schedule(const std::string& p) {
  return with_file(p, [](const std::string& s) { return parse_schedule(std::string_view(s)); });
}
inline RMConfig load_config(const std::string& p) {
  return with_file(p, [](const std::string& s) { return rm_config_from_json(nlohmann::json::parse(s)); });
}
inline std::vector<SLOSpec> load_slos(const std::string& p) {
  return with_file(p, [](const std::string& s) { return slos_from_json(nlohmann::json::parse(s)); });
}
inline LoopConfig load_loop(const std::string& p) {
  return with_file(p, [](const std::string& s) { return loop_config_from_json(nlohmann::json::parse(s)); });
}
inline WorkloadModel load_model(const std::string& p) {
  return with_file(p, [](const std::string& s) { return model_from_json(nlohmann::json::parse(s)); });
}

inline std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

inline std::string slo_label(const SLOSpec& s) { return s.tenant + "/" + metric_name(s.metric); }

inline std::string qs_header(const std::vector<SLOSpec>& slos) {
  std::string h;
  for (const auto& s : slos) h += "," + slo_label(s);
  return h;
}

inline std::string qs_cells(const QSVector& q) {
  std::string r;
  for (const auto& v : q.values) r += "," + cell(v);
  return r;
}

// Largest number of containers each tenant held at once.
inline std::map<std::string, int> peak_allocation(const TaskSchedule& s) {
  std::map<std::string, std::vector<std::pair<double, int>>> events;
  for (const auto& e : s.entries) {
    auto& ev = events[s.job_of(e).tenant];
    ev.push_back({e.launch_time, e.allocation});
    ev.push_back({s.occupied_until(e), -e.allocation});
  }
  std::map<std::string, int> peak;
  for (auto& [tenant, ev] : events) {
    std::sort(ev.begin(), ev.end());  // releases sort before launches at equal times
    int cur = 0, best = 0;
    for (auto [t, d] : ev) best = std::max(best, cur += d);
    peak[tenant] = best;
  }
  return peak;
}

}  // namespace detail

inline std::string simulation_summary(const TaskSchedule& s) {
  struct Row {
    int jobs = 0, completed = 0, preempted = 0, peak = 0;
    double response = 0.0, area = 0.0;
  };
  std::map<std::string, Row> rows;
  for (const auto& j : s.jobs) {
    auto& r = rows[j.tenant];
    ++r.jobs;
    if (j.finish_time) {
      ++r.completed;
      r.response += *j.finish_time - j.submit_time;
    }
  }
  for (const auto& e : s.entries) {
    auto& r = rows[s.job_of(e).tenant];
    if (e.preempted) ++r.preempted;
    else r.area += e.allocation * (s.occupied_until(e) - e.launch_time);
  }
  for (auto [tenant, p] : detail::peak_allocation(s)) rows[tenant].peak = p;

  std::ostringstream out;
  const double denom = s.horizon > 0 ? s.capacity * s.horizon : 0.0;
  out << "tenant,jobs,completed,ajr_s,preempted_tasks,peak_containers,effective_utilization\n";
  for (const auto& [tenant, r] : rows) {
    std::optional<double> ajr;
    if (r.completed) ajr = r.response / r.completed;
    std::optional<double> util;
    if (denom > 0) util = r.area / denom;
    out << tenant << ',' << r.jobs << ',' << r.completed << ',' << detail::cell(ajr) << ',' << r.preempted << ','
        << r.peak << ',' << detail::cell(util) << '\n';
  }
  std::optional<double> total;
  if (s.horizon > 0) total = effective_utilization(s, 0.0, s.horizon);
  out << "*,,,,,," << detail::cell(total) << '\n';
  return out.str();
}

// Writes the schedule to `out` and the per-tenant summary to `summary`.
inline int cmd_simulate(const std::string& trace, const std::string& config, const std::string& out,
                        std::ostream& summary) {
  auto w = detail::load_trace(trace);
  auto cfg = detail::load_config(config);
  for (const auto& j : w.jobs)
    if (!cfg.tenants.count(j.tenant)) throw ConfigError("job " + j.job_id + ": tenant " + j.tenant + " not in config");
  auto s = simulate(w, cfg);
  detail::write_file(out, to_schedule_string(s));
  summary << simulation_summary(s);
  return kOk;
}

inline std::string qs_table(const std::vector<SLOSpec>& slos, const QSVector& q) {
  std::ostringstream out;
  out << "slo,tenant,metric,value\n";
  for (std::size_t i = 0; i < slos.size(); ++i)
    out << i << ',' << slos[i].tenant << ',' << metric_name(slos[i].metric) << ',' << detail::cell(q.values[i]) << '\n';
  return out.str();
}

inline int cmd_evaluate(const std::string& schedule, const std::string& slos_path, Window win,
                        const std::string& out) {
  auto s = detail::load_schedule(schedule);
  auto slos = detail::load_slos(slos_path);
  if (win.t1 > s.horizon + 1e-9) throw ConfigError("window ends after the schedule horizon");
  detail::write_file(out, qs_table(slos, evaluate(slos, s, win)));
  return kOk;
}

// Table of RAE and RSE per tenant, sorted by tenant id.
inline std::string error_table(const std::map<std::string, PredictionError>& errors) {
  std::ostringstream out;
  out << "tenant,jobs,rae,rse\n";
  for (const auto& [tenant, e] : errors)
    out << tenant << ',' << e.jobs << ',' << detail::cell(e.rae) << ',' << detail::cell(e.rse) << '\n';
  return out.str();
}

// `predicted` and `observed` are schedule files; the observed one records
// the finish times seen on the real cluster.
inline int cmd_validate(const std::string& predicted, const std::string& observed, const std::string& out) {
  auto p = detail::load_schedule(predicted);
  auto o = detail::load_schedule(observed);
  detail::write_file(out, error_table(prediction_error(finish_times(p), finish_times(o))));
  return kOk;
}

inline int cmd_generate(const std::string& model, double horizon, std::uint64_t seed, const std::string& out) {
  auto m = detail::load_model(model);
  detail::write_file(out, to_trace_string(synthesize(m, horizon, derive_seed(seed, 0))));
  return kOk;
}

inline int cmd_fit(const std::string& trace, const std::string& out, std::ostream& log) {
  auto w = detail::load_trace(trace);
  std::vector<std::string> warnings;
  auto m = fit_model(w, &warnings);
  for (const auto& msg : warnings) log << "warning: " << msg << '\n';
  detail::write_file(out, to_json(m).dump(2) + "\n");
  return kOk;
}

inline std::string provision_table(const std::vector<SLOSpec>& slos, const std::vector<ProvisionRow>& rows) {
  std::ostringstream out;
  out << "capacity,feasible" << detail::qs_header(slos) << '\n';
  for (const auto& r : rows) {
    out << r.capacity << ',' << (r.qs ? "yes" : "no");
    if (r.qs) out << detail::qs_cells(*r.qs);
    else
      for (std::size_t i = 0; i < slos.size(); ++i) out << ",NA";
    out << '\n';
  }
  return out.str();
}

inline int cmd_provision(const std::string& trace, const std::string& config, const std::string& slos_path,
                         const std::vector<int>& capacities, const std::string& out) {
  auto w = detail::load_trace(trace);
  auto cfg = detail::load_config(config);
  auto slos = detail::load_slos(slos_path);
  detail::write_file(out, provision_table(slos, provision(w, cfg, capacities, slos)));
  return kOk;
}

// Writes <out>/journal.jsonl, <out>/final_config.json and <out>/qs.csv.
inline int cmd_optimize(const std::string& trace, const std::string& config, const std::string& slos_path,
                        const std::string& loop, const std::string& out, std::optional<std::uint64_t> seed,
                        std::ostream& log) {
  auto w = detail::load_trace(trace);
  auto cfg = detail::load_config(config);
  auto slos = detail::load_slos(slos_path);
  auto lc = detail::load_loop(loop);
  if (seed) lc.seed = derive_seed(*seed, 1);
  validate(slos, w);

  std::filesystem::create_directories(out);
  std::ostringstream journal, table;
  table << "iteration,accepted,injected" << detail::qs_header(slos) << ",step_norm\n";
  LoopHooks hooks;
  hooks.on_iteration = [&](const IterationRecord& r) {
    journal << to_json(r).dump() << '\n';
    table << r.iteration << ',' << (r.accepted ? 1 : 0) << ',' << (r.injected ? 1 : 0)
          << detail::qs_cells(r.observed_qs) << ',' << format_number(r.step_norm) << '\n';
  };
  auto result = run_loop(replay_source(w, lc.window_length), slos, cfg, lc, hooks);

  const auto dir = std::filesystem::path(out);
  detail::write_file((dir / "journal.jsonl").string(), journal.str());
  detail::write_file((dir / "qs.csv").string(), table.str());
  detail::write_file((dir / "final_config.json").string(), to_json(result.accepted_config).dump(2) + "\n");
  log << status_name(result.status) << ": " << result.message << " after " << result.records.size()
      << " iterations\n";
  switch (result.status) {
    case LoopStatus::kConverged: return kOk;
    case LoopStatus::kMaxIterations: return kMaxIterations;
    case LoopStatus::kAborted: return kAborted;
  }
  return kFailure;
}

}  // namespace tempo::cli
