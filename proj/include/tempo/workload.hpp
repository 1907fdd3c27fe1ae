#pragma once

// Job traces, statistical workload models, and workload synthesis.
//
// Trace file format (one job per line, versioned header):
//
//   # tempo-trace v1
//   # horizon 3600
//   job_id,tenant,submit_time_s,deadline_s,task_durations_s,task_demands
//   J1,A,0,,10;12.5,
//   J2,B,4,90,30,2
//
// deadline_s is empty for best-effort jobs. task_demands is optional and
// defaults to 1 container per task.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tempo/common.hpp"

namespace tempo {

struct TaskSpec {
  std::string task_id;
  double duration = 0.0;  // seconds, > 0
  int demand = 1;         // containers, >= 1

  bool operator==(const TaskSpec&) const = default;
};

struct JobSpec {
  std::string job_id;
  std::string tenant;
  double submit_time = 0.0;
  std::optional<double> deadline;  // absolute time
  std::vector<TaskSpec> tasks;

  bool operator==(const JobSpec&) const = default;
};

struct Workload {
  std::vector<JobSpec> jobs;  // ascending submit_time
  double horizon = 0.0;

  bool operator==(const Workload&) const = default;

  std::size_t task_count() const {
    std::size_t n = 0;
    for (const auto& j : jobs) n += j.tasks.size();
    return n;
  }
};

struct TenantModel {
  double arrival_rate = 0.0;  // jobs per second
  double duration_log_mean = 0.0;
  double duration_log_sd = 0.0;
  std::map<int, double> tasks_per_job;  // task count -> probability
  std::vector<double> deadline_offsets;  // empirical (deadline - submit); empty = best effort

  bool operator==(const TenantModel&) const = default;
};

struct WorkloadModel {
  std::map<std::string, TenantModel> tenants;

  bool operator==(const WorkloadModel&) const = default;
};

inline constexpr std::string_view kTraceHeader = "# tempo-trace v1";

namespace detail {

inline void sort_jobs(std::vector<JobSpec>& jobs) {
  std::stable_sort(jobs.begin(), jobs.end(), [](const JobSpec& a, const JobSpec& b) {
    if (a.submit_time != b.submit_time) return a.submit_time < b.submit_time;
    if (a.tenant != b.tenant) return a.tenant < b.tenant;
    return a.job_id < b.job_id;
  });
}

inline double natural_horizon(const std::vector<JobSpec>& jobs) {
  double h = 0.0;
  for (const auto& j : jobs) {
    double longest = 0.0;
    for (const auto& t : j.tasks) longest = std::max(longest, t.duration);
    h = std::max(h, j.submit_time + longest);
  }
  return h;
}

}  // namespace detail

// Throws ConfigError naming the first violated invariant.
inline void validate(const JobSpec& job) {
  if (job.job_id.empty()) throw ConfigError("job with empty id");
  if (job.tenant.empty()) throw ConfigError("job " + job.job_id + ": empty tenant");
  if (!(job.submit_time >= 0.0) || !std::isfinite(job.submit_time))
    throw ConfigError("job " + job.job_id + ": submit time must be finite and >= 0");
  if (job.deadline && !(*job.deadline > job.submit_time))
    throw ConfigError("job " + job.job_id + ": deadline before submission");
  if (job.tasks.empty()) throw ConfigError("job " + job.job_id + ": no tasks");
  for (const auto& t : job.tasks) {
    if (!(t.duration > 0.0) || !std::isfinite(t.duration))
      throw ConfigError("job " + job.job_id + ": task duration must be > 0");
    if (t.demand < 1) throw ConfigError("job " + job.job_id + ": task demand must be >= 1");
  }
}

inline void validate(const Workload& w) {
  for (std::size_t i = 0; i < w.jobs.size(); ++i) {
    validate(w.jobs[i]);
    if (i > 0 && w.jobs[i].submit_time < w.jobs[i - 1].submit_time)
      throw ConfigError("workload jobs not sorted by submit time");
    if (w.jobs[i].submit_time > w.horizon)
      throw ConfigError("job " + w.jobs[i].job_id + " submitted after the horizon");
  }
}

// Builds a workload from an arbitrary job list: sorts, assigns missing task
// ids and extends the horizon to cover every job.
inline Workload make_workload(std::vector<JobSpec> jobs, double horizon = 0.0) {
  for (auto& j : jobs)
    for (std::size_t k = 0; k < j.tasks.size(); ++k)
      if (j.tasks[k].task_id.empty()) j.tasks[k].task_id = j.job_id + "." + std::to_string(k);
  detail::sort_jobs(jobs);
  Workload w;
  w.horizon = std::max(horizon, detail::natural_horizon(jobs));
  w.jobs = std::move(jobs);
  validate(w);
  return w;
}

inline Workload parse_trace(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  double declared_horizon = 0.0;
  bool saw_header = false;
  std::vector<JobSpec> jobs;

  while (std::getline(in, line)) {
    ++lineno;
    auto text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      if (text == kTraceHeader) {
        saw_header = true;
      } else if (text.rfind("# horizon", 0) == 0) {
        if (!parse_number(text.substr(9), declared_horizon) || declared_horizon < 0)
          throw ParseError(lineno, "horizon", "invalid horizon directive");
      }
      continue;
    }
    if (!saw_header) throw ParseError(lineno, "header", "missing '# tempo-trace v1' header");
    auto fields = split(text, ',');
    if (fields[0] == "job_id") continue;  // column header
    if (fields.size() < 5 || fields.size() > 6)
      throw ParseError(lineno, "record", "expected 5 or 6 comma-separated fields");

    JobSpec job;
    job.job_id = std::string(fields[0]);
    job.tenant = std::string(fields[1]);
    if (job.job_id.empty()) throw ParseError(lineno, "job_id", "missing");
    if (job.tenant.empty()) throw ParseError(lineno, "tenant", "missing");
    if (!parse_number(fields[2], job.submit_time) || !std::isfinite(job.submit_time) || job.submit_time < 0)
      throw ParseError(lineno, "submit_time_s", "not a non-negative number");
    if (!fields[3].empty()) {
      double d = 0;
      if (!parse_number(fields[3], d)) throw ParseError(lineno, "deadline_s", "not a number");
      if (!(d > job.submit_time)) throw ParseError(lineno, "deadline_s", "deadline before submission");
      job.deadline = d;
    }
    if (fields[4].empty()) throw ParseError(lineno, "task_durations_s", "missing");
    auto durations = split(fields[4], ';');
    std::vector<std::string_view> demands;
    if (fields.size() == 6 && !fields[5].empty()) {
      demands = split(fields[5], ';');
      if (demands.size() != durations.size())
        throw ParseError(lineno, "task_demands", "count differs from task_durations_s");
    }
    for (std::size_t k = 0; k < durations.size(); ++k) {
      TaskSpec t;
      t.task_id = job.job_id + "." + std::to_string(k);
      if (!parse_number(durations[k], t.duration) || !(t.duration > 0) || !std::isfinite(t.duration))
        throw ParseError(lineno, "task_durations_s", "task " + std::to_string(k) + " duration must be > 0");
      if (!demands.empty()) {
        double d = 0;
        if (!parse_number(demands[k], d) || d < 1 || d != std::floor(d))
          throw ParseError(lineno, "task_demands", "task " + std::to_string(k) + " demand must be an integer >= 1");
        t.demand = static_cast<int>(d);
      }
      job.tasks.push_back(std::move(t));
    }
    jobs.push_back(std::move(job));
  }
  if (jobs.empty()) throw ParseError(lineno, "record", "empty trace");
  auto w = make_workload(std::move(jobs), declared_horizon);
  // A declared horizon is the trace interval; tasks may run past it.
  if (declared_horizon > 0) {
    w.horizon = declared_horizon;
    validate(w);
  }
  return w;
}

inline Workload parse_trace(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_trace(in);
}

inline void write_trace(std::ostream& out, const Workload& w) {
  out << kTraceHeader << '\n';
  out << "# horizon " << format_number(w.horizon) << '\n';
  out << "job_id,tenant,submit_time_s,deadline_s,task_durations_s,task_demands\n";
  for (const auto& j : w.jobs) {
    out << j.job_id << ',' << j.tenant << ',' << format_number(j.submit_time) << ',';
    if (j.deadline) out << format_number(*j.deadline);
    out << ',';
    bool any_demand = false;
    for (std::size_t k = 0; k < j.tasks.size(); ++k) {
      if (k) out << ';';
      out << format_number(j.tasks[k].duration);
      any_demand |= j.tasks[k].demand != 1;
    }
    out << ',';
    if (any_demand)
      for (std::size_t k = 0; k < j.tasks.size(); ++k) out << (k ? ";" : "") << j.tasks[k].demand;
    out << '\n';
  }
}

inline std::string to_trace_string(const Workload& w) {
  std::ostringstream out;
  write_trace(out, w);
  return out.str();
}

// Per-tenant closed-form fit: Poisson rate from the submission span,
// log-space MLE for the lognormal durations, empirical task-count histogram.
// Tenants with fewer than two jobs are skipped and reported in `warnings`.
inline WorkloadModel fit_model(const Workload& w, std::vector<std::string>* warnings = nullptr) {
  std::map<std::string, std::vector<const JobSpec*>> by_tenant;
  for (const auto& j : w.jobs) by_tenant[j.tenant].push_back(&j);

  WorkloadModel model;
  for (const auto& [tenant, jobs] : by_tenant) {
    if (jobs.size() < 2) {
      if (warnings) warnings->push_back("tenant " + tenant + " has fewer than 2 jobs; omitted");
      continue;
    }
    double first = jobs.front()->submit_time, last = jobs.front()->submit_time;
    for (auto* j : jobs) {
      first = std::min(first, j->submit_time);
      last = std::max(last, j->submit_time);
    }
    if (!(last > first)) throw Error("tenant " + tenant + ": all submissions at the same instant");

    TenantModel tm;
    tm.arrival_rate = static_cast<double>(jobs.size() - 1) / (last - first);

    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    std::map<int, std::size_t> counts;
    for (auto* j : jobs) {
      ++counts[static_cast<int>(j->tasks.size())];
      for (const auto& t : j->tasks) {
        double l = std::log(t.duration);
        sum += l;
        ++n;
      }
      if (j->deadline) tm.deadline_offsets.push_back(*j->deadline - j->submit_time);
    }
    tm.duration_log_mean = sum / static_cast<double>(n);
    for (auto* j : jobs)
      for (const auto& t : j->tasks) {
        double d = std::log(t.duration) - tm.duration_log_mean;
        sum_sq += d * d;
      }
    tm.duration_log_sd = std::sqrt(sum_sq / static_cast<double>(n));
    for (auto [count, c] : counts)
      tm.tasks_per_job[count] = static_cast<double>(c) / static_cast<double>(jobs.size());
    std::sort(tm.deadline_offsets.begin(), tm.deadline_offsets.end());
    model.tenants[tenant] = std::move(tm);
  }
  return model;
}

inline void validate(const WorkloadModel& m) {
  if (m.tenants.empty()) throw ConfigError("workload model has no tenants");
  for (const auto& [name, t] : m.tenants) {
    if (!(t.arrival_rate > 0)) throw ConfigError("tenant " + name + ": arrival_rate must be > 0");
    if (!(t.duration_log_sd >= 0)) throw ConfigError("tenant " + name + ": duration_log_sd must be >= 0");
    if (t.tasks_per_job.empty()) throw ConfigError("tenant " + name + ": empty tasks_per_job");
    double total = 0;
    for (auto [k, p] : t.tasks_per_job) {
      if (k < 1 || p < 0) throw ConfigError("tenant " + name + ": invalid tasks_per_job entry");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) throw ConfigError("tenant " + name + ": tasks_per_job must sum to 1");
  }
}

// Deterministic in (model, horizon, seed). Each tenant draws from its own
// mt19937_64 stream seeded with derive_seed(seed, tenant_index).
inline Workload synthesize(const WorkloadModel& m, double horizon, std::uint64_t seed) {
  if (!(horizon > 0)) throw ConfigError("synthesize: horizon must be > 0");
  validate(m);
  std::vector<JobSpec> jobs;
  std::uint64_t stream = 0;
  for (const auto& [tenant, tm] : m.tenants) {
    std::mt19937_64 rng(derive_seed(seed, stream++));
    std::exponential_distribution<double> gap(tm.arrival_rate);
    std::lognormal_distribution<double> duration(tm.duration_log_mean, tm.duration_log_sd);
    std::vector<int> sizes;
    std::vector<double> probs;
    for (auto [k, p] : tm.tasks_per_job) {
      sizes.push_back(k);
      probs.push_back(p);
    }
    std::discrete_distribution<std::size_t> size_pick(probs.begin(), probs.end());

    double t = 0.0;
    std::size_t seq = 0;
    for (;;) {
      t += gap(rng);
      if (t > horizon) break;
      JobSpec job;
      job.job_id = tenant + "-" + std::to_string(seq++);
      job.tenant = tenant;
      job.submit_time = t;
      int ntasks = sizes[size_pick(rng)];
      for (int k = 0; k < ntasks; ++k) {
        double d = duration(rng);
        job.tasks.push_back({job.job_id + "." + std::to_string(k), std::max(d, 1e-9), 1});
      }
      if (!tm.deadline_offsets.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, tm.deadline_offsets.size() - 1);
        job.deadline = t + tm.deadline_offsets[pick(rng)];
      }
      jobs.push_back(std::move(job));
    }
  }
  detail::sort_jobs(jobs);
  Workload w;
  w.horizon = horizon;
  w.jobs = std::move(jobs);
  return w;
}

// Durations are multiplied by duration_factor; inter-arrival gaps (measured
// from the first submission) are divided by arrival_factor. Deadlines keep
// their offset from submission.
inline Workload scale_workload(const Workload& w, double duration_factor, double arrival_factor) {
  if (!(duration_factor > 0) || !(arrival_factor > 0))
    throw ConfigError("scale_workload: factors must be > 0");
  Workload out = w;
  if (out.jobs.empty()) return out;
  const double anchor = w.jobs.front().submit_time;
  for (auto& j : out.jobs) {
    double offset = j.deadline ? *j.deadline - j.submit_time : 0.0;
    j.submit_time = anchor + (j.submit_time - anchor) / arrival_factor;
    if (j.deadline) j.deadline = j.submit_time + offset;
    for (auto& t : j.tasks) t.duration *= duration_factor;
  }
  out.horizon = std::max(anchor + (w.horizon - anchor) / arrival_factor, detail::natural_horizon(out.jobs));
  return out;
}

// Model file: versioned JSON document with one block per tenant.
inline nlohmann::json to_json(const WorkloadModel& m) {
  nlohmann::json j;
  j["format"] = "tempo-model";
  j["version"] = 1;
  auto& tenants = j["tenants"] = nlohmann::json::object();
  for (const auto& [name, t] : m.tenants) {
    nlohmann::json hist = nlohmann::json::object();
    for (auto [k, p] : t.tasks_per_job) hist[std::to_string(k)] = p;
    tenants[name] = {{"arrival_rate", t.arrival_rate},
                     {"duration_log_mean", t.duration_log_mean},
                     {"duration_log_sd", t.duration_log_sd},
                     {"tasks_per_job", hist},
                     {"deadline_offsets", t.deadline_offsets}};
  }
  return j;
}

inline WorkloadModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "tempo-model" || j.value("version", 0) != 1)
    throw ConfigError("model file: expected format tempo-model version 1");
  WorkloadModel m;
  for (const auto& [name, b] : j.at("tenants").items()) {
    TenantModel t;
    t.arrival_rate = b.at("arrival_rate").get<double>();
    t.duration_log_mean = b.at("duration_log_mean").get<double>();
    t.duration_log_sd = b.at("duration_log_sd").get<double>();
    for (const auto& [k, p] : b.at("tasks_per_job").items()) t.tasks_per_job[std::stoi(k)] = p.get<double>();
    if (b.contains("deadline_offsets")) t.deadline_offsets = b["deadline_offsets"].get<std::vector<double>>();
    m.tenants[name] = std::move(t);
  }
  validate(m);
  return m;
}

}  // namespace tempo
