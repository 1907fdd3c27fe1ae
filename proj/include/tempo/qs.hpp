#pragma once

// Quantitative SLO (QS) metrics over task schedules. Every metric is a loss:
// lower is better.
//
// For a tenant and window [t0, t1], J is the set of the tenant's jobs
// submitted at or after t0 and completed at or before t1.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tempo/common.hpp"
#include "tempo/simulator.hpp"

namespace tempo {

enum class Metric { kAJR, kDL, kUTIL, kTHR, kFAIR };

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::kAJR: return "AJR";
    case Metric::kDL: return "DL";
    case Metric::kUTIL: return "UTIL";
    case Metric::kTHR: return "THR";
    case Metric::kFAIR: return "FAIR";
  }
  return "?";
}

inline Metric parse_metric(const std::string& s) {
  for (Metric m : {Metric::kAJR, Metric::kDL, Metric::kUTIL, Metric::kTHR, Metric::kFAIR})
    if (s == metric_name(m)) return m;
  throw ConfigError("unknown QS metric '" + s + "'");
}

struct Window {
  double t0 = 0.0;
  double t1 = 0.0;
  double length() const { return t1 - t0; }
  bool operator==(const Window&) const = default;
};

struct SLOSpec {
  std::string tenant;
  Metric metric = Metric::kAJR;
  double gamma = 0.0;          // DL slack
  double desired_share = 0.0;  // FAIR target c_i
  double priority = 1.0;       // multiplies the metric
  std::optional<double> threshold;  // absent: best effort

  bool operator==(const SLOSpec&) const = default;
};

// One value per SLO in registration order. std::nullopt marks a window with
// no qualifying jobs for AJR/DL; callers decide how to fill it.
struct QSVector {
  std::vector<std::optional<double>> values;
  Window window;

  bool operator==(const QSVector&) const = default;
  std::size_t size() const { return values.size(); }
  bool complete() const {
    return std::all_of(values.begin(), values.end(), [](const auto& v) { return v.has_value(); });
  }
};

inline void validate(const SLOSpec& slo) {
  if (slo.tenant.empty()) throw ConfigError("SLO without tenant");
  if (!(slo.gamma >= 0)) throw ConfigError("SLO for " + slo.tenant + ": gamma must be >= 0");
  if (!(slo.desired_share >= 0 && slo.desired_share <= 1))
    throw ConfigError("SLO for " + slo.tenant + ": desired share must be in [0, 1]");
  if (!(slo.priority >= 1) || !std::isfinite(slo.priority))
    throw ConfigError("SLO for " + slo.tenant + ": priority must be >= 1");
  if (slo.threshold && !std::isfinite(*slo.threshold)) throw ConfigError("SLO for " + slo.tenant + ": bad threshold");
}

// Registration-time checks against a workload: every tenant exists and every
// job of a DL tenant carries a deadline.
inline void validate(const std::vector<SLOSpec>& slos, const Workload& w) {
  if (slos.empty()) throw ConfigError("no SLOs registered");
  std::set<std::string> tenants;
  for (const auto& j : w.jobs) tenants.insert(j.tenant);
  for (std::size_t i = 0; i < slos.size(); ++i) {
    validate(slos[i]);
    if (slos[i].metric != Metric::kDL) continue;
    for (const auto& j : w.jobs)
      if (j.tenant == slos[i].tenant && !j.deadline)
        throw ConfigError("SLO #" + std::to_string(i) + ": job " + j.job_id + " of deadline tenant " + j.tenant +
                          " has no deadline");
  }
}

namespace detail {

template <class F>
void for_each_completed(const TaskSchedule& s, const std::string& tenant, Window win, F&& f) {
  for (const auto& j : s.jobs) {
    if (j.tenant != tenant || !j.finish_time) continue;
    if (j.submit_time < win.t0 || *j.finish_time > win.t1) continue;
    f(j);
  }
}

inline void check_window(Window win) {
  if (!(win.t0 < win.t1)) throw ConfigError("QS window is empty");
}

}  // namespace detail

// Mean response time (finish - submit) over J.
inline std::optional<double> qs_ajr(const TaskSchedule& s, const std::string& tenant, Window win) {
  detail::check_window(win);
  double sum = 0.0;
  std::size_t n = 0;
  detail::for_each_completed(s, tenant, win, [&](const JobRecord& j) {
    sum += *j.finish_time - j.submit_time;
    ++n;
  });
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

// Fraction of J with finish > gamma * (finish - launch) + deadline, where
// launch is the job's first task launch.
inline std::optional<double> qs_dl(const TaskSchedule& s, const std::string& tenant, double gamma, Window win) {
  detail::check_window(win);
  std::size_t n = 0, missed = 0;
  detail::for_each_completed(s, tenant, win, [&](const JobRecord& j) {
    if (!j.deadline) throw ConfigError("job " + j.job_id + " has no deadline");
    double launch = j.launch_time.value_or(j.submit_time);
    double finish = *j.finish_time;
    if (finish > gamma * (finish - launch) + *j.deadline) ++missed;
    ++n;
  });
  if (n == 0) return std::nullopt;
  return static_cast<double>(missed) / static_cast<double>(n);
}

// Negated normalized container-time of the tenant's attempts inside the
// window. Preempted attempts count only when include_preempted is set.
inline double qs_util(const TaskSchedule& s, const std::string& tenant, Window win, bool include_preempted = false) {
  detail::check_window(win);
  double area = 0.0;
  for (const auto& e : s.entries) {
    if (e.preempted && !include_preempted) continue;
    const auto& j = s.jobs[e.job];
    if (j.tenant != tenant) continue;
    double a = std::max(win.t0, e.launch_time), b = std::min(win.t1, s.occupied_until(e));
    if (b > a) area += e.allocation * (b - a);
  }
  return -area / (win.length() * static_cast<double>(s.capacity));
}

inline double qs_thr(const TaskSchedule& s, const std::string& tenant, Window win) {
  detail::check_window(win);
  double n = 0;
  detail::for_each_completed(s, tenant, win, [&](const JobRecord&) { n += 1; });
  return -n;
}

// Absolute deviation of achieved utilization from the desired share.
inline double qs_fair(const TaskSchedule& s, const std::string& tenant, double desired_share, Window win) {
  return std::abs(desired_share + qs_util(s, tenant, win));
}

inline std::optional<double> evaluate_one(const SLOSpec& slo, const TaskSchedule& s, Window win) {
  std::optional<double> v;
  switch (slo.metric) {
    case Metric::kAJR: v = qs_ajr(s, slo.tenant, win); break;
    case Metric::kDL: v = qs_dl(s, slo.tenant, slo.gamma, win); break;
    case Metric::kUTIL: v = qs_util(s, slo.tenant, win); break;
    case Metric::kTHR: v = qs_thr(s, slo.tenant, win); break;
    case Metric::kFAIR: v = qs_fair(s, slo.tenant, slo.desired_share, win); break;
  }
  if (v) *v *= slo.priority;
  return v;
}

inline QSVector evaluate(const std::vector<SLOSpec>& slos, const TaskSchedule& s, Window win) {
  if (slos.empty()) throw ConfigError("evaluate: no SLOs");
  QSVector q;
  q.window = win;
  q.values.reserve(slos.size());
  for (std::size_t i = 0; i < slos.size(); ++i) {
    try {
      q.values.push_back(evaluate_one(slos[i], s, win));
    } catch (const ConfigError& e) {
      throw ConfigError("SLO #" + std::to_string(i) + " (" + slos[i].tenant + "/" + metric_name(slos[i].metric) +
                        "): " + e.what());
    }
  }
  return q;
}

// ---------------------------------------------------------------------------
// Prediction error of job finish times.

struct JobFinish {
  std::string tenant;
  double finish = 0.0;
};

using FinishTimes = std::map<std::string, JobFinish>;  // job id -> finish

inline FinishTimes finish_times(const TaskSchedule& s) {
  FinishTimes out;
  for (const auto& j : s.jobs)
    if (j.finish_time) out[j.job_id] = {j.tenant, *j.finish_time};
  return out;
}

struct PredictionError {
  std::size_t jobs = 0;
  std::optional<double> rae;  // nullopt when all observed values coincide
  std::optional<double> rse;
};

class JobSetMismatch : public Error {
 public:
  JobSetMismatch(std::vector<std::string> missing_predicted, std::vector<std::string> missing_observed)
      : Error(describe(missing_predicted, missing_observed)),
        missing_predicted_(std::move(missing_predicted)),
        missing_observed_(std::move(missing_observed)) {}

  const std::vector<std::string>& missing_in_predicted() const { return missing_predicted_; }
  const std::vector<std::string>& missing_in_observed() const { return missing_observed_; }

 private:
  static std::string describe(const std::vector<std::string>& p, const std::vector<std::string>& o) {
    std::string msg = "job id sets differ;";
    auto list = [&](const char* label, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string(" ") + label + ":";
      for (const auto& id : ids) msg += " " + id;
      msg += ";";
    };
    list("missing from predicted", p);
    list("missing from observed", o);
    return msg;
  }
  std::vector<std::string> missing_predicted_, missing_observed_;
};

// Per-tenant relative absolute / squared error against the mean-predictor
// baseline of the observed values. Tenants come back sorted by id.
inline std::map<std::string, PredictionError> prediction_error(const FinishTimes& predicted,
                                                               const FinishTimes& observed) {
  std::vector<std::string> missing_p, missing_o;
  for (const auto& [id, v] : observed)
    if (!predicted.count(id)) missing_p.push_back(id);
  for (const auto& [id, v] : predicted)
    if (!observed.count(id)) missing_o.push_back(id);
  if (!missing_p.empty() || !missing_o.empty()) throw JobSetMismatch(missing_p, missing_o);

  std::map<std::string, std::vector<std::pair<double, double>>> by_tenant;  // (p, l)
  for (const auto& [id, obs] : observed) by_tenant[obs.tenant].push_back({predicted.at(id).finish, obs.finish});

  std::map<std::string, PredictionError> out;
  for (const auto& [tenant, rows] : by_tenant) {
    double mean = 0.0;
    for (auto [p, l] : rows) mean += l;
    mean /= static_cast<double>(rows.size());
    double abs_num = 0, abs_den = 0, sq_num = 0, sq_den = 0;
    for (auto [p, l] : rows) {
      abs_num += std::abs(p - l);
      abs_den += std::abs(l - mean);
      sq_num += (p - l) * (p - l);
      sq_den += (l - mean) * (l - mean);
    }
    PredictionError e;
    e.jobs = rows.size();
    if (abs_den > 0) e.rae = abs_num / abs_den;
    if (sq_den > 0) e.rse = std::sqrt(sq_num / sq_den);
    out[tenant] = e;
  }
  return out;
}

// SLO template file: {"format": "tempo-slos", "version": 1, "slos": [...]}.
// Each block has tenant, metric and optional gamma, desired_share, priority,
// threshold.
inline nlohmann::json to_json(const std::vector<SLOSpec>& slos) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : slos) {
    nlohmann::json b = {{"tenant", s.tenant}, {"metric", metric_name(s.metric)}, {"priority", s.priority}};
    if (s.metric == Metric::kDL) b["gamma"] = s.gamma;
    if (s.metric == Metric::kFAIR) b["desired_share"] = s.desired_share;
    if (s.threshold) b["threshold"] = *s.threshold;
    arr.push_back(b);
  }
  return {{"format", "tempo-slos"}, {"version", 1}, {"slos", arr}};
}

inline std::vector<SLOSpec> slos_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "tempo-slos" || j.value("version", 0) != 1)
    throw ConfigError("SLO file: expected format tempo-slos version 1");
  std::vector<SLOSpec> out;
  for (const auto& b : j.at("slos")) {
    SLOSpec s;
    s.tenant = b.at("tenant").get<std::string>();
    s.metric = parse_metric(b.at("metric").get<std::string>());
    s.gamma = b.value("gamma", 0.0);
    s.desired_share = b.value("desired_share", 0.0);
    s.priority = b.value("priority", 1.0);
    if (b.contains("threshold") && !b["threshold"].is_null()) s.threshold = b["threshold"].get<double>();
    validate(s);
    out.push_back(s);
  }
  if (out.empty()) throw ConfigError("SLO file lists no SLOs");
  return out;
}

}  // namespace tempo
