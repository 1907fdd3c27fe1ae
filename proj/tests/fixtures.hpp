#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tempo/tempo.hpp"

namespace fixtures {

inline tempo::JobSpec job(std::string id, std::string tenant, double submit, std::vector<double> durations,
                          std::optional<double> deadline = std::nullopt) {
  tempo::JobSpec j;
  j.job_id = id;
  j.tenant = std::move(tenant);
  j.submit_time = submit;
  j.deadline = deadline;
  for (std::size_t k = 0; k < durations.size(); ++k) j.tasks.push_back({id + "." + std::to_string(k), durations[k], 1});
  return j;
}

inline tempo::TenantConfig tenant(double weight, int min_limit, int max_limit, double timeout_share = tempo::kInf,
                                  double timeout_min = tempo::kInf) {
  return {weight, min_limit, max_limit, timeout_share, timeout_min};
}

// Capacity 5; A holds all five containers with 10 s tasks from t=0; B (equal
// weight, 1 s share timeout) submits two 5 s tasks at t=1.
inline tempo::Workload fig2_workload() {
  return tempo::make_workload({job("a", "A", 0, {10, 10, 10, 10, 10}), job("b", "B", 1, {5, 5})});
}

inline tempo::RMConfig fig2_config() {
  tempo::RMConfig c;
  c.capacity = 5;
  c.tenants["A"] = tenant(1, 0, 5);
  c.tenants["B"] = tenant(1, 0, 5, 1.0);
  return c;
}

// Bounds pinning every parameter of t to its current value.
inline tempo::TenantBounds fixed_bounds(const tempo::TenantConfig& t) {
  tempo::TenantBounds b;
  for (std::size_t p = 0; p < tempo::kParamCount; ++p) {
    double v = tempo::get_param(t, static_cast<tempo::Param>(p));
    b[p] = {v, v};
  }
  return b;
}

struct Scenario {
  tempo::WorkloadModel model;
  tempo::Workload workload;
  tempo::RMConfig config;
  std::vector<tempo::SLOSpec> slos;
};

// Deadline tenant "dl" throttled behind best-effort tenant "be" on 20
// containers; share weights and max limits of both are tunable.
inline Scenario throttled_scenario(std::uint64_t seed, double horizon = 3600) {
  using namespace tempo;
  Scenario s;
  TenantModel d;
  d.arrival_rate = 1.0 / 60;
  d.duration_log_mean = std::log(40.0);
  d.duration_log_sd = 0.5;
  d.tasks_per_job = {{4, 0.5}, {8, 0.5}};
  d.deadline_offsets = {200, 300, 400};
  TenantModel b;
  b.arrival_rate = 1.0 / 30;
  b.duration_log_mean = std::log(60.0);
  b.duration_log_sd = 0.7;
  b.tasks_per_job = {{5, 0.5}, {10, 0.5}};
  s.model.tenants["dl"] = d;
  s.model.tenants["be"] = b;
  s.workload = synthesize(s.model, horizon, derive_seed(seed, 0));

  s.config.capacity = 20;
  s.config.tenants["dl"] = tenant(0.5, 0, 4);
  s.config.tenants["be"] = tenant(4, 0, 5);
  for (const char* t : {"dl", "be"}) {
    auto bounds = fixed_bounds(s.config.tenants[t]);
    bounds[static_cast<std::size_t>(Param::kShareWeight)] = {0.5, 4};
    bounds[static_cast<std::size_t>(Param::kMaxLimit)] = {2, 20};
    s.config.bounds[t] = bounds;
  }

  s.slos.resize(2);
  s.slos[0].tenant = "dl";
  s.slos[0].metric = Metric::kDL;
  s.slos[0].gamma = 0.25;
  s.slos[0].threshold = 0.05;
  s.slos[1].tenant = "be";
  s.slos[1].metric = Metric::kAJR;
  return s;
}

}  // namespace fixtures
