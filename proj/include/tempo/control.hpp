#pragma once

// Closed-loop tuning of an RM configuration: observe a window, roll back if
// the observed QS does not dominate the last accepted one, otherwise sample
// candidates around the applied configuration, predict their QS by
// simulation and take one PALD step.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tempo/common.hpp"
#include "tempo/pald.hpp"
#include "tempo/qs.hpp"
#include "tempo/rm_config.hpp"
#include "tempo/simulator.hpp"
#include "tempo/workload.hpp"

namespace tempo {

struct LoopConfig {
  double window_length = 1800.0;  // seconds per observation interval
  int candidates_per_iter = 5;
  double d_max = 0.1;
  double alpha = 0.1;
  int measures = 1;  // what-if replicas averaged per sample
  int max_iterations = 30;
  double dominance_tolerance = 0.0;
  double observation_noise = 0.0;  // relative sd of multiplicative noise on each QS value
  double min_step_norm = 1e-4;
  int stable_iterations = 3;  // consecutive small steps that count as converged
  std::uint64_t seed = 0;

  bool operator==(const LoopConfig&) const = default;
};

inline void validate(const LoopConfig& c) {
  if (!(c.window_length > 0)) throw ConfigError("loop: window_length must be > 0");
  if (c.candidates_per_iter < 1) throw ConfigError("loop: candidates_per_iter must be >= 1");
  if (!(c.d_max > 0 && c.d_max <= 1)) throw ConfigError("loop: d_max must be in (0, 1]");
  if (!(c.alpha > 0)) throw ConfigError("loop: alpha must be > 0");
  if (c.measures < 1) throw ConfigError("loop: measures must be >= 1");
  if (c.max_iterations < 0) throw ConfigError("loop: max_iterations must be >= 0");
  if (!(c.dominance_tolerance >= 0)) throw ConfigError("loop: dominance_tolerance must be >= 0");
  if (!(c.observation_noise >= 0)) throw ConfigError("loop: observation_noise must be >= 0");
  if (c.stable_iterations < 1) throw ConfigError("loop: stable_iterations must be >= 1");
}

struct IterationRecord {
  std::size_t iteration = 0;
  Eigen::VectorXd applied_x;
  QSVector observed_qs;
  bool accepted = false;
  std::vector<std::optional<QSVector>> proposal_qs_predicted;  // nullopt: infeasible candidate
  std::vector<Eigen::VectorXd> proposals;
  Eigen::VectorXd next_x;
  double step_norm = 0.0;
  bool need_more_samples = false;
  bool injected = false;  // applied_x came from the proposal override
  std::optional<pald::Diagnostics> diagnostics;
};

enum class LoopStatus { kConverged, kMaxIterations, kAborted };

inline const char* status_name(LoopStatus s) {
  switch (s) {
    case LoopStatus::kConverged: return "converged";
    case LoopStatus::kMaxIterations: return "max_iterations";
    case LoopStatus::kAborted: return "aborted";
  }
  return "?";
}

struct LoopResult {
  std::vector<IterationRecord> records;
  LoopStatus status = LoopStatus::kMaxIterations;
  std::string message;
  Eigen::VectorXd accepted_x;
  RMConfig accepted_config;
  QSVector accepted_qs;
};

// ---------------------------------------------------------------------------
// Building blocks.

inline std::vector<Eigen::VectorXd> propose_candidates(const Eigen::VectorXd& x, double d_max, int count,
                                                       std::uint64_t seed) {
  if ((x.array() < 0).any() || (x.array() > 1).any()) throw ConfigError("propose_candidates: x outside [0,1]");
  if (count < 0) throw ConfigError("propose_candidates: negative count");
  std::mt19937_64 rng(seed);
  return pald::sample_trust_region(x, std::max(d_max, 0.0), count, rng);
}

// Schedule of the whole workload under cfg, run to completion, evaluated
// over [0, horizon].
inline QSVector whatif(const Workload& w, const RMConfig& cfg, const std::vector<SLOSpec>& slos) {
  auto schedule = simulate(w, cfg);
  return evaluate(slos, schedule, {0.0, schedule.horizon});
}

// nullopt when x decodes to an invalid configuration.
inline std::optional<QSVector> whatif(const Workload& w, const Eigen::VectorXd& x, const RMConfig& base,
                                      const std::vector<SLOSpec>& slos) {
  RMConfig cfg;
  try {
    cfg = decode(x, base);
  } catch (const ConfigError&) {
    return std::nullopt;
  }
  return whatif(w, cfg, slos);
}

// new dominates old: no coordinate worse by more than tol, one better by more
// than tol. Missing values never dominate.
inline bool dominance_check(const std::vector<std::optional<double>>& fresh,
                            const std::vector<std::optional<double>>& old, double tol = 0.0) {
  if (fresh.size() != old.size()) throw Error("dominance_check: QS vectors differ in length");
  bool strict = false;
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    if (!fresh[i] || !old[i]) return false;
    if (*fresh[i] > *old[i] + tol) return false;
    if (*fresh[i] < *old[i] - tol) strict = true;
  }
  return strict;
}

inline bool dominance_check(const QSVector& fresh, const QSVector& old, double tol = 0.0) {
  return dominance_check(fresh.values, old.values, tol);
}

struct ProvisionRow {
  int capacity = 0;
  std::optional<QSVector> qs;  // nullopt: capacity below the sum of min limits
};

inline std::vector<ProvisionRow> provision(const Workload& w, const RMConfig& cfg, const std::vector<int>& capacities,
                                           const std::vector<SLOSpec>& slos) {
  validate(slos, w);
  std::vector<ProvisionRow> rows;
  for (int cap : capacities) {
    if (cap <= 0) throw ConfigError("provision: capacity must be > 0");
    RMConfig c = cfg;
    c.capacity = cap;
    for (auto& [name, t] : c.tenants) t.max_limit = std::min(t.max_limit, cap);
    ProvisionRow row{cap, std::nullopt};
    try {
      validate(c);
    } catch (const ConfigError&) {
      rows.push_back(row);
      continue;
    }
    row.qs = whatif(w, c, slos);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Workload sources.

// Workload observed during iteration t.
using WorkloadSource = std::function<Workload(std::size_t iteration)>;

// Consecutive windows of length L cut from a recorded trace, each shifted to
// start at 0; wraps around. A trace no longer than L is replayed whole.
inline WorkloadSource replay_source(Workload trace, double window_length) {
  if (!(window_length > 0)) throw ConfigError("replay: window_length must be > 0");
  validate(trace);
  return [trace = std::move(trace), window_length](std::size_t t) {
    const std::size_t slots = static_cast<std::size_t>(std::floor(trace.horizon / window_length));
    if (slots <= 1) return trace;
    const double t0 = static_cast<double>(t % slots) * window_length;
    std::vector<JobSpec> jobs;
    for (const auto& j : trace.jobs) {
      if (j.submit_time < t0 || j.submit_time >= t0 + window_length) continue;
      JobSpec c = j;
      c.submit_time -= t0;
      if (c.deadline) *c.deadline -= t0;
      jobs.push_back(std::move(c));
    }
    return make_workload(std::move(jobs), window_length);
  };
}

// A fresh synthetic window per iteration.
inline WorkloadSource model_source(WorkloadModel model, double window_length, std::uint64_t seed) {
  validate(model);
  return [model = std::move(model), window_length, seed](std::size_t t) {
    return synthesize(model, window_length, derive_seed(seed, t));
  };
}

// ---------------------------------------------------------------------------
// Loop.

struct LoopHooks {
  // Replaces the configuration the loop would apply next; used to inject
  // regressions. The replacement is pulled back inside the trust region.
  std::function<std::optional<Eigen::VectorXd>(std::size_t iteration, const Eigen::VectorXd& proposed)>
      proposal_override;
  std::function<void(const IterationRecord&)> on_iteration;
  pald::Options pald_options;
};

namespace detail {

inline constexpr std::uint64_t kStreamCandidates = 1;
inline constexpr std::uint64_t kStreamNoise = 2;

// Distance-capped move from `from` toward `to`.
inline Eigen::VectorXd cap_step(const Eigen::VectorXd& from, const Eigen::VectorXd& to, double d_max) {
  Eigen::VectorXd next = to.cwiseMax(0.0).cwiseMin(1.0);
  Eigen::VectorXd d = next - from;
  double n = d.norm();
  if (n > d_max) next = from + d * (d_max / n);
  return next;
}

// Missing entries (windows without qualifying jobs) take the value from prev.
inline QSVector carry_forward(QSVector q, const QSVector& prev) {
  for (std::size_t i = 0; i < q.values.size() && i < prev.values.size(); ++i)
    if (!q.values[i]) q.values[i] = prev.values[i];
  return q;
}

inline QSVector perturb(QSVector q, double rel_sd, std::mt19937_64& rng) {
  if (rel_sd <= 0) return q;
  std::normal_distribution<double> n(0.0, rel_sd);
  for (auto& v : q.values)
    if (v) *v *= 1.0 + n(rng);
  return q;
}

}  // namespace detail

// Objectives handed to PALD are the QS values divided by the magnitude of
// the first accepted observation (1 where that is 0). QS entries missing for
// lack of qualifying jobs carry the last accepted (or, for predictions, the
// current observed) value forward.
inline LoopResult run_loop(const WorkloadSource& production, const std::vector<SLOSpec>& slos,
                           const RMConfig& initial, const LoopConfig& lc, const LoopHooks& hooks = {}) {
  validate(lc);
  validate(initial);
  const auto dims = dimensions(initial);
  const auto m = static_cast<Eigen::Index>(dims.size());
  const auto k = static_cast<Eigen::Index>(slos.size());
  if (slos.empty()) throw ConfigError("loop: no SLOs");

  LoopResult result;
  Eigen::VectorXd x = encode(initial);
  Eigen::VectorXd x_acc = x;
  std::optional<QSVector> q_acc;
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(k);

  pald::Options po = hooks.pald_options;
  po.alpha = lc.alpha;
  po.d_max = lc.d_max;
  Eigen::VectorXd r(k);
  std::vector<bool> best_effort(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& th = slos[static_cast<std::size_t>(i)].threshold;
    best_effort[static_cast<std::size_t>(i)] = !th.has_value();
    r[i] = th.value_or(0.0);
  }
  pald::State state = pald::make_state(x, Eigen::VectorXd::Zero(k), best_effort, po);
  std::mt19937_64 noise_rng(derive_seed(lc.seed, detail::kStreamNoise));

  double candidate_radius = lc.d_max;
  bool widened = false;
  int starving = 0;  // consecutive iterations without a Jacobian
  const int patience = static_cast<int>((m + 1 + lc.candidates_per_iter) / (lc.candidates_per_iter + 1)) + 1;
  int small_steps = 0;
  bool injected_pending = false;

  auto to_vec = [&](const QSVector& q) {
    Eigen::VectorXd v(k);
    for (Eigen::Index i = 0; i < k; ++i) v[i] = *q.values[static_cast<std::size_t>(i)] / scale[i];
    return v;
  };

  for (int t = 0;; ++t) {
    IterationRecord rec;
    rec.iteration = static_cast<std::size_t>(t);
    rec.applied_x = x;
    rec.injected = injected_pending;
    injected_pending = false;

    // (1) Observe the interval under the applied configuration.
    Workload window = production(rec.iteration);
    validate(slos, window);
    RMConfig applied = decode(x, initial);
    rec.observed_qs = detail::perturb(whatif(window, applied, slos), lc.observation_noise, noise_rng);
    if (q_acc) rec.observed_qs = detail::carry_forward(std::move(rec.observed_qs), *q_acc);

    bool baseline = !q_acc || (x - x_acc).norm() == 0.0;
    if (baseline) {
      if (!rec.observed_qs.complete()) {
        result.status = LoopStatus::kAborted;
        result.message = "observation at the accepted configuration has no qualifying jobs";
        result.records.push_back(rec);
        if (hooks.on_iteration) hooks.on_iteration(rec);
        break;
      }
      rec.accepted = true;
    } else {
      rec.accepted = dominance_check(rec.observed_qs, *q_acc, lc.dominance_tolerance);
      pald::record_outcome(state, rec.accepted);
    }
    if (rec.accepted) {
      if (!q_acc)
        for (Eigen::Index i = 0; i < k; ++i) {
          double v = std::abs(*rec.observed_qs.values[static_cast<std::size_t>(i)]);
          scale[i] = v > 0 ? v : 1.0;
        }
      x_acc = x;
      q_acc = rec.observed_qs;
    }

    auto finish = [&](LoopStatus s, std::string msg) {
      result.status = s;
      result.message = std::move(msg);
    };

    if (!rec.accepted) {
      // Revert; no step this interval.
      rec.next_x = x_acc;
      rec.step_norm = (x_acc - x).norm();
      result.records.push_back(rec);
      if (hooks.on_iteration) hooks.on_iteration(rec);
      if (t >= lc.max_iterations) {
        finish(LoopStatus::kMaxIterations, "iteration limit reached");
        break;
      }
      x = x_acc;
      continue;
    }

    if (t >= lc.max_iterations) {
      rec.next_x = x;
      result.records.push_back(rec);
      if (hooks.on_iteration) hooks.on_iteration(rec);
      finish(LoopStatus::kMaxIterations, "iteration limit reached");
      break;
    }

    // (2)-(7) Candidates around x, predicted on the observed window.
    Eigen::VectorXd f_x = to_vec(rec.observed_qs);
    for (Eigen::Index i = 0; i < k; ++i)
      state.r[i] = best_effort[static_cast<std::size_t>(i)] ? f_x[i] : r[i] / scale[i];
    state.current_x = x;
    state.history.add({x, f_x, 1});
    const auto stream = detail::kStreamCandidates + 16 * static_cast<std::uint64_t>(t);
    rec.proposals = propose_candidates(x, candidate_radius, lc.candidates_per_iter, derive_seed(lc.seed, stream));
    for (const auto& cand : rec.proposals) {
      // The window is fixed within an iteration, so one simulation serves
      // all N measures; only the observation noise differs between them.
      auto predicted = whatif(window, cand, initial, slos);
      if (predicted) predicted = detail::carry_forward(std::move(*predicted), rec.observed_qs);
      rec.proposal_qs_predicted.push_back(predicted);
      if (!predicted) continue;
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(k);
      for (int n = 0; n < lc.measures; ++n) sum += to_vec(detail::perturb(*predicted, lc.observation_noise, noise_rng));
      state.history.add({cand, sum / lc.measures, lc.measures});
    }

    // (8) PALD step.
    auto step = pald::step(state, f_x, po);
    rec.need_more_samples = step.need_more_samples;
    Eigen::VectorXd next = x;
    if (step.need_more_samples) {
      if (++starving > patience) {
        if (widened) {
          rec.next_x = x;
          result.records.push_back(rec);
          if (hooks.on_iteration) hooks.on_iteration(rec);
          finish(LoopStatus::kAborted, "not enough spread samples to estimate the Jacobian after widening");
          break;
        }
        widened = true;
        starving = 0;
        candidate_radius = std::min(1.0, 2.0 * candidate_radius);
      }
    } else {
      starving = 0;
      rec.diagnostics = step.diag;
      next = step.x_next;
    }

    if (hooks.proposal_override) {
      if (auto forced = hooks.proposal_override(rec.iteration, next)) {
        next = *forced;
        injected_pending = true;
      }
    }
    next = detail::cap_step(x, next, lc.d_max);
    rec.next_x = next;
    rec.step_norm = (next - x).norm();
    result.records.push_back(rec);
    if (hooks.on_iteration) hooks.on_iteration(rec);

    if (!step.need_more_samples && !injected_pending) {
      small_steps = rec.step_norm < lc.min_step_norm ? small_steps + 1 : 0;
      if (small_steps >= lc.stable_iterations) {
        finish(LoopStatus::kConverged, "step norm below threshold");
        break;
      }
    }
    x = next;
  }

  result.accepted_x = x_acc;
  result.accepted_config = decode(x_acc, initial);
  if (q_acc) result.accepted_qs = *q_acc;
  return result;
}

// ---------------------------------------------------------------------------
// Files: loop configuration and the line-delimited journal.

inline nlohmann::json to_json(const LoopConfig& c) {
  return {{"format", "tempo-loop-config"},
          {"version", 1},
          {"window_length", c.window_length},
          {"candidates_per_iter", c.candidates_per_iter},
          {"d_max", c.d_max},
          {"alpha", c.alpha},
          {"measures", c.measures},
          {"max_iterations", c.max_iterations},
          {"dominance_tolerance", c.dominance_tolerance},
          {"observation_noise", c.observation_noise},
          {"min_step_norm", c.min_step_norm},
          {"stable_iterations", c.stable_iterations},
          {"seed", c.seed}};
}

inline LoopConfig loop_config_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "tempo-loop-config" || j.value("version", 0) != 1)
    throw ConfigError("loop file: expected format tempo-loop-config version 1");
  LoopConfig c;
  c.window_length = j.value("window_length", c.window_length);
  c.candidates_per_iter = j.value("candidates_per_iter", c.candidates_per_iter);
  c.d_max = j.value("d_max", c.d_max);
  c.alpha = j.value("alpha", c.alpha);
  c.measures = j.value("measures", c.measures);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.dominance_tolerance = j.value("dominance_tolerance", c.dominance_tolerance);
  c.observation_noise = j.value("observation_noise", c.observation_noise);
  c.min_step_norm = j.value("min_step_norm", c.min_step_norm);
  c.stable_iterations = j.value("stable_iterations", c.stable_iterations);
  c.seed = j.value("seed", c.seed);
  validate(c);
  return c;
}

inline nlohmann::json to_json(const QSVector& q) {
  nlohmann::json vals = nlohmann::json::array();
  for (const auto& v : q.values) vals.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  return {{"values", vals}, {"window", {q.window.t0, q.window.t1}}};
}

inline nlohmann::json to_json(const IterationRecord& r) {
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& p : r.proposal_qs_predicted) preds.push_back(p ? to_json(*p) : nlohmann::json(nullptr));
  nlohmann::json j = {{"iteration", r.iteration},
                      {"applied_x", pald::detail::vec_json(r.applied_x)},
                      {"observed_qs", to_json(r.observed_qs)},
                      {"accepted", r.accepted},
                      {"injected", r.injected},
                      {"proposal_qs_predicted", preds},
                      {"next_x", pald::detail::vec_json(r.next_x)},
                      {"step_norm", r.step_norm},
                      {"need_more_samples", r.need_more_samples}};
  if (r.diagnostics) j["pald"] = pald::to_json(*r.diagnostics);
  return j;
}

}  // namespace tempo
