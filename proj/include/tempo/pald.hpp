#pragma once

// Pareto local descent for noisy multi-objective minimization.
//
// Each step minimizes the scalar proxy
//
//   s(f) = sum_i c_i (f_i - rho * max(f_i, r_i))
//
// by one projected gradient step inside a trust region. Gradients of the
// objectives come from a local linear (LOESS) fit over sampled points; the
// weights c come from a max-min LP over the violated objectives
// (f_i >= r_i) and rho from the closed-form bounds that keep the step a
// first-order descent direction for every violated objective.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tempo/common.hpp"
#include "tempo/lp.hpp"

namespace tempo::pald {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Sample {
  Vector x;      // normalized configuration, each coordinate in [0, 1]
  Vector f_bar;  // objective values averaged over n_measures
  int n_measures = 1;
};

// Bounded sample store; the oldest sample is dropped once full.
class History {
 public:
  explicit History(std::size_t capacity = 2048) : capacity_(capacity) {}

  void add(Sample s) {
    if (s.n_measures < 1) throw Error("sample needs at least one measurement");
    if (!s.f_bar.allFinite()) throw Error("sample objective values must be finite");
    samples_.push_back(std::move(s));
    while (samples_.size() > capacity_) samples_.pop_front();
  }

  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return samples_.empty(); }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  void clear() { samples_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<Sample> samples_;
};

// ---------------------------------------------------------------------------
// Gradient estimation.

struct LoessOptions {
  double radius = 0.2;   // neighborhood: samples within this l2 distance of x0
  double ridge = 1e-6;   // added to the slope block of the normal equations
  double span_scale = 1.1;  // tricube span = span_scale * farthest neighbor
};

struct JacobianEstimate {
  Matrix jacobian;  // k x m
  std::size_t neighbors = 0;
};

inline double tricube(double u) {
  if (u >= 1.0) return 0.0;
  double t = 1.0 - u * u * u;
  return t * t * t;
}

// Locally weighted linear regression of every objective on x around x0.
// Returns nullopt ("need more samples") when fewer than m + 1 samples fall
// in the neighborhood or they do not span every direction.
inline std::optional<JacobianEstimate> estimate_jacobian(const History& history, const Vector& x0,
                                                         const LoessOptions& opts = {}) {
  const auto m = x0.size();
  std::vector<const Sample*> near;
  double far = 0.0;
  for (const auto& s : history) {
    if (s.x.size() != m) throw Error("estimate_jacobian: sample dimension mismatch");
    double d = (s.x - x0).norm();
    if (d <= opts.radius) {
      near.push_back(&s);
      far = std::max(far, d);
    }
  }
  if (near.size() < static_cast<std::size_t>(m) + 1 || far <= 0.0) return std::nullopt;
  const auto k = near.front()->f_bar.size();
  const double span = opts.span_scale * far;

  Matrix X(static_cast<Eigen::Index>(near.size()), m + 1);
  Matrix Y(static_cast<Eigen::Index>(near.size()), k);
  Vector w(static_cast<Eigen::Index>(near.size()));
  for (std::size_t i = 0; i < near.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (near[i]->f_bar.size() != k) throw Error("estimate_jacobian: objective count mismatch");
    Vector h = near[i]->x - x0;
    X(row, 0) = 1.0;
    X.row(row).tail(m) = h.transpose();
    Y.row(row) = near[i]->f_bar.transpose();
    w[row] = tricube(h.norm() / span) * near[i]->n_measures;
  }

  // Spread check on the weighted, centered design.
  const double wsum = w.sum();
  if (wsum <= 0.0) return std::nullopt;
  Vector mean = (X.rightCols(m).transpose() * w) / wsum;
  Matrix centered = X.rightCols(m).rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * w.asDiagonal() * centered) / wsum;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.eigenvalues().minCoeff() <= std::pow(1e-4 * span, 2)) return std::nullopt;

  Matrix A = X.transpose() * w.asDiagonal() * X;
  A.diagonal().tail(m).array() += opts.ridge;
  Matrix beta = A.ldlt().solve(X.transpose() * w.asDiagonal() * Y);  // (m+1) x k
  if (!beta.allFinite()) return std::nullopt;
  return JacobianEstimate{beta.bottomRows(m).transpose(), near.size()};
}

// ---------------------------------------------------------------------------
// Weights c.

struct WeightChoice {
  Vector c;                    // non-negative, unit l2 norm
  double z = 0.0;              // max-min product, in units of max |J_V J^T|
  bool common_descent = false; // false: no direction improves every violated objective
};

// Minimum-norm point of the convex hull of the rows of J (Frank-Wolfe).
// Returns the convex coefficients.
inline Vector min_norm_weights(const Matrix& J, double tol = 1e-8, int max_iter = 10000) {
  const auto k = J.rows();
  Matrix M = J * J.transpose();
  Vector c = Vector::Constant(k, 1.0 / static_cast<double>(k));
  for (int it = 0; it < max_iter; ++it) {
    Vector grad = M * c;
    Eigen::Index t = 0;
    grad.minCoeff(&t);
    double gap = c.dot(grad) - grad[t];
    if (gap <= tol) break;
    Vector d = -c;
    d[t] += 1.0;  // e_t - c
    double curvature = d.dot(M * d);
    double gamma = curvature > 0 ? std::clamp(-d.dot(grad) / curvature, 0.0, 1.0) : 1.0;
    c += gamma * d;
  }
  return c;
}

// Max-min LP over the violated rows:
//
//   maximize z  s.t.  J_V J^T c >= z 1,  c >= 0,  sum(c) = 1,  z <= eps,
//
// with J_V J^T scaled by its largest magnitude; c is l2-normalized on
// return. With no violated objective, falls back to min-norm (MGDA) weights.
inline WeightChoice choose_weights(const Matrix& J, const std::vector<int>& violated, double eps = 1.0) {
  const auto k = J.rows();
  WeightChoice out;
  if (!J.allFinite()) throw Error("choose_weights: Jacobian is not finite");
  if (violated.empty()) {
    Vector c = min_norm_weights(J);
    Vector d = J.transpose() * c;
    out.common_descent = d.squaredNorm() > 1e-18;
    out.z = d.squaredNorm();
    double n = c.norm();
    out.c = n > 0 ? Vector(c / n) : Vector::Constant(k, 1.0 / std::sqrt(double(k)));
    return out;
  }

  Matrix G(static_cast<Eigen::Index>(violated.size()), k);
  for (std::size_t r = 0; r < violated.size(); ++r)
    G.row(static_cast<Eigen::Index>(r)) = J.row(violated[r]) * J.transpose();
  double scale = G.cwiseAbs().maxCoeff();
  if (!(scale > 0)) {
    out.c = Vector::Constant(k, 1.0 / std::sqrt(double(k)));
    return out;
  }
  G /= scale;

  // Variables: c_0..c_{k-1}, z+, z-.
  const int nv = static_cast<int>(k) + 2;
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  for (Eigen::Index r = 0; r < G.rows(); ++r) {
    std::vector<double> row(nv, 0.0);
    for (Eigen::Index j = 0; j < k; ++j) row[j] = -G(r, j);
    row[k] = 1.0;
    row[k + 1] = -1.0;
    A.push_back(row);
    b.push_back(0.0);
  }
  std::vector<double> sum_row(nv, 0.0);
  for (Eigen::Index j = 0; j < k; ++j) sum_row[j] = 1.0;
  A.push_back(sum_row);
  b.push_back(1.0);
  for (auto& v : sum_row) v = -v;
  A.push_back(sum_row);
  b.push_back(-1.0);
  std::vector<double> cap(nv, 0.0);
  cap[k] = 1.0;
  cap[k + 1] = -1.0;
  A.push_back(cap);
  b.push_back(eps);

  std::vector<double> objective(nv, 0.0);
  objective[k] = 1.0;
  objective[k + 1] = -1.0;
  auto sol = lp::maximize(A, b, objective);
  if (sol.status != lp::Status::kOptimal) throw Error("choose_weights: LP did not reach an optimum");

  Vector c(k);
  for (Eigen::Index j = 0; j < k; ++j) c[j] = std::max(0.0, sol.x[j]);
  out.z = sol.x[k] - sol.x[k + 1];
  out.common_descent = out.z > 1e-9;
  double n = c.norm();
  out.c = n > 0 ? Vector(c / n) : Vector::Constant(k, 1.0 / std::sqrt(double(k)));
  return out;
}

// ---------------------------------------------------------------------------
// Penalty rho.

struct RhoChoice {
  double rho = 0.0;
  double nonneg_candidate = 0.0;           // from the rho >= 0 bound
  std::optional<double> neg_candidate;     // from the rho < 0 bound (floored)
  bool conditions_hold = true;             // sum_j c_j g_ij >= 0 for violated i
};

inline constexpr double kRhoCeiling = 1.0 - 1e-6;

// Value of min over violated i of grad f_i . grad s, taking the boundary
// subgradient c_j (1 - rho) for violated j.
inline double rho_objective(const Matrix& gram, const Vector& c, const std::vector<int>& violated, double rho) {
  double best = kInf;
  for (int i : violated) {
    double v = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
      bool vj = std::find(violated.begin(), violated.end(), static_cast<int>(j)) != violated.end();
      v += (vj ? c[j] * (1.0 - rho) : c[j]) * gram(i, j);
    }
    best = std::min(best, v);
  }
  return best;
}

// rho_floor bounds the rho < 0 branch, which is unbounded below when no
// violated gradient has a negative product with another gradient.
inline RhoChoice choose_rho(const Matrix& J, const Vector& c, const std::vector<int>& violated,
                            double rho_floor = -1.0) {
  RhoChoice out;
  if (violated.empty()) return out;
  Matrix gram = J * J.transpose();
  const double tiny = 1e-12 * std::max(1.0, gram.diagonal().maxCoeff());

  double upper = kInf, lower = -kInf;
  bool any_negative = false, any_active = false;
  for (int i : violated) {
    if (gram(i, i) <= tiny) continue;  // zero gradient
    any_active = true;
    double total = 0, pos = 0, neg = 0;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
      double p = c[j] * gram(i, j);
      total += p;
      (gram(i, j) >= 0 ? pos : neg) += p;
    }
    if (total < -tiny) out.conditions_hold = false;
    if (pos > tiny) upper = std::min(upper, total / pos);
    if (neg < -tiny) {
      any_negative = true;
      lower = std::max(lower, total / neg);
    }
  }
  if (!any_active) return out;
  if (!out.conditions_hold) {
    out.rho = 0.0;
    return out;
  }
  out.nonneg_candidate = std::clamp(upper == kInf ? 0.0 : upper, 0.0, kRhoCeiling);
  double neg = any_negative ? lower : rho_floor;
  out.neg_candidate = std::clamp(neg, rho_floor, 0.0);

  double f_pos = rho_objective(gram, c, violated, out.nonneg_candidate);
  double f_neg = rho_objective(gram, c, violated, *out.neg_candidate);
  out.rho = f_neg > f_pos ? *out.neg_candidate : out.nonneg_candidate;
  return out;
}

// ---------------------------------------------------------------------------
// Proxy objective, gradient and step.

inline double proxy_objective(const Vector& f, const Vector& r, const Vector& c, double rho) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) s += c[i] * (f[i] - rho * std::max(f[i], r[i]));
  return s;
}

inline Vector proxy_weights(const Vector& f, const Vector& r, const Vector& c, double rho) {
  Vector w = c;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (f[i] >= r[i]) w[i] *= (1.0 - rho);
  return w;
}

inline Vector proxy_gradient(const Matrix& J, const Vector& f, const Vector& r, const Vector& c, double rho) {
  return J.transpose() * proxy_weights(f, r, c, rho);
}

// x - alpha * grad, projected onto [0,1]^m, then pulled radially back to
// within d_max of x.
inline Vector trust_region_step(const Vector& x, const Vector& grad, double alpha, double d_max) {
  Vector next = (x - alpha * grad).cwiseMax(0.0).cwiseMin(1.0);
  Vector delta = next - x;
  double n = delta.norm();
  if (n > d_max) next = x + delta * (d_max / n);
  return next;
}

// K points around x: uniform directions, radii stratified over (0, d_max],
// clamped into the unit box (which never increases the distance to x).
inline std::vector<Vector> sample_trust_region(const Vector& x, double d_max, int count, std::mt19937_64& rng) {
  std::vector<Vector> out;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < count; ++k) {
    Vector dir(x.size());
    double n = 0.0;
    while (n < 1e-12 && x.size() > 0) {
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = normal(rng);
      n = dir.norm();
    }
    double radius = d_max * (static_cast<double>(k + 1) - unit(rng)) / static_cast<double>(count);
    Vector c = x;
    if (x.size() > 0) c = (x + dir * (radius / n)).cwiseMax(0.0).cwiseMin(1.0);
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer state and one full iteration.

struct Options {
  double alpha = 0.1;
  double d_max = 0.1;
  double neighborhood_factor = 2.0;  // LOESS radius = factor * d_max
  double ridge = 1e-6;
  double epsilon = 1.0;
  double rho_floor = -1.0;
  // When no direction improves every violated objective, descend on the
  // objectives whose violation f_i - r_i is within this fraction of the
  // largest one.
  double fairness_band = 0.02;
  // A common descent direction whose max-min product z (in units of the
  // largest |J_V J^T| entry) is below this margin counts as none.
  double descent_margin = 0.05;
};

struct Diagnostics {
  std::size_t iteration = 0;
  Vector c;
  double rho = 0.0;
  double z = 0.0;
  bool common_descent = false;
  bool conditions_hold = true;
  double grad_norm = 0.0;
  double step_norm = 0.0;
  std::vector<int> violated;
};

struct State {
  History history;
  Vector current_x;
  Vector r;                       // thresholds
  std::vector<bool> best_effort;  // r_i tracks the attained value
  Vector c;
  double rho = 0.0;
  double alpha = 0.1;
  double d_max = 0.1;
  Matrix jacobian;
  std::size_t iteration = 0;
  int non_dominating_streak = 0;

  std::size_t objectives() const { return static_cast<std::size_t>(r.size()); }
};

inline void validate(const State& s) {
  if (!(s.d_max > 0)) throw ConfigError("PALD: d_max must be > 0");
  if (!(s.alpha > 0)) throw ConfigError("PALD: alpha must be > 0");
  if (!(s.rho < 1)) throw ConfigError("PALD: rho must be < 1");
  if (s.best_effort.size() != static_cast<std::size_t>(s.r.size()))
    throw ConfigError("PALD: best_effort flags do not match threshold count");
  if (s.c.size() != 0 && s.c.size() != s.r.size()) throw ConfigError("PALD: weight count does not match thresholds");
  if ((s.current_x.array() < 0).any() || (s.current_x.array() > 1).any())
    throw ConfigError("PALD: current_x outside [0,1]");
}

inline State make_state(Vector x0, Vector thresholds, std::vector<bool> best_effort, const Options& opts,
                        std::size_t history_capacity = 2048) {
  State s;
  s.history = History(history_capacity);
  s.current_x = std::move(x0);
  s.r = std::move(thresholds);
  s.best_effort = std::move(best_effort);
  s.alpha = opts.alpha;
  s.d_max = opts.d_max;
  s.c = Vector::Constant(s.r.size(), 1.0 / std::sqrt(std::max<double>(1.0, double(s.r.size()))));
  validate(s);
  return s;
}

// Sets r_i = f_i for best-effort objectives.
inline void track_best_effort(State& s, const Vector& f_at_x) {
  for (std::size_t i = 0; i < s.best_effort.size(); ++i)
    if (s.best_effort[i]) s.r[static_cast<Eigen::Index>(i)] = f_at_x[static_cast<Eigen::Index>(i)];
}

inline std::vector<int> violated_set(const Vector& f, const Vector& r) {
  std::vector<int> v;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (f[i] >= r[i]) v.push_back(static_cast<int>(i));
  return v;
}

// Step-size schedule: alpha halves after two consecutive outcomes whose
// QS vector did not dominate the previous one.
inline void record_outcome(State& s, bool dominating) {
  if (dominating) {
    s.non_dominating_streak = 0;
    return;
  }
  if (++s.non_dominating_streak >= 2) {
    s.alpha *= 0.5;
    s.non_dominating_streak = 0;
  }
}

struct StepResult {
  bool need_more_samples = false;
  Vector x_next;
  Diagnostics diag;
};

// Weights, penalty and trust-region step at state.current_x given the
// averaged objectives there. Mutates c, rho, jacobian and iteration.
inline StepResult step(State& s, const Vector& f_at_x, const Options& opts) {
  StepResult out;
  LoessOptions lo;
  lo.radius = opts.neighborhood_factor * s.d_max;
  lo.ridge = opts.ridge;
  auto est = estimate_jacobian(s.history, s.current_x, lo);
  if (!est) {
    out.need_more_samples = true;
    out.x_next = s.current_x;
    return out;
  }
  s.jacobian = est->jacobian;
  auto violated = violated_set(f_at_x, s.r);

  WeightChoice wc = choose_weights(s.jacobian, violated, opts.epsilon);
  std::vector<int> active = violated;
  if ((!wc.common_descent || wc.z < opts.descent_margin) && violated.size() > 1) {
    double worst = -kInf;
    for (int i : violated) worst = std::max(worst, f_at_x[i] - s.r[i]);
    double band = opts.fairness_band * std::max(std::abs(worst), 1e-12);
    std::vector<int> most;
    for (int i : violated)
      if (f_at_x[i] - s.r[i] >= worst - band) most.push_back(i);
    if (most.size() < violated.size()) {
      active = most;
      wc = choose_weights(s.jacobian, active, opts.epsilon);
    }
  }
  RhoChoice rc = choose_rho(s.jacobian, wc.c, active, opts.rho_floor);
  s.c = wc.c;
  s.rho = rc.rho;

  // Objectives outside the active set keep weight c_i; the penalty applies
  // to the active ones.
  Vector w = s.c;
  for (int i : active) w[i] *= (1.0 - s.rho);
  Vector grad = s.jacobian.transpose() * w;
  out.x_next = trust_region_step(s.current_x, grad, s.alpha, s.d_max);
  if (active.size() < violated.size()) {
    // Stop where the linearized violations of the active band meet the next
    // violated objective, so the worst violation is not traded past the tie.
    Vector delta = out.x_next - s.current_x;
    Vector df = s.jacobian * delta;
    double t = 1.0;
    for (int i : active)
      for (int j : violated) {
        if (std::find(active.begin(), active.end(), j) != active.end()) continue;
        double gap = (f_at_x[i] - s.r[i]) - (f_at_x[j] - s.r[j]);
        double closing = df[j] - df[i];
        if (closing > 0) t = std::min(t, gap / closing);
      }
    out.x_next = s.current_x + std::max(t, 0.0) * delta;
  }

  auto& d = out.diag;
  d.iteration = s.iteration++;
  d.c = s.c;
  d.rho = s.rho;
  d.z = wc.z;
  d.common_descent = wc.common_descent;
  d.conditions_hold = rc.conditions_hold;
  d.grad_norm = grad.norm();
  d.step_norm = (out.x_next - s.current_x).norm();
  d.violated = violated;
  return out;
}

// One complete iteration against a noisy objective oracle `measure(x)`
// returning a k-vector: average N measurements at x and at K trust-region
// candidates, record them, update best-effort thresholds and step.
// The caller decides whether to move current_x to the returned point.
template <class Measure>
StepResult iterate(State& s, Measure&& measure, const Options& opts, int candidates, int n_measures,
                   std::mt19937_64& rng, Vector* f_at_x_out = nullptr) {
  auto average = [&](const Vector& x) {
    Vector acc = measure(x);
    for (int n = 1; n < n_measures; ++n) acc += measure(x);
    return Vector(acc / static_cast<double>(n_measures));
  };
  Vector f_x = average(s.current_x);
  s.history.add({s.current_x, f_x, n_measures});
  for (auto& x : sample_trust_region(s.current_x, s.d_max, candidates, rng))
    s.history.add({x, average(x), n_measures});
  track_best_effort(s, f_x);
  if (f_at_x_out) *f_at_x_out = f_x;
  return step(s, f_x, opts);
}

// ---------------------------------------------------------------------------
// Checkpoint (versioned JSON) and per-iteration diagnostics.

namespace detail {
inline nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
inline Vector json_vec(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}
}  // namespace detail

inline nlohmann::json to_json(const State& s) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& smp : s.history)
    hist.push_back({{"x", detail::vec_json(smp.x)}, {"f_bar", detail::vec_json(smp.f_bar)}, {"n", smp.n_measures}});
  nlohmann::json jac = nlohmann::json::array();
  for (Eigen::Index i = 0; i < s.jacobian.rows(); ++i) jac.push_back(detail::vec_json(s.jacobian.row(i).transpose()));
  return {{"format", "tempo-pald-state"},
          {"version", 1},
          {"history_capacity", s.history.capacity()},
          {"history", hist},
          {"current_x", detail::vec_json(s.current_x)},
          {"r", detail::vec_json(s.r)},
          {"best_effort", s.best_effort},
          {"c", detail::vec_json(s.c)},
          {"rho", s.rho},
          {"alpha", s.alpha},
          {"d_max", s.d_max},
          {"iteration", s.iteration},
          {"non_dominating_streak", s.non_dominating_streak},
          {"jacobian", jac}};
}

inline State state_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "tempo-pald-state" || j.value("version", 0) != 1)
    throw ConfigError("checkpoint: expected format tempo-pald-state version 1");
  State s;
  s.history = History(j.at("history_capacity").get<std::size_t>());
  for (const auto& h : j.at("history"))
    s.history.add({detail::json_vec(h.at("x")), detail::json_vec(h.at("f_bar")), h.at("n").get<int>()});
  s.current_x = detail::json_vec(j.at("current_x"));
  s.r = detail::json_vec(j.at("r"));
  s.best_effort = j.at("best_effort").get<std::vector<bool>>();
  s.c = detail::json_vec(j.at("c"));
  s.rho = j.at("rho").get<double>();
  s.alpha = j.at("alpha").get<double>();
  s.d_max = j.at("d_max").get<double>();
  s.iteration = j.at("iteration").get<std::size_t>();
  s.non_dominating_streak = j.value("non_dominating_streak", 0);
  const auto& jac = j.at("jacobian");
  if (!jac.empty()) {
    s.jacobian.resize(static_cast<Eigen::Index>(jac.size()), static_cast<Eigen::Index>(jac[0].size()));
    for (std::size_t i = 0; i < jac.size(); ++i)
      s.jacobian.row(static_cast<Eigen::Index>(i)) = detail::json_vec(jac[i]).transpose();
  }
  validate(s);
  return s;
}

inline nlohmann::json to_json(const Diagnostics& d) {
  return {{"iteration", d.iteration},   {"c", detail::vec_json(d.c)},
          {"rho", d.rho},               {"z", d.z},
          {"common_descent", d.common_descent}, {"conditions_hold", d.conditions_hold},
          {"grad_norm", d.grad_norm},   {"step_norm", d.step_norm},
          {"violated", d.violated}};
}

}  // namespace tempo::pald
