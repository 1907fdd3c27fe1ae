#pragma once

// Weighted water-filling allocation of containers across tenants.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tempo/rm_config.hpp"

namespace tempo {

struct ShareParams {
  double weight = 1.0;
  int min_limit = 0;
  int max_limit = 0;
};

// Index-based core used by the simulator. Each tenant receives
// clamp(level * weight, min(demand, min_limit), min(demand, max_limit)) with
// the water level chosen so the total equals the capacity (or every tenant is
// capped). The real-valued shares are rounded by largest remainder, ties to
// the lower index. `out` must have the same length as `params`.
inline void fair_allocation(std::span<const ShareParams> params, std::span<const int> demands, int capacity,
                            std::span<int> out) {
  const std::size_t n = params.size();
  int lo_sum = 0, hi_sum = 0;
  // Small fixed-size scratch avoids heap traffic on the simulator hot path.
  constexpr std::size_t kStack = 32;
  int lo_buf[kStack], hi_buf[kStack];
  std::vector<int> lo_vec, hi_vec;
  int* lo = lo_buf;
  int* hi = hi_buf;
  if (n > kStack) {
    lo_vec.resize(n);
    hi_vec.resize(n);
    lo = lo_vec.data();
    hi = hi_vec.data();
  }
  for (std::size_t t = 0; t < n; ++t) {
    int d = std::max(demands[t], 0);
    lo[t] = std::min(d, params[t].min_limit);
    hi[t] = std::max(lo[t], std::min(d, params[t].max_limit));
    lo_sum += lo[t];
    hi_sum += hi[t];
  }
  if (hi_sum <= capacity) {
    for (std::size_t t = 0; t < n; ++t) out[t] = hi[t];
    return;
  }
  if (lo_sum >= capacity) {
    // Only reachable when min limits alone fill the cluster.
    for (std::size_t t = 0; t < n; ++t) out[t] = lo[t];
    return;
  }

  auto filled = [&](double level) {
    double g = 0.0;
    for (std::size_t t = 0; t < n; ++t) g += std::clamp(level * params[t].weight, double(lo[t]), double(hi[t]));
    return g;
  };

  // g(level) is piecewise linear with breakpoints lo/w and hi/w.
  thread_local std::vector<double> breaks;
  breaks.clear();
  breaks.push_back(0.0);
  for (std::size_t t = 0; t < n; ++t) {
    breaks.push_back(lo[t] / params[t].weight);
    breaks.push_back(hi[t] / params[t].weight);
  }
  std::sort(breaks.begin(), breaks.end());
  double level = breaks.back();
  for (std::size_t b = 1; b < breaks.size(); ++b) {
    double g_hi = filled(breaks[b]);
    if (g_hi >= capacity) {
      double a = breaks[b - 1];
      double g_lo = filled(a);
      double slope = 0.0;
      double mid = 0.5 * (a + breaks[b]);
      for (std::size_t t = 0; t < n; ++t) {
        double v = mid * params[t].weight;
        if (v > lo[t] && v < hi[t]) slope += params[t].weight;
      }
      level = slope > 0 ? a + (capacity - g_lo) / slope : breaks[b];
      break;
    }
  }

  int assigned = 0;
  double rem_buf[kStack];
  std::vector<double> rem_vec;
  double* rem = rem_buf;
  if (n > kStack) {
    rem_vec.resize(n);
    rem = rem_vec.data();
  }
  for (std::size_t t = 0; t < n; ++t) {
    double share = std::clamp(level * params[t].weight, double(lo[t]), double(hi[t]));
    int whole = static_cast<int>(std::floor(share + 1e-9));
    whole = std::clamp(whole, lo[t], hi[t]);
    out[t] = whole;
    rem[t] = share - whole;
    assigned += whole;
  }
  int leftover = capacity - assigned;
  while (leftover > 0) {
    std::size_t best = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (out[t] >= hi[t]) continue;
      if (best == n || rem[t] > rem[best] + 1e-12) best = t;
    }
    if (best == n) break;
    ++out[best];
    rem[best] = -1.0;  // at most one extra container per tenant per round
    --leftover;
    bool any = false;
    for (std::size_t t = 0; t < n; ++t) any |= rem[t] >= 0.0 && out[t] < hi[t];
    if (!any)
      for (std::size_t t = 0; t < n; ++t) rem[t] = 0.0;
  }
}

// Map-based form: tenants missing from `demands` have zero demand.
inline std::map<std::string, int> fair_allocation(const std::map<std::string, int>& demands, const RMConfig& cfg) {
  validate(cfg);
  std::vector<ShareParams> params;
  std::vector<int> d;
  for (const auto& [name, t] : cfg.tenants) {
    params.push_back({t.share_weight, t.min_limit, t.max_limit});
    auto it = demands.find(name);
    int v = it == demands.end() ? 0 : it->second;
    if (v < 0) throw ConfigError("tenant " + name + ": negative demand");
    d.push_back(v);
  }
  for (const auto& [name, v] : demands)
    if (!cfg.tenants.count(name)) throw ConfigError("demand for unknown tenant " + name);
  std::vector<int> out(params.size());
  fair_allocation(params, d, cfg.capacity, out);
  std::map<std::string, int> result;
  std::size_t i = 0;
  for (const auto& [name, t] : cfg.tenants) result[name] = out[i++];
  return result;
}

}  // namespace tempo
