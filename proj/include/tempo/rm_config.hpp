#pragma once

// Per-tenant RM configuration (shares, limits, two-level preemption
// timeouts) and its normalized vector encoding.
//
// Only parameters whose bound has lo < hi take part in the vector; a
// parameter with lo == hi (or without declared bounds) is fixed. The vector
// layout is tenant-major in tenant-id order, parameters in Param order.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tempo/common.hpp"

namespace tempo {

struct TenantConfig {
  double share_weight = 1.0;
  int min_limit = 0;
  int max_limit = 0;
  double preempt_timeout_share = kInf;  // seconds below entitled share before preempting
  double preempt_timeout_min = kInf;    // seconds below min_limit before preempting

  bool operator==(const TenantConfig&) const = default;
};

enum class Param : int { kShareWeight = 0, kMinLimit, kMaxLimit, kTimeoutShare, kTimeoutMin };
inline constexpr std::size_t kParamCount = 5;
inline constexpr std::array<const char*, kParamCount> kParamNames = {
    "share_weight", "min_limit", "max_limit", "preempt_timeout_share", "preempt_timeout_min"};

struct Bound {
  double lo = 0.0;
  double hi = 0.0;
  bool tunable() const { return lo < hi; }
  bool operator==(const Bound&) const = default;
};

using TenantBounds = std::array<Bound, kParamCount>;

struct RMConfig {
  std::map<std::string, TenantConfig> tenants;
  int capacity = 0;
  std::map<std::string, TenantBounds> bounds;  // absent tenant = all fixed

  bool operator==(const RMConfig&) const = default;
};

inline double get_param(const TenantConfig& t, Param p) {
  switch (p) {
    case Param::kShareWeight: return t.share_weight;
    case Param::kMinLimit: return t.min_limit;
    case Param::kMaxLimit: return t.max_limit;
    case Param::kTimeoutShare: return t.preempt_timeout_share;
    case Param::kTimeoutMin: return t.preempt_timeout_min;
  }
  return 0.0;
}

inline void set_param(TenantConfig& t, Param p, double v) {
  switch (p) {
    case Param::kShareWeight: t.share_weight = v; break;
    case Param::kMinLimit: t.min_limit = static_cast<int>(std::lround(v)); break;
    case Param::kMaxLimit: t.max_limit = static_cast<int>(std::lround(v)); break;
    case Param::kTimeoutShare: t.preempt_timeout_share = v; break;
    case Param::kTimeoutMin: t.preempt_timeout_min = v; break;
  }
}

inline void validate(const RMConfig& cfg) {
  if (cfg.capacity <= 0) throw ConfigError("capacity must be > 0");
  if (cfg.tenants.empty()) throw ConfigError("configuration has no tenants");
  long long min_sum = 0;
  for (const auto& [name, t] : cfg.tenants) {
    if (!(t.share_weight > 0) || !std::isfinite(t.share_weight))
      throw ConfigError("tenant " + name + ": share_weight must be > 0");
    if (t.min_limit < 0) throw ConfigError("tenant " + name + ": min_limit must be >= 0");
    if (t.max_limit < t.min_limit) throw ConfigError("tenant " + name + ": max_limit below min_limit");
    if (!(t.preempt_timeout_share > 0) || !(t.preempt_timeout_min > 0))
      throw ConfigError("tenant " + name + ": preemption timeouts must be > 0");
    min_sum += t.min_limit;
    if (auto it = cfg.bounds.find(name); it != cfg.bounds.end()) {
      for (std::size_t p = 0; p < kParamCount; ++p) {
        const Bound& b = it->second[p];
        if (!b.tunable()) continue;
        double v = get_param(t, static_cast<Param>(p));
        if (v < b.lo - 1e-9 || v > b.hi + 1e-9)
          throw ConfigError("tenant " + name + ": " + kParamNames[p] + " outside its bounds");
      }
    }
  }
  for (const auto& [name, b] : cfg.bounds)
    if (!cfg.tenants.count(name)) throw ConfigError("bounds declared for unknown tenant " + name);
  if (min_sum > cfg.capacity) throw ConfigError("sum of min_limit exceeds capacity");
}

struct Dimension {
  std::string tenant;
  Param param;
  Bound bound;
};

inline std::vector<Dimension> dimensions(const RMConfig& cfg) {
  std::vector<Dimension> dims;
  for (const auto& [name, b] : cfg.bounds)
    for (std::size_t p = 0; p < kParamCount; ++p)
      if (b[p].tunable()) dims.push_back({name, static_cast<Param>(p), b[p]});
  return dims;
}

inline std::string dimension_label(const Dimension& d) { return d.tenant + "." + kParamNames[static_cast<int>(d.param)]; }

// Affine map of each tunable parameter onto [0, 1].
inline Eigen::VectorXd encode(const RMConfig& cfg) {
  auto dims = dimensions(cfg);
  Eigen::VectorXd x(static_cast<Eigen::Index>(dims.size()));
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& d = dims[i];
    double v = get_param(cfg.tenants.at(d.tenant), d.param);
    if (v < d.bound.lo - 1e-9 || v > d.bound.hi + 1e-9)
      throw ConfigError("encode: " + dimension_label(d) + " outside its bounds");
    x[static_cast<Eigen::Index>(i)] = std::clamp((v - d.bound.lo) / (d.bound.hi - d.bound.lo), 0.0, 1.0);
  }
  return x;
}

// Inverse of encode relative to `base` (which supplies fixed parameters,
// capacity and bounds). Coordinates are clamped to [0, 1]; limits are
// rounded to whole containers. Throws ConfigError if the result is invalid.
inline RMConfig decode(const Eigen::VectorXd& x, const RMConfig& base) {
  auto dims = dimensions(base);
  if (static_cast<std::size_t>(x.size()) != dims.size())
    throw ConfigError("decode: vector has " + std::to_string(x.size()) + " coordinates, expected " +
                      std::to_string(dims.size()));
  RMConfig out = base;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& d = dims[i];
    double u = std::clamp(x[static_cast<Eigen::Index>(i)], 0.0, 1.0);
    set_param(out.tenants.at(d.tenant), d.param, d.bound.lo + u * (d.bound.hi - d.bound.lo));
  }
  validate(out);
  return out;
}

namespace detail {

inline nlohmann::json number_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

inline double read_number(const nlohmann::json& j) {
  if (j.is_string()) {
    double v = 0;
    if (!parse_number(j.get<std::string>(), v)) throw ConfigError("not a number: " + j.get<std::string>());
    return v;
  }
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const RMConfig& cfg) {
  nlohmann::json j;
  j["format"] = "tempo-rm-config";
  j["version"] = 1;
  j["capacity"] = cfg.capacity;
  auto& tenants = j["tenants"] = nlohmann::json::object();
  for (const auto& [name, t] : cfg.tenants) {
    auto& b = tenants[name];
    b["share_weight"] = t.share_weight;
    b["min_limit"] = t.min_limit;
    b["max_limit"] = t.max_limit;
    b["preempt_timeout_share"] = detail::number_or_inf(t.preempt_timeout_share);
    b["preempt_timeout_min"] = detail::number_or_inf(t.preempt_timeout_min);
    if (auto it = cfg.bounds.find(name); it != cfg.bounds.end()) {
      auto& bj = b["bounds"] = nlohmann::json::object();
      for (std::size_t p = 0; p < kParamCount; ++p)
        if (it->second[p].tunable())
          bj[kParamNames[p]] = {detail::number_or_inf(it->second[p].lo), detail::number_or_inf(it->second[p].hi)};
    }
  }
  return j;
}

// Missing max_limit defaults to the capacity; missing timeouts to infinity.
inline RMConfig rm_config_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "tempo-rm-config" || j.value("version", 0) != 1)
    throw ConfigError("config file: expected format tempo-rm-config version 1");
  RMConfig cfg;
  cfg.capacity = j.at("capacity").get<int>();
  for (const auto& [name, b] : j.at("tenants").items()) {
    TenantConfig t;
    t.share_weight = b.value("share_weight", 1.0);
    t.min_limit = b.value("min_limit", 0);
    t.max_limit = b.value("max_limit", cfg.capacity);
    if (b.contains("preempt_timeout_share")) t.preempt_timeout_share = detail::read_number(b["preempt_timeout_share"]);
    if (b.contains("preempt_timeout_min")) t.preempt_timeout_min = detail::read_number(b["preempt_timeout_min"]);
    if (b.contains("bounds")) {
      TenantBounds tb;
      for (std::size_t p = 0; p < kParamCount; ++p) {
        double v = get_param(t, static_cast<Param>(p));
        tb[p] = {v, v};
      }
      for (const auto& [pname, range] : b["bounds"].items()) {
        auto it = std::find(kParamNames.begin(), kParamNames.end(), pname);
        if (it == kParamNames.end()) throw ConfigError("tenant " + name + ": unknown bounded parameter " + pname);
        if (!range.is_array() || range.size() != 2) throw ConfigError("tenant " + name + ": bounds must be [lo, hi]");
        Bound bd{detail::read_number(range[0]), detail::read_number(range[1])};
        if (!(bd.lo <= bd.hi) || !std::isfinite(bd.lo) || !std::isfinite(bd.hi))
          throw ConfigError("tenant " + name + ": invalid bounds for " + pname);
        tb[static_cast<std::size_t>(it - kParamNames.begin())] = bd;
      }
      cfg.bounds[name] = tb;
    }
    cfg.tenants[name] = t;
  }
  validate(cfg);
  return cfg;
}

}  // namespace tempo
