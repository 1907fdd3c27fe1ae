#pragma once

// Sequential event-driven simulation of a container RM. Cluster usage is
// recomputed only at job submissions, task finishes and preemption-timeout
// expiries.
//
// Scheduling rules:
//  * per-tenant FIFO queues ordered by (job submit time, task index);
//  * the target allocation is fair_allocation() over current demand
//    (running + pending containers); free containers go to the tenant with the
//    largest (target - running) deficit whose head task fits, ties to the
//    lower tenant id;
//  * a tenant below min(min_limit, demand) for preempt_timeout_min, or below
//    its target for preempt_timeout_share, kills the most recently launched
//    tasks of the most over-allocated tenants. Killed tasks lose their
//    progress and go back to the head of their tenant's queue.

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <deque>
#include <map>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tempo/fair_share.hpp"
#include "tempo/rm_config.hpp"
#include "tempo/workload.hpp"

namespace tempo {

struct ScheduleEntry {
  std::uint32_t job = 0;   // index into TaskSchedule::jobs
  std::uint32_t task = 0;  // task index within the job
  double launch_time = 0.0;
  std::optional<double> finish_time;  // absent if preempted or still running
  int allocation = 1;
  bool preempted = false;
  double preempt_time = 0.0;

  bool running_at_horizon() const { return !preempted && !finish_time; }
  bool operator==(const ScheduleEntry&) const = default;
};

struct JobRecord {
  std::string job_id;
  std::string tenant;
  double submit_time = 0.0;
  std::optional<double> deadline;
  std::vector<std::string> task_ids;
  std::optional<double> launch_time;  // first attempt launch
  std::optional<double> finish_time;  // set once every task completed

  bool operator==(const JobRecord&) const = default;
};

struct TaskSchedule {
  std::vector<ScheduleEntry> entries;
  std::vector<JobRecord> jobs;
  int capacity = 0;
  double horizon = 0.0;

  bool operator==(const TaskSchedule&) const = default;

  const JobRecord& job_of(const ScheduleEntry& e) const { return jobs[e.job]; }
  const std::string& task_id(const ScheduleEntry& e) const { return jobs[e.job].task_ids[e.task]; }

  // End of the interval an attempt occupied its containers.
  double occupied_until(const ScheduleEntry& e) const {
    if (e.preempted) return e.preempt_time;
    return e.finish_time ? *e.finish_time : horizon;
  }
};

struct SimOptions {
  double stop_time = kInf;  // events after this time are not processed
};

namespace detail {

struct SimTask {
  double duration;
  int demand;
  std::uint32_t job;
  std::uint32_t index;
  std::uint32_t tenant;
};

struct FinishEvent {
  double time;
  std::uint64_t seq;
  std::uint32_t entry;
  bool operator>(const FinishEvent& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

struct TenantState {
  ShareParams share;
  double timeout_share = kInf;
  double timeout_min = kInf;
  std::deque<std::uint32_t> pending;            // global task indices
  std::set<std::pair<std::uint64_t, std::uint32_t>> running;  // (launch seq, entry)
  int running_containers = 0;
  int pending_containers = 0;
  int target = 0;
  double starved_min_since = kInf;
  double starved_share_since = kInf;
  bool timer_blocked = false;
};

}  // namespace detail

class Simulator {
 public:
  Simulator(const Workload& w, const RMConfig& cfg, SimOptions opts = {}) : w_(w), cfg_(cfg), opts_(opts) {
    validate(cfg_);
    validate(w_);
  }

  TaskSchedule run() {
    setup();
    std::size_t next_job = 0;
    const auto& jobs = w_.jobs;
    double last_time = 0.0;

    for (;;) {
      double t_finish = finishes_.empty() ? kInf : finishes_.top().time;
      double t_submit = next_job < jobs.size() ? jobs[next_job].submit_time : kInf;
      double t_timer = next_timer();
      double now = std::min({t_finish, t_submit, t_timer});
      if (now == kInf || now > opts_.stop_time) break;
      last_time = now;

      bool progressed = false;
      while (!finishes_.empty() && finishes_.top().time == now) {
        auto ev = finishes_.top();
        finishes_.pop();
        complete(ev.entry, now);
        progressed = true;
      }
      while (next_job < jobs.size() && jobs[next_job].submit_time == now) {
        submit(next_job++);
        progressed = true;
      }
      if (progressed)
        for (auto& ts : tenants_) ts.timer_blocked = false;

      refresh_targets();
      launch_pass(now);
      update_starvation(now);
      if (t_timer <= now) fire_timers(now);
      check_invariants();
    }

    out_.horizon = std::max(w_.horizon, last_time);
    if (opts_.stop_time < kInf) out_.horizon = std::max(w_.horizon, std::min(opts_.stop_time, out_.horizon));
    return std::move(out_);
  }

 private:
  void setup() {
    out_ = TaskSchedule{};
    out_.capacity = cfg_.capacity;
    tenants_.clear();
    tenant_names_.clear();
    for (const auto& [name, t] : cfg_.tenants) {
      detail::TenantState s;
      s.share = {t.share_weight, t.min_limit, t.max_limit};
      s.timeout_share = t.preempt_timeout_share;
      s.timeout_min = t.preempt_timeout_min;
      tenants_.push_back(std::move(s));
      tenant_names_.push_back(name);
    }
    params_.resize(tenants_.size());
    demand_.resize(tenants_.size());
    target_.resize(tenants_.size());
    for (std::size_t i = 0; i < tenants_.size(); ++i) params_[i] = tenants_[i].share;

    tasks_.clear();
    job_first_task_.clear();
    tasks_.reserve(w_.task_count());
    out_.jobs.reserve(w_.jobs.size());
    remaining_.assign(w_.jobs.size(), 0);
    for (std::uint32_t j = 0; j < w_.jobs.size(); ++j) {
      const auto& job = w_.jobs[j];
      auto it = std::lower_bound(tenant_names_.begin(), tenant_names_.end(), job.tenant);
      if (it == tenant_names_.end() || *it != job.tenant)
        throw ConfigError("job " + job.job_id + " belongs to unconfigured tenant " + job.tenant);
      auto tenant = static_cast<std::uint32_t>(it - tenant_names_.begin());
      JobRecord rec{job.job_id, job.tenant, job.submit_time, job.deadline, {}, {}, {}};
      rec.task_ids.reserve(job.tasks.size());
      for (std::uint32_t k = 0; k < job.tasks.size(); ++k) {
        rec.task_ids.push_back(job.tasks[k].task_id);
        tasks_.push_back({job.tasks[k].duration, job.tasks[k].demand, j, k, tenant});
      }
      remaining_[j] = static_cast<std::uint32_t>(job.tasks.size());
      job_first_task_.push_back(static_cast<std::uint32_t>(tasks_.size() - job.tasks.size()));
      out_.jobs.push_back(std::move(rec));
    }
    out_.entries.reserve(tasks_.size() + tasks_.size() / 8);
    entry_task_.clear();
    entry_task_.reserve(out_.entries.capacity());
    entry_launch_seq_.clear();
    entry_launch_seq_.reserve(out_.entries.capacity());
    used_ = 0;
    launch_seq_ = 0;
    event_seq_ = 0;
    finishes_ = decltype(finishes_){};
  }

  void submit(std::size_t j) {
    std::uint32_t first = job_first_task_[j];
    for (std::uint32_t g = first; g < first + w_.jobs[j].tasks.size(); ++g) {
      auto& ts = tenants_[tasks_[g].tenant];
      ts.pending.push_back(g);
      ts.pending_containers += tasks_[g].demand;
    }
  }

  void complete(std::uint32_t entry, double now) {
    auto& e = out_.entries[entry];
    if (e.preempted) return;  // stale event for a killed attempt
    std::uint32_t g = entry_task_[entry];
    auto& ts = tenants_[tasks_[g].tenant];
    e.finish_time = now;
    ts.running.erase({entry_launch_seq_[entry], entry});
    ts.running_containers -= e.allocation;
    used_ -= e.allocation;
    auto& job = out_.jobs[e.job];
    if (--remaining_[e.job] == 0) job.finish_time = now;
  }

  void refresh_targets() {
    for (std::size_t i = 0; i < tenants_.size(); ++i)
      demand_[i] = tenants_[i].running_containers + tenants_[i].pending_containers;
    fair_allocation(params_, demand_, cfg_.capacity, target_);
    for (std::size_t i = 0; i < tenants_.size(); ++i) tenants_[i].target = target_[i];
  }

  void launch_pass(double now) {
    for (;;) {
      int free = cfg_.capacity - used_;
      if (free <= 0) return;
      std::size_t best = tenants_.size();
      int best_deficit = std::numeric_limits<int>::min();
      for (std::size_t i = 0; i < tenants_.size(); ++i) {
        auto& ts = tenants_[i];
        if (ts.pending.empty()) continue;
        int d = tasks_[ts.pending.front()].demand;
        if (d > free || ts.running_containers + d > ts.share.max_limit) continue;
        int deficit = ts.target - ts.running_containers;
        if (deficit > best_deficit) {
          best = i;
          best_deficit = deficit;
        }
      }
      if (best == tenants_.size()) return;
      launch(best, now);
    }
  }

  void launch(std::size_t tenant, double now) {
    auto& ts = tenants_[tenant];
    std::uint32_t g = ts.pending.front();
    ts.pending.pop_front();
    const auto& task = tasks_[g];
    ts.pending_containers -= task.demand;
    ts.running_containers += task.demand;
    used_ += task.demand;

    auto entry = static_cast<std::uint32_t>(out_.entries.size());
    ScheduleEntry e;
    e.job = task.job;
    e.task = task.index;
    e.launch_time = now;
    e.allocation = task.demand;
    out_.entries.push_back(e);
    entry_task_.push_back(g);
    entry_launch_seq_.push_back(launch_seq_);
    ts.running.insert({launch_seq_++, entry});

    auto& job = out_.jobs[task.job];
    if (!job.launch_time) job.launch_time = now;
    finishes_.push({now + task.duration, event_seq_++, entry});
  }

  bool starved_min(const detail::TenantState& ts) const {
    if (ts.pending.empty()) return false;
    int wanted = std::min(ts.share.min_limit, ts.running_containers + ts.pending_containers);
    return ts.running_containers < wanted;
  }

  bool starved_share(const detail::TenantState& ts) const {
    return !ts.pending.empty() && ts.running_containers < ts.target;
  }

  void update_starvation(double now) {
    for (auto& ts : tenants_) {
      if (starved_min(ts)) {
        if (ts.starved_min_since == kInf) ts.starved_min_since = now;
      } else {
        ts.starved_min_since = kInf;
      }
      if (starved_share(ts)) {
        if (ts.starved_share_since == kInf) ts.starved_share_since = now;
      } else {
        ts.starved_share_since = kInf;
      }
    }
  }

  double next_timer() const {
    double t = kInf;
    for (const auto& ts : tenants_) {
      if (ts.timer_blocked) continue;
      if (ts.starved_min_since < kInf) t = std::min(t, ts.starved_min_since + ts.timeout_min);
      if (ts.starved_share_since < kInf) t = std::min(t, ts.starved_share_since + ts.timeout_share);
    }
    return t;
  }

  void fire_timers(double now) {
    for (std::size_t i = 0; i < tenants_.size(); ++i) {
      auto& ts = tenants_[i];
      if (ts.timer_blocked) continue;
      bool expired = false, killed = false;
      // The min-limit level is the more critical one and is served first.
      if (ts.starved_min_since < kInf && ts.starved_min_since + ts.timeout_min <= now) {
        int wanted = std::min(ts.share.min_limit, ts.running_containers + ts.pending_containers);
        killed |= preempt_for(i, wanted - ts.running_containers, now);
        expired = true;
      }
      if (ts.starved_share_since < kInf && ts.starved_share_since + ts.timeout_share <= now) {
        killed |= preempt_for(i, ts.target - ts.running_containers, now);
        expired = true;
      }
      // Nothing to kill: stay quiet until a finish or submission changes the
      // cluster state, otherwise the timer would re-fire forever.
      if (expired && !killed) ts.timer_blocked = true;
    }
    refresh_targets();
    launch_pass(now);
    // Timers of tenants still starved re-arm from now.
    for (auto& ts : tenants_) {
      if (ts.starved_min_since + ts.timeout_min <= now) ts.starved_min_since = kInf;
      if (ts.starved_share_since + ts.timeout_share <= now) ts.starved_share_since = kInf;
    }
    update_starvation(now);
  }

  // Frees up to `need` containers (minus those already free) for `starved`.
  bool preempt_for(std::size_t starved, int need, double now) {
    int freed = cfg_.capacity - used_;
    std::vector<std::uint32_t> killed;
    while (freed < need) {
      std::size_t victim = tenants_.size();
      int most_over = 0;
      for (std::size_t i = 0; i < tenants_.size(); ++i) {
        if (i == starved || tenants_[i].running.empty()) continue;
        int over = tenants_[i].running_containers - tenants_[i].target;
        if (over > most_over) {
          victim = i;
          most_over = over;
        }
      }
      if (victim == tenants_.size()) break;
      auto& vs = tenants_[victim];
      auto last = std::prev(vs.running.end());
      std::uint32_t entry = last->second;
      vs.running.erase(last);
      auto& e = out_.entries[entry];
      e.preempted = true;
      e.preempt_time = now;
      vs.running_containers -= e.allocation;
      used_ -= e.allocation;
      freed += e.allocation;
      killed.push_back(entry);
    }
    // Killed tasks return to the queue head in their original FIFO order.
    std::sort(killed.begin(), killed.end(),
              [&](std::uint32_t a, std::uint32_t b) { return entry_task_[a] > entry_task_[b]; });
    for (auto entry : killed) {
      std::uint32_t g = entry_task_[entry];
      auto& ts = tenants_[tasks_[g].tenant];
      ts.pending.push_front(g);
      ts.pending_containers += tasks_[g].demand;
    }
    return !killed.empty();
  }

  void check_invariants() const {
    if (used_ > cfg_.capacity || used_ < 0) throw std::logic_error("simulator: capacity exceeded");
    for (const auto& ts : tenants_)
      if (ts.running_containers > ts.share.max_limit) throw std::logic_error("simulator: max_limit exceeded");
  }

  const Workload& w_;
  const RMConfig& cfg_;
  SimOptions opts_;

  TaskSchedule out_;
  std::vector<detail::TenantState> tenants_;
  std::vector<std::string> tenant_names_;
  std::vector<ShareParams> params_;
  std::vector<int> demand_, target_;
  std::vector<detail::SimTask> tasks_;
  std::vector<std::uint32_t> remaining_, job_first_task_, entry_task_;
  std::vector<std::uint64_t> entry_launch_seq_;
  std::priority_queue<detail::FinishEvent, std::vector<detail::FinishEvent>, std::greater<>> finishes_;
  int used_ = 0;
  std::uint64_t launch_seq_ = 0, event_seq_ = 0;
};

inline TaskSchedule simulate(const Workload& w, const RMConfig& cfg, SimOptions opts = {}) {
  return Simulator(w, cfg, opts).run();
}

// Container-time of non-preempted attempts overlapping [t0, t1] divided by
// capacity * (t1 - t0). With include_preempted, killed attempts count too
// (raw utilization).
inline double effective_utilization(const TaskSchedule& s, double t0, double t1, bool include_preempted = false) {
  if (!(t0 < t1)) throw ConfigError("utilization window is empty");
  if (t1 > s.horizon + 1e-9) throw ConfigError("utilization window extends past the schedule horizon");
  double area = 0.0;
  for (const auto& e : s.entries) {
    if (e.preempted && !include_preempted) continue;
    double a = std::max(t0, e.launch_time), b = std::min(t1, s.occupied_until(e));
    if (b > a) area += e.allocation * (b - a);
  }
  return area / (static_cast<double>(s.capacity) * (t1 - t0));
}

// Schedule file:
//
//   # tempo-schedule v1
//   # capacity 12
//   # horizon 100
//   [jobs]
//   job_id,tenant,submit_s,deadline_s,tasks
//   [tasks]
//   task_id,job_id,tenant,launch_s,finish_s|PREEMPTED@t,allocation
//
// A task still running at the horizon has finish field RUNNING.
inline constexpr std::string_view kScheduleHeader = "# tempo-schedule v1";

inline void write_schedule(std::ostream& out, const TaskSchedule& s) {
  out << kScheduleHeader << '\n';
  out << "# capacity " << s.capacity << '\n';
  out << "# horizon " << format_number(s.horizon) << '\n';
  out << "[jobs]\njob_id,tenant,submit_s,deadline_s,tasks\n";
  for (const auto& j : s.jobs) {
    out << j.job_id << ',' << j.tenant << ',' << format_number(j.submit_time) << ',';
    if (j.deadline) out << format_number(*j.deadline);
    out << ',' << j.task_ids.size() << '\n';
  }
  out << "[tasks]\ntask_id,job_id,tenant,launch_s,finish_s|PREEMPTED@t,allocation\n";
  for (const auto& e : s.entries) {
    const auto& j = s.jobs[e.job];
    out << j.task_ids[e.task] << ',' << j.job_id << ',' << j.tenant << ',' << format_number(e.launch_time) << ',';
    if (e.preempted)
      out << "PREEMPTED@" << format_number(e.preempt_time);
    else if (e.finish_time)
      out << format_number(*e.finish_time);
    else
      out << "RUNNING";
    out << ',' << e.allocation << '\n';
  }
}

inline std::string to_schedule_string(const TaskSchedule& s) {
  std::ostringstream out;
  write_schedule(out, s);
  return out.str();
}

// Task ids of a job are matched to task indices in order of first
// appearance; job launch/finish are recomputed from the attempts.
inline TaskSchedule parse_schedule(std::istream& in) {
  TaskSchedule s;
  std::string line;
  std::size_t lineno = 0;
  enum class Section { kNone, kJobs, kTasks } section = Section::kNone;
  bool saw_header = false;
  std::map<std::string, std::uint32_t> job_index;
  std::vector<std::size_t> expected_tasks;
  std::vector<std::map<std::string, std::uint32_t>> task_index;

  while (std::getline(in, line)) {
    ++lineno;
    auto text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      if (text == kScheduleHeader) {
        saw_header = true;
      } else if (text.rfind("# capacity", 0) == 0) {
        double c = 0;
        if (!parse_number(text.substr(10), c) || c < 1 || c != std::floor(c))
          throw ParseError(lineno, "capacity", "invalid capacity directive");
        s.capacity = static_cast<int>(c);
      } else if (text.rfind("# horizon", 0) == 0) {
        if (!parse_number(text.substr(9), s.horizon)) throw ParseError(lineno, "horizon", "invalid horizon directive");
      }
      continue;
    }
    if (!saw_header) throw ParseError(lineno, "header", "missing '# tempo-schedule v1' header");
    if (text == "[jobs]") {
      section = Section::kJobs;
      continue;
    }
    if (text == "[tasks]") {
      section = Section::kTasks;
      continue;
    }
    auto f = split(text, ',');
    if (section == Section::kJobs) {
      if (f[0] == "job_id") continue;
      if (f.size() != 5) throw ParseError(lineno, "record", "expected 5 job fields");
      JobRecord j;
      j.job_id = std::string(f[0]);
      j.tenant = std::string(f[1]);
      if (!parse_number(f[2], j.submit_time)) throw ParseError(lineno, "submit_s", "not a number");
      if (!f[3].empty()) {
        double d = 0;
        if (!parse_number(f[3], d)) throw ParseError(lineno, "deadline_s", "not a number");
        j.deadline = d;
      }
      double n = 0;
      if (!parse_number(f[4], n) || n < 1) throw ParseError(lineno, "tasks", "task count must be >= 1");
      if (job_index.count(j.job_id)) throw ParseError(lineno, "job_id", "duplicate job " + j.job_id);
      job_index[j.job_id] = static_cast<std::uint32_t>(s.jobs.size());
      expected_tasks.push_back(static_cast<std::size_t>(n));
      task_index.emplace_back();
      s.jobs.push_back(std::move(j));
    } else if (section == Section::kTasks) {
      if (f[0] == "task_id") continue;
      if (f.size() != 6) throw ParseError(lineno, "record", "expected 6 task fields");
      auto jit = job_index.find(std::string(f[1]));
      if (jit == job_index.end()) throw ParseError(lineno, "job_id", "unknown job " + std::string(f[1]));
      auto& job = s.jobs[jit->second];
      if (job.tenant != f[2]) throw ParseError(lineno, "tenant", "does not match the job's tenant");
      ScheduleEntry e;
      e.job = jit->second;
      auto& tidx = task_index[jit->second];
      std::string tid(f[0]);
      if (auto t = tidx.find(tid); t != tidx.end()) {
        e.task = t->second;
      } else {
        e.task = static_cast<std::uint32_t>(job.task_ids.size());
        if (job.task_ids.size() >= expected_tasks[jit->second])
          throw ParseError(lineno, "task_id", "more tasks than declared for job " + job.job_id);
        job.task_ids.push_back(tid);
        tidx[tid] = e.task;
      }
      if (!parse_number(f[3], e.launch_time)) throw ParseError(lineno, "launch_s", "not a number");
      if (f[4].rfind("PREEMPTED@", 0) == 0) {
        e.preempted = true;
        if (!parse_number(f[4].substr(10), e.preempt_time)) throw ParseError(lineno, "finish_s", "bad preemption time");
      } else if (f[4] != "RUNNING") {
        double fin = 0;
        if (!parse_number(f[4], fin)) throw ParseError(lineno, "finish_s", "not a number");
        if (!(fin > e.launch_time)) throw ParseError(lineno, "finish_s", "finish not after launch");
        e.finish_time = fin;
      }
      double alloc = 0;
      if (!parse_number(f[5], alloc) || alloc < 1) throw ParseError(lineno, "allocation", "must be >= 1");
      e.allocation = static_cast<int>(alloc);
      s.entries.push_back(e);
    } else {
      throw ParseError(lineno, "section", "record outside [jobs]/[tasks]");
    }
  }
  if (!saw_header) throw ParseError(lineno, "header", "missing '# tempo-schedule v1' header");
  if (s.capacity <= 0) throw ParseError(lineno, "capacity", "missing capacity directive");

  std::vector<std::vector<bool>> done(s.jobs.size());
  for (std::size_t j = 0; j < s.jobs.size(); ++j) done[j].assign(expected_tasks[j], false);
  std::vector<double> last_finish(s.jobs.size(), 0.0);
  for (const auto& e : s.entries) {
    auto& job = s.jobs[e.job];
    if (!job.launch_time || e.launch_time < *job.launch_time) job.launch_time = e.launch_time;
    if (e.finish_time) {
      done[e.job][e.task] = true;
      last_finish[e.job] = std::max(last_finish[e.job], *e.finish_time);
    }
  }
  for (std::size_t j = 0; j < s.jobs.size(); ++j) {
    // Pad ids for tasks that never launched so the declared count is kept.
    while (s.jobs[j].task_ids.size() < expected_tasks[j])
      s.jobs[j].task_ids.push_back(s.jobs[j].job_id + ".?" + std::to_string(s.jobs[j].task_ids.size()));
    if (std::all_of(done[j].begin(), done[j].end(), [](bool b) { return b; })) s.jobs[j].finish_time = last_finish[j];
  }
  return s;
}

inline TaskSchedule parse_schedule(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_schedule(in);
}

}  // namespace tempo
