#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tempo/cli.hpp"

namespace {

// t0,t1
tempo::Window parse_window(const std::string& s) {
  auto parts = tempo::split(s, ',');
  double t0 = 0, t1 = 0;
  if (parts.size() != 2 || !tempo::parse_number(parts[0], t0) || !tempo::parse_number(parts[1], t1))
    throw tempo::ConfigError("--window expects t0,t1");
  return {t0, t1};
}

std::vector<int> parse_capacities(const std::string& s) {
  std::vector<int> out;
  for (auto p : tempo::split(s, ',')) {
    double v = 0;
    if (!tempo::parse_number(p, v) || v != static_cast<int>(v))
      throw tempo::ConfigError("--capacities expects integers, got '" + std::string(p) + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate, evaluate and tune multi-tenant resource manager configurations"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
  app.add_option("--seed", seed, "Master seed; every random stream derives from it");
  app.add_flag("-v,--verbose", verbosity, "Print progress to stderr");

  std::string trace, config, slos, loop, out, schedule, model, predicted, observed, window, capacities;
  double horizon = 0;

  auto path = [](CLI::App* sub, const char* flag, std::string& dst, const char* env, const char* help) {
    return sub->add_option(flag, dst, help)->envname(env)->required();
  };

  auto* sim = app.add_subcommand("simulate", "Run the event-driven simulator on a trace");
  path(sim, "--trace", trace, "TEMPO_TRACE", "Trace file");
  path(sim, "--config", config, "TEMPO_CONFIG", "RM configuration");
  path(sim, "--out", out, "TEMPO_OUT", "Schedule file to write");

  auto* eval = app.add_subcommand("evaluate", "Evaluate SLOs on a schedule");
  path(eval, "--schedule", schedule, "TEMPO_SCHEDULE", "Schedule file");
  path(eval, "--slos", slos, "TEMPO_SLOS", "SLO file");
  eval->add_option("--window", window, "t0,t1 in seconds")->required();
  path(eval, "--out", out, "TEMPO_OUT", "QS table to write");

  auto* opt = app.add_subcommand("optimize", "Run the control loop against a replayed trace");
  path(opt, "--trace", trace, "TEMPO_TRACE", "Trace file");
  path(opt, "--config", config, "TEMPO_CONFIG", "Initial RM configuration with bounds");
  path(opt, "--slos", slos, "TEMPO_SLOS", "SLO file");
  path(opt, "--loop", loop, "TEMPO_LOOP", "Loop configuration");
  path(opt, "--out", out, "TEMPO_OUT", "Output directory");

  auto* gen = app.add_subcommand("generate", "Synthesize a trace from a workload model");
  path(gen, "--model", model, "TEMPO_MODEL", "Workload model");
  gen->add_option("--horizon", horizon, "Seconds of arrivals")->required()->check(CLI::PositiveNumber);
  path(gen, "--out", out, "TEMPO_OUT", "Trace file to write");

  auto* fit = app.add_subcommand("fit", "Fit a workload model to a trace");
  path(fit, "--trace", trace, "TEMPO_TRACE", "Trace file");
  path(fit, "--out", out, "TEMPO_OUT", "Model file to write");

  auto* prov = app.add_subcommand("provision", "Predict SLOs at several cluster capacities");
  path(prov, "--trace", trace, "TEMPO_TRACE", "Trace file");
  path(prov, "--config", config, "TEMPO_CONFIG", "RM configuration");
  path(prov, "--slos", slos, "TEMPO_SLOS", "SLO file");
  prov->add_option("--capacities", capacities, "Comma-separated container counts")->required();
  path(prov, "--out", out, "TEMPO_OUT", "Table to write");

  auto* val = app.add_subcommand("validate", "Per-tenant RAE/RSE of predicted against observed finish times");
  path(val, "--predicted", predicted, "TEMPO_PREDICTED", "Predicted schedule");
  path(val, "--observed", observed, "TEMPO_OBSERVED", "Observed schedule");
  path(val, "--out", out, "TEMPO_OUT", "Table to write");

  CLI11_PARSE(app, argc, argv);

  namespace cli = tempo::cli;
  try {
    if (sim->parsed()) return cli::cmd_simulate(trace, config, out, std::cout);
    if (eval->parsed()) return cli::cmd_evaluate(schedule, slos, parse_window(window), out);
    if (opt->parsed()) {
      std::ostringstream sink;
      return cli::cmd_optimize(trace, config, slos, loop, out, seed, verbosity > 0 ? std::cerr : sink);
    }
    if (gen->parsed()) return cli::cmd_generate(model, horizon, seed.value_or(0), out);
    if (fit->parsed()) return cli::cmd_fit(trace, out, std::cerr);
    if (prov->parsed()) return cli::cmd_provision(trace, config, slos, parse_capacities(capacities), out);
    if (val->parsed()) return cli::cmd_validate(predicted, observed, out);
  } catch (const std::exception& e) {
    std::cerr << "tempo: " << e.what() << '\n';
    return cli::kFailure;
  }
  return cli::kFailure;
}
