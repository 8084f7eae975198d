// SPDX-License-Identifier: Apache-2.0
// cropdrqn command-line tool. Exit codes: 0 success, 1 configuration error,
// 2 runtime failure.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "cropdrqn/agent/evaluate.hpp"
#include "cropdrqn/agent/policy.hpp"
#include "cropdrqn/agent/trainer.hpp"
#include "cropdrqn/core/error.hpp"
#include "cropdrqn/core/text.hpp"
#include "cropdrqn/core/version.hpp"
#include "cropdrqn/cropenv/factory.hpp"
#include "cropdrqn/emission/model.hpp"
#include "cropdrqn/emission/synthetic.hpp"
#include "cropdrqn/harness/experiment.hpp"
#include "cropdrqn/harness/report.hpp"
#include "cropdrqn/harness/spec.hpp"
#include "cropdrqn/harness/tool_config.hpp"
#include "cropdrqn/weather/fit.hpp"
#include "cropdrqn/weather/io.hpp"
#include "cropdrqn/weather/reference.hpp"
#include "cropdrqn/weather/wgen.hpp"

namespace fs = std::filesystem;
using namespace cropdrqn;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::string output = "out";
  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
  CLI::Option* output_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("-c,--config", c.config, "JSON configuration file");
  if (config_required) opt->required();
  opt->check(CLI::ExistingFile);
  c.seed_opt = sub->add_option("-s,--seed", c.seed, "Random seed");
  c.workers_opt = sub->add_option("-w,--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
  c.output_opt = sub->add_option("-o,--output", c.output, "Output directory");
}

json config_or_empty(const Common& c) { return c.config.empty() ? json::object() : harness::read_json_file(c.config); }

fs::path config_dir(const Common& c) { return c.config.empty() ? fs::path{} : fs::absolute(c.config).parent_path(); }

fs::path output_dir(const Common& c) {
  harness::detail::ensure_dir(c.output);
  return c.output;
}

void say(const std::string& s) { std::cerr << s << '\n'; }

int fit_weather(const Common& c) {
  const auto cfg = harness::fit_weather_from_json(config_or_empty(c), config_dir(c));
  const auto history =
      cfg.weather_file.empty() ? weather::reference_year() : weather::read_weather_file(cfg.weather_file);
  const auto report = weather::fit_params(history);
  for (const auto& w : report.warnings) say("warning: " + w);
  const auto out = output_dir(c) / "wgen_params.txt";
  weather::write_params_file(report.params, out.string());
  say("wrote " + out.string());
  return 0;
}

int gen_weather(const Common& c) {
  const auto cfg = harness::gen_weather_from_json(config_or_empty(c), config_dir(c));
  const auto params =
      cfg.params_file.empty() ? weather::reference_params() : weather::read_params_file(cfg.params_file);
  std::optional<weather::WeatherSeries> totals;
  if (cfg.scenario.preserve_monthly_totals)
    totals = cfg.totals_file.empty() ? weather::reference_year() : weather::read_weather_file(cfg.totals_file);
  RngStream rng(c.seed, 0x3E7);
  const auto series =
      weather::generate_season(params, cfg.scenario, cfg.start, cfg.end, rng, totals ? &*totals : nullptr);
  const auto out = output_dir(c) / "weather.csv";
  weather::write_weather_file(series, out.string());
  say("wrote " + out.string() + " (" + std::to_string(series.size()) + " days)");
  return 0;
}

json metrics_json(const emission::EvalMetrics& m) {
  return {{"n", m.n}, {"r2", m.r2}, {"rmse", m.rmse}, {"nll", m.nll}, {"coverage95", m.coverage95}};
}

int fit_emission(const Common& c) {
  const auto cfg = harness::fit_emission_from_json(config_or_empty(c), config_dir(c));
  emission::Dataset data;
  if (cfg.dataset.empty()) {
    RngStream gen(c.seed, 0xDA7A);
    data = emission::make_synthetic_dataset(cfg.synthetic_n, cfg.synthetic_noise, gen);
  } else {
    data = emission::read_dataset_file(cfg.dataset);
  }
  RngStream rng(c.seed, 0xE315);
  auto result = emission::train_emission_model(cfg.model, data, rng);
  const auto dir = output_dir(c);
  emission::save_emission_model(result.model, (dir / "emission_model.ckpt").string());

  json report = {{"model", emission::to_string(cfg.model.kind)},
                 {"samples", data.size()},
                 {"held_out", metrics_json(result.held_out)},
                 {"folds", json::array()}};
  for (const auto& f : result.folds) report["folds"].push_back(metrics_json(f));
  std::ofstream(dir / "emission_metrics.json") << report.dump(2) << '\n';
  std::ofstream loss(dir / "emission_loss.csv");
  loss << "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_curve.size(); ++e)
    loss << e + 1 << ',' << text::exact(result.loss_curve[e]) << '\n';
  say("held-out r2 " + std::to_string(result.held_out.r2) + ", coverage95 " +
      std::to_string(result.held_out.coverage95));
  return 0;
}

int train(const Common& c) {
  const auto cfg = harness::train_run_from_json(config_or_empty(c), config_dir(c));
  std::optional<agent::PolicyHandle> warm;
  if (!cfg.training.warm_start.empty()) warm = agent::load_policy(cfg.training.warm_start);
  auto factory = harness::detail::factory_for(cfg.season, cfg.base_dir);
  const auto dir = output_dir(c);
  auto progress = [](const agent::CurvePoint& p) {
    if (p.episode % 50 == 0) say("episode " + std::to_string(p.episode) + " return " + std::to_string(p.total_return));
  };
  try {
    auto r = agent::train_policy(factory, cfg.training, c.seed, warm, agent::PolicyLabel::fixed(), progress);
    agent::save_policy(r.policy, (dir / "policy.ckpt").string());
    std::ofstream curve(dir / "learning_curve.csv");
    agent::write_curve_csv(r.curve, curve);
    say("wrote " + (dir / "policy.ckpt").string());
  } catch (const agent::TrainingAborted& e) {
    agent::save_policy(e.last_good(), (dir / "policy_last_good.ckpt").string());
    std::ofstream curve(dir / "learning_curve.csv");
    agent::write_curve_csv(e.curve(), curve);
    throw;
  }
  return 0;
}

int evaluate(const Common& c) {
  const auto cfg = harness::evaluate_from_json(config_or_empty(c), config_dir(c));
  const auto policy = agent::load_policy(cfg.policy);
  agent::EvalOptions o;
  o.realizations = cfg.realizations;
  o.seed = c.seed;
  o.resample_weather = cfg.resample_weather;
  o.resample_noise = cfg.resample_noise;
  o.workers = c.workers;
  o.gamma = cfg.gamma;
  const auto summary = agent::evaluate_policy(policy, harness::detail::factory_for(cfg.season, cfg.base_dir), o);
  const auto out = output_dir(c) / "evaluation.csv";
  std::ofstream os(out);
  os << "metric,mean,lo,hi,n\n";
  for (const auto& [name, m] : summary.metrics)
    os << name << ',' << text::exact(m.mean) << ',' << text::exact(m.lo) << ',' << text::exact(m.hi) << ',' << m.n
       << '\n';
  if (!os) throw IoError("cannot write " + out.string());
  const auto& r = summary.metric("reward");
  say("reward " + std::to_string(r.mean) + " [" + std::to_string(r.lo) + ", " + std::to_string(r.hi) + "]");
  return 0;
}

int experiment(const Common& c, harness::ExperimentKind kind) {
  json j = harness::read_json_file(c.config);
  json& body = j.contains("manifest_version") && j.contains("spec") ? j["spec"] : j;
  if (!body.is_object()) throw ConfigError("experiment config must be a JSON object");
  if (!body.contains("kind")) body["kind"] = harness::to_string(kind);
  auto spec = harness::experiment_from_json(j, config_dir(c));
  if (spec.kind != kind)
    throw ConfigError(std::string("config describes a ") + harness::to_string(spec.kind) + " experiment, not " +
                      harness::to_string(kind));
  if (c.seed_opt->count()) spec.seed = c.seed;
  if (c.workers_opt->count()) spec.workers = c.workers;
  if (c.output_opt->count()) spec.output_dir = c.output;
  spec.validate();
  const auto result = harness::run_experiment(spec, say);
  const auto files = harness::emit_report(result, spec.output_dir);
  for (const auto& f : files) say("wrote " + (fs::path(spec.output_dir) / f).string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crop management with recurrent deep Q-learning"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    bool config_required;
    std::function<int(const Common&)> run;
  };
  const Sub subs[] = {
      {"fit-weather", "Fit WGEN parameters to a daily weather history", false, fit_weather},
      {"gen-weather", "Generate daily weather under a climate scenario", false, gen_weather},
      {"fit-emission", "Train the N2O emission model", false, fit_emission},
      {"train", "Train a policy on one season configuration", true, train},
      {"evaluate", "Evaluate a saved policy over weather realizations", true, evaluate},
      {"sweep-temp", "Temperature-offset sweep", true,
       [](const Common& c) { return experiment(c, harness::ExperimentKind::TempSweep); }},
      {"sweep-precip", "Precipitation-reduction sweep", true,
       [](const Common& c) { return experiment(c, harness::ExperimentKind::PrecipSweep); }},
      {"case-study", "Reward-weight case study against a random policy", true,
       [](const Common& c) { return experiment(c, harness::ExperimentKind::CaseStudy); }},
  };
  std::array<Common, std::size(subs)> commons;
  const Sub* selected = nullptr;
  for (std::size_t k = 0; k < std::size(subs); ++k) {
    auto* sub = app.add_subcommand(subs[k].name, subs[k].help);
    add_common(sub, commons[k], subs[k].config_required);
    sub->callback([&selected, &subs, k] { selected = &subs[k]; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return selected->run(commons[static_cast<std::size_t>(selected - subs)]);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
