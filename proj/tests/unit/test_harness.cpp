// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "cropdrqn/cropenv/reward.hpp"
#include "cropdrqn/harness/report.hpp"
#include "cropdrqn/harness/tool_config.hpp"

using namespace cropdrqn;
using namespace cropdrqn::harness;
namespace fs = std::filesystem;

namespace {

agent::TrainConfig tiny_training() {
  agent::TrainConfig c;
  c.episodes = 6;
  c.batch_size = 16;
  c.train_every = 4;
  c.learning_rate = 1e-3;
  c.reward_scale = 1e-3;
  c.replay_capacity = 2000;
  c.sync_period = 100;
  c.gru_hidden = 8;
  c.head_hidden = 8;
  return c;
}

ExperimentSpec tiny_spec(ExperimentKind kind, const fs::path& out) {
  ExperimentSpec s;
  s.kind = kind;
  s.realizations = 4;
  s.seed = 7;
  s.output_dir = out.string();
  s.training = tiny_training();
  s.fine_tune = default_fine_tune(s.training);
  s.fine_tune.episodes = 2;
  s.validation_episodes = 2;
  return s;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cropdrqn_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

agent::EpisodeRecord record(double total, double yield) {
  agent::EpisodeRecord r;
  r.total = total;
  r.discounted = total;
  r.metrics = {{"yield", yield}};
  return r;
}

// Shared across tests: sweeps with the tiny configuration.
const SweepResult& precip_result() {
  static const SweepResult r = [] {
    auto s = tiny_spec(ExperimentKind::PrecipSweep, scratch("precip"));
    s.points = {1.0, 0.6, 0.2};
    return run_precip_sweep(s);
  }();
  return r;
}

}  // namespace

TEST(Summarize, ConstantRecordsGiveDegenerateInterval) {
  std::vector<agent::EpisodeRecord> recs(10, record(3.5, 2.0));
  const auto s = summarize(recs);
  EXPECT_EQ(s.metric("reward").mean, 3.5);
  EXPECT_EQ(s.metric("reward").lo, 3.5);
  EXPECT_EQ(s.metric("reward").hi, 3.5);
  EXPECT_EQ(s.metric("yield").n, 10u);
}

TEST(Summarize, LinearInterpolationOnOneToHundred) {
  std::vector<agent::EpisodeRecord> recs;
  for (int i = 1; i <= 100; ++i) recs.push_back(record(i, 0.0));
  const auto& m = summarize(recs).metric("reward");
  EXPECT_NEAR(m.lo, 3.475, 1e-12);
  EXPECT_NEAR(m.hi, 97.525, 1e-12);
  EXPECT_NEAR(m.mean, 50.5, 1e-12);
}

TEST(Summarize, PermutationInvariantAndBounded) {
  RngStream rng(3, 0);
  std::vector<agent::EpisodeRecord> recs;
  for (int i = 0; i < 57; ++i) recs.push_back(record(rng.normal() * 100, rng.uniform(0, 1e4)));
  const auto a = summarize(recs);
  std::shuffle(recs.begin(), recs.end(), rng.engine());
  const auto b = summarize(recs);
  for (std::size_t k = 0; k < a.metrics.size(); ++k) {
    EXPECT_EQ(a.metrics[k].second.mean, b.metrics[k].second.mean);
    EXPECT_EQ(a.metrics[k].second.lo, b.metrics[k].second.lo);
    EXPECT_EQ(a.metrics[k].second.hi, b.metrics[k].second.hi);
  }
  std::vector<double> totals;
  for (const auto& r : recs) totals.push_back(r.total);
  const auto& m = a.metric("reward");
  EXPECT_LE(m.lo, m.hi);
  EXPECT_LE(*std::min_element(totals.begin(), totals.end()), m.lo);
  EXPECT_GE(*std::max_element(totals.begin(), totals.end()), m.hi);
  EXPECT_THROW(summarize({}), DomainError);
}

TEST(CaseStudy, Case2ReportedTotalsReconstruct) {
  std::vector<cropenv::DayDiagnostics> days(2);
  days[0].n_applied = 140;
  days[0].water_applied = 270;
  days[1].leaching = 5.0;
  days[1].n2o = 0.223;
  days[1].yield = 10549;
  days[1].harvest = true;
  EXPECT_NEAR(cropenv::season_reward_total(days, cropenv::RewardWeights::case_preset(2)), 1267.0, 2.0);
}

TEST(ExperimentConfig, DefaultsAndGrid) {
  const auto s = experiment_from_json({{"kind", "temp_sweep"}});
  EXPECT_EQ(s.realizations, 300u);
  EXPECT_EQ(s.grid(), default_temp_offsets());
  EXPECT_EQ(s.policy_list(), (std::vector<PolicyKind>{PolicyKind::Fixed, PolicyKind::Optimal}));
  EXPECT_EQ(s.training.batch_size, 640u);
  EXPECT_EQ(s.fine_tune.epsilon_start, s.training.epsilon_end);
  const auto p = experiment_from_json({{"kind", "precip_sweep"}});
  EXPECT_EQ(p.grid(), default_rain_factors());
}

TEST(ExperimentConfig, RejectsInvalidInput) {
  EXPECT_THROW(experiment_from_json({{"kind", "temp_sweep"}, {"points", {0.7}}}), ConfigError);
  EXPECT_NO_THROW(experiment_from_json({{"kind", "temp_sweep"}, {"points", {0.7}}, {"custom_points", true}}));
  EXPECT_THROW(experiment_from_json({{"kind", "precip_sweep"}, {"points", {1.5}}, {"custom_points", true}}),
               ConfigError);
  EXPECT_THROW(experiment_from_json({{"kind", "temp_sweep"}, {"realizations", 0}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"kind", "sweep"}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"kind", "temp_sweep"}, {"seeds", 3}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"kind", "case_study"}, {"cases", {4}}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"kind", "case_study"}, {"policies", {"optimal"}}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"kind", "temp_sweep"}, {"points", {0.5, 0.5}}}), ConfigError);
}

TEST(ExperimentConfig, JsonRoundTripKeepsHash) {
  auto s = tiny_spec(ExperimentKind::PrecipSweep, "out");
  s.points = {0.8, 0.2};
  const auto back = experiment_from_json(experiment_to_json(s));
  EXPECT_EQ(experiment_to_json(back), experiment_to_json(s));
  EXPECT_EQ(config_hash(back), config_hash(s));
  auto w = s;
  w.workers = 4;
  EXPECT_EQ(config_hash(w), config_hash(s));
  w.seed = 8;
  EXPECT_NE(config_hash(w), config_hash(s));
}

TEST(Scenario, KeysAndLabels) {
  EXPECT_EQ(scenario_at(ExperimentKind::TempSweep, 0.0).key(), "baseline");
  EXPECT_EQ(scenario_at(ExperimentKind::PrecipSweep, 1.0).key(), "baseline");
  EXPECT_EQ(scenario_at(ExperimentKind::TempSweep, 1.5).label(), "T+1.5C");
  EXPECT_EQ(scenario_at(ExperimentKind::PrecipSweep, 0.6).label(), "rain-40%");
  EXPECT_EQ(scenario_at(ExperimentKind::PrecipSweep, 0.2).label(), "rain-80% (drought)");
  EXPECT_NE(stream_seed(1, "eval"), stream_seed(1, "train/fixed"));
}

TEST(Sweep, GridIsCompleteAndLabelsDrought) {
  auto s = tiny_spec(ExperimentKind::PrecipSweep, scratch("grid"));
  s.points = {0.8, 0.6, 0.4, 0.2};
  const auto r = run_precip_sweep(s);
  ASSERT_EQ(r.cells.size(), 8u);
  std::set<std::pair<std::string, PolicyKind>> seen;
  for (const auto& c : r.cells) {
    seen.emplace(c.scenario, c.policy);
    EXPECT_EQ(c.summary.metric("reward").n, 4u);
    for (const auto& [name, m] : c.summary.metrics) EXPECT_LE(m.lo, m.hi) << name;
  }
  EXPECT_EQ(seen.size(), 8u);
  EXPECT_EQ(r.cell("rain_0.2", PolicyKind::Fixed).label, "rain-80% (drought)");
  // One fixed policy plus one fine-tuned policy per scenario.
  ASSERT_EQ(r.policies.size(), 5u);
  for (std::size_t i = 1; i < r.policies.size(); ++i) EXPECT_TRUE(r.policies[i].accepted.has_value());
}

TEST(Sweep, BaselineCellsAgreeAcrossSweeps) {
  const auto& precip = precip_result();
  auto s = tiny_spec(ExperimentKind::TempSweep, scratch("temp"));
  s.points = {0.0, 1.0};
  const auto temp = run_temp_sweep(s);
  for (PolicyKind p : {PolicyKind::Fixed, PolicyKind::Optimal}) {
    const auto& a = precip.cell("baseline", p).summary;
    const auto& b = temp.cell("baseline", p).summary;
    ASSERT_EQ(a.episodes.size(), b.episodes.size());
    for (std::size_t k = 0; k < a.episodes.size(); ++k) EXPECT_EQ(a.episodes[k].rewards, b.episodes[k].rewards);
  }
  // Offset 0 is random weather, not the fixed training year.
  const auto& rewards = temp.cell("baseline", PolicyKind::Fixed).summary.metric("yield");
  EXPECT_LT(rewards.lo, rewards.hi);
}

TEST(Sweep, LoadOnlyPathNeedsNoTraining) {
  const auto dir = scratch("loadonly");
  auto s = tiny_spec(ExperimentKind::TempSweep, dir);
  s.points = {0.0, 2.0};
  s.policies = {PolicyKind::Fixed};
  s.fixed_policy = (dir / "given.ckpt").string();
  s.train = false;
  EXPECT_THROW(run_temp_sweep(s), ConfigError);

  // Save a policy, then run from the checkpoint alone.
  auto train_spec = s;
  train_spec.train = true;
  const auto first = run_temp_sweep(train_spec);
  ASSERT_TRUE(fs::exists(dir / "given.ckpt"));
  const auto second = run_temp_sweep(s);
  EXPECT_EQ(second.policies.at(0).source, "loaded");
  EXPECT_EQ(first.cell("temp_2", PolicyKind::Fixed).summary.metric("reward").mean,
            second.cell("temp_2", PolicyKind::Fixed).summary.metric("reward").mean);

  s.policies = {PolicyKind::Fixed, PolicyKind::Optimal};
  EXPECT_THROW(run_temp_sweep(s), ConfigError);  // no fine-tuned checkpoints on disk
}

TEST(Sweep, RandomPolicyCellsUseMatchedRealizations) {
  auto s = tiny_spec(ExperimentKind::PrecipSweep, scratch("random"));
  s.points = {1.0, 0.4};
  s.policies = {PolicyKind::Random};
  const auto r = run_precip_sweep(s);
  ASSERT_EQ(r.cells.size(), 2u);
  EXPECT_TRUE(r.policies.empty());
  // The same action streams run under both climates.
  EXPECT_EQ(r.cells[0].summary.episodes[0].actions.front(), r.cells[1].summary.episodes[0].actions.front());
}

TEST(Report, CsvRoundTripsExactly) {
  const auto rows = summary_rows(precip_result());
  ASSERT_EQ(rows.size(), 3u * 2u * 7u);
  std::stringstream ss;
  write_summary_csv(rows, ss);
  EXPECT_EQ(read_summary_csv(ss), rows);
  std::stringstream bad("experiment,scenario\n");
  EXPECT_THROW(read_summary_csv(bad), ParseError);
}

TEST(Report, EmitsFilesManifestAndCharts) {
  const auto dir = scratch("emit");
  const auto& r = precip_result();
  const auto files = emit_report(r, dir);
  ASSERT_TRUE(fs::exists(dir / "precip_sweep.csv"));
  ASSERT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_NE(std::find(files.begin(), files.end(), "charts/precip_sweep_yield.svg"), files.end());

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("seed"), 7u);
  EXPECT_EQ(manifest.at("config_hash"), config_hash(r.spec));
  EXPECT_EQ(manifest.at("cells").size(), r.cells.size());

  const std::string svg = slurp(dir / "charts/precip_sweep_reward.svg");
  std::set<double> ticks;
  const std::regex tick("class=\"xtick\" data-x=\"([^\"]+)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tick); it != std::sregex_iterator(); ++it)
    ticks.insert(std::stod((*it)[1].str()));
  EXPECT_EQ(ticks, (std::set<double>{0.2, 0.6, 1.0}));
}

TEST(Report, UnwritableDirectoryIsIoError) {
  const auto dir = scratch("blocked");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(emit_report(precip_result(), dir / "file" / "sub"), IoError);
}

TEST(Reproducibility, RerunFromManifestGivesIdenticalCsv) {
  const auto dir = scratch("rerun");
  emit_report(precip_result(), dir);
  const auto spec = load_experiment((dir / "manifest.json").string());
  EXPECT_EQ(config_hash(spec), config_hash(precip_result().spec));
  const auto again = run_experiment(spec);
  const auto dir2 = scratch("rerun2");
  emit_report(again, dir2);
  EXPECT_EQ(slurp(dir / "precip_sweep.csv"), slurp(dir2 / "precip_sweep.csv"));
}

TEST(Reproducibility, WorkerCountDoesNotChangeOutputs) {
  auto s = tiny_spec(ExperimentKind::PrecipSweep, scratch("workers1"));
  s.points = {1.0, 0.6, 0.2};
  auto p = s;
  p.workers = 3;
  p.output_dir = scratch("workers3").string();
  std::stringstream a, b;
  write_summary_csv(summary_rows(run_precip_sweep(s)), a);
  write_summary_csv(summary_rows(run_precip_sweep(p)), b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str(), [] {
    std::stringstream c;
    write_summary_csv(summary_rows(precip_result()), c);
    return c.str();
  }());
}

TEST(CaseStudy, ControlledWeatherAndRandomBaseline) {
  const auto dir = scratch("cases");
  auto s = tiny_spec(ExperimentKind::CaseStudy, dir);
  s.cases = {1, 3};
  s.realizations = 100;
  s.training.episodes = 80;
  s.training.train_every = 2;
  s.training.batch_size = 32;
  s.training.eval_every = 20;
  s.training.eval_episodes = 2;
  std::vector<std::string> lines;
  const auto r = run_case_study(s, [&](const std::string& m) { lines.push_back(m); });
  ASSERT_EQ(r.case_rows.size(), 4u);
  // Cases differ only by reward weights: every realization saw the same weather.
  std::set<std::string> digests;
  for (const auto& row : r.case_rows) digests.insert(row.weather_digest);
  EXPECT_EQ(digests.size(), 1u);
  EXPECT_GE(std::count_if(lines.begin(), lines.end(),
                          [&](const std::string& l) { return l.find(*digests.begin()) != std::string::npos; }),
            4);
  for (int c : {1, 3}) {
    const std::string name = "case" + std::to_string(c);
    EXPECT_LT(r.cell(name, PolicyKind::Random).summary.metric("reward").mean,
              r.cell(name, PolicyKind::Fixed).summary.metric("reward").mean);
  }
  const auto files = emit_report(r, dir);
  const std::string table = slurp(dir / "case_table.csv");
  EXPECT_EQ(table.substr(0, table.find('\n')), kCaseHeader);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 5);

  // Load-only path: rerunning without training uses the saved checkpoints.
  s.train = false;
  s.realizations = 3;
  const auto loaded = run_case_study(s);
  EXPECT_EQ(loaded.policies.at(0).source, "loaded");
  EXPECT_EQ(loaded.case_rows[0].reward, r.case_rows[0].reward);
  s.policy_dir = (dir / "nowhere").string();
  EXPECT_THROW(run_case_study(s), ConfigError);
}

TEST(ToolConfig, DefaultsWhenEmpty) {
  const auto g = gen_weather_from_json(nlohmann::json::object());
  EXPECT_TRUE(g.params_file.empty());
  EXPECT_EQ(g.start, make_date(2012, 1, 1));
  EXPECT_EQ(g.scenario.rain_factor, 1.0);
  const auto e = fit_emission_from_json(nlohmann::json::object());
  EXPECT_TRUE(e.dataset.empty());
  EXPECT_EQ(e.synthetic_n, 919u);
  EXPECT_EQ(e.model.kind, emission::ModelKind::Probabilistic);
}

TEST(ToolConfig, ModelKindPresetThenOverrides) {
  const auto m = emission_model_from_json({{"kind", "deterministic"}, {"epochs", 7}});
  EXPECT_EQ(m.kind, emission::ModelKind::Deterministic);
  EXPECT_EQ(m.hidden, (std::vector<std::size_t>{512, 512, 512, 512}));
  EXPECT_EQ(m.epochs, 7u);
  EXPECT_THROW(emission_model_from_json({{"kind", "bayesian"}}), ConfigError);
  EXPECT_THROW(emission_model_from_json({{"epochs", 0}}), ConfigError);
}

TEST(ToolConfig, RelativePathsResolveAgainstConfigDir) {
  const fs::path dir = fs::temp_directory_path() / "cropdrqn_toolcfg";
  fs::create_directories(dir);
  std::ofstream(dir / "p.ckpt") << "x";
  const auto c = evaluate_from_json({{"policy", "p.ckpt"}, {"realizations", 5}}, dir);
  EXPECT_EQ(fs::path(c.policy), (dir / "p.ckpt").lexically_normal());
  EXPECT_EQ(c.realizations, 5u);
  EXPECT_THROW(evaluate_from_json({{"policy", "missing.ckpt"}}, dir), ConfigError);
  EXPECT_THROW(evaluate_from_json(nlohmann::json::object(), dir), ConfigError);
}

TEST(ToolConfig, RejectsBadInput) {
  EXPECT_THROW(gen_weather_from_json({{"start", "2012-02-30"}}), ConfigError);
  EXPECT_THROW(gen_weather_from_json({{"start", "2012-06-01"}, {"end", "2012-05-01"}}), ConfigError);
  EXPECT_THROW(gen_weather_from_json({{"scenario", {{"rain_factor", -1.0}}}}), ConfigError);
  EXPECT_THROW(fit_emission_from_json({{"synthetic", {{"n", 0}}}}), ConfigError);
  EXPECT_THROW(fit_weather_from_json({{"weather", "x.csv"}}), ConfigError);
  EXPECT_THROW(train_run_from_json({{"training", {{"batch_size", 0}}}}), ConfigError);
}
