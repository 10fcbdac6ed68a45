#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "streamlda/baselines.hpp"
#include "streamlda/evaluation.hpp"
#include "streamlda/feature_bank.hpp"
#include "streamlda/learner.hpp"
#include "streamlda/orderings.hpp"

namespace streamlda {

/// One entry of the config "methods" list. Fields beyond name apply only to
/// the methods that use them; unset fields keep these defaults.
struct MethodConfig {
  std::string name;   // slda_plastic | slda_fixed | exstream | finetune | ncm
  std::string label;  // column/report key; defaults to name
  double epsilon = 1e-4;
  std::string cov_init = "from_bank";  // from_bank | ones | zero
  int capacity_per_class = 20;
  int batch_cap = 256;
  SgdOptions sgd;
};

struct OfflineConfig {
  int epochs = 40;
  SgdOptions sgd;
  int batch_size = 256;
  std::uint64_t seed = 17;
};

struct ExperimentConfig {
  std::string train_bank_path;
  std::string test_bank_path;
  std::optional<SynthSpec> synth;
  int synth_test_per_class = 100;
  std::uint64_t synth_test_seed = 9090;

  std::vector<MethodConfig> methods;
  OfflineConfig offline;
  std::vector<OrderingKind> orderings;
  std::vector<std::uint64_t> seeds;
  ScheduleSpec base_init = ScheduleSpec::samples(0);
  ScheduleSpec eval_every = ScheduleSpec::samples(1);
  MetricKind metric = MetricKind::kTop1;
  EvalScope scope = EvalScope::kAllTestData;
  std::string output_dir;  // empty = unset; run_experiment falls back to "out"
  double max_time_seconds = 259200.0;        // 72 hours
  double max_mem_bytes = 5.0 * 1024 * 1024 * 1024;  // 5 GB
  int jobs = 1;
};

/// Parses and validates a config document. Every rejection is a ConfigError
/// naming the offending field.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::string& path);

/// Parses a synthetic-bank description (the "synth" block of a config, also
/// accepted standalone by the synth subcommand).
SynthSpec parse_synth_spec(const nlohmann::json& doc);

/// The experiment-defining fields as JSON, echoed into the report. Run
/// environment details (output_dir, jobs) are left out so identical
/// experiments produce identical reports wherever they run.
nlohmann::json experiment_config_echo(const ExperimentConfig& config);

/// Builds a fresh learner for one streaming run. plan_seed feeds the
/// method's internal sampling (mixed with the method label so two methods
/// in one run never share a random stream).
std::unique_ptr<StreamingLearner> make_learner(const MethodConfig& method, int dim,
                                               int num_classes, std::uint64_t plan_seed);

/// Runs the full grid (ordering x seed x method), normalizes each curve by
/// the offline readout's curve under the same plan and scope, and writes
/// curve_<ordering>.csv per ordering plus report.json and timings.json into
/// output_dir. All outputs except timings.json are byte-deterministic for a
/// given config and seed list.
void run_experiment(const ExperimentConfig& config);

}  // namespace streamlda
