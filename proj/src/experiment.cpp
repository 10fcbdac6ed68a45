#include "streamlda/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "streamlda/errors.hpp"
#include "streamlda/methods.hpp"

namespace streamlda {

namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why);
}

template <typename T>
T get_field(const json& doc, const std::string& field, const T& fallback) {
  if (!doc.contains(field)) return fallback;
  try {
    return doc.at(field).get<T>();
  } catch (const json::exception&) {
    bad_field(field, "has the wrong type");
  }
}

template <typename T>
T require_field(const json& doc, const std::string& field) {
  if (!doc.contains(field)) bad_field(field, "is required");
  try {
    return doc.at(field).get<T>();
  } catch (const json::exception&) {
    bad_field(field, "has the wrong type");
  }
}

SgdOptions parse_sgd(const json& doc, const std::string& prefix, SgdOptions defaults) {
  SgdOptions sgd = defaults;
  sgd.learning_rate = get_field(doc, "lr", sgd.learning_rate);
  sgd.momentum = get_field(doc, "momentum", sgd.momentum);
  sgd.weight_decay = get_field(doc, "weight_decay", sgd.weight_decay);
  if (sgd.learning_rate < 0) bad_field(prefix + ".lr", "must be non-negative");
  if (sgd.momentum < 0 || sgd.momentum >= 1) bad_field(prefix + ".momentum", "must lie in [0, 1)");
  if (sgd.weight_decay < 0) bad_field(prefix + ".weight_decay", "must be non-negative");
  return sgd;
}

ScheduleSpec parse_schedule(const json& doc, const std::string& field) {
  if (!doc.is_object()) bad_field(field, "must be an object with unit and amount");
  const auto unit = require_field<std::string>(doc, "unit");
  ScheduleSpec spec;
  if (unit == "samples") {
    spec.unit = ScheduleSpec::Unit::kSamples;
  } else if (unit == "classes") {
    spec.unit = ScheduleSpec::Unit::kClasses;
  } else {
    bad_field(field + ".unit", "must be 'samples' or 'classes'");
  }
  spec.amount = require_field<std::int64_t>(doc, "amount");
  if (spec.amount < 0) bad_field(field + ".amount", "must be non-negative");
  return spec;
}

std::string schedule_unit_name(ScheduleSpec::Unit unit) {
  return unit == ScheduleSpec::Unit::kSamples ? "samples" : "classes";
}

json schedule_to_json(const ScheduleSpec& spec) {
  return json{{"unit", schedule_unit_name(spec.unit)}, {"amount", spec.amount}};
}

json synth_to_json(const SynthSpec& spec) {
  return json{{"seed", spec.seed},
              {"num_classes", spec.num_classes},
              {"dim", spec.dim},
              {"per_class", spec.per_class},
              {"instances_per_class", spec.instances_per_class},
              {"class_mean_spread", spec.class_mean_spread},
              {"instance_stddev", spec.instance_stddev},
              {"sample_stddev_min", spec.sample_stddev_min},
              {"sample_stddev_max", spec.sample_stddev_max}};
}

json sgd_to_json(const SgdOptions& sgd) {
  return json{{"lr", sgd.learning_rate},
              {"momentum", sgd.momentum},
              {"weight_decay", sgd.weight_decay}};
}

constexpr const char* kMethodNames[] = {"slda_plastic", "slda_fixed", "exstream",
                                        "finetune", "ncm"};

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SynthSpec parse_synth_spec(const json& doc) {
  if (!doc.is_object()) throw ConfigError("synth spec must be a JSON object");
  SynthSpec spec;
  spec.seed = get_field(doc, "seed", spec.seed);
  spec.num_classes = require_field<int>(doc, "num_classes");
  spec.dim = require_field<int>(doc, "dim");
  spec.per_class = require_field<int>(doc, "per_class");
  spec.instances_per_class = get_field(doc, "instances_per_class", 1);
  spec.class_mean_spread = get_field(doc, "class_mean_spread", spec.class_mean_spread);
  spec.instance_stddev = get_field(doc, "instance_stddev", spec.instance_stddev);
  spec.sample_stddev_min = get_field(doc, "sample_stddev_min", spec.sample_stddev_min);
  spec.sample_stddev_max = get_field(doc, "sample_stddev_max", spec.sample_stddev_max);
  if (spec.num_classes < 1) bad_field("synth.num_classes", "must be at least 1");
  if (spec.dim < 1) bad_field("synth.dim", "must be at least 1");
  if (spec.per_class < 1) bad_field("synth.per_class", "must be at least 1");
  if (spec.instances_per_class < 1) bad_field("synth.instances_per_class", "must be at least 1");
  if (spec.per_class % spec.instances_per_class != 0) {
    bad_field("synth.per_class", "must be divisible by instances_per_class");
  }
  return spec;
}

ExperimentConfig parse_experiment_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
  ExperimentConfig config;

  const bool has_banks = doc.contains("train_bank") || doc.contains("test_bank");
  const bool has_synth = doc.contains("synth");
  if (has_banks && has_synth) {
    bad_field("synth", "cannot be combined with train_bank/test_bank");
  }
  if (!has_banks && !has_synth) {
    bad_field("train_bank", "either bank paths or a synth block is required");
  }
  if (has_banks) {
    config.train_bank_path = require_field<std::string>(doc, "train_bank");
    config.test_bank_path = require_field<std::string>(doc, "test_bank");
  } else {
    const json& synth_doc = doc.at("synth");
    config.synth = parse_synth_spec(synth_doc);
    config.synth_test_per_class =
        get_field(synth_doc, "test_per_class", config.synth_test_per_class);
    config.synth_test_seed = get_field(synth_doc, "test_seed", config.synth_test_seed);
    if (config.synth_test_per_class < 1) {
      bad_field("synth.test_per_class", "must be at least 1");
    }
  }

  if (!doc.contains("methods") || !doc.at("methods").is_array() || doc.at("methods").empty()) {
    bad_field("methods", "must be a non-empty list");
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < doc.at("methods").size(); ++i) {
    const json& m = doc.at("methods").at(i);
    const std::string field = "methods[" + std::to_string(i) + "]";
    MethodConfig method;
    method.name = require_field<std::string>(m, "name");
    if (std::find(std::begin(kMethodNames), std::end(kMethodNames), method.name) ==
        std::end(kMethodNames)) {
      bad_field(field + ".name", "unknown method '" + method.name + "'");
    }
    method.label = get_field(m, "label", method.name);
    method.epsilon = get_field(m, "epsilon", method.epsilon);
    method.cov_init = get_field(m, "cov_init", method.cov_init);
    if (method.cov_init != "from_bank" && method.cov_init != "ones" &&
        method.cov_init != "zero") {
      bad_field(field + ".cov_init", "must be from_bank, ones, or zero");
    }
    method.capacity_per_class = get_field(m, "capacity_per_class", method.capacity_per_class);
    method.batch_cap = get_field(m, "batch_cap", method.batch_cap);
    if (method.capacity_per_class < 1) bad_field(field + ".capacity_per_class", "must be at least 1");
    if (method.batch_cap < 1) bad_field(field + ".batch_cap", "must be at least 1");
    if (method.epsilon <= 0 || method.epsilon > 1) bad_field(field + ".epsilon", "must lie in (0, 1]");
    if (m.contains("sgd")) {
      method.sgd = parse_sgd(m.at("sgd"), field + ".sgd", method.sgd);
    }
    if (!labels.insert(method.label).second) {
      bad_field(field + ".label", "duplicate label '" + method.label + "'");
    }
    config.methods.push_back(std::move(method));
  }

  if (doc.contains("offline")) {
    const json& off = doc.at("offline");
    config.offline.epochs = get_field(off, "epochs", config.offline.epochs);
    config.offline.batch_size = get_field(off, "batch_size", config.offline.batch_size);
    config.offline.seed = get_field(off, "seed", config.offline.seed);
    if (off.contains("sgd")) {
      config.offline.sgd = parse_sgd(off.at("sgd"), "offline.sgd", config.offline.sgd);
    }
    if (config.offline.epochs < 0) bad_field("offline.epochs", "must be non-negative");
    if (config.offline.batch_size < 1) bad_field("offline.batch_size", "must be at least 1");
  }

  const auto ordering_names =
      get_field<std::vector<std::string>>(doc, "orderings", {"iid"});
  if (ordering_names.empty()) bad_field("orderings", "must be non-empty");
  for (const std::string& name : ordering_names) {
    config.orderings.push_back(ordering_kind_from_name(name));
  }

  config.seeds = get_field<std::vector<std::uint64_t>>(doc, "seeds", {1});
  if (config.seeds.empty()) bad_field("seeds", "must be non-empty");

  if (doc.contains("base_init")) {
    config.base_init = parse_schedule(doc.at("base_init"), "base_init");
  }
  if (doc.contains("eval_every")) {
    config.eval_every = parse_schedule(doc.at("eval_every"), "eval_every");
    if (config.eval_every.amount < 1) bad_field("eval_every.amount", "must be at least 1");
  }

  config.metric = metric_kind_from_name(get_field<std::string>(doc, "metric", "top1"));
  config.scope =
      eval_scope_from_name(get_field<std::string>(doc, "eval_scope", "all_test_data"));
  config.output_dir = get_field<std::string>(doc, "output_dir", config.output_dir);
  config.max_time_seconds = get_field(doc, "max_time_seconds", config.max_time_seconds);
  config.max_mem_bytes = get_field(doc, "max_mem_bytes", config.max_mem_bytes);
  if (config.max_time_seconds <= 0) bad_field("max_time_seconds", "must be positive");
  if (config.max_mem_bytes <= 0) bad_field("max_mem_bytes", "must be positive");
  config.jobs = get_field(doc, "jobs", config.jobs);
  if (config.jobs < 1) bad_field("jobs", "must be at least 1");
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
  }
  return parse_experiment_config(doc);
}

json experiment_config_echo(const ExperimentConfig& config) {
  json doc;
  if (config.synth.has_value()) {
    json synth = synth_to_json(*config.synth);
    synth["test_per_class"] = config.synth_test_per_class;
    synth["test_seed"] = config.synth_test_seed;
    doc["synth"] = synth;
  } else {
    doc["train_bank"] = config.train_bank_path;
    doc["test_bank"] = config.test_bank_path;
  }
  json methods = json::array();
  for (const MethodConfig& m : config.methods) {
    json entry{{"name", m.name}, {"label", m.label}};
    if (m.name == "slda_plastic" || m.name == "slda_fixed") {
      entry["epsilon"] = m.epsilon;
      entry["cov_init"] = m.cov_init;
    } else if (m.name == "exstream") {
      entry["capacity_per_class"] = m.capacity_per_class;
      entry["batch_cap"] = m.batch_cap;
      entry["sgd"] = sgd_to_json(m.sgd);
    } else if (m.name == "finetune") {
      entry["sgd"] = sgd_to_json(m.sgd);
    }
    methods.push_back(entry);
  }
  doc["methods"] = methods;
  doc["offline"] = json{{"epochs", config.offline.epochs},
                        {"batch_size", config.offline.batch_size},
                        {"seed", config.offline.seed},
                        {"sgd", sgd_to_json(config.offline.sgd)}};
  json orderings = json::array();
  for (OrderingKind kind : config.orderings) orderings.push_back(ordering_kind_name(kind));
  doc["orderings"] = orderings;
  doc["seeds"] = config.seeds;
  doc["base_init"] = schedule_to_json(config.base_init);
  doc["eval_every"] = schedule_to_json(config.eval_every);
  doc["metric"] = metric_kind_name(config.metric);
  doc["eval_scope"] = eval_scope_name(config.scope);
  doc["max_time_seconds"] = config.max_time_seconds;
  doc["max_mem_bytes"] = config.max_mem_bytes;
  return doc;
}

std::unique_ptr<StreamingLearner> make_learner(const MethodConfig& method, int dim,
                                               int num_classes, std::uint64_t plan_seed) {
  if (method.name == "slda_plastic" || method.name == "slda_fixed") {
    const CovarianceMode mode = method.name == "slda_plastic" ? CovarianceMode::kPlastic
                                                              : CovarianceMode::kFixed;
    CovarianceInit init = CovarianceInit::kFromBank;
    if (method.cov_init == "ones") init = CovarianceInit::kOnesMatrix;
    if (method.cov_init == "zero") init = CovarianceInit::kZero;
    return std::make_unique<SldaLearner>(dim, num_classes, mode, init,
                                         ShrinkageConfig{method.epsilon});
  }
  if (method.name == "exstream") {
    return std::make_unique<ExStreamLearner>(dim, num_classes, method.capacity_per_class,
                                             method.sgd, method.batch_cap,
                                             plan_seed ^ fnv1a64(method.label));
  }
  if (method.name == "finetune") {
    return std::make_unique<FinetuneLearner>(dim, num_classes, method.sgd);
  }
  if (method.name == "ncm") {
    return std::make_unique<NcmLearner>(dim, num_classes);
  }
  throw ConfigError("unknown method '" + method.name + "'");
}

namespace {

struct RunResult {
  double omega = 0.0;
  LearningCurve curve;
  double learn_seconds = 0.0;
  std::uint64_t memory_bytes = 0;
};

struct SeedResults {
  std::vector<RunResult> per_method;
};

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double stderr_of(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(values.size() - 1);
  return std::sqrt(var / static_cast<double>(values.size()));
}

}  // namespace

void run_experiment(const ExperimentConfig& config) {
  FeatureBank train;
  FeatureBank test;
  if (config.synth.has_value()) {
    train = synth_bank(*config.synth);
    SynthSpec test_spec = *config.synth;
    test_spec.sample_seed = config.synth_test_seed;
    test_spec.per_class = config.synth_test_per_class;
    if (test_spec.per_class % test_spec.instances_per_class != 0) {
      test_spec.instances_per_class = 1;
    }
    test = synth_bank(test_spec);
  } else {
    train = bank_read(config.train_bank_path);
    test = bank_read(config.test_bank_path);
  }
  if (train.dim() != test.dim()) {
    throw ConfigError("train and test banks disagree on feature dimension");
  }
  const int dim = static_cast<int>(train.dim());
  const int num_classes = std::max(train.num_classes, test.num_classes);

  using clock = std::chrono::steady_clock;
  const auto offline_start = clock::now();
  const SoftmaxReadout offline = offline_softmax_fit(
      train, config.offline.epochs, config.offline.sgd, config.offline.batch_size,
      config.offline.seed);
  const double offline_seconds =
      std::chrono::duration<double>(clock::now() - offline_start).count();
  std::vector<int> offline_classes(static_cast<std::size_t>(offline.num_classes()));
  for (std::size_t i = 0; i < offline_classes.size(); ++i) {
    offline_classes[i] = static_cast<int>(i);
  }
  const LinearPredictor offline_predictor(offline.weights(), offline.bias(),
                                          offline_classes, 0);

  // One task per (ordering, seed); methods run sequentially inside a task so
  // results land in preallocated slots regardless of scheduling.
  const std::size_t num_orderings = config.orderings.size();
  const std::size_t num_seeds = config.seeds.size();
  std::vector<std::vector<SeedResults>> results(num_orderings);
  for (auto& per_seed : results) {
    per_seed.resize(num_seeds);
    for (auto& slot : per_seed) slot.per_method.resize(config.methods.size());
  }

  const auto run_task = [&](std::size_t ordering_index, std::size_t seed_index) {
    const OrderingKind kind = config.orderings[ordering_index];
    const std::uint64_t seed = config.seeds[seed_index];
    const StreamPlan plan =
        make_plan(train, kind, seed, config.base_init, config.eval_every);
    const LearningCurve offline_curve =
        predictor_curve(offline_predictor, test, train, plan, config.metric, config.scope);
    const std::vector<double> offline_alpha = offline_curve.accuracies();
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
      auto learner = make_learner(config.methods[mi], dim, num_classes, plan.seed);
      StreamEvalResult eval =
          run_streaming_eval(train, test, plan, *learner, config.metric, config.scope);
      RunResult& slot = results[ordering_index][seed_index].per_method[mi];
      slot.omega = omega_all(eval.curve.accuracies(), offline_alpha);
      slot.curve = std::move(eval.curve);
      slot.learn_seconds = eval.learn_seconds;
      slot.memory_bytes = eval.memory_bytes;
    }
  };

  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t oi = 0; oi < num_orderings; ++oi) {
    for (std::size_t si = 0; si < num_seeds; ++si) tasks.emplace_back(oi, si);
  }
  const int workers = std::min<int>(config.jobs, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    for (const auto& [oi, si] : tasks) run_task(oi, si);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
            run_task(tasks[i].first, tasks[i].second);
          }
        } catch (...) {
          failures[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& failure : failures) {
      if (failure) std::rethrow_exception(failure);
    }
  }

  const std::filesystem::path out_dir(
      config.output_dir.empty() ? std::string("out") : config.output_dir);
  std::filesystem::create_directories(out_dir);

  for (std::size_t oi = 0; oi < num_orderings; ++oi) {
    const std::string kind_name = ordering_kind_name(config.orderings[oi]);
    std::ofstream csv(out_dir / ("curve_" + kind_name + ".csv"), std::ios::trunc);
    if (!csv) throw IoError("cannot write curve CSV for ordering " + kind_name);
    csv << "seed,position";
    for (const MethodConfig& m : config.methods) csv << "," << m.label;
    csv << "\n";
    for (std::size_t si = 0; si < num_seeds; ++si) {
      const SeedResults& seed_results = results[oi][si];
      const auto& positions = seed_results.per_method.front().curve.points;
      for (std::size_t pi = 0; pi < positions.size(); ++pi) {
        csv << config.seeds[si] << "," << positions[pi].position;
        for (const RunResult& run : seed_results.per_method) {
          csv << "," << format_double(run.curve.points[pi].accuracy);
        }
        csv << "\n";
      }
    }
    if (!csv) throw IoError("failed to write curve CSV for ordering " + kind_name);
  }

  json report;
  report["config"] = experiment_config_echo(config);
  report["seeds"] = config.seeds;
  json report_results;
  json timings;
  timings["offline_train_seconds"] = offline_seconds;
  json timing_results;
  for (std::size_t oi = 0; oi < num_orderings; ++oi) {
    const std::string kind_name = ordering_kind_name(config.orderings[oi]);
    json per_method_report;
    json per_method_timing;
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
      std::vector<double> omegas;
      std::vector<double> seconds;
      std::uint64_t memory = 0;
      for (std::size_t si = 0; si < num_seeds; ++si) {
        const RunResult& run = results[oi][si].per_method[mi];
        omegas.push_back(run.omega);
        seconds.push_back(run.learn_seconds);
        memory = std::max(memory, run.memory_bytes);
      }
      const EfficiencyScores eff = efficiency_scores(
          mean_of(seconds), config.max_time_seconds,
          static_cast<double>(memory), config.max_mem_bytes);
      per_method_report[config.methods[mi].label] =
          json{{"omega_per_seed", omegas},
               {"omega_mean", mean_of(omegas)},
               {"omega_stderr", stderr_of(omegas)},
               {"memory_bytes", memory},
               {"me", eff.me}};
      per_method_timing[config.methods[mi].label] =
          json{{"learn_seconds_per_seed", seconds},
               {"learn_seconds_mean", mean_of(seconds)},
               {"ce", eff.ce}};
    }
    report_results[kind_name] = per_method_report;
    timing_results[kind_name] = per_method_timing;
  }
  report["results"] = report_results;
  timings["results"] = timing_results;

  std::ofstream report_out(out_dir / "report.json", std::ios::trunc);
  if (!report_out) throw IoError("cannot write report.json");
  report_out << report.dump(2) << "\n";
  std::ofstream timings_out(out_dir / "timings.json", std::ios::trunc);
  if (!timings_out) throw IoError("cannot write timings.json");
  timings_out << timings.dump(2) << "\n";
}

}  // namespace streamlda
