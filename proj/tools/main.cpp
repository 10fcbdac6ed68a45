// streambench: experiment runner and dataset plumbing for the streaming
// classifiers in libstreamlda.
//
// Subcommands:
//   run       run a full experiment from a JSON config
//   validate  check a bank file or plan manifest, exit nonzero on failure
//   synth     generate a synthetic feature bank from a JSON spec
//   convert   ingest a CSV into the binary bank format
//   inspect   print a summary of a bank or plan file

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "streamlda/errors.hpp"
#include "streamlda/experiment.hpp"
#include "streamlda/feature_bank.hpp"
#include "streamlda/orderings.hpp"

namespace {

bool is_bank_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw streamlda::IoError("cannot open file: " + path);
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  return in.gcount() == sizeof(magic) && std::string(magic, 8) == "SLDABANK";
}

void print_bank_summary(const streamlda::FeatureBank& bank) {
  std::cout << "samples:   " << bank.n() << "\n"
            << "dim:       " << bank.dim() << "\n"
            << "classes:   " << bank.num_classes << "\n"
            << "instances: " << (bank.has_instance_metadata() ? "yes" : "no") << "\n"
            << "names:     " << (bank.class_names.empty() ? "no" : "yes") << "\n";
}

void print_plan_summary(const streamlda::StreamPlan& plan) {
  std::cout << "kind:        " << streamlda::ordering_kind_name(plan.kind) << "\n"
            << "seed:        " << plan.seed << "\n"
            << "samples:     " << plan.order.size() << "\n"
            << "base_init:   " << plan.base_init_len << "\n"
            << "eval_points:";
  for (std::int64_t p : plan.eval_points) std::cout << " " << p;
  std::cout << "\n";
}

int cmd_run(const std::string& config_path, const std::string& out_flag, int jobs_flag) {
  streamlda::ExperimentConfig config = streamlda::load_experiment_config(config_path);
  if (!out_flag.empty()) {
    config.output_dir = out_flag;
  } else if (config.output_dir.empty()) {
    if (const char* env = std::getenv("STREAMBENCH_OUT")) config.output_dir = env;
  }
  if (jobs_flag > 0) config.jobs = jobs_flag;
  streamlda::run_experiment(config);
  std::cout << "wrote "
            << (config.output_dir.empty() ? std::string("out") : config.output_dir)
            << "/report.json\n";
  return 0;
}

int cmd_validate(const std::string& path, const std::string& bank_path) {
  if (is_bank_file(path)) {
    const streamlda::FeatureBank bank = streamlda::bank_read(path);
    bank.validate();
    std::cout << "OK bank n=" << bank.n() << " d=" << bank.dim()
              << " K=" << bank.num_classes << "\n";
    return 0;
  }
  const streamlda::StreamPlan plan = streamlda::read_plan(path);
  const streamlda::PlanReport report =
      bank_path.empty()
          ? streamlda::validate_plan_structure(plan)
          : streamlda::validate_plan(streamlda::bank_read(bank_path), plan);
  if (!report.pass) {
    std::cerr << "FAIL: " << report.first_violation << "\n";
    return 1;
  }
  std::cout << "OK plan kind=" << streamlda::ordering_kind_name(plan.kind)
            << " n=" << plan.order.size()
            << (bank_path.empty() ? " (structure only; pass --bank for full checks)" : "")
            << "\n";
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_path) {
  std::ifstream in(spec_path);
  if (!in) throw streamlda::IoError("cannot open spec file: " + spec_path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw streamlda::ConfigError("spec file is not valid JSON: " + std::string(e.what()));
  }
  const streamlda::FeatureBank bank = streamlda::synth_bank(streamlda::parse_synth_spec(doc));
  streamlda::bank_write(bank, out_path);
  std::cout << "wrote " << out_path << " (n=" << bank.n() << " d=" << bank.dim()
            << " K=" << bank.num_classes << ")\n";
  return 0;
}

int cmd_convert(const std::string& csv_path, const std::string& out_path,
                const streamlda::CsvSchema& schema) {
  const streamlda::FeatureBank bank = streamlda::bank_from_csv(csv_path, schema);
  bank.validate();
  streamlda::bank_write(bank, out_path);
  std::cout << "wrote " << out_path << " (n=" << bank.n() << " d=" << bank.dim()
            << " K=" << bank.num_classes << ")\n";
  return 0;
}

int cmd_inspect(const std::string& path) {
  if (is_bank_file(path)) {
    print_bank_summary(streamlda::bank_read(path));
  } else {
    print_plan_summary(streamlda::read_plan(path));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming classification benchmark harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = 0;
  CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides config and env)");
  run->add_option("--jobs", jobs, "parallel workers (overrides config)");

  std::string validate_path;
  std::string validate_bank;
  CLI::App* validate = app.add_subcommand("validate", "check a bank file or plan manifest");
  validate->add_option("path", validate_path, "bank or plan file")->required();
  validate->add_option("--bank", validate_bank, "bank to check a plan against");

  std::string synth_spec;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic bank");
  synth->add_option("--spec", synth_spec, "JSON synth spec")->required();
  synth->add_option("--out", synth_out, "output bank path")->required();

  std::string csv_path;
  std::string convert_out;
  streamlda::CsvSchema schema;
  CLI::App* convert = app.add_subcommand("convert", "convert a CSV to a bank");
  convert->add_option("--csv", csv_path, "input CSV with header row")->required();
  convert->add_option("--out", convert_out, "output bank path")->required();
  convert->add_option("--label-column", schema.label_column, "label column name");
  convert->add_option("--instance-column", schema.instance_column, "instance id column");
  convert->add_option("--frame-column", schema.frame_column, "frame index column");

  std::string inspect_path;
  CLI::App* inspect = app.add_subcommand("inspect", "summarize a bank or plan file");
  inspect->add_option("path", inspect_path, "bank or plan file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, jobs);
    if (validate->parsed()) return cmd_validate(validate_path, validate_bank);
    if (synth->parsed()) return cmd_synth(synth_spec, synth_out);
    if (convert->parsed()) return cmd_convert(csv_path, convert_out, schema);
    if (inspect->parsed()) return cmd_inspect(inspect_path);
  } catch (const streamlda::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
