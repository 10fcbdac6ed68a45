#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "streamlda/experiment.hpp"
#include "streamlda/feature_bank.hpp"
#include "streamlda/orderings.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "streamlda_cli_test";
  fs::create_directories(dir);
  return dir;
}

RunResult run_cli(const std::string& args) {
  const fs::path out_path = work_dir() / "stdout.txt";
  const fs::path err_path = work_dir() / "stderr.txt";
  const std::string command = std::string(STREAMBENCH_BIN) + " " + args + " > " +
                              out_path.string() + " 2> " + err_path.string();
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

streamlda::SynthSpec small_spec() {
  streamlda::SynthSpec spec;
  spec.seed = 4;
  spec.num_classes = 2;
  spec.dim = 3;
  spec.per_class = 12;
  spec.class_mean_spread = 5.0;
  return spec;
}

std::string small_spec_json() {
  return R"({"seed": 4, "num_classes": 2, "dim": 3, "per_class": 12,
             "class_mean_spread": 5.0})";
}

}  // namespace

TEST_CASE("synth writes the same bank the library builds") {
  const fs::path spec_path = work_dir() / "spec.json";
  const fs::path bank_path = work_dir() / "synth.bin";
  write_text(spec_path, small_spec_json());

  const RunResult result =
      run_cli("synth --spec " + spec_path.string() + " --out " + bank_path.string());
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("wrote") != std::string::npos);
  CHECK(streamlda::bank_read(bank_path.string()) == streamlda::synth_bank(small_spec()));
}

TEST_CASE("validate recognizes a good bank and a corrupt one") {
  const fs::path bank_path = work_dir() / "good.bin";
  streamlda::bank_write(streamlda::synth_bank(small_spec()), bank_path.string());

  const RunResult good = run_cli("validate " + bank_path.string());
  CHECK(good.exit_code == 0);
  CHECK(good.out.find("OK bank n=24 d=3 K=2") != std::string::npos);

  // right magic, bogus version byte: sniffed as a bank, rejected on read
  const fs::path corrupt_path = work_dir() / "corrupt.bin";
  write_text(corrupt_path, std::string("SLDABANK") + static_cast<char>(99) + "junk");
  const RunResult corrupt = run_cli("validate " + corrupt_path.string());
  CHECK(corrupt.exit_code == 1);
  CHECK(corrupt.err.find("error:") != std::string::npos);
  CHECK(corrupt.err.find("version 99") != std::string::npos);
}

TEST_CASE("validate checks plans structurally and fully against a bank") {
  const fs::path bank_path = work_dir() / "planbank.bin";
  const streamlda::FeatureBank bank = streamlda::synth_bank(small_spec());
  streamlda::bank_write(bank, bank_path.string());

  const streamlda::StreamPlan plan = streamlda::make_plan(
      bank, streamlda::OrderingKind::kIid, 1, streamlda::ScheduleSpec::samples(0),
      streamlda::ScheduleSpec::samples(12));
  const fs::path plan_path = work_dir() / "plan.txt";
  streamlda::write_plan(plan, plan_path.string());

  const RunResult structural = run_cli("validate " + plan_path.string());
  CHECK(structural.exit_code == 0);
  CHECK(structural.out.find("structure only") != std::string::npos);

  const RunResult full =
      run_cli("validate " + plan_path.string() + " --bank " + bank_path.string());
  CHECK(full.exit_code == 0);
  CHECK(full.out.find("OK plan") != std::string::npos);

  streamlda::StreamPlan broken = plan;
  broken.order[0] = broken.order[1];
  const fs::path broken_path = work_dir() / "broken_plan.txt";
  streamlda::write_plan(broken, broken_path.string());
  const RunResult fail =
      run_cli("validate " + broken_path.string() + " --bank " + bank_path.string());
  CHECK(fail.exit_code == 1);
  CHECK(fail.err.find("not a permutation") != std::string::npos);
}

TEST_CASE("convert ingests a CSV with custom column names") {
  const fs::path csv_path = work_dir() / "features.csv";
  write_text(csv_path,
             "x0,x1,video,t,category\n"
             "0.5,1.0,0,0,cup\n"
             "0.4,0.9,0,1,cup\n"
             "2.0,2.0,1,0,plug\n");
  const fs::path out_path = work_dir() / "converted.bin";
  const RunResult result = run_cli(
      "convert --csv " + csv_path.string() + " --out " + out_path.string() +
      " --label-column category --instance-column video --frame-column t");
  CHECK(result.exit_code == 0);

  streamlda::CsvSchema schema;
  schema.label_column = "category";
  schema.instance_column = "video";
  schema.frame_column = "t";
  CHECK(streamlda::bank_read(out_path.string()) ==
        streamlda::bank_from_csv(csv_path.string(), schema));
}

TEST_CASE("inspect summarizes banks and plans") {
  const fs::path bank_path = work_dir() / "inspect.bin";
  const streamlda::FeatureBank bank = streamlda::synth_bank(small_spec());
  streamlda::bank_write(bank, bank_path.string());
  const RunResult bank_info = run_cli("inspect " + bank_path.string());
  CHECK(bank_info.exit_code == 0);
  CHECK(bank_info.out.find("samples:   24") != std::string::npos);

  const streamlda::StreamPlan plan = streamlda::make_plan(
      bank, streamlda::OrderingKind::kClassIid, 2, streamlda::ScheduleSpec::samples(0),
      streamlda::ScheduleSpec::samples(8));
  const fs::path plan_path = work_dir() / "inspect_plan.txt";
  streamlda::write_plan(plan, plan_path.string());
  const RunResult plan_info = run_cli("inspect " + plan_path.string());
  CHECK(plan_info.exit_code == 0);
  CHECK(plan_info.out.find("class_iid") != std::string::npos);
}

TEST_CASE("run executes a config end to end") {
  const fs::path config_path = work_dir() / "config.json";
  const fs::path out_dir = work_dir() / "run_out";
  fs::remove_all(out_dir);
  write_text(config_path, R"({
    "synth": {"seed": 1, "num_classes": 2, "dim": 3, "per_class": 12,
              "class_mean_spread": 6.0, "test_per_class": 8, "test_seed": 77},
    "methods": [{"name": "slda_plastic"}, {"name": "finetune"}],
    "seeds": [1, 2],
    "eval_every": {"unit": "samples", "amount": 12},
    "offline": {"epochs": 4, "batch_size": 8}
  })");

  const RunResult result = run_cli("run --config " + config_path.string() + " --out " +
                                   out_dir.string() + " --jobs 2");
  CHECK(result.exit_code == 0);
  CHECK(fs::exists(out_dir / "report.json"));
  CHECK(fs::exists(out_dir / "timings.json"));
  CHECK(fs::exists(out_dir / "curve_iid.csv"));

  const nlohmann::json report = nlohmann::json::parse(slurp(out_dir / "report.json"));
  CHECK(report["results"]["iid"].contains("slda_plastic"));
  CHECK(report["results"]["iid"].contains("finetune"));
}

TEST_CASE("failures exit nonzero with a diagnostic on stderr") {
  const RunResult missing = run_cli("run --config /nonexistent/config.json");
  CHECK(missing.exit_code == 1);
  CHECK(missing.err.find("error:") != std::string::npos);

  const fs::path bad_config = work_dir() / "bad_config.json";
  write_text(bad_config, R"({"synth": {"num_classes": 2, "dim": 3, "per_class": 12}})");
  const RunResult unnamed = run_cli("run --config " + bad_config.string());
  CHECK(unnamed.exit_code == 1);
  CHECK(unnamed.err.find("methods") != std::string::npos);

  const fs::path fake_bank = work_dir() / "fake_bank.bin";
  write_text(fake_bank, "XXXXXXXX-definitely-not-a-bank");
  const fs::path magic_config = work_dir() / "magic_config.json";
  write_text(magic_config, std::string("{\"train_bank\": \"") + fake_bank.string() +
                               "\", \"test_bank\": \"" + fake_bank.string() +
                               "\", \"methods\": [{\"name\": \"ncm\"}]}");
  const RunResult bad_magic = run_cli("run --config " + magic_config.string());
  CHECK(bad_magic.exit_code == 1);
  CHECK(bad_magic.err.find("magic") != std::string::npos);

  const RunResult unknown = run_cli("frobnicate");
  CHECK(unknown.exit_code != 0);

  const RunResult bare = run_cli("");
  CHECK(bare.exit_code != 0);
}
