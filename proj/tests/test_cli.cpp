#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "helpers.hpp"

// End-to-end checks against the built binary: subcommand flows, exit codes,
// and the byte-identical-rerun contract.
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const fs::path& dir, const std::string& args) {
  const fs::path log = dir / "cli_output.log";
  const std::string cmd = "cd " + dir.string() + " && " + CLI_BIN_PATH + " " + args +
                          " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(status);
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli: full pipeline runs and reruns byte-identically") {
  auto dir = testing_support::scratch_dir("cli_pipeline");

  auto synth = run_cli(dir, "synth --out corpus --falls 12 --nonfalls 12 --seed 3");
  REQUIRE(synth.exit_code == 0);
  CHECK(fs::exists(dir / "corpus/manifest.csv"));
  CHECK(fs::exists(dir / "corpus/activity_map.txt"));
  CHECK(fs::exists(dir / "corpus/run.json"));

  auto extract = run_cli(dir, "extract --manifest corpus/manifest.csv --out features.csv");
  REQUIRE(extract.exit_code == 0);
  CHECK(slurp(dir / "features.csv").rfind("sequence,frame,theta1", 0) == 0);
  CHECK(fs::exists(dir / "features.csv.run.json"));

  auto stats = run_cli(dir, "stats --manifest corpus/manifest.csv --out stats.csv "
                            "--lead-ms 500 --k 20 --seed 2");
  REQUIRE(stats.exit_code == 0);

  auto train = run_cli(dir, "train --manifest corpus/manifest.csv --out run "
                            "--lead-ms 300 --k 15 --seed 5 --epochs 60");
  REQUIRE(train.exit_code == 0);
  CHECK(fs::exists(dir / "run/model.bin"));
  CHECK(fs::exists(dir / "run/metrics.txt"));
  CHECK(fs::exists(dir / "run/loss_history.csv"));
  CHECK(fs::exists(dir / "run/run.json"));

  auto eval = run_cli(dir, "eval --model run/model.bin --manifest corpus/manifest.csv "
                           "--out eval.txt --lead-ms 300 --seed 9");
  REQUIRE(eval.exit_code == 0);
  CHECK(slurp(dir / "eval.txt").rfind("# prefall-metrics", 0) == 0);

  auto infer = run_cli(dir, "infer --model run/model.bin "
                            "--input corpus/keypoints/f000.csv --out alerts.csv");
  REQUIRE(infer.exit_code == 0);
  CHECK(slurp(dir / "alerts.csv").rfind("frame,label,logprob_fall", 0) == 0);

  // identical resolved config -> byte-identical primary outputs
  auto rerun_dir = testing_support::scratch_dir("cli_pipeline_rerun");
  REQUIRE(run_cli(rerun_dir, "synth --out corpus --falls 12 --nonfalls 12 --seed 3")
              .exit_code == 0);
  REQUIRE(run_cli(rerun_dir, "train --manifest corpus/manifest.csv --out run "
                             "--lead-ms 300 --k 15 --seed 5 --epochs 60")
              .exit_code == 0);
  CHECK(slurp(dir / "corpus/manifest.csv") == slurp(rerun_dir / "corpus/manifest.csv"));
  CHECK(slurp(dir / "corpus/keypoints/f000.csv") ==
        slurp(rerun_dir / "corpus/keypoints/f000.csv"));
  CHECK(slurp(dir / "run/model.bin") == slurp(rerun_dir / "run/model.bin"));
  CHECK(slurp(dir / "run/metrics.txt") == slurp(rerun_dir / "run/metrics.txt"));
  CHECK(slurp(dir / "run/loss_history.csv") == slurp(rerun_dir / "run/loss_history.csv"));
  CHECK(slurp(dir / "run/run.json") == slurp(rerun_dir / "run/run.json"));
}

TEST_CASE("cli: dataset reports the split and writes stable files") {
  auto dir = testing_support::scratch_dir("cli_dataset");
  REQUIRE(run_cli(dir, "synth --out corpus --falls 5 --nonfalls 5 --seed 1").exit_code == 0);
  auto ds = run_cli(dir, "dataset --manifest corpus/manifest.csv --out ds "
                         "--lead-ms 300 --k 15 --ratio 0.8 --seed 4");
  REQUIRE(ds.exit_code == 0);
  CHECK(ds.output.find("split 8/2") != std::string::npos);

  auto again = testing_support::scratch_dir("cli_dataset2");
  REQUIRE(run_cli(again, "synth --out corpus --falls 5 --nonfalls 5 --seed 1").exit_code == 0);
  REQUIRE(run_cli(again, "dataset --manifest corpus/manifest.csv --out ds "
                         "--lead-ms 300 --k 15 --ratio 0.8 --seed 4")
              .exit_code == 0);
  CHECK(slurp(dir / "ds/train.csv") == slurp(again / "ds/train.csv"));
  CHECK(slurp(dir / "ds/test.csv") == slurp(again / "ds/test.csv"));
}

TEST_CASE("cli: sweep emits the requested table shape") {
  auto dir = testing_support::scratch_dir("cli_sweep");
  REQUIRE(run_cli(dir, "synth --out corpus --falls 8 --nonfalls 8 --seed 2").exit_code == 0);
  auto sweep = run_cli(dir, "sweep --manifest corpus/manifest.csv --out sweep.csv "
                            "--leads 100..800 --k 15 --seeds 1 --epochs 10 --jobs 2");
  REQUIRE(sweep.exit_code == 0);
  auto lines = [&] {
    std::istringstream in(slurp(dir / "sweep.csv"));
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) out.push_back(line);
    return out;
  }();
  REQUIRE(lines.size() == 9);  // header + 8 leads x 1 seed
  CHECK(lines[0] == "lead_ms,K,seed,fall_p,fall_r,fall_f1,macro_f1,weighted_f1");
  CHECK(lines[1].rfind("100,15,1,", 0) == 0);
  CHECK(lines[8].rfind("800,15,1,", 0) == 0);
  CHECK(sweep.output.find("single-seed") != std::string::npos);

  auto wsweep = run_cli(dir, "sweep --manifest corpus/manifest.csv --out wsweep.csv "
                             "--ks 5 --ks 15 --lead-ms 300 --seeds 2 --epochs 10");
  REQUIRE(wsweep.exit_code == 0);
  auto wlines = slurp(dir / "wsweep.csv");
  CHECK(wlines.find("300,5,1,") != std::string::npos);
  CHECK(wlines.find("300,15,2,") != std::string::npos);

  // --mode window with no --ks uses the standard grid at the fixed lead
  auto dsweep = run_cli(dir, "sweep --manifest corpus/manifest.csv --out dsweep.csv "
                             "--mode window --seeds 1 --epochs 5");
  REQUIRE(dsweep.exit_code == 0);
  auto dlines = slurp(dir / "dsweep.csv");
  for (const char* key : {"500,5,1,", "500,10,1,", "500,15,1,", "500,20,1,"})
    CHECK(dlines.find(key) != std::string::npos);

  // both grids at once is a configuration error
  CHECK(run_cli(dir, "sweep --manifest corpus/manifest.csv --out x.csv "
                     "--leads 100 --ks 5")
            .exit_code == 78);
}

TEST_CASE("cli: error categories map to distinct exit codes") {
  auto dir = testing_support::scratch_dir("cli_errors");
  CHECK(run_cli(dir, "train --no-such-flag").exit_code == 64);                     // usage
  CHECK(run_cli(dir, "extract --manifest nope.csv --out x.csv").exit_code == 66);  // no input

  // model with a bumped format version
  REQUIRE(run_cli(dir, "synth --out corpus --falls 2 --nonfalls 2 --seed 1").exit_code == 0);
  REQUIRE(run_cli(dir, "train --manifest corpus/manifest.csv --out run --lead-ms 300 "
                       "--epochs 1")
              .exit_code == 0);
  {
    std::ifstream in(dir / "run/model.bin", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    bytes[8] = 9;  // version u32 after the 8-byte magic
    std::ofstream out(dir / "run/newer.bin", std::ios::binary);
    out << bytes;
  }
  CHECK(run_cli(dir, "info --model run/newer.bin").exit_code == 76);  // version
  CHECK(run_cli(dir, "sweep --manifest corpus/manifest.csv --out s.csv --seeds 0")
            .exit_code == 78);

  // malformed data -> 65
  {
    std::ofstream out(dir / "bad.csv");
    out << "frame,joint,x,y,conf\n0,0,oops,1,\n";
  }
  {
    std::ofstream out(dir / "bad_manifest.csv");
    out << "file,subject,activity,trial,label,fps,impact_frame\nbad.csv,s,6,1,nonfall,18,\n";
  }
  CHECK(run_cli(dir, "extract --manifest bad_manifest.csv --out x.csv").exit_code == 65);
}

TEST_CASE("cli: info reports the footprint and published reference figures") {
  auto dir = testing_support::scratch_dir("cli_info");
  auto info = run_cli(dir, "info --hidden 5 --k 15");
  REQUIRE(info.exit_code == 0);
  CHECK(info.output.find("param_count: 252") != std::string::npos);
  CHECK(info.output.find("bytes_f32: 1008") != std::string::npos);
  CHECK(info.output.find("published_reported_bytes: 3136") != std::string::npos);
  CHECK(info.output.find("smallest_baseline_bytes: 59557") != std::string::npos);
}

TEST_CASE("cli: config file and environment variables resolve flags") {
  auto dir = testing_support::scratch_dir("cli_config");
  REQUIRE(run_cli(dir, "synth --out corpus --falls 3 --nonfalls 3 --seed 6").exit_code == 0);

  {
    std::ofstream out(dir / "prefall.ini");
    out << "[extract]\nmanifest=corpus/manifest.csv\nout=from_config.csv\n";
  }
  auto from_config = run_cli(dir, "extract --config prefall.ini");
  CHECK(from_config.exit_code == 0);
  CHECK(fs::exists(dir / "from_config.csv"));

  const std::string env_cmd =
      "cd " + dir.string() + " && PREFALL_MANIFEST=corpus/manifest.csv " + CLI_BIN_PATH +
      " extract --out from_env.csv > env.log 2>&1";
  REQUIRE(WEXITSTATUS(std::system(env_cmd.c_str())) == 0);
  CHECK(fs::exists(dir / "from_env.csv"));
  CHECK(slurp(dir / "from_config.csv") == slurp(dir / "from_env.csv"));
}
