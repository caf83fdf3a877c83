#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>

#include "prt/io.hpp"

using namespace prt;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("prt_unit_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    write_text(d / "tiny.json",
               R"({"train": {"epochs": 2, "batches_per_epoch": 2}, "scenario": {"frames": 60}, "benchmark": {"videos": 1}})");
    return d;
  }();
  return dir;
}

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args, const std::string& env = "") {
  const fs::path log = workdir() / "stdout.txt";
  const std::string cmd = "cd " + workdir().string() + " && " + env + " " + PRT_CLI_PATH + " " + args + " > " +
                          log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(log)};
}

}  // namespace

TEST(Cli, HelpPerSubcommand) {
  for (const char* sub : {"generate", "train", "embed", "track", "merge", "cluster", "eval-reid", "eval-track",
                          "pipeline", "report"}) {
    const auto r = cli(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("Usage"), std::string::npos) << sub;
  }
}

TEST(Cli, UsageErrorsExitOneWithHelp) {
  auto r = cli("eval-track --gt only.txt");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("--pred"), std::string::npos);
  EXPECT_EQ(cli("no-such-command").code, 1);
  EXPECT_EQ(cli("merge --tracks a --tracklets b --distance sideways").code, 1);
}

TEST(Cli, DataErrorsExitTwo) {
  EXPECT_EQ(cli("eval-track --gt missing.txt --pred missing.txt").code, 2);
  write_text(workdir() / "broken.txt", "1,1,0,0,10,10,1,1,1\nnot,a,row\n");
  const auto r = cli("eval-track --gt broken.txt --pred broken.txt");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("line 2"), std::string::npos);
  write_text(workdir() / "bad.json", R"({"tracker": {"alfa": 1}})");
  EXPECT_EQ(cli("generate --config bad.json --out nowhere").code, 2);
}

TEST(Cli, EvalTrackOfGroundTruthAgainstItself) {
  ASSERT_EQ(cli("generate --config tiny.json --out bundle").code, 0);
  const auto r = cli("eval-track --gt bundle/gt.txt --pred bundle/gt.txt");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("100.00  100.00  100.00  100.00  100.00      0"), std::string::npos) << r.out;
}

TEST(Cli, SeedFlagAndEnvironmentAgree) {
  ASSERT_EQ(cli("generate --config tiny.json --seed 5 --out by_flag").code, 0);
  ASSERT_EQ(cli("generate --config tiny.json --out by_env", "PRT_SEED=5").code, 0);
  ASSERT_EQ(cli("generate --config tiny.json --out by_default").code, 0);
  EXPECT_EQ(read_text(workdir() / "by_flag/det.txt"), read_text(workdir() / "by_env/det.txt"));
  EXPECT_NE(read_text(workdir() / "by_flag/det.txt"), read_text(workdir() / "by_default/det.txt"));
}

TEST(Cli, StepByStepChain) {
  ASSERT_EQ(cli("generate --config tiny.json --out chain").code, 0);
  ASSERT_EQ(cli("train --config tiny.json --out chain.ckpt").code, 0);
  ASSERT_EQ(cli("embed --scenario chain --model chain.ckpt --out chain_feat.txt").code, 0);
  ASSERT_EQ(cli("track --config tiny.json --det chain/det.txt --features chain_feat.txt --out chain_t.txt "
                "--tracklets chain_tl.txt")
                .code,
            0);
  ASSERT_EQ(cli("merge --config tiny.json --tracks chain_t.txt --tracklets chain_tl.txt --out chain_m.txt "
                "--out-tracklets chain_ml.txt")
                .code,
            0);
  ASSERT_EQ(cli("cluster --config tiny.json --tracklets chain_ml.txt --out chain_cl.txt").code, 0);
  const auto eval = cli("eval-track --gt chain/gt.txt --pred chain_m.txt --out chain_eval.json");
  EXPECT_EQ(eval.code, 0);
  EXPECT_NE(eval.out.find("HOTA"), std::string::npos);
  EXPECT_TRUE(fs::exists(workdir() / "chain_eval.json"));
  const auto reid = cli("eval-reid --config tiny.json --model chain.ckpt");
  EXPECT_EQ(reid.code, 0);
  EXPECT_NE(reid.out.find("reid"), std::string::npos);
}

TEST(Cli, PipelineIsDeterministicAndComparable) {
  ASSERT_EQ(cli("pipeline --config tiny.json --seed 7 --out run_a").code, 0);
  ASSERT_EQ(cli("pipeline --config tiny.json --seed 7 --out run_b").code, 0);
  for (const char* f : {"report.txt", "report.json", "tracks.txt", "tracks_online.txt", "model.ckpt", "config.json"}) {
    EXPECT_EQ(read_text(workdir() / "run_a" / f), read_text(workdir() / "run_b" / f)) << f;
  }
  const auto cmp = cli("report --compare run_a run_b");
  EXPECT_EQ(cmp.code, 0);
  for (const char* col : {"HOTA", "DetA", "AssA", "MOTA", "IDF1", "IDs"}) {
    EXPECT_NE(cmp.out.find(col), std::string::npos) << col;
  }
  EXPECT_NE(cmp.out.find("delta"), std::string::npos);
  EXPECT_EQ(cli("report --run run_a").code, 0);
}
