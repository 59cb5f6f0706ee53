// Exit-code and byte-determinism checks driven through the installed CLI
// binary (path injected by the build).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const std::string kCli = STACKRL_CLI_PATH;

struct RunOut {
  int code = -1;
  std::string output;
};

RunOut run(const std::string& args) {
  const std::string out_path = "/tmp/stackrl_cli_out.txt";
  const std::string cmd = kCli + " " + args + " > " + out_path + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunOut result;
  result.code = WEXITSTATUS(raw);
  std::ifstream in(out_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  result.output = ss.str();
  return result;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("help and usage exit codes") {
  CHECK(run("--help").code == 0);
  CHECK(run("gen-data --help").code == 0);
  CHECK(run("").code == 2);                        // missing subcommand
  CHECK(run("frobnicate").code == 2);              // unknown subcommand
  CHECK(run("gen-data --n 0 --out /tmp/x.csv").code == 2);
  CHECK(run("train").code == 2);                   // missing required --data
  CHECK(run("train --data /tmp/stackrl_nope.csv").code == 3);
  CHECK(run("regret-sweep --env sim2d").code == 2);
}

TEST_CASE("gen-data is byte deterministic and train/eval/diagnose complete") {
  REQUIRE(std::system("mkdir -p /tmp/stackrl_cli") == 0);
  const std::string base = "/tmp/stackrl_cli";

  const std::string gen_flags =
      "gen-data --env sim2d --alpha 1.0 --n 200 --seed 7 --out ";
  CHECK(run(gen_flags + base + "/a.csv").code == 0);
  CHECK(run(gen_flags + base + "/b.csv").code == 0);
  CHECK(slurp(base + "/a.csv") == slurp(base + "/b.csv"));

  const RunOut gen = run(gen_flags + base + "/a.csv");
  CHECK(gen.output.find("coverage=medium") != std::string::npos);
  CHECK(gen.output.find("seed=7") != std::string::npos);

  const RunOut train = run("train --data " + base + "/a.csv --out-dir " + base
                           + " --iterations 60 --minibatch 16 --eval-every 20 --seed 3");
  CHECK(train.code == 0);
  CHECK(slurp(base + "/trace.csv").find("config_hash=") != std::string::npos);

  const RunOut lam0 = run("train --data " + base + "/a.csv --out-dir " + base
                          + " --iterations 20 --minibatch 16 --lambda 0 --seed 3");
  CHECK(lam0.code == 0);
  CHECK(lam0.output.find("pessimism") != std::string::npos);

  CHECK(run("eval --policy " + base + "/policy.txt --out-dir " + base
            + " --episodes 4 --eval-seeds 5 --seed 2")
            .code
        == 0);
  CHECK(run("diagnose --data " + base + "/a.csv --policy " + base + "/policy.txt --out-dir "
            + base + " --rollouts 50 --seed 2")
            .code
        == 0);

  // config file with flag override
  {
    std::ofstream cfg(base + "/run.cfg");
    cfg << "n=150\nseed=9\n";
  }
  CHECK(run("gen-data --config " + base + "/run.cfg --env sim2d --n 120 --out " + base
            + "/c.csv")
            .code
        == 0);
  const std::string header = slurp(base + "/c.csv").substr(0, 200);
  CHECK(header.find("n=120") != std::string::npos);  // flag beats config file
  CHECK(header.find("seed=9") != std::string::npos); // config file fills the rest
}
