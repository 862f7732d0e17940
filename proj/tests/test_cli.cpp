#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "json.hpp"

#ifndef TRIPOD_CLI_PATH
#error "TRIPOD_CLI_PATH must point at the tripod executable"
#endif

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("tripod_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(TRIPOD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("oracle prop32 passes") { CHECK(run("oracle --suite prop32") == 0); }

  TEST_CASE("zero updates writes the initial checkpoint only") {
    const fs::path dir = scratch("zero");
    write(dir / "c.json", R"({"max_updates": 0, "hidden_width": 16, "hidden_layers": 1, "eval_samples": 256})");
    CHECK(run("train --config " + (dir / "c.json").string() + " --out " + (dir / "run").string()) == 4);
    std::size_t checkpoints = 0;
    for (const auto& e : fs::directory_iterator(dir / "run")) checkpoints += e.path().extension() == ".trpd";
    CHECK(checkpoints == 1);
    CHECK(fs::exists(dir / "run" / "ckpt_00000000.trpd"));
  }

  TEST_CASE("oracle checkpoint evaluates to InfoM 1") {
    const fs::path dir = scratch("oracle");
    REQUIRE(run("make-oracle --dataset blobs --out " + (dir / "o.trpd").string()) == 0);
    REQUIRE(run("eval --checkpoint " + (dir / "o.trpd").string() + " --out " + (dir / "ev").string()) == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "ev" / "report.json"));
    CHECK(doc["report"]["info_m"].get<double>() == 1.0);
    CHECK(doc.contains("config_hash"));
    CHECK(doc.contains("version"));
    CHECK(fs::file_size(dir / "ev" / "heatmap.ppm") > 0);
  }

  TEST_CASE("reruns are byte-identical and carry provenance") {
    const fs::path dir = scratch("rerun");
    write(dir / "c.json",
          R"({"max_updates": 6, "eval_every": 3, "hidden_width": 16, "hidden_layers": 1, "batch_size": 16,
              "eval_samples": 256, "psnr_threshold": 0})");
    const std::string cfg = " --config " + (dir / "c.json").string();
    REQUIRE(run("train" + cfg + " --out " + (dir / "a").string()) == 0);
    REQUIRE(run("train" + cfg + " --out " + (dir / "b").string()) == 0);
    for (const char* f : {"steps.csv", "evals.csv", "summary.json", "best.trpd"}) {
      INFO(f);
      CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    const std::string steps = slurp(dir / "a" / "steps.csv");
    CHECK(steps.rfind("# tripod ", 0) == 0);
    CHECK(steps.find(" seed 0") != std::string::npos);
  }

  TEST_CASE("seed precedence: flag over environment over file") {
    const fs::path dir = scratch("seed");
    write(dir / "c.json", R"({"max_updates": 0, "hidden_width": 8, "hidden_layers": 1, "eval_samples": 64, "seed": 1})");
    const std::string cfg = " --config " + (dir / "c.json").string();
    run("train" + cfg + " --out " + (dir / "file").string());
    setenv("TRIPOD_SEED", "5", 1);
    run("train" + cfg + " --out " + (dir / "env").string());
    run("train" + cfg + " --seed 9 --out " + (dir / "flag").string());
    unsetenv("TRIPOD_SEED");
    CHECK(slurp(dir / "file" / "steps.csv").find(" seed 1\n") != std::string::npos);
    CHECK(slurp(dir / "env" / "steps.csv").find(" seed 5\n") != std::string::npos);
    CHECK(slurp(dir / "flag" / "steps.csv").find(" seed 9\n") != std::string::npos);
  }

  TEST_CASE("bad configs exit with 2") {
    const fs::path dir = scratch("bad");
    write(dir / "c.json", R"({"lambda_kl": 1})");
    CHECK(run("train --config " + (dir / "c.json").string() + " --out " + (dir / "x").string()) == 2);
    write(dir / "d.json", R"({"batch_size": 1})");
    CHECK(run("train --config " + (dir / "d.json").string() + " --out " + (dir / "x").string()) == 2);
    CHECK(run("sweep --config " + (dir / "c.json").string() + " --out x") == 2);
    CHECK(run("frobnicate") == 2);
  }

  TEST_CASE("sweep writes one row per grid point") {
    const fs::path dir = scratch("sweep");
    write(dir / "c.json", R"({"max_updates": 2, "eval_every": 2, "hidden_width": 8, "hidden_layers": 1,
                             "batch_size": 8, "eval_samples": 128, "psnr_threshold": 0})");
    REQUIRE(run("sweep --config " + (dir / "c.json").string() + " --grid lambda_klm=0,1e-2,lambda_nhp=0,1e-4 --jobs 2 --out " +
                (dir / "s").string()) == 0);
    std::istringstream csv(slurp(dir / "s" / "sweep.csv"));
    std::string line;
    std::size_t rows = 0;
    while (std::getline(csv, line)) rows += !line.empty() && line[0] != '#' && line.rfind("point", 0) != 0;
    CHECK(rows == 4);
  }
}
