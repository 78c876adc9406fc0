#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

/// Runs the CLI binary with stdout+stderr captured.
RunResult run_cli(const std::string& args, const std::string& workdir) {
  static int counter = 0;
  fs::path log = fs::temp_directory_path() / ("gc_cli_out_" + std::to_string(counter++) + ".txt");
  std::string cmd = "cd " + workdir + " && " + std::string(GC_CLI_PATH) + " " + args + " > " +
                    log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WEXITSTATUS(status);
  std::ifstream in(log);
  res.output.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  fs::remove(log);
  return res;
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

/// Fresh working directory with a small config pointing at the repo's shape
/// library.
struct Sandbox {
  fs::path dir;
  fs::path config;

  explicit Sandbox(const std::string& name, const std::string& extra_env = "",
                   const std::string& shapes = "") {
    dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    config = dir / "config.json";
    std::ofstream out(config);
    std::string shapes_path = shapes.empty()
                                  ? (fs::path(GC_SRC_ROOT) / "configs" / "shapes.json").string()
                                  : shapes;
    out << R"({
  "shapes_path": ")" << shapes_path << R"(",
  "shape_names": ["hexagon"],
  "out_dir": ")" << (dir / "out").string() << R"(",
  "seeds": {"train": 5, "grasp": 6, "eval": 7},
  "env": {"horizon_tau": 2.0)" << extra_env << R"(},
  "rl": {"actor_hidden": [16, 16], "critic_hidden": [16, 16], "num_envs": 4,
         "total_steps": 200, "minibatch": 64, "epochs": 2, "pool_per_shape": 16},
  "eval": {"candidates": 10, "base_grid": 5, "trials_per_cell": 6,
           "correlation_pairs": 30, "correlation_bins": 4, "wave": 8}
})";
  }
  ~Sandbox() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("missing shape library exits with code 2 and names the path") {
  Sandbox sb("gc_cli_missing", "", "/nonexistent/shapes.json");
  RunResult res = run_cli("train --config " + sb.config.string(), sb.dir.string());
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("/nonexistent/shapes.json") != std::string::npos);
}

TEST_CASE("missing config exits with code 2") {
  RunResult res = run_cli("train --config /nonexistent/config.json",
                          fs::temp_directory_path().string());
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("/nonexistent/config.json") != std::string::npos);
}

TEST_CASE("malformed checkpoint exits with code 4 and a version message") {
  Sandbox sb("gc_cli_badckpt");
  fs::path bad = sb.dir / "bad.ckpt";
  {
    std::ofstream out(bad);
    out << "graspcritic-checkpoint v9\n";
  }
  RunResult res = run_cli("score --config " + sb.config.string() + " --checkpoint " +
                              bad.string() + " --shape hexagon",
                          sb.dir.string());
  CHECK(res.exit_code == 4);
  CHECK(res.output.find("version mismatch") != std::string::npos);
}

TEST_CASE("train --total-steps 0 writes the initialization checkpoint") {
  Sandbox sb("gc_cli_zero");
  RunResult res = run_cli("train --config " + sb.config.string() + " --total-steps 0",
                          sb.dir.string());
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(sb.dir / "out" / "run.ckpt"));
  CHECK(fs::exists(sb.dir / "out" / "run_training_log.csv"));
}

TEST_CASE("an all-frictionless candidate set exits with code 3") {
  // mu_min = mu_max = 0 makes every grasp epsilon zero, so the stability
  // filter leaves nothing.
  Sandbox sb("gc_cli_empty", R"(, "mu_min": 0.0, "mu_max": 0.0)");
  RunResult train_res = run_cli("train --config " + sb.config.string() + " --total-steps 0",
                                sb.dir.string());
  REQUIRE(train_res.exit_code == 3);  // the training pool itself is empty

  // Scoring against a checkpoint from a good config also reports code 3.
  Sandbox good("gc_cli_empty_good");
  RunResult t2 = run_cli("train --config " + good.config.string() + " --total-steps 0",
                         good.dir.string());
  REQUIRE(t2.exit_code == 0);
  RunResult res = run_cli("score --config " + sb.config.string() + " --checkpoint " +
                              (good.dir / "out" / "run.ckpt").string() + " --shape hexagon --k 8",
                          sb.dir.string());
  CHECK(res.exit_code == 3);
}

TEST_CASE("score writes the candidate CSV and reruns byte-identically") {
  Sandbox sb("gc_cli_score");
  REQUIRE(run_cli("train --config " + sb.config.string() + " --total-steps 0", sb.dir.string())
              .exit_code == 0);
  std::string cmd = "score --config " + sb.config.string() + " --checkpoint " +
                    (sb.dir / "out" / "run.ckpt").string() +
                    " --shape hexagon --k 12 --base-grid 3 --goal 0.8";
  RunResult a = run_cli(cmd, sb.dir.string());
  REQUIRE(a.exit_code == 0);
  fs::path csv = sb.dir / "out" / "scores.csv";
  REQUIRE(fs::exists(csv));
  std::string first = file_bytes(csv);

  // Header and column order.
  CHECK(first.find("grasp_id,base_angle,epsilon,v_d,v_s\n") != std::string::npos);
  CHECK(first.find("# config_hash=") != std::string::npos);

  RunResult b = run_cli(cmd, sb.dir.string());
  REQUIRE(b.exit_code == 0);
  CHECK(file_bytes(csv) == first);
}

TEST_CASE("eval writes reports, verify checks hashes, report prints") {
  Sandbox sb("gc_cli_eval");
  REQUIRE(run_cli("train --config " + sb.config.string(), sb.dir.string()).exit_code == 0);
  std::string ckpt = (sb.dir / "out" / "run.ckpt").string();

  RunResult ev = run_cli("eval --config " + sb.config.string() + " --checkpoint " + ckpt,
                         sb.dir.string());
  REQUIRE(ev.exit_code == 0);
  fs::path report = sb.dir / "out" / "eval_report.csv";
  REQUIRE(fs::exists(report));
  std::string bytes_a = file_bytes(report);
  CHECK(bytes_a.find("shape,strategy,n_trials,") != std::string::npos);

  // Rerun: byte-identical report.
  RunResult ev2 = run_cli("eval --config " + sb.config.string() + " --checkpoint " + ckpt,
                          sb.dir.string());
  REQUIRE(ev2.exit_code == 0);
  CHECK(file_bytes(report) == bytes_a);

  // Five strategies on one shape plus the aggregate block.
  int rows = 0;
  for (size_t pos = 0; (pos = bytes_a.find("\nhexagon,", pos)) != std::string::npos; ++pos) {
    rows += 1;
  }
  CHECK(rows == 5);

  // --verify accepts the matching config and rejects a modified one.
  RunResult ok = run_cli("eval --config " + sb.config.string() + " --verify " + report.string(),
                         sb.dir.string());
  CHECK(ok.exit_code == 0);

  Sandbox other("gc_cli_eval_other", R"(, "success_threshold_theta": 0.5)");
  RunResult bad = run_cli("eval --config " + other.config.string() + " --verify " +
                              report.string(),
                          other.dir.string());
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("mismatch") != std::string::npos);

  RunResult rep = run_cli("report " + report.string(), sb.dir.string());
  CHECK(rep.exit_code == 0);
  CHECK(rep.output.find("hexagon") != std::string::npos);
}
