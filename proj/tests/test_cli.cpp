// End-to-end tests of the command-line interface: exit-code policy, help
// output staying in sync with the configuration registry, and every
// subcommand driven through run_command exactly as the binary drives it.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vfield/cli.hpp"
#include "vfield/dataset.hpp"
#include "vfield/textio.hpp"
#include "vfield/trainconfig.hpp"

using namespace vfield;

namespace {

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

RunResult run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  RunResult r;
  r.code = run_command(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "vfield_cli_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

// A flat checkered floor: no silhouettes and no medial seams above it, so
// oracle renders reproduce raycast depth almost exactly.
const char* kFloorScene = R"(bounds -2 -2 -1  2 2 2
near 0.1
far 6
background 0.2 0.2 0.25
plane 0 0 1 0  checker 0.8 0.8 0.8  0.3 0.3 0.3  0.5
)";

// Floor plus a resting sphere: enough structure for a meaningful (tiny)
// training run.
const char* kRoomScene = R"(bounds -2 -2 0  2 2 2
near 0.1
far 8
background 0.05 0.08 0.1
plane 0 0 1 0  checker 0.8 0.8 0.8  0.3 0.3 0.3  0.5
sphere 0.3 -0.2 0.35 0.35  color 0.85 0.25 0.2
)";

const char* kRingCams = R"(size 12 12
hfov 70
ring 3  0 0  1.3  1.6  0 0 0.4
)";

std::string read_file(const std::filesystem::path& path) { return read_text_file(path.string()); }

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("train --help lists every configuration key with its default") {
  const RunResult r = run({"train", "--help"});
  CHECK(r.code == 0);
  for (const ConfigKeySpec& spec : config_registry()) {
    CAPTURE(spec.name);
    CHECK(r.out.find("  " + std::string(spec.name) + " (default " +
                     std::string(spec.default_value) + ")") != std::string::npos);
  }
  CHECK(r.out.find("VFIELD_OUT_DIR") != std::string::npos);
}

TEST_CASE("usage problems exit with 2 and report to the error stream") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"gen", "--scene"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"render", "--help"}).code == 0);

  const auto dir = temp_dir("usage");
  const RunResult missing = run({"gen", "--scene", (dir / "nope.scene").string(), "--cams",
                                 (dir / "nope.cams").string(), "--out", (dir / "o").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("not found") != std::string::npos);

  write_file(dir / "ok.scene", kFloorScene);
  write_file(dir / "ok.cams", kRingCams);
  const RunResult bad_key =
      run({"train", "--data", dir.string(), "--scene", (dir / "ok.scene").string(), "--out",
           (dir / "o").string(), "--set", "bananas=7"});
  CHECK(bad_key.code == 2);
  CHECK(bad_key.err.find("bananas") != std::string::npos);
}

TEST_CASE("malformed input files are runtime failures, not usage errors") {
  const auto dir = temp_dir("malformed");
  write_file(dir / "bad.scene", "bounds 0 0 0 1 1 1\nnear 0.1\nfar 5\nwibble 1 2 3\n");
  write_file(dir / "ok.cams", kRingCams);
  const RunResult r = run({"gen", "--scene", (dir / "bad.scene").string(), "--cams",
                           (dir / "ok.cams").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("bad.scene") != std::string::npos);
}

TEST_CASE("gen writes a loadable dataset and honours VFIELD_OUT_DIR") {
  const auto dir = temp_dir("gen");
  write_file(dir / "s.scene", kFloorScene);
  write_file(dir / "c.cams", kRingCams);

  const auto out1 = dir / "explicit";
  const RunResult r1 = run({"gen", "--scene", (dir / "s.scene").string(), "--cams",
                            (dir / "c.cams").string(), "--out", out1.string()});
  CHECK(r1.code == 0);
  const Dataset ds = load_dataset(manifest_path_for(out1.string()));
  CHECK(ds.views.size() == 3);
  CHECK(ds.views[0].camera.width == 12);

  const auto out2 = dir / "from_env";
  setenv("VFIELD_OUT_DIR", out2.string().c_str(), 1);
  const RunResult r2 = run(
      {"gen", "--scene", (dir / "s.scene").string(), "--cams", (dir / "c.cams").string()});
  unsetenv("VFIELD_OUT_DIR");
  CHECK(r2.code == 0);
  CHECK(std::filesystem::exists(out2 / "manifest.txt"));
}

TEST_CASE("oracle renders agree with raycast ground truth on a seam-free scene") {
  const auto dir = temp_dir("render_oracle");
  write_file(dir / "s.scene", kFloorScene);
  write_file(dir / "c.cams", "size 10 10\nhfov 60\nview 0.3 0.2 1.4  0 0 0\nview -0.5 0.4 1.2  0.2 0 0\n");

  REQUIRE(run({"gen", "--scene", (dir / "s.scene").string(), "--cams", (dir / "c.cams").string(),
               "--out", (dir / "gt").string()})
              .code == 0);
  const RunResult r = run({"render", "--oracle-vf", "--scene", (dir / "s.scene").string(),
                           "--cams", (dir / "c.cams").string(), "--out", (dir / "pred").string(),
                           "--set", "n_c=64", "--set", "n_f_max=32", "--set", "alpha0=10000"});
  CHECK(r.code == 0);

  const Dataset gt = load_dataset(manifest_path_for((dir / "gt").string()));
  const Dataset pred = load_dataset(manifest_path_for((dir / "pred").string()));
  REQUIRE(pred.views.size() == gt.views.size());
  Real max_depth_err = 0;
  for (std::size_t v = 0; v < gt.views.size(); ++v) {
    max_depth_err = std::max(
        max_depth_err, (pred.views[v].depth.depth - gt.views[v].depth.depth).cwiseAbs().maxCoeff());
  }
  CHECK(max_depth_err < 0.03);

  // The same pair through eval (dataset reference mode).
  const auto csv = dir / "m.csv";
  const RunResult ev = run({"eval", "--pred", (dir / "pred").string(), "--ref-data",
                            (dir / "gt").string(), "--out", csv.string()});
  CHECK(ev.code == 0);
  CHECK(ev.out.find("psnr_db") != std::string::npos);
  const std::string csv_text = read_file(csv);
  CHECK(csv_text.find("psnr_db,chamfer_mean_mm") == 0);
  CHECK(count_lines(csv_text) == 2);
}

TEST_CASE("eval against a scene reference reports geometry metrics and nan psnr") {
  const auto dir = temp_dir("eval_scene");
  write_file(dir / "s.scene", kFloorScene);
  write_file(dir / "c.cams", kRingCams);
  REQUIRE(run({"gen", "--scene", (dir / "s.scene").string(), "--cams", (dir / "c.cams").string(),
               "--out", (dir / "gt").string()})
              .code == 0);
  const RunResult r = run({"eval", "--pred", (dir / "gt").string(), "--ref-scene",
                           (dir / "s.scene").string(), "--out", (dir / "m.csv").string(),
                           "--surface-samples", "20000"});
  CHECK(r.code == 0);
  CHECK(r.out.find("psnr_db        nan") != std::string::npos);
  // Ideal depth maps: every fused point lies on the floor.
  CHECK(r.out.find("precision      1") != std::string::npos);

  const RunResult conflict =
      run({"eval", "--pred", (dir / "gt").string(), "--ref-data", (dir / "gt").string(),
           "--ref-scene", (dir / "s.scene").string(), "--out", (dir / "m2.csv").string()});
  CHECK(conflict.code == 2);
  CHECK(conflict.err.find("exactly one") != std::string::npos);
}

TEST_CASE("train runs end to end, resumes, and rejects config changes") {
  const auto dir = temp_dir("train_cli");
  write_file(dir / "s.scene", kRoomScene);
  write_file(dir / "c.cams", kRingCams);
  REQUIRE(run({"gen", "--scene", (dir / "s.scene").string(), "--cams", (dir / "c.cams").string(),
               "--out", (dir / "data").string()})
              .code == 0);
  write_file(dir / "t.cfg", "epochs = 3\nbatches_per_epoch = 1\nrays_per_batch = 24\n");

  std::vector<std::string> args = {
      "train",
      "--data", (dir / "data").string(),
      "--scene", (dir / "s.scene").string(),
      "--config", (dir / "t.cfg").string(),
      "--out", (dir / "run").string(),
      "--set", "epochs=2",  // overrides the config file's 3
      "--set", "anneal_start=0", "--set", "anneal_end=2", "--set", "window_m=4",
      "--set", "n_c=8", "--set", "n_f_start=4", "--set", "n_f_max=8", "--set", "n_f_inc=4",
      "--set", "n_inc=1", "--set", "d_samples=0.4",
      "--set", "vf_hidden_width=16", "--set", "vf_hidden_layers=2", "--set", "feature_dim=8",
      "--set", "pe_x=2", "--set", "vf_skip=false",
      "--set", "color_hidden_width=8", "--set", "color_hidden_layers=2", "--set", "pe_d=2",
      "--set", "n_ext=16", "--set", "n_cen=16", "--set", "pretrain_steps=0",
      "--set", "holdout_view=2", "--set", "psnr_every=1", "--set", "checkpoint_every=1",
      "--seed", "7"};
  const RunResult r = run(args);
  CHECK(r.code == 0);
  CHECK(std::filesystem::exists(dir / "run" / "checkpoint.ckpt"));
  CHECK(std::filesystem::exists(dir / "run" / "config.resolved.cfg"));
  const std::string metrics = read_file(dir / "run" / "metrics.csv");
  CHECK(count_lines(metrics) == 3);  // header + 2 epochs
  CHECK(metrics.rfind("epoch,lr,", 0) == 0);
  // The --set override beat the config file, and --seed landed in the config.
  const std::string resolved = read_file(dir / "run" / "config.resolved.cfg");
  CHECK(resolved.find("epochs = 2\n") != std::string::npos);
  CHECK(resolved.find("seed = 7\n") != std::string::npos);

  // Resuming a finished run is a no-op success.
  std::vector<std::string> resume = args;
  resume.push_back("--resume");
  const RunResult r2 = run(resume);
  CHECK(r2.code == 0);
  CHECK(std::filesystem::exists(dir / "run" / "checkpoint.ckpt"));

  // Any config difference must be rejected.
  std::vector<std::string> changed = resume;
  changed.push_back("--set");
  changed.push_back("lr=0.001");
  const RunResult r3 = run(changed);
  CHECK(r3.code == 1);
  CHECK(r3.err.find("config") != std::string::npos);

  // Rendering from the checkpoint with mismatched architecture keys fails.
  const RunResult r4 = run({"render", "--checkpoint", (dir / "run" / "checkpoint.ckpt").string(),
                            "--scene", (dir / "s.scene").string(), "--cams",
                            (dir / "c.cams").string(), "--out", (dir / "rframes").string(),
                            "--set", "vf_hidden_width=24"});
  CHECK(r4.code == 1);
  CHECK(r4.err.find("parameters") != std::string::npos);

  // And with matching architecture it renders a loadable dataset.
  const RunResult r5 = run({"render", "--checkpoint", (dir / "run" / "checkpoint.ckpt").string(),
                            "--scene", (dir / "s.scene").string(), "--cams",
                            (dir / "c.cams").string(), "--out", (dir / "frames").string()});
  CHECK(r5.code == 0);
  const Dataset frames = load_dataset(manifest_path_for((dir / "frames").string()));
  CHECK(frames.views.size() == 3);

  // Exactly one of --checkpoint / --oracle-vf.
  const RunResult r6 = run({"render", "--scene", (dir / "s.scene").string(), "--cams",
                            (dir / "c.cams").string(), "--out", (dir / "x").string()});
  CHECK(r6.code == 2);
}

TEST_CASE("oracle-check passes on a valid scene and fails loudly on a broken one") {
  const auto dir = temp_dir("oracle_check");
  write_file(dir / "ok.scene", kFloorScene);
  const RunResult good =
      run({"oracle-check", "--scene", (dir / "ok.scene").string(), "--out", dir.string()});
  CHECK(good.code == 0);
  const std::vector<std::string> names = {
      "scene-validity",       "field-unit-norm",          "window-normalization",
      "windowed-cosine-consistency", "density-localization", "depth-render-consistency",
      "gradient-consistency"};
  for (const std::string& name : names) {
    CAPTURE(name);
    CHECK(good.out.find("PASS " + name) != std::string::npos);
  }
  CHECK(good.out.find("all checks passed") != std::string::npos);
  CHECK(read_file(dir / "report.txt") == good.out);

  // A plane normal that is not unit length must fail validation; the checks
  // that need the scene are skipped but still reported by name.
  write_file(dir / "bad.scene",
             "bounds -1 -1 -1 1 1 1\nnear 0.1\nfar 5\nplane 0 0 2 0 color 1 1 1\n");
  const RunResult bad = run({"oracle-check", "--scene", (dir / "bad.scene").string()});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("FAIL scene-validity") != std::string::npos);
  CHECK(bad.out.find("SKIP field-unit-norm") != std::string::npos);
  CHECK(bad.out.find("SKIP density-localization") != std::string::npos);
  for (const std::string& name : names) {
    CAPTURE(name);
    CHECK(bad.out.find(name) != std::string::npos);
  }
}
