#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "featprobe/image/ops.hpp"
#include "featprobe/io/files.hpp"
#include "featprobe/io/manifest.hpp"
#include "featprobe/mapping/model.hpp"
#include "support.hpp"

using namespace featprobe;
using nlohmann::json;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string out;
  std::string err;
};

// Runs the featprobe binary with stderr captured to a file.
Result featprobe_cmd(const std::string& args, const fs::path& scratch) {
  const fs::path err_file = scratch / "stderr.txt";
  const std::string cmd = std::string("'") + FEATPROBE_BINARY + "' " + args + " 2>'" + err_file.string() + "'";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = testing::read_file(err_file);
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

void write_images(const fs::path& dir, std::size_t count, std::size_t size) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img%02zu.png", i);
    image::write_png(testing::random_image(size, size, 100 + i), dir / name);
  }
}

json error_of(const Result& r) {
  const std::string line = r.err.substr(r.err.rfind('{', r.err.find("\"error\"")));
  return json::parse(line).at("error");
}

// Images -> identity manipulation -> toy features with a fixed split.
fs::path prepare_identity_data(const TempDir& dir, double test_fraction = 0.3) {
  write_images(dir / "imgs", 20, 16);
  Result r = featprobe_cmd("featurize --init-featurizer pointwise_linear --channels 8 --featurizer-seed 4 --featurizer " +
                               q(dir / "feat"),
                           dir.path());
  REQUIRE(r.status == 0);
  r = featprobe_cmd("manipulate --in " + q(dir / "imgs") + " --out " + q(dir / "same") + " --kind hue_shift --hue 0",
                    dir.path());
  REQUIRE(r.status == 0);
  r = featprobe_cmd("featurize --images " + q(dir / "same" / "fragment.json") + " --featurizer " + q(dir / "feat") +
                        " --out " + q(dir / "data") + " --val-fraction 0.2 --test-fraction " +
                        std::to_string(test_fraction),
                    dir.path());
  REQUIRE_MESSAGE(r.status == 0, r.err);
  return dir / "data" / "manifest.json";
}

void write_config(const fs::path& path, const fs::path& manifest, json extra = json::object()) {
  json cfg = {{"manifest", fs::relative(manifest, path.parent_path()).string()},
              {"family", "linear"},
              {"train", {{"epochs", 120}, {"learning_rate", 0.01}, {"batch_size", 4}, {"seed", 7}}},
              {"output_dir", "run"}};
  cfg.update(extra);
  io::write_json_atomic(path, cfg);
}

}  // namespace

TEST_CASE("manipulate writes one output per PNG") {
  TempDir dir;
  write_images(dir / "in", 3, 12);
  const Result r = featprobe_cmd("manipulate --in " + q(dir / "in") + " --out " + q(dir / "out") + " --preset grayscale",
                                 dir.path());
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const json fragment = io::read_json(dir / "out" / "fragment.json");
  CHECK(fragment.at("pairs").size() == 3);
  CHECK(fragment.at("manipulation_id") == "grayscale");
  for (const auto& p : fragment.at("pairs")) {
    const auto img = image::read_png(dir / "out" / p.at("manipulated_image_path").get<std::string>()).image;
    CHECK(img.at(0, 0)[0] == img.at(0, 0)[1]);
  }
}

TEST_CASE("manipulate on an empty directory succeeds with a warning") {
  TempDir dir;
  fs::create_directories(dir / "empty");
  const Result r = featprobe_cmd("manipulate --in " + q(dir / "empty") + " --out " + q(dir / "out") + " --preset rotate90",
                                 dir.path());
  CHECK(r.status == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  CHECK(io::read_json(dir / "out" / "fragment.json").at("pairs").empty());
}

TEST_CASE("rotate90 keeps square images square") {
  TempDir dir;
  write_images(dir / "in", 1, 288);
  const Result r = featprobe_cmd("manipulate --in " + q(dir / "in") + " --out " + q(dir / "out") + " --preset rotate90",
                                 dir.path());
  REQUIRE(r.status == 0);
  const json fragment = io::read_json(dir / "out" / "fragment.json");
  const auto img = image::read_png(dir / "out" / fragment["pairs"][0]["manipulated_image_path"].get<std::string>()).image;
  CHECK(img.width() == 288);
  CHECK(img.height() == 288);
}

TEST_CASE("identity task: train then eval reaches MdnCS 0.999 and reruns are byte-identical") {
  TempDir dir;
  const fs::path manifest = prepare_identity_data(dir);
  write_config(dir / "exp.json", manifest);

  Result r = featprobe_cmd("train --config " + q(dir / "exp.json"), dir.path());
  REQUIRE_MESSAGE(r.status == 0, r.err);
  r = featprobe_cmd("eval --config " + q(dir / "exp.json"), dir.path());
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const json report = io::read_json(dir / "run" / "eval_report.json");
  CHECK(report.at("summary").at("mdn_cs_median").get<double>() >= 0.999);
  const auto test_count = io::load_manifest(manifest).split(io::Split::kTest).size();
  CHECK(report.at("records").size() == test_count);
  CHECK(fs::exists(dir / "run" / "loss_history.csv"));
  CHECK(fs::exists(dir / "run" / "model" / "meta.json"));
  const json run = io::read_json(dir / "run" / "run.json");
  CHECK(run.at("commands").contains("train"));
  CHECK(run.at("commands").contains("eval"));

  r = featprobe_cmd("train --config " + q(dir / "exp.json") + " --out " + q(dir / "run2"), dir.path());
  REQUIRE(r.status == 0);
  r = featprobe_cmd("eval --config " + q(dir / "exp.json") + " --out " + q(dir / "run2"), dir.path());
  REQUIRE(r.status == 0);
  for (const char* name : {"train_report.json", "loss_history.csv", "eval_report.json"}) {
    CHECK_MESSAGE(testing::read_file(dir / "run" / name) == testing::read_file(dir / "run2" / name), name);
  }
}

TEST_CASE("eval with an empty test split reports empty split") {
  TempDir dir;
  const fs::path manifest = prepare_identity_data(dir, 0.0);
  write_config(dir / "exp.json", manifest, {{"train", {{"epochs", 1}}}});
  REQUIRE(featprobe_cmd("train --config " + q(dir / "exp.json"), dir.path()).status == 0);
  const Result r = featprobe_cmd("eval --config " + q(dir / "exp.json"), dir.path());
  CHECK(r.status != 0);
  const json e = error_of(r);
  CHECK(e.at("code") == "empty_split");
  CHECK(e.at("message").get<std::string>().find("empty split") != std::string::npos);
}

TEST_CASE("analyze on an identity-initialized bundle gives entropy ln C") {
  TempDir dir;
  mapping::ModelSpec spec;
  spec.arch.identity_init = true;
  const auto model = mapping::build_model(spec, FeatureMap::from_tensor(Tensor(Shape{8, 3, 3})));
  mapping::save_model(model, dir / "bundle");
  const Result r = featprobe_cmd("analyze --bundle " + q(dir / "bundle") + " --out " + q(dir / "an"), dir.path());
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const json a = io::read_json(dir / "an" / "analysis.json");
  CHECK(std::abs(a.at("spectral_entropy").get<double>() - std::log(8.0)) <= 1e-6);
  CHECK(a.at("entropy_convention") == "sigma-l1-natural-log");
  CHECK(fs::exists(dir / "an" / "spectrum.csv"));
}

TEST_CASE("analyze with manifest features reports bias dominance") {
  TempDir dir;
  const fs::path manifest = prepare_identity_data(dir);
  write_config(dir / "exp.json", manifest, {{"train", {{"epochs", 2}}}});
  REQUIRE(featprobe_cmd("train --config " + q(dir / "exp.json"), dir.path()).status == 0);
  const Result r = featprobe_cmd("analyze --bundle " + q(dir / "run" / "model") + " --manifest " + q(manifest) +
                                     " --split train --out " + q(dir / "an"),
                                 dir.path());
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const json a = io::read_json(dir / "an" / "analysis.json");
  const double ratio = a.at("input_dominance_ratio").get<double>();
  CHECK(ratio >= 0.0);
  CHECK(ratio <= 1.0);
  CHECK(a.at("bias_norm").get<double>() >= 0.0);
}

TEST_CASE("mask command prints the grid") {
  TempDir dir;
  image::Image a(288, 288), b(288, 288);
  for (std::size_t y = 40; y < 60; ++y) {
    for (std::size_t x = 40; x < 60; ++x) b.at(x, y) = {255, 255, 255};
  }
  image::write_png(a, dir / "a.png");
  image::write_png(b, dir / "b.png");
  const Result r = featprobe_cmd("mask --original " + q(dir / "a.png") + " --manipulated " + q(dir / "b.png") +
                                     " --grid 9x9",
                                 dir.path());
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const json m = json::parse(r.out);
  REQUIRE(m.at("cells").size() == 9);
  CHECK(m.at("cells")[1] == "010000000");
  CHECK(m.at("cells")[0] == "000000000");
  CHECK(m.at("changed_cells") == 1);
}

TEST_CASE("failures exit nonzero with an error record") {
  TempDir dir;
  const fs::path manifest = prepare_identity_data(dir);

  io::write_json_atomic(dir / "bad.json", json{{"manifest", "data/manifest.json"}});
  Result r = featprobe_cmd("train --config " + q(dir / "bad.json"), dir.path());
  CHECK(r.status == 1);
  json e = error_of(r);
  CHECK(e.at("code") == "schema_violation");
  CHECK(e.at("pointer") == "/family");

  write_config(dir / "typo.json", manifest, {{"train", {{"epoch", 3}}}});
  r = featprobe_cmd("train --config " + q(dir / "typo.json"), dir.path());
  CHECK(r.status == 1);
  CHECK(error_of(r).at("pointer") == "/train/epoch");

  r = featprobe_cmd("train --config " + q(dir / "missing.json"), dir.path());
  CHECK(r.status != 0);
  CHECK(error_of(r).at("code") == "io_error");

  r = featprobe_cmd("frobnicate", dir.path());
  CHECK(r.status == 2);
  CHECK(error_of(r).at("code") == "usage");

  r = featprobe_cmd("manipulate --in " + q(dir / "imgs") + " --out " + q(dir / "x") + " --kind semantic", dir.path());
  CHECK(r.status != 0);

  CHECK(featprobe_cmd("--help", dir.path()).status == 0);
}
