#include "featprobe/cli/commands.hpp"
#include "featprobe/io/files.hpp"
#include "featprobe/io/npy.hpp"

namespace featprobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

io::Split split_for(const std::string& sample_id, double val_fraction, double test_fraction) {
  const double u = static_cast<double>(io::fnv1a64(sample_id) % 1'000'000) / 1'000'000.0;
  if (u < test_fraction) return io::Split::kTest;
  if (u < test_fraction + val_fraction) return io::Split::kVal;
  return io::Split::kTrain;
}

io::PairManifest cmd_featurize(const FeaturizeOptions& opts) {
  if (opts.val_fraction < 0 || opts.test_fraction < 0 || opts.val_fraction + opts.test_fraction > 1) {
    throw Error(ErrorCode::kInvalidParameter, "split fractions must be >= 0 and sum to at most 1");
  }
  const json fragment = io::read_json(opts.fragment);
  if (!fragment.is_object() || !fragment.contains("pairs") || !fragment["pairs"].is_array()) {
    throw Error(ErrorCode::kSchema, "fragment needs a 'pairs' array", "/pairs");
  }
  const synthetic::ToyFeaturizer featurizer = synthetic::load_featurizer(opts.featurizer);
  const fs::path frag_dir = fs::absolute(opts.fragment).parent_path();
  const std::string manipulation_id = fragment.value("manipulation_id", "unknown");

  fs::create_directories(opts.out_dir / "features");
  const fs::path out_abs = fs::absolute(opts.out_dir);
  io::PairManifest manifest;
  manifest.backbone = "toy";
  manifest.stage = opts.stage;
  manifest.base_dir = opts.out_dir;
  const Stage stage = parse_stage(opts.stage);

  const auto& pairs = fragment["pairs"];
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string pointer = "/pairs/" + std::to_string(i);
    io::PairEntry e;
    fs::path orig, manip;
    try {
      e.sample_id = pairs[i].at("sample_id").get<std::string>();
      orig = (frag_dir / pairs[i].at("original_image_path").get<std::string>()).lexically_normal();
      manip = (frag_dir / pairs[i].at("manipulated_image_path").get<std::string>()).lexically_normal();
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kSchema, std::string("bad fragment pair: ") + ex.what(), pointer);
    }
    FeatureMap fo = synthetic::featurize(featurizer, image::read_png(orig).image);
    FeatureMap fm = synthetic::featurize(featurizer, image::read_png(manip).image);
    fo.stage = fm.stage = stage;
    const std::string stem = "features/" + e.sample_id;
    io::save_tensor(fo.tensor, opts.out_dir / (stem + ".orig.npy"));
    io::save_tensor(fm.tensor, opts.out_dir / (stem + ".target.npy"));
    e.original_feature_path = stem + ".orig.npy";
    e.target_feature_path = stem + ".target.npy";
    e.original_image_path = orig.lexically_relative(out_abs).string();
    e.manipulated_image_path = manip.lexically_relative(out_abs).string();
    e.manipulation_id = manipulation_id;
    e.split = split_for(e.sample_id, opts.val_fraction, opts.test_fraction);
    manifest.entries.push_back(std::move(e));
  }
  io::save_manifest(manifest, opts.out_dir / "manifest.json");
  return manifest;
}

}  // namespace featprobe::cli
