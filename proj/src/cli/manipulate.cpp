#include <algorithm>

#include "featprobe/cli/commands.hpp"
#include "featprobe/io/files.hpp"

namespace featprobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

ManipulateResult cmd_manipulate(const ManipulateOptions& opts) {
  if (!fs::is_directory(opts.in_dir)) {
    throw Error(ErrorCode::kIo, "input directory not found: " + opts.in_dir.string());
  }
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(opts.in_dir)) {
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && ext == ".png") inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());

  fs::create_directories(opts.out_dir);
  const fs::path out_abs = fs::absolute(opts.out_dir);
  ManipulateResult result;
  json pairs = json::array(), skipped = json::array(), warnings = json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const fs::path& src = inputs[i];
    try {
      auto png = image::read_png(src);
      if (png.dropped_alpha) warnings.push_back(src.filename().string() + ": alpha channel dropped");
      image::ManipulationSpec spec = opts.spec;
      spec.stream = i;
      const image::Image out = image::apply_manipulation(png.image, spec);
      const fs::path dst = opts.out_dir / src.filename();
      const fs::path tmp = dst.string() + ".tmp";
      image::write_png(out, tmp);
      fs::rename(tmp, dst);
      pairs.push_back({{"sample_id", src.stem().string()},
                       {"original_image_path", fs::absolute(src).lexically_relative(out_abs).string()},
                       {"manipulated_image_path", src.filename().string()}});
      ++result.written;
    } catch (const std::exception& e) {
      if (auto* err = dynamic_cast<const Error*>(&e); err && err->code() == ErrorCode::kNonExecutable) {
        throw;
      }
      skipped.push_back({{"path", src.filename().string()}, {"error", e.what()}});
      ++result.skipped;
    }
  }
  if (inputs.empty()) warnings.push_back("no PNG files in " + opts.in_dir.string());
  result.fragment = {{"manipulation_id", opts.spec.manipulation_id()},
                     {"spec", image::spec_to_json(opts.spec)},
                     {"pairs", pairs},
                     {"skipped", skipped},
                     {"warnings", warnings}};
  io::write_json_atomic(opts.out_dir / "fragment.json", result.fragment);
  if (!inputs.empty() && result.written == 0) {
    throw Error(ErrorCode::kIo, "all " + std::to_string(inputs.size()) + " inputs failed");
  }
  return result;
}

}  // namespace featprobe::cli
