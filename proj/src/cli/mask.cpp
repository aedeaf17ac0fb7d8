#include "featprobe/cli/commands.hpp"
#include "featprobe/io/files.hpp"

namespace featprobe::cli {

nlohmann::json cmd_mask(const MaskOptionsCli& opts) {
  const auto orig = image::read_png(opts.original).image;
  const auto manip = image::read_png(opts.manipulated).image;
  const metrics::ChangeMask mask = metrics::build_change_mask(orig, manip, opts.grid, opts.mask);
  nlohmann::json doc = metrics::to_json(mask);
  doc["resolution"] = opts.mask.resolution;
  doc["threshold"] = opts.mask.threshold;
  if (opts.out) io::write_json_atomic(*opts.out, doc);
  return doc;
}

}  // namespace featprobe::cli
