#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace featprobe::io {

enum class Split { kTrain, kVal, kTest };

std::string_view split_name(Split split) noexcept;
Split parse_split(std::string_view name);

struct PairEntry {
  std::string original_feature_path;
  std::string target_feature_path;
  std::optional<std::string> original_image_path;
  std::optional<std::string> manipulated_image_path;
  std::string manipulation_id;
  std::string sample_id;
  Split split = Split::kTrain;

  // Optional evaluation inputs produced by external tools.
  std::optional<int> label;
  std::optional<std::string> reconstructed_image_path;
  std::optional<std::string> target_stack_path;
  std::optional<std::string> reconstructed_stack_path;
};

// Original/manipulated feature pairs. Relative paths resolve against base_dir
// (the manifest's directory).
struct PairManifest {
  std::optional<std::string> backbone;
  std::optional<std::string> stage;
  std::vector<PairEntry> entries;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
  std::vector<const PairEntry*> split(Split s) const;
};

// Schema errors throw Error(kSchema) with a JSON pointer to the offending node.
PairManifest parse_manifest(const nlohmann::json& doc, std::filesystem::path base_dir = {});
PairManifest load_manifest(const std::filesystem::path& path);

nlohmann::json manifest_to_json(const PairManifest& manifest);
void save_manifest(const PairManifest& manifest, const std::filesystem::path& path);

// Returns an empty list iff every invariant holds: referenced files exist,
// original/target shapes match entry-wise, sample ids are unique per split.
std::vector<std::string> validate_manifest(const PairManifest& manifest);

}  // namespace featprobe::io
