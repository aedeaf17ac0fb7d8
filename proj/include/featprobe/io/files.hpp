#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

namespace featprobe::io {

// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// JSON is dumped with 2-space indent and a trailing newline.
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& doc);

nlohmann::json read_json(const std::filesystem::path& path);

// Populates a fresh temp directory via `fill` and renames it to `dir`,
// replacing any existing directory. The temp directory is removed on failure.
void write_directory_atomic(const std::filesystem::path& dir,
                            const std::function<void(const std::filesystem::path&)>& fill);

// 64-bit FNV-1a, used for config hashes and deterministic split assignment.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace featprobe::io
