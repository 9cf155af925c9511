#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace cli {

/// Lowercase hex SHA-256 of a file's bytes. Throws std::runtime_error.
std::string sha256_file(const std::string& path);

/// Lowercase hex SHA-256 of a string.
std::string sha256(const std::string& bytes);

/// Record of one run: enough to re-execute it and check its outputs.
struct RunManifest {
  std::string command;
  std::string input;                 ///< input path, empty if none
  std::string input_sha256;
  nlohmann::ordered_json config;     ///< every option, defaults included
  std::uint64_t seed = 0;
  std::string version;
  double seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> outputs;  ///< file name, sha256

  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

/// Writes text to dir/name and records its digest.
void write_output(RunManifest& manifest, const std::string& dir, const std::string& name, const std::string& text);

}  // namespace cli
