#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

namespace heurist {

inline constexpr const char *kToolVersion = "0.1.0";

// Sidecar `<output>.manifest.json` describing how an output was produced.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::string> inputs;  // path -> sha256
  std::map<std::string, std::string> outputs; // path -> sha256
  std::string registry_hash;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  double duration_seconds = 0.0;
};

std::filesystem::path manifest_path(const std::filesystem::path &output);

nlohmann::json to_json(const RunManifest &m);
RunManifest manifest_from_json(const nlohmann::json &j);

void write_manifest(const std::filesystem::path &output, const RunManifest &m);

// Throws StaleInputError when `input` has a manifest whose recorded hash for
// it differs from the file on disk, or when that manifest's own inputs that
// also feed this run (`current_inputs`) have changed since. Files without a
// manifest are accepted as-is.
void check_fresh(const std::filesystem::path &input,
                 const std::map<std::string, std::string> &current_inputs = {});

// Key used for paths in manifests.
std::string manifest_key(const std::filesystem::path &p);

// SOURCE_DATE_EPOCH when set, else the current time, as ISO-8601 UTC.
std::string utc_timestamp();

} // namespace heurist
