#include "heurist/manifest.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>

#include "heurist/error.hpp"
#include "heurist/hash.hpp"

namespace heurist {

std::filesystem::path manifest_path(const std::filesystem::path &output) {
  auto p = output;
  p += ".manifest.json";
  return p;
}

std::string manifest_key(const std::filesystem::path &p) {
  std::error_code ec;
  auto canonical = std::filesystem::weakly_canonical(p, ec);
  return (ec ? p : canonical).lexically_normal().string();
}

nlohmann::json to_json(const RunManifest &m) {
  return {{"command", m.command},
          {"config", m.config},
          {"inputs", m.inputs},
          {"outputs", m.outputs},
          {"registry_hash", m.registry_hash},
          {"seed", m.seed},
          {"tool_version", m.tool_version},
          {"duration_seconds", m.duration_seconds}};
}

RunManifest manifest_from_json(const nlohmann::json &j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config = j.value("config", nlohmann::json::object());
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    m.registry_hash = j.value("registry_hash", "");
    m.seed = j.value("seed", std::uint64_t{0});
    m.tool_version = j.value("tool_version", "");
    m.duration_seconds = j.value("duration_seconds", 0.0);
    return m;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
}

void write_manifest(const std::filesystem::path &output, const RunManifest &m) {
  write_file(manifest_path(output), to_json(m).dump(2) + "\n");
}

void check_fresh(const std::filesystem::path &input,
                 const std::map<std::string, std::string> &current_inputs) {
  const auto mpath = manifest_path(input);
  if (!std::filesystem::exists(mpath)) {
    return;
  }
  RunManifest m;
  try {
    m = manifest_from_json(nlohmann::json::parse(read_file(mpath)));
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(mpath.string() + ": " + e.what());
  }
  const auto key = manifest_key(input);
  if (auto it = m.outputs.find(key); it != m.outputs.end()) {
    if (it->second != file_sha256(input)) {
      throw StaleInputError("stale input " + input.string() +
                            ": contents differ from its manifest " + mpath.string());
    }
  }
  for (const auto &[path, hash] : m.inputs) {
    auto cur = current_inputs.find(path);
    if (cur != current_inputs.end() && cur->second != hash) {
      throw StaleInputError("stale input " + input.string() + ": it was built from " +
                            path + " which has changed since");
    }
  }
}

std::string utc_timestamp() {
  std::time_t t = 0;
  if (const char *epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace heurist
