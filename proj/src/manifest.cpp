#include "someip_ids/manifest.hpp"

#include <filesystem>
#include <fstream>

#include "someip_ids/hash.hpp"

namespace someip_ids {

nlohmann::json RunManifest::to_json() const {
  auto digests = [](const std::vector<FileDigest>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const FileDigest& d : v)
      arr.push_back({{"path", d.path}, {"sha256", d.sha256}});
    return arr;
  };
  return {{"tool", tool},
          {"tool_version", tool_version},
          {"command", command},
          {"seed", seed},
          {"config_sha256", config_sha256},
          {"inputs", digests(inputs)},
          {"outputs", digests(outputs)},
          {"stats", stats},
          {"notes", notes}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.tool = j.at("tool").get<std::string>();
    m.tool_version = j.value("tool_version", std::string());
    m.command = j.value("command", std::string());
    m.seed = j.value("seed", std::uint64_t{0});
    m.config_sha256 = j.value("config_sha256", std::string());
    for (const auto& d : j.at("inputs"))
      m.inputs.push_back({d.at("path").get<std::string>(),
                          d.at("sha256").get<std::string>()});
    for (const auto& d : j.at("outputs"))
      m.outputs.push_back({d.at("path").get<std::string>(),
                           d.at("sha256").get<std::string>()});
    if (j.contains("stats")) m.stats = j.at("stats");
    if (j.contains("notes"))
      m.notes = j.at("notes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(ManifestError::Kind::kBadFormat,
                        std::string("manifest: ") + e.what());
  }
  return m;
}

std::string manifest_path_for(const std::string& file) {
  return file + ".manifest.json";
}

FileDigest digest_file(const std::string& path) {
  try {
    return {path, sha256_file_hex(path)};
  } catch (const std::exception& e) {
    throw ManifestError(ManifestError::Kind::kIo, e.what());
  }
}

void write_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f)
    throw ManifestError(ManifestError::Kind::kIo, "cannot open " + path);
  f << m.to_json().dump(2) << "\n";
  if (!f)
    throw ManifestError(ManifestError::Kind::kIo, "write failed on " + path);
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f)
    throw ManifestError(ManifestError::Kind::kIo, "cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(ManifestError::Kind::kBadFormat,
                        path + ": " + e.what());
  }
  return RunManifest::from_json(j);
}

void write_sidecar(const RunManifest& m, const std::string& file) {
  write_manifest(m, manifest_path_for(file));
}

namespace {

bool same_file_name(const std::string& a, const std::string& b) {
  namespace fs = std::filesystem;
  return a == b || fs::path(a).filename() == fs::path(b).filename();
}

}  // namespace

bool verify_chained_input(const std::string& file) {
  std::string side = manifest_path_for(file);
  if (!std::filesystem::exists(side)) return false;
  RunManifest m = read_manifest(side);
  for (const FileDigest& d : m.outputs) {
    if (!same_file_name(d.path, file)) continue;
    std::string actual = sha256_file_hex(file);
    if (actual != d.sha256)
      throw ManifestError(ManifestError::Kind::kHashMismatch,
                          file + ": content hash " + actual +
                              " does not match manifest record " + d.sha256);
    return true;
  }
  throw ManifestError(ManifestError::Kind::kBadFormat,
                      side + " does not record " + file + " as an output");
}

}  // namespace someip_ids
