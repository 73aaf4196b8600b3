#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace someip_ids {

inline constexpr const char* kToolVersion = "1.0.0";

struct ManifestError : std::runtime_error {
  enum class Kind { kIo, kBadFormat, kHashMismatch };
  Kind kind;
  ManifestError(Kind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
};

struct FileDigest {
  std::string path;
  std::string sha256;
};

// Provenance record written next to every produced artifact. Downstream
// stages re-hash their inputs against these records before trusting them.
struct RunManifest {
  std::string tool;  // subcommand, e.g. "generate"
  std::string tool_version = kToolVersion;
  std::string command;  // reconstructed invocation
  std::uint64_t seed = 0;
  std::string config_sha256;  // hash of the resolved configuration, "" if none
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  nlohmann::json stats = nlohmann::json::object();
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

// Sidecar path: "<file>.manifest.json".
std::string manifest_path_for(const std::string& file);

FileDigest digest_file(const std::string& path);  // kIo

void write_manifest(const RunManifest& m, const std::string& path);  // kIo
RunManifest read_manifest(const std::string& path);  // kIo, kBadFormat

// Writes `m` to manifest_path_for(file) for each of its outputs' paths that
// equals `file`; convenience for the common one-sidecar-per-output layout.
void write_sidecar(const RunManifest& m, const std::string& file);

// If `file` has a sidecar manifest, re-hash the file and compare with the
// recorded output digest. Returns false when no sidecar exists, true when it
// exists and matches. Throws kHashMismatch on disagreement and kBadFormat
// when the sidecar does not mention the file.
bool verify_chained_input(const std::string& file);

}  // namespace someip_ids
