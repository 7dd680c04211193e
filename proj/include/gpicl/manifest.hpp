#pragma once

#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

namespace gpicl {

// FNV-1a 64-bit, hex-encoded; tamper detection for generated artifacts, not a
// security boundary.
std::string fnv1a64_hex(std::string_view bytes);
std::string file_digest(const std::string& path);

struct RunManifest {
  std::string tool;
  std::string version;
  std::string command;  // subcommand that produced the outputs
  nlohmann::ordered_json config;
  std::string created_utc;  // honors SOURCE_DATE_EPOCH for reproducible reruns
  std::map<std::string, std::string> inputs;   // path -> digest
  std::map<std::string, std::string> outputs;  // path -> digest
};

RunManifest make_manifest(const std::string& command, nlohmann::ordered_json config);
void add_input(RunManifest& m, const std::string& path);
void add_output(RunManifest& m, const std::string& path);

void save_manifest(const RunManifest& m, const std::string& path);
RunManifest load_manifest(const std::string& path);

// Recomputes the digest of every listed file; throws DataError on mismatch or
// missing file.
void verify_manifest(const RunManifest& m);

// Default manifest location for an artifact: "<path>.manifest.json". When a
// manifest exists there, checks that `path`'s digest matches its entry; true
// when verified, false when no manifest exists.
bool verify_against_sidecar(const std::string& path);

}  // namespace gpicl
