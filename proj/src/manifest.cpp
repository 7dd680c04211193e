#include "gpicl/manifest.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "gpicl/errors.hpp"
#include "gpicl/version.hpp"

namespace gpicl {

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for digest: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64_hex(ss.str());
}

RunManifest make_manifest(const std::string& command, nlohmann::ordered_json config) {
  RunManifest m;
  m.tool = kToolName;
  m.version = kVersion;
  m.command = command;
  m.config = std::move(config);

  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"))
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  m.created_utc = buf;
  return m;
}

void add_input(RunManifest& m, const std::string& path) {
  m.inputs[path] = file_digest(path);
}

void add_output(RunManifest& m, const std::string& path) {
  m.outputs[path] = file_digest(path);
}

void save_manifest(const RunManifest& m, const std::string& path) {
  nlohmann::ordered_json j;
  j["tool"] = m.tool;
  j["version"] = m.version;
  j["command"] = m.command;
  j["created_utc"] = m.created_utc;
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path);
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  nlohmann::ordered_json j;
  try {
    in >> j;
    RunManifest m;
    m.tool = j.at("tool").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.created_utc = j.at("created_utc").get<std::string>();
    m.config = j.at("config");
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest " + path + ": " + e.what());
  }
}

void verify_manifest(const RunManifest& m) {
  for (const auto& [path, digest] : m.inputs)
    if (file_digest(path) != digest)
      throw DataError("manifest input digest mismatch: " + path);
  for (const auto& [path, digest] : m.outputs)
    if (file_digest(path) != digest)
      throw DataError("manifest output digest mismatch: " + path);
}

bool verify_against_sidecar(const std::string& path) {
  const std::string sidecar = path + ".manifest.json";
  {
    std::ifstream probe(sidecar);
    if (!probe.good()) return false;
  }
  const auto m = load_manifest(sidecar);
  const auto it = m.outputs.find(path);
  if (it == m.outputs.end())
    throw DataError("manifest " + sidecar + " does not list " + path);
  if (file_digest(path) != it->second)
    throw DataError("digest mismatch for " + path + " (expected " + it->second +
                    "); pass --force to analyze anyway");
  return true;
}

}  // namespace gpicl
