#ifndef SUBTRACK_HARNESS_MANIFEST_HPP_
#define SUBTRACK_HARNESS_MANIFEST_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"
#include "subtrack/harness/csv.hpp"

namespace subtrack::harness {

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

struct SeedTiming {
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::vector<SeedTiming> runs;
  double wall_seconds = 0.0;
  std::map<std::string, std::string> files;  // name -> sha256 of the bytes written

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["tool"] = "subtrack";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["config"] = config;
    j["mean_err_db_convention"] = "linear mean of |xi|^2 over n >= N_p, then dB";
    auto& rs = j["runs"] = nlohmann::json::array();
    for (const auto& r : runs) rs.push_back({{"seed", r.seed}, {"wall_seconds", r.wall_seconds}});
    j["wall_seconds"] = wall_seconds;
    auto& fs = j["files"] = nlohmann::json::object();
    for (const auto& [name, digest] : files) fs[name] = {{"sha256", digest}};
    return j;
  }
};

/// Recomputes every digest in a manifest against the files in `dir`;
/// returns the names that do not match.
inline std::vector<std::string> verify_manifest(const std::string& dir) {
  const auto j = nlohmann::json::parse(read_file(dir + "/manifest.json"));
  std::vector<std::string> bad;
  for (const auto& [name, entry] : j.at("files").items()) {
    std::string body;
    try {
      body = read_file(dir + "/" + name);
    } catch (const IoError&) {
      bad.push_back(name);
      continue;
    }
    if (sha256_hex(body) != entry.at("sha256").get<std::string>()) bad.push_back(name);
  }
  return bad;
}

}  // namespace subtrack::harness

#endif  // SUBTRACK_HARNESS_MANIFEST_HPP_
