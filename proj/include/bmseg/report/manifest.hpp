#pragma once

#include <chrono>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "bmseg/core/error.hpp"
#include "bmseg/core/version.hpp"

namespace bmseg {

inline std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Every run writes one of these next to its artifacts so any emitted number
// can be traced back to config + seed. Immutable once written.
struct RunManifest {
  nlohmann::json config;
  uint64_t seed = 0;
  std::string version = kVersion;
  std::string started_at;
  std::string finished_at;
  std::map<std::string, std::string> artifacts;  // name -> path
  nlohmann::json metrics;

  void write(const std::string& path) const {
    nlohmann::json j;
    j["config"] = config;
    j["seed"] = seed;
    j["version"] = version;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["artifacts"] = artifacts;
    j["metrics"] = metrics;
    std::ofstream out(path);
    require(out.good(), "cannot write manifest ", path);
    out << j.dump(2) << "\n";
  }
};

}  // namespace bmseg
