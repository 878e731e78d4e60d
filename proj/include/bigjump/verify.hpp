#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bigjump/config.hpp"

namespace bigjump {

struct CheckResult {
  int id = 0;
  std::string description;
  nlohmann::ordered_json measured;
  std::string expected;
  double tolerance = 0.0;
  bool pass = false;
  double seconds = 0.0;  // wall time, kept out of the report
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool pass = false;
  std::uint64_t seed = 0;
  std::string config_hash;
  nlohmann::ordered_json config;

  nlohmann::ordered_json to_json() const;
  // Deterministic text for a given (config, seed).
  std::string dump() const;
};

struct VerifyHooks {
  std::function<void(const std::string&)> log;
  std::function<void(const CheckResult&)> on_check;
};

// Runs the checks listed in config.verify.suite, in ascending id order.
VerifyReport run_verify(const RunConfig& config, const VerifyHooks& hooks = {});

}  // namespace bigjump
