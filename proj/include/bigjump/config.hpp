#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace bigjump {

// Bad config text, unknown keys or out-of-range values (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kDefaultSeed = 20240611;
inline constexpr const char* kSeedEnv = "BIGJUMP_SEED";
inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  struct Model {
    double b = 0.5;
    double epsilon = 1.0;
    double tolerance = 1e-13;
  } model;
  struct Simulate {
    std::string method = "chain";
    std::int64_t samples = 100000;
    std::int64_t burn_in = 1000;
    std::int64_t thinning_lag = 1;
    int depth = 40;
    std::uint64_t seed = kDefaultSeed;
    int streams = 1;
    std::int64_t max_population = std::int64_t{1} << 40;
    std::int64_t saturation_budget = 0;
  } simulate;
  struct Oracle {
    std::int64_t cutoff = 1 << 16;
    double tol = 1e-10;
    int max_iter = 200;
  } oracle;
  struct Predict {
    std::vector<double> x_grid{10, 100, 1000, 10000};
    int n_max = 0;  // 0: geometric cutoff
  } predict;
  struct Verify {
    std::vector<int> suite{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    double level = 0.999;
  } verify;

  // Throws ConfigError naming the first offending field.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  // FNV-1a 64 of the compact JSON form.
  std::uint64_t hash() const;
  std::string hash_hex() const;
};

// Missing keys keep their defaults; unknown keys throw ConfigError. The
// seed falls back to BIGJUMP_SEED when the text does not set it.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
RunConfig default_config();

// "10,100,1000" or "log:lo:hi:count" (count points log-spaced, inclusive).
std::vector<double> parse_grid(const std::string& text);

std::uint64_t fnv1a64(const std::string& bytes);

// Writes to path + ".tmp" and renames over path.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace bigjump
