#include "bigjump/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace bigjump {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for key '" + key + "'");
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid config: " + what);
}

std::vector<double> grid_from_json(const json& v) {
  if (v.is_string()) return parse_grid(v.get<std::string>());
  return get_as<std::vector<double>>(v, "predict.x_grid");
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  try {
    if (text.rfind("log:", 0) == 0) {
      std::stringstream ss(text.substr(4));
      std::string a, b, c;
      if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c))
        throw ConfigError("grid must be log:lo:hi:count");
      double lo = std::stod(a), hi = std::stod(b);
      int n = std::stoi(c);
      if (!(lo > 0.0 && hi >= lo && n >= 1)) throw ConfigError("bad log grid bounds");
      for (int i = 0; i < n; ++i)
        out.push_back(n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1)));
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      }
    }
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse grid '" + text + "'");
  }
  if (out.empty()) throw ConfigError("empty grid");
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i] > out[i - 1])) throw ConfigError("grid must be strictly increasing");
  return out;
}

RunConfig default_config() {
  RunConfig c;
  if (const char* env = std::getenv(kSeedEnv)) {
    try {
      std::size_t used = 0;
      c.simulate.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw ConfigError(std::string(kSeedEnv) + " is not an unsigned integer");
    }
  }
  return c;
}

void RunConfig::validate() const {
  require(model.b > 0.0 && model.b < 1.0, "model.b must be in (0,1)");
  require(model.epsilon > 0.0, "model.epsilon must be > 0");
  require(model.tolerance > 0.0, "model.tolerance must be > 0");
  require(simulate.method == "chain" || simulate.method == "cluster", "simulate.method must be chain or cluster");
  require(simulate.samples >= 1, "simulate.samples must be >= 1");
  require(simulate.burn_in >= 0, "simulate.burn_in must be >= 0");
  require(simulate.thinning_lag >= 1, "simulate.thinning_lag must be >= 1");
  require(simulate.depth >= 1 && simulate.depth <= 1000, "simulate.depth must be in [1, 1000]");
  require(simulate.streams >= 1 && simulate.streams <= 4096, "simulate.streams must be in [1, 4096]");
  require(simulate.max_population >= (std::int64_t{1} << 20), "simulate.max_population must be >= 2^20");
  require(simulate.saturation_budget >= 0, "simulate.saturation_budget must be >= 0");
  require(oracle.cutoff >= 1 && oracle.cutoff <= (std::int64_t{1} << 22), "oracle.cutoff must be in [1, 2^22]");
  require(oracle.tol > 0.0, "oracle.tol must be > 0");
  require(oracle.max_iter >= 1, "oracle.max_iter must be >= 1");
  require(!predict.x_grid.empty(), "predict.x_grid must be nonempty");
  for (double x : predict.x_grid) require(x >= 0.0 && std::isfinite(x), "predict.x_grid entries must be >= 0");
  require(predict.n_max >= 0, "predict.n_max must be >= 0");
  for (int id : verify.suite) require(id >= 1 && id <= 10, "verify.suite ids must be in 1..10");
  require(verify.level > 0.0 && verify.level < 1.0, "verify.level must be in (0,1)");
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["model"] = {{"b", model.b}, {"epsilon", model.epsilon}, {"tolerance", model.tolerance}};
  j["simulate"] = {{"method", simulate.method},
                   {"samples", simulate.samples},
                   {"burn_in", simulate.burn_in},
                   {"thinning_lag", simulate.thinning_lag},
                   {"depth", simulate.depth},
                   {"seed", simulate.seed},
                   {"streams", simulate.streams},
                   {"max_population", simulate.max_population},
                   {"saturation_budget", simulate.saturation_budget}};
  j["oracle"] = {{"cutoff", oracle.cutoff}, {"tol", oracle.tol}, {"max_iter", oracle.max_iter}};
  j["predict"] = {{"x_grid", predict.x_grid}, {"n_max", predict.n_max}};
  j["verify"] = {{"suite", verify.suite}, {"level", verify.level}};
  return j;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(to_json().dump()); }

std::string RunConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c = default_config();
  for (auto& [section, body] : root.items()) {
    if (!body.is_object()) {
      if (section == "model" || section == "simulate" || section == "oracle" || section == "predict" ||
          section == "verify")
        throw ConfigError("section '" + section + "' must be an object");
      throw ConfigError("unknown config key '" + section + "'");
    }
    for (auto& [key, v] : body.items()) {
      const std::string path = section + "." + key;
      if (section == "model") {
        if (key == "b") c.model.b = get_as<double>(v, path);
        else if (key == "epsilon") c.model.epsilon = get_as<double>(v, path);
        else if (key == "tolerance") c.model.tolerance = get_as<double>(v, path);
        else throw ConfigError("unknown config key '" + path + "'");
      } else if (section == "simulate") {
        if (key == "method") c.simulate.method = get_as<std::string>(v, path);
        else if (key == "samples") c.simulate.samples = get_as<std::int64_t>(v, path);
        else if (key == "burn_in") c.simulate.burn_in = get_as<std::int64_t>(v, path);
        else if (key == "thinning_lag") c.simulate.thinning_lag = get_as<std::int64_t>(v, path);
        else if (key == "depth") c.simulate.depth = get_as<int>(v, path);
        else if (key == "seed") {
          if (!v.is_number_unsigned()) throw ConfigError("bad value for key '" + path + "'");
          c.simulate.seed = v.get<std::uint64_t>();
        }
        else if (key == "streams") c.simulate.streams = get_as<int>(v, path);
        else if (key == "max_population") c.simulate.max_population = get_as<std::int64_t>(v, path);
        else if (key == "saturation_budget") c.simulate.saturation_budget = get_as<std::int64_t>(v, path);
        else throw ConfigError("unknown config key '" + path + "'");
      } else if (section == "oracle") {
        if (key == "cutoff") c.oracle.cutoff = get_as<std::int64_t>(v, path);
        else if (key == "tol") c.oracle.tol = get_as<double>(v, path);
        else if (key == "max_iter") c.oracle.max_iter = get_as<int>(v, path);
        else throw ConfigError("unknown config key '" + path + "'");
      } else if (section == "predict") {
        if (key == "x_grid") c.predict.x_grid = grid_from_json(v);
        else if (key == "n_max") c.predict.n_max = get_as<int>(v, path);
        else throw ConfigError("unknown config key '" + path + "'");
      } else if (section == "verify") {
        if (key == "suite") c.verify.suite = get_as<std::vector<int>>(v, path);
        else if (key == "level") c.verify.level = get_as<double>(v, path);
        else throw ConfigError("unknown config key '" + path + "'");
      } else {
        throw ConfigError("unknown config key '" + section + "'");
      }
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace bigjump
