#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bigjump/model.hpp"
#include "bigjump/rng.hpp"

namespace bigjump {

struct SamplerCaps {
  std::int64_t max_population = std::int64_t{1} << 40;
  std::int64_t rejection_retries = std::int64_t{1} << 20;
};

// Exact event counts; merged by addition across streams.
struct SamplerEvents {
  std::uint64_t saturations = 0;      // a value reached max_population
  std::uint64_t a_overflows = 0;      // an A draw exceeded 2^62
  std::uint64_t retry_caps = 0;       // a rejection loop hit its retry cap
  std::uint64_t spine_overflows = 0;  // proposal beyond 2^62 rejected while p < 1e-16

  SamplerEvents& operator+=(const SamplerEvents& o);
  std::uint64_t total() const { return saturations + a_overflows + retry_caps + spine_overflows; }
};

struct ChainConfig {
  std::int64_t burn_in = 1000;
  std::int64_t n_samples = 0;
  std::int64_t thinning_lag = 1;
  std::int64_t max_population = std::int64_t{1} << 40;

  // Throws std::invalid_argument on burn_in < 0, lag < 1, cap < 2^20.
  void validate() const;
};

struct ClusterSample {
  std::int64_t value = 0;
  std::int64_t immigration = 0;
  std::vector<std::int64_t> gen_contrib;      // index n-1 holds generation n
  std::vector<std::int64_t> gen_immigrants;   // A_{n+1}, same indexing
  int depth = 0;
  double remainder_bound = 0.0;
};

class Sampler {
 public:
  // Builds the extinction table up to max_depth for the thinned draws.
  Sampler(const LawB& law, int max_depth = 64, SamplerCaps caps = {});

  const LawB& law() const { return law_; }
  const ExtinctionTable& extinction() const { return table_; }
  const SamplerCaps& caps() const { return caps_; }
  const SamplerEvents& events() const { return events_; }
  void reset_events() { events_ = {}; }

  std::int64_t sample_A(RngStream& rng);
  std::int64_t sample_B(RngStream& rng);
  // B given B >= 1.
  std::int64_t sample_B_positive(RngStream& rng);
  std::int64_t binomial(std::int64_t n, double p, RngStream& rng);

  // Generation size n of a tree from one root, by thinned generation sweeps.
  std::int64_t sample_Dn(int n, RngStream& rng);
  // D_n given D_n >= 1.
  std::int64_t sample_Dn_positive(int n, RngStream& rng);

  // a + sum_{i<=x} B_i with a ~ A, via Binomial(x, theta) nonzero summands.
  std::int64_t chain_step(std::int64_t x, RngStream& rng);
  // Same law, one B draw per summand.
  std::int64_t chain_step_naive(std::int64_t x, RngStream& rng);

  ClusterSample sample_cluster(int depth, RngStream& rng);

 private:
  std::int64_t add_capped(std::int64_t a, std::int64_t b);
  std::int64_t sum_positive_generations(std::int64_t count, int n, RngStream& rng);
  std::int64_t spine_positive(int n, RngStream& rng);

  LawB law_;
  ExtinctionTable table_;
  SamplerCaps caps_;
  SamplerEvents events_;
};

std::vector<std::int64_t> run_chain(Sampler& sampler, const ChainConfig& config, RngStream& rng);

struct Attribution {
  int component = 0;  // 0 = immigration, n = generation n
  bool dominant = false;
  std::string label() const;
};

// Largest component of an exceedance; ties go to the lowest index.
// Throws std::invalid_argument if sample.value <= x.
Attribution attribute(const ClusterSample& sample, std::int64_t x);

// The exceedance is carried by immigrants: the immigration term dominates, or
// generation n dominates with A_{n+1} b^n > x / 2.
bool a_driven(const ClusterSample& sample, const Attribution& attribution, std::int64_t x, double b);

}  // namespace bigjump
