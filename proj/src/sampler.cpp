#include "bigjump/sampler.hpp"

#include <boost/random/binomial_distribution.hpp>
#include <cmath>
#include <stdexcept>

namespace bigjump {

namespace {
// Below this success probability, conditional generations use the spine
// construction rather than plain rejection.
constexpr double kRejectionFloor = 1.0 / 64.0;
}  // namespace

SamplerEvents& SamplerEvents::operator+=(const SamplerEvents& o) {
  saturations += o.saturations;
  a_overflows += o.a_overflows;
  retry_caps += o.retry_caps;
  spine_overflows += o.spine_overflows;
  return *this;
}

void ChainConfig::validate() const {
  if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");
  if (n_samples < 0) throw std::invalid_argument("n_samples must be >= 0");
  if (thinning_lag < 1) throw std::invalid_argument("thinning_lag must be >= 1");
  if (max_population < (std::int64_t{1} << 20)) throw std::invalid_argument("max_population must be >= 2^20");
}

Sampler::Sampler(const LawB& law, int max_depth, SamplerCaps caps)
    : law_(law), table_(extinction_table(law, std::max(1, max_depth))), caps_(caps) {
  if (caps_.max_population < (std::int64_t{1} << 20)) throw std::invalid_argument("max_population must be >= 2^20");
  if (caps_.rejection_retries < 1) throw std::invalid_argument("rejection_retries must be >= 1");
}

std::int64_t Sampler::add_capped(std::int64_t a, std::int64_t b) {
  const std::int64_t cap = caps_.max_population;
  if (a >= cap || b >= cap || b >= cap - a) {
    ++events_.saturations;
    return cap;
  }
  return a + b;
}

std::int64_t Sampler::sample_A(RngStream& rng) {
  bool sat = false;
  std::int64_t a = LawA::from_uniform(rng.uniform(), &sat);
  if (sat) ++events_.a_overflows;
  return a;
}

std::int64_t Sampler::sample_B(RngStream& rng) { return law_.quantile(rng.uniform()); }

std::int64_t Sampler::sample_B_positive(RngStream& rng) { return law_.positive_quantile(rng.uniform()); }

std::int64_t Sampler::binomial(std::int64_t n, double p, RngStream& rng) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  boost::random::binomial_distribution<std::int64_t, double> dist(n, p);
  return dist(rng);
}

std::int64_t Sampler::sample_Dn(int n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("generation index must be >= 1");
  std::int64_t z = 1;
  for (int g = 0; g < n && z > 0; ++g) {
    std::int64_t k = binomial(z, law_.theta(), rng);
    std::int64_t next = 0;
    for (std::int64_t i = 0; i < k; ++i) {
      next = add_capped(next, sample_B_positive(rng));
      if (next == caps_.max_population) break;
    }
    z = next;
  }
  return z;
}

std::int64_t Sampler::sum_positive_generations(std::int64_t count, int n, RngStream& rng) {
  std::int64_t s = 0;
  for (std::int64_t i = 0; i < count; ++i) {
    s = add_capped(s, sample_Dn_positive(n, rng));
    if (s == caps_.max_population) break;
  }
  return s;
}

std::int64_t Sampler::sample_Dn_positive(int n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("generation index must be >= 1");
  if (n == 1) return sample_B_positive(rng);
  if (n > table_.n_max()) throw std::out_of_range("generation beyond extinction table");
  if (table_.p[n] >= kRejectionFloor) {
    for (std::int64_t t = 0; t < caps_.rejection_retries; ++t) {
      std::int64_t d = sample_Dn(n, rng);
      if (d > 0) return d;
    }
    ++events_.retry_caps;
  }
  return spine_positive(n, rng);
}

// Given D_n >= 1, let F be the first root child whose line survives n-1 more
// generations: P(F = i) is proportional to P(B >= i) q^(i-1), q = q[n-1].
// F - 1 is proposed from the equilibrium law P(E = k) = P(B > k) / b and
// accepted with probability q^E. Then B | B >= F, and the children after F
// survive independently with probability p[n-1].
std::int64_t Sampler::spine_positive(int n, RngStream& rng) {
  const double p = table_.p[n - 1];
  const double log_q = std::log1p(-p);
  std::int64_t tries = 0;
  std::int64_t first = 0;
  for (;;) {
    if (++tries == caps_.rejection_retries) ++events_.retry_caps;
    const double v = rng.uniform();
    const double u = rng.uniform();
    auto [lo, hi] = law_.equilibrium_bracket(v);
    if (hi < 0) {
      // q^E underflows to 0 beyond 2^62 unless p is below ~1e-16.
      if (p < 1e-16) ++events_.spine_overflows;
      continue;
    }
    // E > lo, so u >= q^(lo+1) rejects without locating E.
    if (u >= std::exp(static_cast<double>(lo + 1) * log_q)) continue;
    std::int64_t e = law_.equilibrium_quantile(v);
    if (u < std::exp(static_cast<double>(e) * log_q)) {
      first = e + 1;
      break;
    }
  }
  std::int64_t kids = law_.quantile(rng.uniform() * law_.survival(first - 1));
  std::int64_t survivors = 1 + binomial(kids - first, p, rng);
  return sum_positive_generations(survivors, n - 1, rng);
}

std::int64_t Sampler::chain_step(std::int64_t x, RngStream& rng) {
  if (x < 0) throw std::invalid_argument("chain state must be >= 0");
  std::int64_t s = add_capped(0, sample_A(rng));
  std::int64_t k = binomial(x, law_.theta(), rng);
  for (std::int64_t i = 0; i < k && s < caps_.max_population; ++i) s = add_capped(s, sample_B_positive(rng));
  return s;
}

std::int64_t Sampler::chain_step_naive(std::int64_t x, RngStream& rng) {
  if (x < 0) throw std::invalid_argument("chain state must be >= 0");
  std::int64_t s = add_capped(0, sample_A(rng));
  for (std::int64_t i = 0; i < x && s < caps_.max_population; ++i) s = add_capped(s, sample_B(rng));
  return s;
}

ClusterSample Sampler::sample_cluster(int depth, RngStream& rng) {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (depth > table_.n_max()) throw std::out_of_range("depth beyond extinction table");
  ClusterSample c;
  c.depth = depth;
  c.immigration = add_capped(0, sample_A(rng));
  c.value = c.immigration;
  c.gen_contrib.resize(depth);
  c.gen_immigrants.resize(depth);
  for (int n = 1; n <= depth; ++n) {
    std::int64_t a = sample_A(rng);
    c.gen_immigrants[n - 1] = a;
    std::int64_t k = binomial(a, table_.p[n], rng);
    c.gen_contrib[n - 1] = sum_positive_generations(k, n, rng);
    c.value = add_capped(c.value, c.gen_contrib[n - 1]);
  }
  c.remainder_bound = cluster_remainder_bound(law_.mean(), depth);
  return c;
}

std::vector<std::int64_t> run_chain(Sampler& sampler, const ChainConfig& config, RngStream& rng) {
  config.validate();
  if (config.max_population != sampler.caps().max_population)
    throw std::invalid_argument("chain max_population differs from the sampler cap");
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(config.n_samples));
  std::int64_t x = 0;
  for (std::int64_t t = 0; t < config.burn_in; ++t) x = sampler.chain_step(x, rng);
  for (std::int64_t i = 0; i < config.n_samples; ++i) {
    for (std::int64_t t = 0; t < config.thinning_lag; ++t) x = sampler.chain_step(x, rng);
    out.push_back(x);
  }
  return out;
}

std::string Attribution::label() const {
  return component == 0 ? std::string("immigration") : "gen " + std::to_string(component);
}

Attribution attribute(const ClusterSample& sample, std::int64_t x) {
  if (sample.value <= x) throw std::invalid_argument("sample does not exceed x");
  Attribution a;
  std::int64_t best = sample.immigration;
  for (std::size_t n = 0; n < sample.gen_contrib.size(); ++n) {
    if (sample.gen_contrib[n] > best) {
      best = sample.gen_contrib[n];
      a.component = static_cast<int>(n) + 1;
    }
  }
  a.dominant = 2.0 * static_cast<double>(best) > static_cast<double>(x);
  return a;
}

bool a_driven(const ClusterSample& sample, const Attribution& attribution, std::int64_t x, double b) {
  if (attribution.component == 0) return true;
  const int n = attribution.component;
  double expected = static_cast<double>(sample.gen_immigrants[n - 1]) * std::pow(b, n);
  return 2.0 * expected > static_cast<double>(x);
}

}  // namespace bigjump
