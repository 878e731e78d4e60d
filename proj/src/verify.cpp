#include "bigjump/verify.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <boost/version.hpp>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <set>

#include "bigjump/asymptotics.hpp"
#include "bigjump/oracle.hpp"
#include "bigjump/sampler.hpp"
#include "bigjump/stats.hpp"

namespace bigjump {

using nlohmann::ordered_json;

namespace {

constexpr std::int64_t kCutoff = std::int64_t{1} << 16;

ordered_json bracket_json(const Bracket& b) { return ordered_json::array({b.lo, b.hi}); }

struct Context {
  const RunConfig& config;
  const VerifyHooks& hooks;
  LawB law;
  std::unique_ptr<ClusterOracle> oracle;
  std::optional<StationaryResult> stationary;

  Context(const RunConfig& c, const VerifyHooks& h)
      : config(c), hooks(h), law(calibrate(c.model.b, c.model.epsilon, c.model.tolerance)) {}

  void log(const std::string& s) const {
    if (hooks.log) hooks.log(s);
  }
  ClusterOracle& cluster_oracle() {
    if (!oracle) {
      oracle = std::make_unique<ClusterOracle>(law, kCutoff);
      if (hooks.log) oracle->log = hooks.log;
    }
    return *oracle;
  }
  const StationaryResult& stationary_law() {
    if (!stationary) stationary = cluster_oracle().stationary(config.oracle.tol, config.oracle.max_iter);
    return *stationary;
  }
  Sampler make_sampler(int depth = 64) const {
    SamplerCaps caps;
    caps.max_population = config.simulate.max_population;
    return Sampler(law, depth, caps);
  }
  ChainConfig chain_config(std::int64_t n, std::int64_t lag) const {
    ChainConfig cc;
    cc.burn_in = 1000;
    cc.n_samples = n;
    cc.thinning_lag = lag;
    cc.max_population = config.simulate.max_population;
    return cc;
  }
};

CheckResult check_series(Context&) {
  CheckResult r{1, "power-series identities s1, s2 at b in {0.2, 0.5, 0.8}", {}, "|numeric - closed form| <= tol", 1e-10};
  double worst = 0.0;
  ordered_json per;
  for (double b : {0.2, 0.5, 0.8}) {
    SeriesIdentities s = series_identities(b);
    double e = std::max(std::fabs(s.s1 - s.s1_numeric), std::fabs(s.s2 - s.s2_numeric));
    per.push_back({{"b", b}, {"s1", s.s1}, {"s2", s.s2}, {"terms", s.terms}, {"max_abs_error", e}});
    worst = std::max(worst, e);
  }
  r.measured = {{"max_abs_error", worst}, {"cases", per}};
  r.pass = worst <= r.tolerance;
  return r;
}

CheckResult check_calibration(Context& ctx) {
  CheckResult r{2, "mean identity: partial sum of P(B > k) plus integral bounds brackets b", {}, "b inside bracket, width <= tol", 1e-9};
  const std::int64_t K = 10'000'000;
  Bracket br = mean_identity_bracket(ctx.law, K);
  r.measured = {{"b", ctx.law.mean()}, {"K", K}, {"bracket", bracket_json(br)}, {"width", br.width()},
                {"theta", ctx.law.theta()}, {"series_const", ctx.law.params().series_const}};
  r.pass = br.contains(ctx.law.mean()) && br.width() <= r.tolerance;
  return r;
}

CheckResult check_conv_ratio(Context& ctx) {
  CheckResult r{3, "convolution tail ratio: law B at x = 2^14 near 2, geometric control at x = 60 above 2.5", {}, "B ratio in [1.8, 2.2]; geometric ratio > 2.5", 0.2};
  const Pmf b = pmf_of(ctx.law, kCutoff, "B");
  const Bracket rb = conv_tail_ratio(b, 1 << 14);
  const Pmf g = pmf_of(GeometricLaw{0.5}, 256, "geometric");
  const Bracket rg = conv_tail_ratio(g, 60);
  r.measured = {{"law_B_ratio", bracket_json(rb)}, {"geometric_ratio", bracket_json(rg)}};
  r.pass = rb.inside(1.8, 2.2) && rg.lo > 2.5;
  return r;
}

CheckResult check_generations(Context& ctx) {
  CheckResult r{4, "generation tails D_2, D_3 against n b^(n-1) P(B > x) at x = 2^12, 2^13, 2^14", {}, "ratio in [0.7, 1.3]; ratio at 2^14 nearer 1 than at 2^12", 0.3};
  ClusterOracle& o = ctx.cluster_oracle();
  bool ok = true;
  ordered_json per;
  for (int n : {2, 3}) {
    const Pmf& d = o.generation(n);
    std::vector<double> mids;
    ordered_json rows;
    for (std::int64_t x : {std::int64_t{1} << 12, std::int64_t{1} << 13, std::int64_t{1} << 14}) {
      const double pred = generation_tail_pred(ctx.law, n, static_cast<double>(x));
      const Bracket s = d.survival(x);
      const Bracket ratio{s.lo / pred, s.hi / pred};
      ok = ok && ratio.inside(0.7, 1.3);
      mids.push_back(ratio.mid());
      rows.push_back({{"x", x}, {"exact", bracket_json(s)}, {"prediction", pred}, {"ratio", bracket_json(ratio)}});
    }
    const bool improves = std::fabs(mids.back() - 1.0) < std::fabs(mids.front() - 1.0);
    ok = ok && improves;
    per.push_back({{"n", n}, {"rows", rows}, {"improves", improves}});
  }
  r.measured = {{"cutoff", kCutoff}, {"generations", per}};
  r.pass = ok;
  return r;
}

CheckResult check_random_sum(Context& ctx) {
  CheckResult r{5, "random sum of A copies of D_1 at x = 2^13 against the per-generation prediction", {}, "ratio in [0.7, 1.3]", 0.3};
  const Pmf& d1 = ctx.cluster_oracle().generation(1);
  const std::int64_t x = 1 << 13;
  RandomSumCheck c = random_sum_check(LawA{}, d1, x);
  const double formula = per_generation_pred(ctx.law, 1, static_cast<double>(x));
  r.measured = {{"x", x}, {"exact", bracket_json(c.exact)}, {"prediction", c.prediction},
                {"ratio", bracket_json(c.ratio)}, {"closed_form_prediction", formula}};
  r.pass = c.ratio.inside(0.7, 1.3);
  return r;
}

CheckResult check_summability(Context& ctx) {
  CheckResult r{6, "A-tail sums against b/((1-b)x) at x = 10^6; correction_sum * x decreasing", {}, "|exact/asymptote - 1| <= tol; strictly decreasing on {1e3..1e6}", 0.02};
  bool ok = true;
  ordered_json per;
  for (double b : {0.2, 0.5, 0.8}) {
    ATailSums s = a_tail_sums(b, 1e6);
    const double ratio = s.exact / s.asymptote;
    ok = ok && std::fabs(ratio - 1.0) <= r.tolerance;
    per.push_back({{"b", b}, {"exact", s.exact}, {"asymptote", s.asymptote}, {"ratio", ratio}});
  }
  CorrectionSweep sw = correction_sweep(ctx.law, {1e3, 1e4, 1e5, 1e6});
  ok = ok && sw.decreasing;
  r.measured = {{"a_tail", per}, {"correction_times_x", sw.scaled}, {"decreasing_from", sw.x0}};
  r.pass = ok;
  return r;
}

CheckResult check_ks(Context& ctx) {
  CheckResult r{7, "chain vs cluster samples, two-sample KS at alpha = 0.01", {}, "no rejection; remainder_bound < 1e-3; no saturation", 0.01};
  const std::int64_t n = 100000;
  const int depth = 40;
  Sampler s = ctx.make_sampler();
  RngStream chain_rng(ctx.config.simulate.seed, 1);
  std::vector<std::int64_t> chain = run_chain(s, ctx.chain_config(n, 10), chain_rng);
  RngStream cluster_rng(ctx.config.simulate.seed, 2);
  std::vector<std::int64_t> cluster;
  cluster.reserve(n);
  double remainder = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    ClusterSample c = s.sample_cluster(depth, cluster_rng);
    remainder = c.remainder_bound;
    cluster.push_back(c.value);
  }
  KsResult ks = ks_two_sample(chain, cluster, 0.01);
  const SamplerEvents& ev = s.events();
  r.measured = {{"samples", n}, {"burn_in", 1000}, {"thinning_lag", 10}, {"depth", depth},
                {"statistic", ks.statistic}, {"critical", ks.critical}, {"remainder_bound", remainder},
                {"saturations", ev.saturations}, {"sampler_events", ev.total()}};
  r.pass = !ks.reject && remainder < 1e-3 && ev.saturations == 0;
  return r;
}

CheckResult check_stationary(Context& ctx) {
  CheckResult r{8, "stationary survival at x = 1024, 4096 against the leading tail and the two-scale total", {}, "ratio to leading in [0.75, 1.25]; |log ratio| to two-scale total < |log ratio| to leading", 0.25};
  const StationaryResult& st = ctx.stationary_law();
  bool ok = true;
  ordered_json rows;
  for (std::int64_t x : {std::int64_t{1024}, std::int64_t{4096}}) {
    const double xd = static_cast<double>(x);
    const Bracket s = st.law.survival(x);
    const double lead = leading_tail(ctx.law.mean(), xd);
    const double two = lead + second_scale(ctx.law, xd);
    // closed form with the opposite sign on the ln(1/b) term, for comparison
    const double bb = ctx.law.mean();
    const double alt = lead + (std::log(xd) / ((1 - bb) * (1 - bb)) -
                               std::log(1 / bb) * (1 + bb) / ((1 - bb) * (1 - bb) * (1 - bb))) *
                                  ctx.law.slowly_varying(xd) / (1 + xd);
    const Bracket rl{s.lo / lead, s.hi / lead};
    const Bracket rt{s.lo / two, s.hi / two};
    const double log_lead = std::fabs(std::log(s.mid() / lead));
    const double log_two = std::fabs(std::log(s.mid() / two));
    const bool in_range = rl.inside(0.75, 1.25);
    const bool improves = log_two < log_lead;
    ok = ok && in_range && improves;
    rows.push_back({{"x", x}, {"survival", bracket_json(s)}, {"leading", lead}, {"two_scale_total", two},
                    {"ratio_leading", bracket_json(rl)}, {"ratio_two_scale", bracket_json(rt)},
                    {"abs_log_leading", log_lead}, {"abs_log_two_scale", log_two},
                    {"abs_log_two_scale_alt_sign", std::fabs(std::log(s.mid() / alt))},
                    {"leading_in_range", in_range}, {"second_scale_improves", improves}});
  }
  r.measured = {{"cutoff", kCutoff}, {"iterations", st.iterations}, {"last_gap", st.last_gap},
                {"remainder", st.remainder}, {"rows", rows}};
  r.pass = ok;
  return r;
}

CheckResult check_negligibility(Context& ctx) {
  CheckResult r{9, "second_scale(x) * (1 + x) decreasing on the doubling grid 1e4..1e12", {}, "strictly decreasing", 0.0};
  std::vector<double> vals;
  bool ok = true;
  for (double x = 1e4; x <= 1e12; x *= 2.0) {
    vals.push_back(second_scale(ctx.law, x) * (1.0 + x));
    if (vals.size() > 1 && !(vals.back() < vals[vals.size() - 2])) ok = false;
  }
  r.measured = {{"points", vals.size()}, {"first", vals.front()}, {"last", vals.back()}};
  r.pass = ok;
  return r;
}

CheckResult check_mc_oracle(Context& ctx) {
  CheckResult r{10, "chain survival at x = 10, 100, 1000 inside the oracle bracket widened by the Clopper-Pearson interval", {}, "interval overlaps the oracle bracket", 1.0 - ctx.config.verify.level};
  const StationaryResult& st = ctx.stationary_law();
  Sampler s = ctx.make_sampler();
  RngStream rng(ctx.config.simulate.seed, 3);
  const std::int64_t n = 1000000;
  std::vector<std::int64_t> xs = run_chain(s, ctx.chain_config(n, 10), rng);
  TailCurve curve = empirical_survival(std::move(xs), {10.0, 100.0, 1000.0}, ctx.config.verify.level);
  bool ok = s.events().saturations == 0;
  ordered_json rows;
  for (std::size_t i = 0; i < curve.xs.size(); ++i) {
    const Bracket o = st.law.survival(static_cast<std::int64_t>(curve.xs[i]));
    const bool hit = curve.ci(i).overlaps(o);
    ok = ok && hit;
    rows.push_back({{"x", curve.xs[i]}, {"estimate", curve.est[i]}, {"ci", bracket_json(curve.ci(i))},
                    {"oracle", bracket_json(o)}, {"consistent", hit}});
  }
  r.measured = {{"samples", n}, {"burn_in", 1000}, {"thinning_lag", 10}, {"level", curve.level},
                {"saturations", s.events().saturations}, {"rows", rows}};
  r.pass = ok;
  return r;
}

}  // namespace

ordered_json VerifyReport::to_json() const {
  ordered_json j;
  j["checks"] = ordered_json::array();
  for (const CheckResult& c : checks) {
    j["checks"].push_back({{"id", c.id},
                           {"description", c.description},
                           {"measured", c.measured},
                           {"expected", c.expected},
                           {"tolerance", c.tolerance},
                           {"pass", c.pass}});
  }
  j["pass"] = pass;
  j["provenance"] = {{"seed", seed},
                     {"config_hash", config_hash},
                     {"versions",
                      {{"bigjump", kVersion},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                     "." + std::to_string(EIGEN_MINOR_VERSION)},
                       {"boost", std::to_string(BOOST_VERSION / 100000) + "." +
                                     std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                                     std::to_string(BOOST_VERSION % 100)}}},
                     {"config", config}};
  return j;
}

std::string VerifyReport::dump() const { return to_json().dump(2) + "\n"; }

VerifyReport run_verify(const RunConfig& config, const VerifyHooks& hooks) {
  config.validate();
  using Fn = CheckResult (*)(Context&);
  static constexpr Fn table[] = {check_series,  check_calibration, check_conv_ratio,   check_generations,
                                 check_random_sum, check_summability, check_ks,       check_stationary,
                                 check_negligibility, check_mc_oracle};
  Context ctx(config, hooks);
  VerifyReport rep;
  rep.seed = config.simulate.seed;
  rep.config_hash = config.hash_hex();
  rep.config = config.to_json();
  rep.pass = true;
  std::set<int> ids(config.verify.suite.begin(), config.verify.suite.end());
  for (int id : ids) {
    ctx.log("check " + std::to_string(id));
    auto t0 = std::chrono::steady_clock::now();
    CheckResult c;
    try {
      c = table[id - 1](ctx);
    } catch (const std::exception& e) {
      c.id = id;
      c.description = "check raised an error";
      c.measured = {{"error", e.what()}};
      c.pass = false;
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.pass = rep.pass && c.pass;
    if (hooks.on_check) hooks.on_check(c);
    rep.checks.push_back(std::move(c));
  }
  return rep;
}

}  // namespace bigjump
