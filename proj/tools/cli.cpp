#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bigjump/asymptotics.hpp"
#include "bigjump/config.hpp"
#include "bigjump/oracle.hpp"
#include "bigjump/sampler.hpp"
#include "bigjump/stats.hpp"
#include "bigjump/verify.hpp"

namespace bigjump {

namespace {

struct SaturationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string stamp(const RunConfig& c) {
  return "# config_hash=" + c.hash_hex() + " seed=" + std::to_string(c.simulate.seed) + "\n";
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_atomic(path, content);
  }
}

LawB make_law(const RunConfig& c) { return LawB(calibrate(c.model.b, c.model.epsilon, c.model.tolerance)); }

Sampler make_sampler(const LawB& law, const RunConfig& c, int depth) {
  SamplerCaps caps;
  caps.max_population = c.simulate.max_population;
  return Sampler(law, std::max(depth, 1), caps);
}

void check_budget(const SamplerEvents& ev, const RunConfig& c, std::ostream& err) {
  if (ev.total() > 0)
    err << "sampler events: saturations=" << ev.saturations << " a_overflows=" << ev.a_overflows
        << " retry_caps=" << ev.retry_caps << " spine_overflows=" << ev.spine_overflows << "\n";
  if (static_cast<std::int64_t>(ev.saturations) > c.simulate.saturation_budget)
    throw SaturationError("saturation events " + std::to_string(ev.saturations) + " exceed budget " +
                          std::to_string(c.simulate.saturation_budget));
}

int cmd_model(const RunConfig& c, std::ostream& out) {
  LawB law = make_law(c);
  const Bracket mb = mean_identity_bracket(law, 1'000'000);
  bool markov_ok = true;
  try {
    extinction_table(law, 60);
  } catch (const std::logic_error&) {
    markov_ok = false;
  }
  nlohmann::ordered_json j;
  j["b"] = law.mean();
  j["epsilon"] = law.params().epsilon;
  j["theta"] = law.theta();
  j["series_const"] = law.params().series_const;
  j["checks"] = {{"mean_residual", std::fabs(mb.mid() - law.mean())}, {"markov_bound_ok", markov_ok}};
  j["seed"] = c.simulate.seed;
  j["config_hash"] = c.hash_hex();
  out << j.dump(2) << "\n";
  return markov_ok ? 0 : 1;
}

int cmd_predict(const RunConfig& c, const std::string& path, std::ostream& out) {
  LawB law = make_law(c);
  std::ostringstream csv;
  csv << stamp(c) << "x,leading,second_scale,two_scale_total,decomposition,a_tail_exact,a_tail_asym\n";
  for (const PredictionRow& r : prediction_table(law, c.predict.x_grid, c.predict.n_max)) {
    csv << num(r.x) << ',' << num(r.leading) << ',' << num(r.second_scale) << ',' << num(r.two_scale_total) << ','
        << num(r.decomposition) << ',' << num(r.a_tail_exact) << ',' << num(r.a_tail_asym) << '\n';
  }
  emit(path, csv.str(), out);
  return 0;
}

int cmd_oracle(const RunConfig& c, const std::string& which, int n, const std::string& path, std::ostream& out,
               std::ostream& err) {
  LawB law = make_law(c);
  const std::int64_t N = c.oracle.cutoff;
  Pmf p;
  std::string extra;
  if (which == "A") {
    p = pmf_of(LawA{}, N, "A");
  } else if (which == "B") {
    p = pmf_of(law, N, "B");
  } else if (which == "Dn") {
    if (n < 1) throw ConfigError("--n must be >= 1");
    p = dn_pmf(law, n, N);
  } else {
    ClusterOracle o(law, N);
    o.log = [&err](const std::string& s) { err << s << "\n"; };
    StationaryResult st = o.stationary(c.oracle.tol, c.oracle.max_iter);
    extra = "# iterations=" + std::to_string(st.iterations) + " last_gap=" + num(st.last_gap) +
            " remainder=" + num(st.remainder) + "\n";
    p = st.law;
  }
  const Eigen::ArrayXd lo = p.survival_lower(), hi = p.survival_upper();
  std::ostringstream csv;
  csv << stamp(c) << "# law=" << which << (which == "Dn" ? " n=" + std::to_string(n) : "") << " cutoff=" << N
      << "\n"
      << extra << "k,mass,survival_lo,survival_hi\n";
  for (std::int64_t k = 0; k <= N; ++k)
    csv << k << ',' << num(p.mass()[k]) << ',' << num(lo[k]) << ',' << num(hi[k]) << '\n';
  emit(path, csv.str(), out);
  return 0;
}

int cmd_simulate(const RunConfig& c, const std::string& path, const std::string& tail_path,
                 const std::vector<double>& tail_grid, double tail_level, std::ostream& out, std::ostream& err) {
  LawB law = make_law(c);
  const bool cluster = c.simulate.method == "cluster";
  std::ostringstream csv;
  csv << stamp(c) << "sample_index,value,method,stream_id";
  if (cluster) {
    csv << ",immigration";
    for (int g = 1; g <= c.simulate.depth; ++g) csv << ",gen_" << g;
    csv << ",remainder_bound";
  }
  csv << '\n';
  SamplerEvents events;
  std::vector<TailCurve> curves;
  for (int s = 0; s < c.simulate.streams; ++s) {
    RngStream rng(c.simulate.seed, static_cast<std::uint64_t>(s));
    Sampler sampler = make_sampler(law, c, std::max(64, c.simulate.depth));
    std::vector<std::int64_t> values;
    if (cluster) {
      for (std::int64_t i = 0; i < c.simulate.samples; ++i) {
        ClusterSample cs = sampler.sample_cluster(c.simulate.depth, rng);
        values.push_back(cs.value);
        csv << i << ',' << cs.value << ",cluster," << s << ',' << cs.immigration;
        for (std::int64_t g : cs.gen_contrib) csv << ',' << g;
        csv << ',' << num(cs.remainder_bound) << '\n';
      }
    } else {
      ChainConfig cc;
      cc.burn_in = c.simulate.burn_in;
      cc.n_samples = c.simulate.samples;
      cc.thinning_lag = c.simulate.thinning_lag;
      cc.max_population = c.simulate.max_population;
      values = run_chain(sampler, cc, rng);
      for (std::size_t i = 0; i < values.size(); ++i) csv << i << ',' << values[i] << ",chain," << s << '\n';
    }
    events += sampler.events();
    if (!tail_path.empty()) curves.push_back(empirical_survival(std::move(values), tail_grid, tail_level));
  }
  emit(path, csv.str(), out);
  if (!tail_path.empty()) {
    TailCurve curve = merge_curves(curves);
    std::vector<double> pred;
    for (double x : curve.xs) pred.push_back(leading_tail(law.mean(), x));
    std::ostringstream t;
    t << stamp(c) << "x,est,ci_lo,ci_hi,predictor,ratio\n";
    for (const RatioRow& r : ratio_diagnostic(curve, pred))
      t << num(r.x) << ',' << num(r.est) << ',' << num(r.ci_lo) << ',' << num(r.ci_hi) << ',' << num(r.predictor)
        << ',' << num(r.ratio) << '\n';
    emit(tail_path, t.str(), out);
  }
  check_budget(events, c, err);
  return 0;
}

int cmd_attribute(const RunConfig& c, std::int64_t x, std::int64_t wanted, std::int64_t max_draws,
                  const std::string& path, std::ostream& out, std::ostream& err) {
  if (x < 1) throw ConfigError("--x must be >= 1");
  if (wanted < 1) throw ConfigError("--exceedances must be >= 1");
  LawB law = make_law(c);
  Sampler sampler = make_sampler(law, c, std::max(64, c.simulate.depth));
  RngStream rng(c.simulate.seed, 0);
  std::vector<Attribution> labels;
  std::int64_t draws = 0, driven = 0;
  while (static_cast<std::int64_t>(labels.size()) < wanted && draws < max_draws) {
    ClusterSample cs = sampler.sample_cluster(c.simulate.depth, rng);
    ++draws;
    if (cs.value <= x) continue;
    Attribution a = attribute(cs, x);
    if (a_driven(cs, a, x, law.mean())) ++driven;
    labels.push_back(a);
  }
  AttributionSummary sum = attribution_summary(labels);
  const double p_hat = static_cast<double>(sum.total) / static_cast<double>(draws);
  const double xd = static_cast<double>(x);
  const double weight = (LawA::survival_real(xd) + a_tail_sums(law.mean(), xd).exact) / p_hat;
  std::ostringstream csv;
  csv << stamp(c) << "label,count,share\n";
  for (const auto& [label, count] : sum.counts) csv << label << ',' << count << ',' << num(sum.share(label)) << '\n';
  emit(path, csv.str(), out);
  nlohmann::ordered_json j;
  j["x"] = x;
  j["draws"] = draws;
  j["exceedances"] = sum.total;
  j["p_hat"] = p_hat;
  j["dominant_share"] = sum.dominant_share();
  j["a_driven_share"] = static_cast<double>(driven) / static_cast<double>(sum.total);
  j["predicted_a_share"] = weight;
  j["seed"] = c.simulate.seed;
  j["config_hash"] = c.hash_hex();
  (path.empty() || path == "-" ? err : out) << j.dump(2) << "\n";
  check_budget(sampler.events(), c, err);
  return 0;
}

int cmd_verify(const RunConfig& c, const std::string& path, std::ostream& out, std::ostream& err) {
  VerifyHooks hooks;
  hooks.on_check = [&err](const CheckResult& r) {
    err << (r.pass ? "PASS" : "FAIL") << " check " << r.id << ": " << r.description << "\n";
  };
  VerifyReport rep = run_verify(c, hooks);
  emit(path, rep.dump(), out);
  return rep.pass ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heavy-tailed branching fixed point: model, predictions, oracle, simulation, verification."};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");

  // model
  double b = 0, eps = 0, tolerance = 0;
  auto* model = app.add_subcommand("model", "Print calibrated parameters as JSON");
  auto add_model_flags = [&](CLI::App* sub) {
    sub->add_option("--b", b, "offspring mean in (0,1)");
    sub->add_option("--epsilon", eps, "slow-variation exponent > 0");
    sub->add_option("--tolerance", tolerance, "calibration tolerance");
  };
  add_model_flags(model);

  // predict
  auto* predict = app.add_subcommand(
      "predict",
      "Asymptotic predictions as CSV.\nColumns: x, leading, second_scale, two_scale_total, decomposition, "
      "a_tail_exact, a_tail_asym");
  add_model_flags(predict);
  std::string grid, out_path;
  int n_max = 0;
  predict->add_option("--x-grid", grid, "comma list (10,100,1000) or log:lo:hi:count");
  predict->add_option("--n-max", n_max, "generations in the decomposition (0: geometric cutoff)");
  predict->add_option("--out", out_path, "output CSV (default stdout)");

  // oracle
  auto* oracle = app.add_subcommand(
      "oracle", "Truncated pmf with survival bracket as CSV.\nColumns: k, mass, survival_lo, survival_hi");
  add_model_flags(oracle);
  std::string law_name = "X";
  int gen = 1;
  std::int64_t cutoff = 0;
  double otol = 0;
  int max_iter = 0;
  oracle->add_option("--law", law_name, "A, B, Dn or X")->check(CLI::IsMember({"A", "B", "Dn", "X"}));
  oracle->add_option("--n", gen, "generation index for --law Dn");
  oracle->add_option("--cutoff", cutoff, "support cutoff N");
  oracle->add_option("--tol", otol, "stationary stopping tolerance");
  oracle->add_option("--max-iter", max_iter, "stationary iteration cap");
  oracle->add_option("--out", out_path, "output CSV (default stdout)");

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate",
      "Monte Carlo draws of X as CSV.\nColumns: sample_index, value, method, stream_id; cluster adds immigration, "
      "gen_1..gen_m, remainder_bound.\nTail CSV columns: x, est, ci_lo, ci_hi, predictor, ratio");
  add_model_flags(simulate);
  std::string method, tail_out, tail_grid = "10,100,1000";
  std::int64_t samples = 0, burnin = 0, lag = 0, max_pop = 0;
  int depth = 0, streams = 0;
  std::uint64_t seed = 0;
  double level = 0.99;
  simulate->add_option("--method", method, "chain or cluster")->check(CLI::IsMember({"chain", "cluster"}));
  simulate->add_option("--samples", samples, "samples per stream");
  simulate->add_option("--burnin", burnin, "chain burn-in steps");
  simulate->add_option("--lag", lag, "chain thinning lag");
  simulate->add_option("--depth", depth, "cluster truncation depth");
  simulate->add_option("--seed", seed, "RNG seed");
  simulate->add_option("--streams", streams, "independent streams 0..streams-1");
  simulate->add_option("--max-population", max_pop, "saturation cap");
  simulate->add_option("--out", out_path, "output CSV (default stdout)");
  simulate->add_option("--tail-out", tail_out, "empirical survival CSV against the leading tail");
  simulate->add_option("--tail-grid", tail_grid, "thresholds for --tail-out");
  simulate->add_option("--level", level, "confidence level for --tail-out");

  // verify
  auto* verify = app.add_subcommand("verify", "Run the acceptance checks; writes a JSON report");
  add_model_flags(verify);
  std::string suite;
  verify->add_option("--suite", suite, "comma list of check ids (default all)");
  verify->add_option("--level", level, "Clopper-Pearson level for check 10");
  verify->add_option("--seed", seed, "RNG seed");
  verify->add_option("--out", out_path, "report path (default stdout)");

  // attribute
  auto* attr = app.add_subcommand(
      "attribute", "Label cluster exceedances of x by dominant component.\nColumns: label, count, share");
  add_model_flags(attr);
  std::int64_t x = 1000, wanted = 10000, max_draws = 100000000;
  attr->add_option("--x", x, "threshold");
  attr->add_option("--exceedances", wanted, "exceedances to collect");
  attr->add_option("--max-draws", max_draws, "cluster draws cap");
  attr->add_option("--depth", depth, "cluster truncation depth");
  attr->add_option("--seed", seed, "RNG seed");
  attr->add_option("--out", out_path, "output CSV (default stdout)");

  std::vector<std::string> argv_store{"bigjump"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  auto given = [sub](const char* flag) { return sub->get_option_no_throw(flag) && sub->count(flag) > 0; };
  try {
    RunConfig c = config_path.empty() ? default_config() : load_config(config_path);
    if (given("--b")) c.model.b = b;
    if (given("--epsilon")) c.model.epsilon = eps;
    if (given("--tolerance")) c.model.tolerance = tolerance;
    if (given("--x-grid")) c.predict.x_grid = parse_grid(grid);
    if (given("--n-max")) c.predict.n_max = n_max;
    if (given("--cutoff")) c.oracle.cutoff = cutoff;
    if (given("--tol")) c.oracle.tol = otol;
    if (given("--max-iter")) c.oracle.max_iter = max_iter;
    if (given("--method")) c.simulate.method = method;
    if (given("--samples")) c.simulate.samples = samples;
    if (given("--burnin")) c.simulate.burn_in = burnin;
    if (given("--lag")) c.simulate.thinning_lag = lag;
    if (given("--depth")) c.simulate.depth = depth;
    if (given("--seed")) c.simulate.seed = seed;
    if (given("--streams")) c.simulate.streams = streams;
    if (given("--max-population")) c.simulate.max_population = max_pop;
    if (sub == verify && given("--level")) c.verify.level = level;
    if (given("--suite")) {
      c.verify.suite.clear();
      for (double v : parse_grid(suite)) c.verify.suite.push_back(static_cast<int>(v));
    }
    c.validate();

    if (sub == model) return cmd_model(c, out);
    if (sub == predict) return cmd_predict(c, out_path, out);
    if (sub == oracle) return cmd_oracle(c, law_name, gen, out_path, out, err);
    if (sub == simulate) {
      std::vector<double> tg = parse_grid(tail_grid);
      return cmd_simulate(c, out_path, tail_out, tg, level, out, err);
    }
    if (sub == verify) return cmd_verify(c, out_path, out, err);
    return cmd_attribute(c, x, wanted, max_draws, out_path, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const SaturationError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bigjump
