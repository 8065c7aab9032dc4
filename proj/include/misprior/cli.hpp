#pragma once

#include "misprior/misprior.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace misprior::cli {

/// Effective parameters: built-in defaults < config file < command-line flags.
class Params {
 public:
  Params(Config cfg, std::set<std::string> allowed) : cfg_(std::move(cfg)), allowed_(std::move(allowed)) {
    for (const auto& k : cfg_.keys()) {
      if (!allowed_.count(k)) throw ConfigError(k, "unknown field for this experiment");
    }
  }

  Config& config() { return cfg_; }
  const Config& config() const { return cfg_; }

  long long integer(const std::string& key, std::optional<long long> def = std::nullopt) const {
    if (!cfg_.has(key)) {
      if (!def) throw ConfigError(key, "missing required field");
      return *def;
    }
    return cfg_.get_int(key);
  }
  double real(const std::string& key, std::optional<double> def = std::nullopt) const {
    if (!cfg_.has(key)) {
      if (!def) throw ConfigError(key, "missing required field");
      return *def;
    }
    return cfg_.get_double(key);
  }
  std::string text(const std::string& key, std::optional<std::string> def = std::nullopt) const {
    if (!cfg_.has(key)) {
      if (!def) throw ConfigError(key, "missing required field");
      return *def;
    }
    return cfg_.get_string(key);
  }
  bool flag(const std::string& key, bool def) const { return cfg_.has(key) ? cfg_.get_bool(key) : def; }

  template <class T>
  std::vector<T> list(const std::string& key, const std::string& def) const {
    const std::string s = text(key, def);
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      try {
        if constexpr (std::is_integral_v<T>) out.push_back(static_cast<T>(std::stoll(item, &used)));
        else out.push_back(static_cast<T>(std::stod(item, &used)));
      } catch (const std::exception&) {
        throw ConfigError(key, "bad list entry '" + item + "'");
      }
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw ConfigError(key, "bad list entry '" + item + "'");
    }
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
  }

 private:
  Config cfg_;
  std::set<std::string> allowed_;
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<int> jobs;
  bool random_ties = false;
  bool dump_config = false;
};

inline std::uint64_t resolve_seed(const Common& c, const Params& p) {
  if (c.seed) return *c.seed;
  if (p.config().has("seed")) {
    const long long s = p.integer("seed");
    if (s < 0) throw ConfigError("seed", "must be nonnegative");
    return static_cast<std::uint64_t>(s);
  }
  if (const char* env = std::getenv("SIM_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ConfigError("SIM_SEED", "not an unsigned integer");
    return v;
  }
  return 0;
}

inline std::string out_path(const Common& c, const std::string& file) {
  std::filesystem::create_directories(c.out_dir);
  return (std::filesystem::path(c.out_dir) / file).string();
}

inline int positive(const Params& p, const std::string& key, std::optional<long long> def, long long min = 1) {
  const long long v = p.integer(key, def);
  if (v < min) throw ConfigError(key, "must be >= " + std::to_string(min));
  return static_cast<int>(v);
}

// ---------------------------------------------------------------------------

struct Algo {
  std::string name;
  std::vector<std::pair<std::string, MetaConfig>> configs;  // config_id, config
};

inline void emit_meta(const Common& c, const Instance& inst, const std::vector<Algo>& algos, int histogram_index_hint,
                      std::vector<std::pair<std::string, MetaResult>>& keep, std::ostream& out,
                      const std::string& experiment, int summary_from) {
  std::vector<LearningCurveRow> curve;
  std::vector<FirstActionRow> first;
  std::ostringstream summary;
  summary << experiment << ": instance=" << inst.name;
  for (const auto& algo : algos) {
    std::vector<MetaResult> results;
    for (const auto& [id, cfg] : algo.configs) results.push_back(run_replicates(cfg, inst, algo.name));
    std::vector<const MetaResult*> ptrs;
    for (const auto& r : results) ptrs.push_back(&r);
    const Envelope env = upper_envelope(ptrs);
    for (std::size_t ci = 0; ci < results.size(); ++ci) {
      const auto& r = results[ci];
      for (int t = 0; t < r.num_episodes; ++t) {
        curve.push_back({algo.name, algo.configs[ci].first, t + 1, r.running_mean[static_cast<std::size_t>(t)],
                         r.running_stderr[static_cast<std::size_t>(t)], env.best[static_cast<std::size_t>(t)] == ci});
      }
    }
    const std::size_t hist = std::min<std::size_t>(static_cast<std::size_t>(std::max(0, histogram_index_hint)), results.size() - 1);
    const auto& counts = results[results.size() == 1 ? 0 : hist].first_action_counts;
    long total = 0;
    for (long v : counts) total += v;
    for (std::size_t a = 0; a < counts.size(); ++a) {
      first.push_back({algo.name, static_cast<int>(a), total ? static_cast<double>(counts[a]) / total : 0.0});
    }
    const auto& last = results.back();
    const int from = std::min(summary_from, last.num_episodes - 1);
    const auto w = window_reward(last, from, last.num_episodes);
    summary << " " << algo.name << "=" << fmt9(w.mean) << "+-" << fmt9(w.se);
    for (std::size_t ci = 0; ci < results.size(); ++ci) keep.emplace_back(algo.name + "/" + algo.configs[ci].first, std::move(results[ci]));
  }
  const std::string lc = out_path(c, "learning_curve.csv");
  const std::string fa = out_path(c, "first_action.csv");
  emit_learning_curve_csv(lc, curve);
  emit_first_action_csv(fa, first);
  summary << " (episodes " << summary_from + 1 << "+) -> " << lc << ", " << fa;
  out << summary.str() << "\n";
}

inline MetaConfig base_config(const Params& p, const Common& c, int default_T, int default_H, int default_R) {
  MetaConfig m;
  m.num_episodes = positive(p, "num_episodes", default_T);
  m.horizon = positive(p, "horizon", default_H);
  m.replicates = positive(p, "replicates", default_R, 2);
  m.seed = resolve_seed(c, p);
  m.jobs = c.jobs ? *c.jobs : positive(p, "jobs", 1);
  if (m.jobs < 1) throw ConfigError("jobs", "must be >= 1");
  return m;
}

inline std::vector<int> explore_grid(const Params& p, int T, const std::string& def) {
  auto grid = p.list<int>("explore_grid", def);
  for (int t0 : grid) {
    if (t0 < 0 || t0 > T) throw ConfigError("explore_grid", "entries must lie in [0, num_episodes]");
  }
  return grid;
}

inline const std::set<std::string> kMetaKeys = {"experiment", "seed", "num_episodes", "horizon", "replicates", "jobs",
                                                "explore_grid", "summary_from", "first_action_t0", "random_ties",
                                                "k1", "k2", "alpha"};

inline int histogram_index(const Params& p, const std::vector<int>& grid) {
  if (!p.config().has("first_action_t0")) return 0;
  const long long t0 = p.integer("first_action_t0");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] == t0) return static_cast<int>(i);
  }
  throw ConfigError("first_action_t0", "must be one of explore_grid");
}

inline int run_meta_gaussian(Params& p, const Common& c, std::ostream& out) {
  const Instance inst = preset_mab();
  const MetaConfig base = base_config(p, c, 10000, 10, 50);
  const auto grid = explore_grid(p, base.num_episodes, "1000,5000");
  std::vector<Algo> algos;
  MetaConfig o = base;
  o.baseline = Baseline::Oracle;
  algos.push_back({"OracleTS", {{"default", o}}});
  MetaConfig m = base;
  m.baseline = Baseline::Misspecified;
  algos.push_back({"MisTS", {{"default", m}}});
  for (auto est : {EstimatorKind::Full, EstimatorKind::NoCov}) {
    Algo a{est == EstimatorKind::Full ? "MetaTS:full" : "MetaTS:no-cov", {}};
    for (int t0 : grid) {
      MetaConfig e = base;
      e.baseline = Baseline::MetaETC;
      e.estimator = est;
      e.explore_episodes = t0;
      a.configs.push_back({"T0=" + std::to_string(t0), e});
    }
    algos.push_back(a);
  }
  std::vector<std::pair<std::string, MetaResult>> keep;
  const int from = static_cast<int>(p.integer("summary_from", grid.back()));
  emit_meta(c, inst, algos, histogram_index(p, grid), keep, out, "meta-gaussian", from);
  return 0;
}

inline int run_meta_lincb(Params& p, const Common& c, std::ostream& out) {
  const Instance inst = preset_lincb();
  const MetaConfig base = base_config(p, c, 2000, 20, 20);
  const auto grid = explore_grid(p, base.num_episodes, "100,500,1000");
  std::vector<Algo> algos;
  MetaConfig o = base;
  o.baseline = Baseline::Oracle;
  algos.push_back({"OracleTS", {{"default", o}}});
  MetaConfig m = base;
  m.baseline = Baseline::Misspecified;
  algos.push_back({"MisTS", {{"default", m}}});
  Algo a{"MetaTS:full", {}};
  for (int t0 : grid) {
    MetaConfig e = base;
    e.baseline = Baseline::MetaETC;
    e.estimator = EstimatorKind::OLS;
    e.explore_episodes = t0;
    a.configs.push_back({"T0=" + std::to_string(t0), e});
  }
  algos.push_back(a);
  std::vector<std::pair<std::string, MetaResult>> keep;
  const int from = static_cast<int>(p.integer("summary_from", grid.back()));
  emit_meta(c, inst, algos, histogram_index(p, grid), keep, out, "meta-lincb", from);
  return 0;
}

inline int run_meta_discrete(Params& p, const Common& c, std::ostream& out) {
  const Instance inst = preset_discrete();
  const MetaConfig base = base_config(p, c, 400, 10, 50);
  const auto grid = explore_grid(p, base.num_episodes, "25,50,100,200");
  RHC2Kind kg;
  kg.alpha = p.real("alpha", 1.0);
  kg.k1 = positive(p, "k1", 10);
  kg.k2 = positive(p, "k2", 10);
  kg.random_ties = c.random_ties || p.flag("random_ties", false);
  std::vector<Algo> algos;
  for (const auto& [suffix, kind] : std::vector<std::pair<std::string, PolicyKind>>{{"TS", TSKind{}}, {"KG", kg}}) {
    MetaConfig o = base;
    o.base_policy = kind;
    o.baseline = Baseline::Oracle;
    algos.push_back({"Oracle" + suffix, {{"default", o}}});
    MetaConfig m = o;
    m.baseline = Baseline::Misspecified;
    algos.push_back({"Mis" + suffix, {{"default", m}}});
    Algo a{"Meta" + suffix, {}};
    for (int t0 : grid) {
      MetaConfig e = o;
      e.baseline = Baseline::MetaETC;
      e.estimator = EstimatorKind::Freq;
      e.explore_episodes = t0;
      a.configs.push_back({"T0=" + std::to_string(t0), e});
    }
    algos.push_back(a);
  }
  std::vector<std::pair<std::string, MetaResult>> keep;
  const int from = static_cast<int>(p.integer("summary_from", 100));
  emit_meta(c, inst, algos, histogram_index(p, grid), keep, out, "meta-discrete", from);
  return 0;
}

inline int run_sensitivity(Params& p, const Common& c, std::ostream& out) {
  const auto eps_grid = p.list<double>("eps_grid", "0.01,0.02,0.05");
  const auto h_grid = p.list<int>("horizon_grid", "5,10,20");
  const int k = positive(p, "k", 2);
  const long trials_pair = positive(p, "trials_pair", 20000, 2);
  const long trials_anlb = positive(p, "trials_anlb", 4000, 2);
  const int base_arms = positive(p, "anlb_base_arms", 50, 2);
  const double delta = p.real("anlb_delta", 1.0 / 64.0);
  RngStream rng(resolve_seed(c, p), 0);
  std::vector<BoundsRow> rows;
  int violations = 0;
  for (double eps : eps_grid) {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps_grid", "entries must lie in (0,1)");
    for (int H : h_grid) {
      if (H < 1) throw ConfigError("horizon_grid", "entries must be >= 1");
      const auto [th, thp] = make_lb_pair(eps);
      const AnLbInstance an = make_anlb_instance(base_arms, eps, delta);
      for (const auto& [pname, kind] : std::vector<std::pair<std::string, PolicyKind>>{{"TS", TSKind{}}, {"KTS", KTSKind{k}}}) {
        const auto a = sensitivity_experiment(th, thp, kind, H, trials_pair, BernoulliReward{}, rng);
        rows.push_back({"lb-pair/" + pname, a.n, H, a.tv, a.B, a.bound, a.gap, a.gap_stderr});
        const auto b = sensitivity_experiment(an.theta, an.theta_prime, kind, H, trials_anlb, DeterministicReward{}, rng);
        rows.push_back({"anlb/" + pname, b.n, H, b.tv, b.B, b.bound, b.gap, b.gap_stderr});
        violations += std::abs(a.gap) > a.bound + 3 * a.gap_stderr;
        violations += std::abs(b.gap) > b.bound + 3 * b.gap_stderr;
      }
    }
  }
  const std::string path = out_path(c, "bounds.csv");
  emit_bounds_csv(path, rows);
  out << "sensitivity: " << rows.size() << " cells, " << violations << " above bound + 3 SE -> " << path << "\n";
  return 0;
}

inline int run_lowerbound(Params& p, const Common& c, std::ostream& out) {
  const double eps = p.real("eps");
  const int H = positive(p, "horizon", std::nullopt);
  const int k = positive(p, "k", std::nullopt);
  if (!(eps >= 0.0 && eps < 1.0)) throw ConfigError("eps", "must lie in [0,1)");
  const long trials = positive(p, "trials", 100000, 2);
  RngStream rng(resolve_seed(c, p), 0);
  const auto r = lb_two_arm_tv(eps, H, k, trials, rng);
  const std::string path = out_path(c, "lowerbound.csv");
  emit_lowerbound_csv(path, {{eps, H, k, r.analytic_tv, r.empirical_tv, r.empirical_stderr, r.reward_gap, r.gap_stderr}});
  out << "lowerbound: eps=" << fmt9(eps) << " H=" << H << " k=" << k << " analytic_tv=" << fmt9(r.analytic_tv)
      << " empirical_tv=" << fmt9(r.empirical_tv) << "+-" << fmt9(r.empirical_stderr) << " -> " << path << "\n";
  return 0;
}

inline int run_estimate(Params& p, const Common& c, std::ostream& out) {
  const long T = positive(p, "episodes", 100000);
  const double a = p.real("alpha", 2.0), b = p.real("beta", 2.0);
  const int n = positive(p, "n", 5, 2);
  RngStream rng(resolve_seed(c, p), 0);

  std::vector<int> samples;
  samples.reserve(static_cast<std::size_t>(T));
  for (long t = 0; t < T; ++t) {
    const double q = rng.beta(a, b);
    int s = 0;
    for (int i = 0; i < n; ++i) s += rng.bernoulli(q);
    samples.push_back(s);
  }
  const auto fit = beta_binomial_mom(samples, n);
  out << "estimate: beta-binomial alpha_hat=" << fmt9(fit.alpha_hat) << " beta_hat=" << fmt9(fit.beta_hat) << "\n";

  const Instance inst = preset_mab();
  const auto& prior = std::get<GaussianPrior>(inst.true_prior);
  const std::size_t A = static_cast<std::size_t>(inst.num_actions);
  std::vector<ActionReward> first;
  std::vector<PairRecord> pairs, diffs;
  for (long t = 0; t < T; ++t) {
    const MeanVector mu = sample_mean(prior, rng);
    const ActionIndex x = rng.uniform_index(A), y = rng.uniform_index(A);
    const double r = rng.normal(mu[static_cast<Eigen::Index>(x)], 1.0);
    const double s = rng.normal(mu[static_cast<Eigen::Index>(y)], 1.0);
    first.push_back({x, r});
    pairs.push_back({x, r, y, s});
    const MeanVector mu2 = sample_mean(prior, rng);
    diffs.push_back({x, r, y, s});
    diffs.push_back({x, rng.normal(mu2[static_cast<Eigen::Index>(x)], 1.0), y, rng.normal(mu2[static_cast<Eigen::Index>(y)], 1.0)});
  }
  const MeanVector nu = gaussian_mean_first_round(first, A);
  const CovMatrix cp = gaussian_cov_pairs(pairs, prior.mean, A);
  const CovMatrix cd = gaussian_cov_diff(diffs, A);
  out << "estimate: gaussian T=" << T << " mean_err=" << fmt9((nu - prior.mean).cwiseAbs().maxCoeff())
      << " cov_pairs_err=" << fmt9((cp - prior.cov).cwiseAbs().maxCoeff())
      << " cov_diff_err=" << fmt9((cd - prior.cov).cwiseAbs().maxCoeff()) << "\n";
  return 0;
}

/// Entry point of the `simulate` tool. Returns 0 on success, 1 on a usage or
/// configuration error, 2 on a runtime failure.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Bandit simulations under misspecified priors"};
  app.require_subcommand(1);
  Common common;
  std::optional<double> eps;
  std::optional<int> horizon, k;
  std::optional<long> trials;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "flat key = value config file");
    sub->add_option("--seed", common.seed, "random seed (default: SIM_SEED or 0)");
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--jobs", common.jobs, "replicates run in parallel")->check(CLI::PositiveNumber);
    sub->add_flag("--random-ties", common.random_ties, "break KG ties uniformly at random");
    sub->add_flag("--dump-config", common.dump_config, "print the effective config and exit");
  };
  auto* sens = app.add_subcommand("sensitivity", "measured reward gaps against the TV sensitivity bound");
  auto* lb = app.add_subcommand("lowerbound", "two-arm trajectory TV lower bound");
  auto* mg = app.add_subcommand("meta-gaussian", "meta-learning on the Gaussian MAB preset");
  auto* ml = app.add_subcommand("meta-lincb", "meta-learning on the linear contextual bandit preset");
  auto* md = app.add_subcommand("meta-discrete", "meta-learning on the discrete task preset");
  auto* es = app.add_subcommand("estimate", "prior estimator accuracy at a given sample size");
  for (auto* s : {sens, lb, mg, ml, md, es}) add_common(s);
  lb->add_option("--eps", eps, "prior TV");
  lb->add_option("--horizon", horizon, "episode horizon");
  lb->add_option("--k", k, "k for k-TS");
  lb->add_option("--trials", trials, "Monte-Carlo episodes");
  for (auto* s : {mg, ml, md}) s->add_option("--horizon", horizon, "episode horizon");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    Config cfg = common.config_path.empty() ? Config{} : Config::load(common.config_path);
    if (cfg.has("experiment") && cfg.get_string("experiment") != name) {
      throw ConfigError("experiment", "config is for '" + cfg.get_string("experiment") + "', not '" + name + "'");
    }
    std::set<std::string> allowed;
    if (name == "sensitivity") {
      allowed = {"experiment", "seed", "eps_grid", "horizon_grid", "k", "trials_pair", "trials_anlb", "anlb_base_arms", "anlb_delta"};
    } else if (name == "lowerbound") {
      allowed = {"experiment", "seed", "eps", "horizon", "k", "trials"};
    } else if (name == "estimate") {
      allowed = {"experiment", "seed", "episodes", "alpha", "beta", "n"};
    } else {
      allowed = kMetaKeys;
    }
    if (eps) cfg.set("eps", *eps);
    if (horizon) cfg.set("horizon", *horizon);
    if (k) cfg.set("k", *k);
    if (trials) cfg.set("trials", static_cast<long long>(*trials));
    if (common.seed) cfg.set("seed", static_cast<long long>(*common.seed));
    Params p(cfg, allowed);
    if (common.dump_config) {
      out << p.config().serialize();
      return 0;
    }
    if (name == "sensitivity") return run_sensitivity(p, common, out);
    if (name == "lowerbound") return run_lowerbound(p, common, out);
    if (name == "meta-gaussian") return run_meta_gaussian(p, common, out);
    if (name == "meta-lincb") return run_meta_lincb(p, common, out);
    if (name == "meta-discrete") return run_meta_discrete(p, common, out);
    return run_estimate(p, common, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace misprior::cli
