#include "streamreg/cli.hpp"

#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <iostream>
#include <mutex>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "CLI11.hpp"
#include "cli_internal.hpp"
#include "json.hpp"
#include "streamreg/errors.hpp"
#include "streamreg/glm.hpp"
#include "streamreg/inference.hpp"
#include "streamreg/linear.hpp"
#include "streamreg/panel.hpp"
#include "streamreg/regularized.hpp"
#include "streamreg/serialize.hpp"

namespace streamreg::cli {

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("STREAMREG_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  return 1;
}

char resolve_delimiter(const std::string& d) {
  if (d == "," || d.empty()) return ',';
  if (d == "\t" || d == "tab" || d == "\\t") return '\t';
  if (d.size() == 1) return d[0];
  throw UsageError("unrecognized delimiter '" + d + "'");
}

namespace {

using nlohmann::json;

double two_sided_t_pvalue(double t, double dof) {
  if (!(dof > 0) || !std::isfinite(t)) return std::nan("");
  const boost::math::students_t_distribution<double> dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double two_sided_normal_pvalue(double z) {
  if (!std::isfinite(z)) return std::nan("");
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

}  // namespace

AccumulationOutcome accumulate_stream(const StreamFactory& factory, int threads,
                                      std::int64_t group_cap) {
  BlockStream stream = factory.open();
  const int k = factory.schema.k();
  const int l = factory.schema.l();
  const bool intercept = factory.schema.add_intercept;
  const bool grouped = factory.schema.group.has_value() || factory.config.folds > 0;

  AccumulationOutcome out;
  out.grouped = grouped;
  out.ga = GroupedAccumulator::zero(k, l, intercept);
  out.ga.group_cap = group_cap;

  if (threads <= 1) {
    while (auto block = stream.next_block()) {
      if (grouped)
        out.ga.add_block(*block);
      else
        out.ga.global.add_block(*block);
    }
  } else {
    struct Slot {
      std::mutex m;
      std::condition_variable cv;
      std::deque<Block> q;
      bool done = false;
    };
    std::vector<std::unique_ptr<Slot>> slots;
    std::vector<GroupedAccumulator> states;
    for (int t = 0; t < threads; ++t) {
      slots.push_back(std::make_unique<Slot>());
      states.push_back(GroupedAccumulator::zero(k, l, intercept));
      states.back().group_cap = group_cap;
    }
    std::exception_ptr worker_error;
    std::mutex error_m;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        Slot& s = *slots[t];
        try {
          for (;;) {
            std::unique_lock lk(s.m);
            s.cv.wait(lk, [&] { return s.done || !s.q.empty(); });
            if (s.q.empty()) return;
            Block block = std::move(s.q.front());
            s.q.pop_front();
            lk.unlock();
            s.cv.notify_all();
            if (grouped)
              states[t].add_block(block);
            else
              states[t].global.add_block(block);
          }
        } catch (...) {
          std::lock_guard g(error_m);
          if (!worker_error) worker_error = std::current_exception();
          std::lock_guard lk(s.m);
          s.q.clear();
        }
      });
    }
    std::size_t next = 0;
    while (auto block = stream.next_block()) {
      Slot& s = *slots[next++ % threads];
      std::unique_lock lk(s.m);
      s.cv.wait(lk, [&] { return s.q.size() < 4; });
      s.q.push_back(std::move(*block));
      lk.unlock();
      s.cv.notify_all();
      {
        std::lock_guard g(error_m);
        if (worker_error) break;
      }
    }
    for (auto& s : slots) {
      std::lock_guard lk(s->m);
      s->done = true;
      s->cv.notify_all();
    }
    for (auto& th : pool) th.join();
    if (worker_error) std::rethrow_exception(worker_error);
    for (auto& state : states) out.ga.merge_from(state);
  }

  out.skipped = stream.skipped_rows();
  out.ga.group_labels = stream.group_labels();
  out.ga.second_group_labels = stream.second_group_labels();
  return out;
}

namespace {

struct FitArgs {
  std::string data;
  std::string from_aggregates;
  std::string save_aggregates;
  std::string model = "ols";
  std::string y;
  std::vector<std::string> x;
  std::string weights;
  std::vector<std::string> instruments;
  std::string cluster;
  std::string fe;
  std::string fe2;
  bool recover_fe = false;
  bool no_intercept = false;
  std::string vcv = "iid";
  std::int64_t reps = 200;
  std::uint64_t seed = 0;
  std::int64_t block_size = 65536;
  std::string delimiter = ",";
  bool strict = false;
  double lambda = -1.0;  // < 0 = unset
  double lambda2 = 0.0;
  std::vector<double> lambda_grid;
  int folds = 0;
  bool penalize_intercept = false;
  int max_iterations = -1;
  double tolerance = -1.0;
  double probability_clip = 1e-10;
  std::string algorithm = "irls";
  int threads = 0;
  std::int64_t group_cap = 1000000;
  std::string format = "json";
};

bool is_glm(const std::string& m) { return m == "logit" || m == "probit"; }
bool is_regularized(const std::string& m) {
  return m == "ridge" || m == "lasso" || m == "elastic-net";
}
bool is_plain_ls(const std::string& m) { return m == "ols" || m == "wls"; }

// Everything knowable before touching the data is checked here; failures
// exit with code 2 before any pass.
void validate_fit_args(const FitArgs& a) {
  static const std::set<std::string> kModels{"ols",   "wls",   "iv",          "2sls",  "ridge",
                                             "lasso", "elastic-net", "logit", "probit"};
  if (!kModels.count(a.model)) throw UsageError("unknown model '" + a.model + "'");
  static const std::set<std::string> kVcv{"iid", "hc1", "cluster", "cluster-bootstrap"};
  if (!kVcv.count(a.vcv)) throw UsageError("unknown vcv '" + a.vcv + "'");
  if (a.format != "json" && a.format != "text")
    throw UsageError("unknown format '" + a.format + "'");

  const bool from_agg = !a.from_aggregates.empty();
  if (a.data.empty() == !from_agg)
    throw UsageError("exactly one of --data and --from-aggregates is required");
  if (!from_agg && (a.y.empty() || a.x.empty()))
    throw UsageError("--y and --x are required when reading a data file");
  if (a.block_size < 1) throw UsageError("--block-size must be >= 1");
  if (a.threads < 0 || a.threads > 256) throw UsageError("--threads out of range");
  if (a.group_cap < 1) throw UsageError("--group-cap must be >= 1");

  if (a.model == "ols" && !a.weights.empty())
    throw UsageError("--weights with least squares requires --model wls");
  if (a.model == "wls" && a.weights.empty()) throw UsageError("--model wls requires --weights");

  const bool has_instruments = !a.instruments.empty();
  if (a.model == "iv" || a.model == "2sls") {
    if (!has_instruments && !from_agg) throw UsageError("--model " + a.model + " requires --instruments");
    if (!from_agg) {
      if (a.model == "iv" && a.instruments.size() != a.x.size())
        throw ArityMismatch("iv needs exactly as many instruments as covariates (got " +
                            std::to_string(a.instruments.size()) + " for " +
                            std::to_string(a.x.size()) + "); use --model 2sls when over-identified");
      if (a.model == "2sls" && a.instruments.size() < a.x.size())
        throw UnderIdentified("2sls needs at least as many instruments as covariates (got " +
                              std::to_string(a.instruments.size()) + " for " +
                              std::to_string(a.x.size()) + ")");
    }
  } else if (has_instruments) {
    throw UsageError("--instruments only applies to --model iv or 2sls");
  }

  if (is_regularized(a.model)) {
    const bool has_grid = !a.lambda_grid.empty();
    if (a.model != "elastic-net" && a.lambda2 != 0.0)
      throw UsageError("--lambda2 only applies to --model elastic-net");
    if (has_grid) {
      if (a.folds < 2) throw TooFewFolds("--lambda-grid requires --folds >= 2");
      for (double v : a.lambda_grid)
        if (v < 0) throw NegativeLambda("--lambda-grid values must be >= 0");
    } else {
      if (a.folds != 0) throw UsageError("--folds requires --lambda-grid");
      if (a.lambda < 0 && !(a.model == "elastic-net" && a.lambda2 > 0))
        throw UsageError("--model " + a.model + " requires --lambda (or --lambda-grid with --folds)");
      if (a.lambda2 < 0) throw NegativeLambda("--lambda2 must be >= 0");
    }
  } else {
    if (a.lambda >= 0 || !a.lambda_grid.empty() || a.folds != 0)
      throw UsageError("penalty options only apply to ridge/lasso/elastic-net");
    if (a.penalize_intercept) throw UsageError("--penalize-intercept needs a penalized model");
  }

  if (is_glm(a.model)) {
    if (a.vcv != "iid") throw UsageError("--model " + a.model + " reports the ML vcv only");
    if (!a.cluster.empty() || !a.fe.empty())
      throw UsageError("--cluster/--fe are not supported with GLM models in v1");
    if (from_agg) throw UsageError("GLM models need the raw data, not saved aggregates");
    if (!a.save_aggregates.empty())
      throw UsageError("--save-aggregates holds linear-model aggregates; not applicable to GLM");
    if (a.algorithm != "irls" && a.algorithm != "newton")
      throw UsageError("unknown --algorithm '" + a.algorithm + "' (irls or newton)");
    if (!(a.probability_clip > 0) || a.probability_clip >= 0.5)
      throw UsageError("--probability-clip must be in (0, 0.5)");
  }

  if (!a.fe.empty()) {
    if (!is_plain_ls(a.model)) throw UsageError("--fe applies to --model ols/wls only");
    if (a.vcv != "iid") throw UsageError("--fe supports --vcv iid only in v1");
    if (!a.cluster.empty()) throw UsageError("--fe and --cluster cannot be combined in v1");
    if (a.no_intercept) throw UsageError("--fe already absorbs the constant; drop --no-intercept");
  } else {
    if (!a.fe2.empty()) throw UsageError("--fe2 requires --fe");
    if (a.recover_fe) throw UsageError("--recover-fe requires --fe");
  }
  if (a.recover_fe && !a.fe2.empty())
    throw UsageError("--recover-fe applies to one-way fixed effects only");

  if (a.vcv == "hc1" || a.vcv == "cluster") {
    if (!is_plain_ls(a.model))
      throw UsageError("--vcv " + a.vcv + " applies to --model ols/wls only");
    if (from_agg)
      throw UsageError("--vcv " + a.vcv + " needs a second pass over the data file");
    if (a.vcv == "cluster" && a.cluster.empty())
      throw UsageError("--vcv cluster requires --cluster");
  }
  if (a.vcv == "cluster-bootstrap") {
    if (!is_plain_ls(a.model))
      throw UsageError("--vcv cluster-bootstrap applies to --model ols/wls only");
    if (a.cluster.empty() && !from_agg)
      throw UsageError("--vcv cluster-bootstrap requires --cluster");
    if (a.reps < 1) throw UsageError("--reps must be >= 1");
  }

  if (a.folds > 0 && !a.cluster.empty())
    throw UsageError("--folds and --cluster cannot be combined");
  if (a.folds > 0 && !a.fe.empty()) throw UsageError("--folds and --fe cannot be combined");
}

json coefficients_json(const FitResult& fit, const std::vector<std::string>& names) {
  const bool use_normal = fit.method == Method::logit || fit.method == Method::probit;
  json list = json::array();
  for (std::size_t j = 0; j < fit.coefficients.size(); ++j) {
    json c;
    c["name"] = j < names.size() ? names[j] : "b" + std::to_string(j);
    c["estimate"] = fit.coefficients[j];
    if (fit.vcv_kind != VcvKind::none && !fit.vcv.empty()) {
      const double se = fit.se(static_cast<int>(j));
      c["se"] = se;
      if (se > 0) {
        const double t = fit.coefficients[j] / se;
        c["t"] = t;
        const double p = use_normal
                             ? two_sided_normal_pvalue(t)
                             : two_sided_t_pvalue(t, static_cast<double>(fit.dof_residual));
        if (std::isnan(p))
          c["p"] = nullptr;
        else
          c["p"] = p;
      } else {
        c["t"] = nullptr;
        c["p"] = nullptr;
      }
    } else {
      c["se"] = nullptr;
      c["t"] = nullptr;
      c["p"] = nullptr;
    }
    list.push_back(std::move(c));
  }
  return list;
}

json fit_to_json(const FitResult& fit, const std::vector<std::string>& names) {
  const bool glm = fit.method == Method::logit || fit.method == Method::probit;
  json j;
  j["model"] = method_name(fit.method);
  j["vcv-kind"] = vcv_kind_name(fit.vcv_kind);
  j["n"] = fit.n;
  j["k"] = static_cast<int>(fit.coefficients.size());
  j["dof-residual"] = fit.dof_residual;
  j["skipped-rows"] = fit.skipped_rows;
  j["coefficients"] = coefficients_json(fit, names);
  if (glm) {
    j["sigma2"] = nullptr;
    j["r2"] = nullptr;
    j["adj-r2"] = nullptr;
    j["f-stat"] = nullptr;
    j["loglik"] = fit.loglik ? json(*fit.loglik) : json(nullptr);
  } else {
    j["sigma2"] = fit.sigma2;
    j["sigma2-raw"] = fit.sigma2_raw;
    j["r2"] = fit.r2;
    j["adj-r2"] = fit.adj_r2;
    j["f-stat"] = fit.f_stat ? json(*fit.f_stat) : json(nullptr);
    j["degenerate-tss"] = fit.degenerate_tss;
  }
  if (fit.iterations > 0) {
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
  }
  return j;
}

std::string format_text(const json& root) {
  char buf[256];
  std::string out;
  out += "model: " + root["model"].get<std::string>();
  out += "  vcv: " + root["vcv-kind"].get<std::string>();
  std::snprintf(buf, sizeof buf, "  n: %lld  dof: %lld  passes: %d\n",
                static_cast<long long>(root["n"].get<std::int64_t>()),
                static_cast<long long>(root["dof-residual"].get<std::int64_t>()),
                root["passes"].get<int>());
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %14s %12s %10s %10s\n", "name", "estimate", "se", "t", "p");
  out += buf;
  for (const auto& c : root["coefficients"]) {
    const std::string name = c["name"].get<std::string>();
    auto num = [&](const char* key) {
      return c[key].is_null() ? std::nan("") : c[key].get<double>();
    };
    std::snprintf(buf, sizeof buf, "%-16s %14.8g %12.6g %10.4g %10.4g\n", name.c_str(),
                  c["estimate"].get<double>(), num("se"), num("t"), num("p"));
    out += buf;
  }
  if (!root["sigma2"].is_null()) {
    std::snprintf(buf, sizeof buf, "sigma2: %.8g  r2: %.6g  adj-r2: %.6g", root["sigma2"].get<double>(),
                  root["r2"].get<double>(), root["adj-r2"].get<double>());
    out += buf;
    if (!root["f-stat"].is_null()) {
      std::snprintf(buf, sizeof buf, "  F: %.6g", root["f-stat"].get<double>());
      out += buf;
    }
    out += '\n';
  } else if (root.contains("loglik") && !root["loglik"].is_null()) {
    std::snprintf(buf, sizeof buf, "loglik: %.10g\n", root["loglik"].get<double>());
    out += buf;
  }
  if (root.contains("skipped-rows")) {
    std::snprintf(buf, sizeof buf, "skipped rows: %lld\n",
                  static_cast<long long>(root["skipped-rows"].get<std::int64_t>()));
    out += buf;
  }
  return out;
}

int cmd_fit(const FitArgs& args, std::string& out) {
  validate_fit_args(args);
  const int threads = resolve_threads(args.threads);
  const bool from_agg = !args.from_aggregates.empty();

  GroupedAccumulator ga;
  bool grouped = false;
  std::int64_t skipped = 0;
  int passes = 0;
  std::vector<std::string> names;
  StreamFactory factory;

  if (from_agg) {
    AggregatesFile file = load_aggregates(args.from_aggregates);
    ga = std::move(file.ga);
    grouped = !ga.groups.empty();
    names = std::move(file.columns);
    if (names.empty())
      for (int j = 0; j < ga.k; ++j) names.push_back("b" + std::to_string(j));
  } else {
    Schema schema;
    schema.dependent = args.y;
    schema.covariates = args.x;
    if (!args.weights.empty()) schema.weights = args.weights;
    schema.instruments = args.instruments;
    if (!args.fe.empty()) {
      schema.group = args.fe;
      if (!args.fe2.empty()) schema.second_group = args.fe2;
      schema.add_intercept = false;
    } else if (!args.cluster.empty()) {
      schema.group = args.cluster;
    }
    if (args.no_intercept) schema.add_intercept = false;

    BlockStreamConfig config;
    config.path = args.data;
    config.block_size = args.block_size;
    config.delimiter = resolve_delimiter(args.delimiter);
    config.strict = args.strict;
    if (args.folds > 0) {
      config.folds = args.folds;
      config.fold_seed = args.seed;
    }
    factory = StreamFactory{config, schema};

    if (schema.add_intercept) names.push_back("(intercept)");
    for (const auto& c : schema.covariates) names.push_back(c);

    if (!is_glm(args.model)) {
      AccumulationOutcome acc = accumulate_stream(factory, threads, args.group_cap);
      ga = std::move(acc.ga);
      grouped = acc.grouped;
      skipped = acc.skipped;
      passes = 1;
    }
  }

  if (!args.save_aggregates.empty()) {
    if (grouped)
      save_aggregates(args.save_aggregates, ga, names);
    else
      save_aggregates(args.save_aggregates, ga.global, names);
  }

  json root;
  root["schema"] = 1;
  root["command"] = "fit";
  root["seed"] = args.seed;
  root["threads"] = threads;
  if (!from_agg) root["block-size"] = args.block_size;
  if (from_agg) root["aggregates"] = args.from_aggregates;

  FitResult fit;
  json extras;

  if (is_glm(args.model)) {
    GlmConfig config;
    config.link = args.model == "logit" ? Link::logit : Link::probit;
    config.algorithm = args.algorithm == "newton" ? GlmAlgorithm::newton_ml : GlmAlgorithm::irls;
    if (args.max_iterations > 0) config.max_iterations = args.max_iterations;
    if (args.tolerance > 0) config.tolerance = args.tolerance;
    config.probability_clip = args.probability_clip;
    GlmFitOutcome outcome = glm_fit(factory, config);
    fit = std::move(outcome.fit);
    passes = outcome.passes;
    extras["separation-suspected"] = outcome.separation_suspected;
    extras["algorithm"] = args.algorithm;
    const std::size_t k = static_cast<std::size_t>(factory.schema.k());
    root["tracked-state-bytes"] =
        static_cast<std::int64_t>((SymMatrix::packed_size(static_cast<int>(k)) + 2 * k + 2) *
                                  sizeof(double));
  } else if (!args.fe.empty()) {
    FeResult fe = args.recover_fe ? fe_recover_effects(ga, args.group_cap)
                  : args.fe2.empty() ? fe_within_fit(ga)
                                     : fe_twoway_fit(ga);
    fit = std::move(fe.fit);
    fit.skipped_rows = skipped;
    if (!args.weights.empty()) fit.method = Method::wls;
    json fe_json;
    fe_json["absorbed-groups"] = fe.absorbed_groups;
    if (fe.absorbed_second_groups > 0) fe_json["absorbed-second-groups"] = fe.absorbed_second_groups;
    if (fe.effects) {
      json effects = json::array();
      for (std::size_t g = 0; g < fe.effects->size(); ++g) {
        json e;
        e["group"] = g < ga.group_labels.size() ? ga.group_labels[g] : std::to_string(g);
        e["estimate"] = (*fe.effects)[g];
        e["se"] = (*fe.effect_se)[g];
        effects.push_back(std::move(e));
      }
      fe_json["effects"] = std::move(effects);
    }
    extras["fixed-effects"] = std::move(fe_json);
    root["tracked-state-bytes"] = ga.state_bytes();
  } else if (is_regularized(args.model)) {
    double l1 = 0.0, l2 = 0.0;
    if (!args.lambda_grid.empty()) {
      std::vector<CvPoint> grid;
      for (double v : args.lambda_grid) {
        CvPoint p;
        if (args.model == "ridge")
          p.lambda2 = v;
        else {
          p.lambda1 = v;
          p.lambda2 = args.lambda2;
        }
        grid.push_back(p);
      }
      const CvModel model = args.model == "ridge"    ? CvModel::ridge
                            : args.model == "lasso" ? CvModel::lasso
                                                    : CvModel::elastic_net;
      if (ga.groups.empty())
        throw UsageError("cross validation needs fold-keyed aggregates; pass --folds with --data");
      CvResult cv = cv_select_lambda(ga, grid, model);
      l1 = cv.best.lambda1;
      l2 = cv.best.lambda2;
      json cv_json;
      cv_json["folds"] = static_cast<int>(ga.groups.size());
      cv_json["grid"] = args.lambda_grid;
      cv_json["total-mse"] = cv.total_mse;
      cv_json["best-lambda"] = args.model == "ridge" ? l2 : l1;
      if (args.model == "elastic-net") cv_json["lambda2"] = l2;
      extras["cv"] = std::move(cv_json);
    } else if (args.model == "ridge") {
      l2 = args.lambda;
    } else {
      l1 = std::max(args.lambda, 0.0);
      l2 = args.lambda2;
    }

    if (args.model == "ridge") {
      fit = ridge_fit(ga.global, l2, args.penalize_intercept);
    } else {
      CoordinateDescentConfig config;
      config.lambda1 = l1;
      config.lambda2 = l2;
      config.penalize_intercept = args.penalize_intercept;
      if (args.max_iterations > 0) config.max_iterations = args.max_iterations;
      if (args.tolerance > 0) config.tolerance = args.tolerance;
      auto [cd_fit, trace] = args.model == "lasso" ? lasso_fit(ga.global, config)
                                                   : elastic_net_fit(ga.global, config);
      if (!trace.converged)
        throw NotConverged("coordinate descent: no convergence after " +
                           std::to_string(trace.iterations_used) +
                           " sweeps (last max delta " + std::to_string(trace.final_max_delta) + ")");
      fit = std::move(cd_fit);
      extras["final-max-delta"] = trace.final_max_delta;
    }
    fit.skipped_rows = skipped;
    extras["lambda1"] = l1;
    extras["lambda2"] = l2;
    root["tracked-state-bytes"] = grouped ? ga.state_bytes() : ga.global.state_bytes();
  } else {
    // ols / wls / iv / 2sls, with the requested vcv
    if (args.model == "iv")
      fit = iv_fit(ga.global);
    else if (args.model == "2sls")
      fit = tsls_fit(ga.global);
    else
      fit = ols_fit(ga.global);
    if (args.model == "wls") fit.method = Method::wls;
    fit.skipped_rows = skipped;

    if (args.vcv == "hc1") {
      fit.vcv = hc1_vcv(factory, fit.coefficients, ga.global);
      fit.vcv_kind = VcvKind::hc1;
      ++passes;
    } else if (args.vcv == "cluster") {
      fit.vcv = crve_vcv(factory, fit.coefficients, ga.global);
      fit.vcv_kind = VcvKind::cluster;
      ++passes;
    } else if (args.vcv == "cluster-bootstrap") {
      if (ga.groups.empty())
        throw UsageError("cluster bootstrap needs per-cluster aggregates (--cluster with --data)");
      BootstrapConfig config;
      config.replications = args.reps;
      config.seed = args.seed;
      BootstrapResult boot = cluster_bootstrap_vcv(ga, config);
      fit.vcv = std::move(boot.vcv);
      fit.vcv_kind = VcvKind::cluster_bootstrap;
      json bj;
      bj["replications"] = args.reps;
      bj["dropped"] = boot.dropped;
      bj["groups"] = static_cast<std::int64_t>(ga.groups.size());
      extras["bootstrap"] = std::move(bj);
    }
    root["tracked-state-bytes"] = grouped ? ga.state_bytes() : ga.global.state_bytes();
  }

  json fj = fit_to_json(fit, names);
  for (auto& [key, value] : fj.items()) root[key] = std::move(value);
  for (auto& [key, value] : extras.items()) root[key] = std::move(value);
  root["passes"] = passes;
  if (!args.save_aggregates.empty()) root["aggregates-saved"] = args.save_aggregates;

  out = args.format == "text" ? format_text(root) : root.dump(2) + "\n";
  return 0;
}

int run_dispatch(const std::vector<std::string>& args, std::string& out, std::string& err) {
  CLI::App app{"streamreg: streaming regression on accumulated cross products"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "estimate a model in one or more passes");
  fit->add_option("--data", fit_args.data, "input delimited file");
  fit->add_option("--from-aggregates", fit_args.from_aggregates, "fit from saved aggregates");
  fit->add_option("--save-aggregates", fit_args.save_aggregates, "write aggregates as JSON");
  fit->add_option("--model", fit_args.model,
                  "ols|wls|iv|2sls|ridge|lasso|elastic-net|logit|probit");
  fit->add_option("--y", fit_args.y, "dependent column");
  fit->add_option("--x", fit_args.x, "covariate columns")->delimiter(',');
  fit->add_option("--weights", fit_args.weights, "weight column");
  fit->add_option("--instruments", fit_args.instruments, "instrument columns")->delimiter(',');
  fit->add_option("--cluster", fit_args.cluster, "cluster column");
  fit->add_option("--fe", fit_args.fe, "fixed-effects group column");
  fit->add_option("--fe2", fit_args.fe2, "second fixed-effects column (balanced panels)");
  fit->add_flag("--recover-fe", fit_args.recover_fe, "also estimate every group effect");
  fit->add_flag("--no-intercept", fit_args.no_intercept, "do not prepend a constant");
  fit->add_option("--vcv", fit_args.vcv, "iid|hc1|cluster|cluster-bootstrap");
  fit->add_option("--reps", fit_args.reps, "bootstrap replications");
  fit->add_option("--seed", fit_args.seed, "rng seed (bootstrap, folds)");
  fit->add_option("--block-size", fit_args.block_size, "rows per block");
  fit->add_option("--delimiter", fit_args.delimiter, "field delimiter (\",\" or \"tab\")");
  fit->add_flag("--strict", fit_args.strict, "malformed rows are fatal instead of skipped");
  fit->add_option("--lambda", fit_args.lambda, "penalty (ridge L2; lasso/elastic-net L1)");
  fit->add_option("--lambda2", fit_args.lambda2, "elastic-net L2 penalty");
  fit->add_option("--lambda-grid", fit_args.lambda_grid, "penalty grid for cross validation")
      ->delimiter(',');
  fit->add_option("--folds", fit_args.folds, "cross-validation folds");
  fit->add_flag("--penalize-intercept", fit_args.penalize_intercept,
                "include the constant in the penalty");
  fit->add_option("--max-iterations", fit_args.max_iterations, "iteration cap (cd/glm)");
  fit->add_option("--tolerance", fit_args.tolerance, "convergence tolerance (cd/glm)");
  fit->add_option("--probability-clip", fit_args.probability_clip, "glm probability clip");
  fit->add_option("--algorithm", fit_args.algorithm, "glm update: irls|newton");
  fit->add_option("--threads", fit_args.threads, "worker threads (0 = STREAMREG_THREADS or 1)");
  fit->add_option("--group-cap", fit_args.group_cap, "maximum distinct group keys");
  fit->add_option("--format", fit_args.format, "json|text");

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "time accumulation across block sizes");
  bench->add_option("--data", bench_args.data, "input delimited file")->required();
  bench->add_option("--y", bench_args.y, "dependent column")->required();
  bench->add_option("--x", bench_args.x, "covariate columns")->required()->delimiter(',');
  bench->add_option("--block-sizes", bench_args.block_sizes, "block sizes to time")->delimiter(',');
  bench->add_option("--repetitions", bench_args.repetitions, "repetitions per block size");
  bench->add_option("--delimiter", bench_args.delimiter, "field delimiter");
  bench->add_flag("--no-intercept", bench_args.no_intercept, "do not prepend a constant");
  bench->add_option("--threads", bench_args.threads, "worker threads");
  bench->add_option("--out", bench_args.out_csv, "write per-run timings as CSV");

  SynthConfig synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a benchmark dataset");
  synth->add_option("--n", synth_args.n, "rows")->required();
  synth->add_option("--k", synth_args.k, "coefficients including the constant")->required();
  synth->add_option("--seed", synth_args.seed, "rng seed");
  synth->add_option("--out", synth_args.out, "output csv path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out = app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err = std::string(e.what()) + "\n";
    return 2;
  }

  if (fit->parsed()) return cmd_fit(fit_args, out);
  if (bench->parsed()) return cmd_bench(bench_args, out);
  if (synth->parsed()) {
    const std::vector<double> beta = write_synth(synth_args);
    json j;
    j["schema"] = 1;
    j["command"] = "synth";
    j["n"] = synth_args.n;
    j["k"] = synth_args.k;
    j["seed"] = synth_args.seed;
    j["out"] = synth_args.out;
    j["beta"] = beta;
    out = j.dump(2) + "\n";
    return 0;
  }
  err = "no subcommand\n";
  return 2;
}

}  // namespace

RunResult run(const std::vector<std::string>& args) {
  RunResult result;
  try {
    result.exit_code = run_dispatch(args, result.out, result.err);
  } catch (const UsageError& e) {
    result.err = std::string("usage error: ") + e.what() + "\n";
    result.exit_code = 2;
  } catch (const DataError& e) {
    result.err = std::string("data error: ") + e.what() + "\n";
    result.exit_code = 3;
  } catch (const NumericError& e) {
    result.err = std::string("numeric error: ") + e.what() + "\n";
    result.exit_code = 4;
  } catch (const Error& e) {
    result.err = std::string("error: ") + e.what() + "\n";
    result.exit_code = 4;
  } catch (const std::exception& e) {
    result.err = std::string("internal error: ") + e.what() + "\n";
    result.exit_code = 1;
  }
  return result;
}

int main_entry(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  RunResult result = run(args);
  if (!result.out.empty()) std::cout << result.out;
  if (!result.err.empty()) std::cerr << result.err;
  return result.exit_code;
}

}  // namespace streamreg::cli
