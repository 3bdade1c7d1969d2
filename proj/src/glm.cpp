#include "streamreg/glm.hpp"

#include <cmath>
#include <limits>

#include "streamreg/errors.hpp"

namespace streamreg {

namespace {

constexpr double kPi = 3.14159265358979323846;

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double norm_cdf(double eta) { return 0.5 * std::erfc(-eta / std::sqrt(2.0)); }
double norm_pdf(double eta) { return std::exp(-0.5 * eta * eta) / std::sqrt(2.0 * kPi); }

}  // namespace

void glm_accumulate_block(GlmState& state, const Block& block, const GlmConfig& config) {
  const int k = static_cast<int>(state.beta.size());
  if (block.k != k) throw DimensionMismatch("glm: block width does not match coefficient vector");
  const bool weighted = !block.w.empty();
  const double clip = config.probability_clip;

  for (int i = 0; i < block.n; ++i) {
    const double y = block.y[i];
    if (y != 0.0 && y != 1.0)
      throw NonBinaryOutcome("glm: dependent value " + std::to_string(y) + " is not 0/1");
    const double w = weighted ? block.w[i] : 1.0;
    if (w < 0.0) throw NegativeWeight("glm: negative weight");
    const auto x = block.row(i);
    const double eta = dot(x, state.beta);

    double p, score_i, hess_i;
    if (config.link == Link::logit) {
      p = logistic(eta);
      if (p < clip || p > 1.0 - clip) state.clipped = true;
      p = std::min(std::max(p, clip), 1.0 - clip);
      score_i = y - p;
      hess_i = p * (1.0 - p);  // IRLS weight == observed information for logit
    } else {
      p = norm_cdf(eta);
      if (p < clip || p > 1.0 - clip) state.clipped = true;
      p = std::min(std::max(p, clip), 1.0 - clip);
      const double phi = norm_pdf(eta);
      score_i = y > 0.5 ? phi / p : -phi / (1.0 - p);
      if (config.algorithm == GlmAlgorithm::irls) {
        hess_i = phi * phi / (p * (1.0 - p));
      } else {
        // Observed information; clipping can push the raw expression
        // negative in the far tails, so floor each contribution at zero.
        hess_i = y > 0.5 ? phi * (phi + eta * p) / (p * p)
                         : phi * (phi - eta * (1.0 - p)) / ((1.0 - p) * (1.0 - p));
        if (hess_i < 0.0) hess_i = 0.0;
      }
    }

    state.loglik_acc += w * (y > 0.5 ? std::log(p) : std::log(1.0 - p));
    for (int j = 0; j < k; ++j) state.score_acc[j] += w * score_i * x[j];
    state.hessian_acc.add_outer(x, w * hess_i);
    ++state.rows;
  }
}

namespace {

struct PassResult {
  GlmState state;
  std::int64_t skipped = 0;
};

PassResult run_pass(const StreamFactory& factory, const Vec& beta, const GlmConfig& config) {
  PassResult r;
  r.state.beta = beta;
  r.state.hessian_acc = SymMatrix(static_cast<int>(beta.size()));
  r.state.score_acc.assign(beta.size(), 0.0);
  BlockStream stream = factory.open();
  while (auto block = stream.next_block()) glm_accumulate_block(r.state, *block, config);
  r.skipped = stream.skipped_rows();
  return r;
}

}  // namespace

GlmFitOutcome glm_fit(const StreamFactory& factory, const GlmConfig& config) {
  const int k = factory.schema.k();
  Vec accepted(k, 0.0);  // last coefficient vector whose likelihood we trust
  Vec current(k, 0.0);
  Vec step;
  double best_ll = -std::numeric_limits<double>::infinity();
  int halvings = 0;
  bool clipped_at_end = false;
  std::int64_t rows = 0, skipped = 0;

  GlmFitOutcome out;
  for (int pass = 1; pass <= config.max_iterations; ++pass) {
    PassResult r = run_pass(factory, current, config);
    GlmState& state = r.state;
    out.passes = pass;
    rows = state.rows;
    skipped = r.skipped;
    clipped_at_end = state.clipped;
    if (pass == 1 && state.rows <= k)
      throw InsufficientObservations("glm: n = " + std::to_string(state.rows) +
                                     " rows for k = " + std::to_string(k) + " coefficients");

    const double slack = 1e-10 * (1.0 + std::abs(best_ll));
    if (state.loglik_acc + slack < best_ll && halvings < 20) {
      // Overshot: halve the last step and evaluate again.
      ++halvings;
      for (int j = 0; j < k; ++j) {
        step[j] *= 0.5;
        current[j] = accepted[j] + step[j];
      }
      continue;
    }

    accepted = current;
    best_ll = state.loglik_acc;
    halvings = 0;
    step = spd_solve(state.hessian_acc, state.score_acc).solution;
    double max_delta = 0.0;
    for (int j = 0; j < k; ++j) {
      current[j] = accepted[j] + step[j];
      max_delta = std::max(max_delta, std::abs(step[j]));
    }

    if (max_delta < config.tolerance) {
      out.fit.coefficients = current;
      out.fit.vcv = sym_inverse(state.hessian_acc).inverse;
      out.fit.vcv_kind = VcvKind::iid;
      out.fit.method = config.link == Link::logit ? Method::logit : Method::probit;
      out.fit.n = rows;
      out.fit.dof_residual = rows - k;
      out.fit.converged = true;
      out.fit.iterations = pass;
      out.fit.loglik = best_ll;
      out.fit.skipped_rows = skipped;
      out.separation_suspected = clipped_at_end;
      return out;
    }
  }
  throw NotConverged("glm: no convergence after " + std::to_string(config.max_iterations) +
                     " passes" + (clipped_at_end ? " (separation suspected)" : ""));
}

}  // namespace streamreg
