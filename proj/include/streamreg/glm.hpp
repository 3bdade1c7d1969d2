#pragma once

#include <cstdint>

#include "streamreg/accumulate.hpp"
#include "streamreg/fit.hpp"
#include "streamreg/ingest.hpp"

namespace streamreg {

enum class Link { logit, probit };
enum class GlmAlgorithm { irls, newton_ml };

struct GlmConfig {
  Link link = Link::logit;
  GlmAlgorithm algorithm = GlmAlgorithm::irls;
  int max_iterations = 100;
  double tolerance = 1e-8;        // max-abs coefficient change
  double probability_clip = 1e-10;
};

// Accumulated quantities of one pass at a fixed coefficient vector.
struct GlmState {
  Vec beta;
  SymMatrix hessian_acc;
  Vec score_acc;
  double loglik_acc = 0.0;
  int iteration = 0;
  std::int64_t rows = 0;
  bool clipped = false;  // some fitted probability hit the clip bound
};

// Folds one block into the state at state.beta.  Throws NonBinaryOutcome
// when the dependent variable is not exactly 0 or 1.
void glm_accumulate_block(GlmState& state, const Block& block, const GlmConfig& config);

struct GlmFitOutcome {
  FitResult fit;
  int passes = 0;                     // data passes == fit.iterations
  bool separation_suspected = false;  // clipping was active at the optimum
};

// Multi-pass maximum likelihood: one pass per Newton/IRLS step starting from
// beta = 0, step-halving (re-using a pass) whenever the log-likelihood
// decreases.  Throws NotConverged when max-iterations passes are exhausted.
GlmFitOutcome glm_fit(const StreamFactory& factory, const GlmConfig& config);

}  // namespace streamreg
