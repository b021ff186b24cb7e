#pragma once

#include <functional>
#include <vector>

#include "rlab/autodiff.hpp"
#include "rlab/rng.hpp"

namespace rlab::num {

// Relaxed binary mask sampled with the reparameterization trick. `noise`
// holds the logistic noise (difference of two Gumbels) per unit so the same
// draw can be replayed.
struct RelaxedMask {
  Value soft;
  std::vector<double> noise;
  double temperature = 1.0;
};

// soft_t = sigmoid((logit_t + g_t) / tau), g_t = log(u) - log(1-u),
// u ~ Uniform(0,1). Differentiable in the logits with the noise held fixed.
RelaxedMask gumbel_mask(const Value& logits, double tau, Rng& rng);
RelaxedMask gumbel_mask_with_noise(const Value& logits, double tau,
                                   std::vector<double> noise);

// Sum over units of KL(Bernoulli(q_t) || Bernoulli(pi)).
Value kl_bernoulli(const Value& q, double pi);

// Euclidean projection of s onto {z in [0,1]^L : sum(z) <= budget}.
struct CappedSimplexSolution {
  std::vector<double> z;
  double shift = 0.0;        // the optimal threshold tau; 0 when budget inactive
  bool budget_active = false;
};
CappedSimplexSolution project_capped_simplex_raw(const std::vector<double>& s,
                                                 double budget);

// Graph op wrapping the projection; the backward pass applies the exact
// Jacobian of the piecewise-linear solution (identity on free coordinates,
// mean-subtracted over the free set when the budget constraint is tight,
// zero on clipped coordinates).
Value project_capped_simplex(const Value& scores, double budget);

// Hard mask with exactly k ones at the k largest scores; ties broken toward
// the lower index.
std::vector<double> topk_mask(const std::vector<double>& scores, int k);

// Compares analytic gradients of build_loss() against central finite
// differences over every component of every param. build_loss must be
// deterministic (fix any sampling noise). Returns the max relative error.
double finite_diff_check(const std::function<Value()>& build_loss,
                         const std::vector<Value>& params, double eps = 1e-4);

}  // namespace rlab::num
