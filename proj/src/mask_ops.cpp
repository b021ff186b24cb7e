#include "rlab/mask_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rlab::num {

namespace {
constexpr double kProbEps = 1e-15;
}

RelaxedMask gumbel_mask_with_noise(const Value& logits, double tau,
                                   std::vector<double> noise) {
  if (tau <= 0.0) throw std::invalid_argument("gumbel_mask: temperature must be > 0");
  const Array& s = logits.data();
  if (s.is_matrix()) throw std::invalid_argument("gumbel_mask: expects a vector");
  if (static_cast<int>(noise.size()) != s.size())
    throw std::invalid_argument("gumbel_mask: noise length mismatch");

  Array soft = Array::vec(s.size());
  for (int i = 0; i < s.size(); ++i) {
    double x = (s[i] + noise[static_cast<size_t>(i)]) / tau;
    soft[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                       : std::exp(x) / (1.0 + std::exp(x));
  }
  Value out(std::move(soft));
  auto node = out.node();
  node->parents.push_back(logits.node());
  node->backprop = [pa = logits.node(), tau](Node& self) {
    for (int i = 0; i < self.data.size(); ++i) {
      double y = self.data[i];
      pa->grad[i] += self.grad[i] * y * (1.0 - y) / tau;
    }
  };
  RelaxedMask m;
  m.soft = out;
  m.noise = std::move(noise);
  m.temperature = tau;
  return m;
}

RelaxedMask gumbel_mask(const Value& logits, double tau, Rng& rng) {
  std::vector<double> noise(static_cast<size_t>(logits.size()));
  for (auto& g : noise) {
    double u = rand_open01(rng);
    g = std::log(u) - std::log1p(-u);
  }
  return gumbel_mask_with_noise(logits, tau, std::move(noise));
}

Value kl_bernoulli(const Value& q, double pi) {
  if (pi <= 0.0 || pi >= 1.0)
    throw std::invalid_argument("kl_bernoulli: prior must be in (0,1)");
  const Array& qd = q.data();
  double total = 0.0;
  for (int i = 0; i < qd.size(); ++i) {
    double v = std::clamp(qd[i], kProbEps, 1.0 - kProbEps);
    total += v * std::log(v / pi) + (1.0 - v) * std::log((1.0 - v) / (1.0 - pi));
  }
  Value out(Array::vec(1, total));
  auto node = out.node();
  node->parents.push_back(q.node());
  node->backprop = [pq = q.node(), pi](Node& self) {
    double g = self.grad[0];
    for (int i = 0; i < pq->data.size(); ++i) {
      double v = std::clamp(pq->data[i], kProbEps, 1.0 - kProbEps);
      pq->grad[i] += g * (std::log(v / pi) - std::log((1.0 - v) / (1.0 - pi)));
    }
  };
  return out;
}

CappedSimplexSolution project_capped_simplex_raw(const std::vector<double>& s,
                                                 double budget) {
  if (budget <= 0.0)
    throw std::invalid_argument("project_capped_simplex: budget must be > 0");
  const size_t n = s.size();
  CappedSimplexSolution sol;
  sol.z.resize(n);

  auto mass_at = [&](double shift) {
    double m = 0.0;
    for (double v : s) m += std::clamp(v - shift, 0.0, 1.0);
    return m;
  };

  double free_mass = mass_at(0.0);
  if (free_mass <= budget + 1e-12) {
    for (size_t i = 0; i < n; ++i) sol.z[i] = std::clamp(s[i], 0.0, 1.0);
    sol.shift = 0.0;
    sol.budget_active = false;
    return sol;
  }

  // mass_at is non-increasing and piecewise linear in the shift. Bisection
  // brackets the support far below the 1e-10 budget tolerance; the shift is
  // then recomputed in closed form on the identified free set, which puts the
  // residual at machine precision.
  double lo = 0.0;
  double hi = *std::max_element(s.begin(), s.end());
  for (int iter = 0; iter < 100; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (mass_at(mid) > budget) lo = mid; else hi = mid;
  }
  double shift = 0.5 * (lo + hi);
  int saturated = 0;
  int free_count = 0;
  double free_sum = 0.0;
  for (double v : s) {
    double r = v - shift;
    if (r >= 1.0) {
      ++saturated;
    } else if (r > 0.0) {
      ++free_count;
      free_sum += v;
    }
  }
  if (free_count > 0)
    shift = (free_sum + static_cast<double>(saturated) - budget) /
            static_cast<double>(free_count);
  for (size_t i = 0; i < n; ++i) sol.z[i] = std::clamp(s[i] - shift, 0.0, 1.0);
  sol.shift = shift;
  sol.budget_active = true;
  return sol;
}

Value project_capped_simplex(const Value& scores, double budget) {
  const Array& s = scores.data();
  if (s.is_matrix())
    throw std::invalid_argument("project_capped_simplex: expects a vector");
  CappedSimplexSolution sol = project_capped_simplex_raw(s.raw(), budget);
  Value out(Array::from(sol.z));
  auto node = out.node();
  node->parents.push_back(scores.node());
  bool active = sol.budget_active;
  node->backprop = [ps = scores.node(), active](Node& self) {
    constexpr double kTol = 1e-9;
    std::vector<int> free_set;
    for (int i = 0; i < self.data.size(); ++i) {
      double z = self.data[i];
      if (z > kTol && z < 1.0 - kTol) free_set.push_back(i);
    }
    if (!active) {
      for (int i : free_set) ps->grad[i] += self.grad[i];
      return;
    }
    if (free_set.empty()) return;
    double gsum = 0.0;
    for (int i : free_set) gsum += self.grad[i];
    double gmean = gsum / static_cast<double>(free_set.size());
    for (int i : free_set) ps->grad[i] += self.grad[i] - gmean;
  };
  return out;
}

std::vector<double> topk_mask(const std::vector<double>& scores, int k) {
  const int n = static_cast<int>(scores.size());
  if (k < 1 || k > n)
    throw std::invalid_argument("topk_mask: k must be in [1, " + std::to_string(n) + "]");
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
  });
  std::vector<double> mask(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < k; ++i) mask[static_cast<size_t>(idx[static_cast<size_t>(i)])] = 1.0;
  return mask;
}

double finite_diff_check(const std::function<Value()>& build_loss,
                         const std::vector<Value>& params, double eps) {
  Value loss = build_loss();
  backward(loss);
  std::vector<Array> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.grad());

  double max_rel = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Value p = params[pi];
    for (int i = 0; i < p.size(); ++i) {
      double orig = p.data()[i];
      p.data()[i] = orig + eps;
      double up = build_loss().data()[0];
      p.data()[i] = orig - eps;
      double down = build_loss().data()[0];
      p.data()[i] = orig;
      double fd = (up - down) / (2.0 * eps);
      double an = analytic[pi][i];
      double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
      max_rel = std::max(max_rel, std::abs(fd - an) / denom);
    }
  }
  for (const auto& p : params) p.node()->grad = p.data().zeros_like();
  return max_rel;
}

}  // namespace rlab::num
