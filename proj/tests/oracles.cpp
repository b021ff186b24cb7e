#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace oracles {

std::set<int> mask_to_set(const std::vector<int>& mask) {
  std::set<int> s;
  for (size_t i = 0; i < mask.size(); ++i)
    if (mask[i] != 0) s.insert(static_cast<int>(i));
  return s;
}

double set_f1(const std::vector<int>& pred, const std::vector<int>& gold) {
  std::set<int> p = mask_to_set(pred);
  std::set<int> g = mask_to_set(gold);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::set<int> inter;
  for (int i : p)
    if (g.count(i)) inter.insert(i);
  if (inter.empty()) return 0.0;
  double precision = static_cast<double>(inter.size()) / static_cast<double>(p.size());
  double recall = static_cast<double>(inter.size()) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

double set_iou(const std::vector<int>& pred, const std::vector<int>& gold) {
  std::set<int> p = mask_to_set(pred);
  std::set<int> g = mask_to_set(gold);
  std::set<int> uni = p;
  uni.insert(g.begin(), g.end());
  if (uni.empty()) return 1.0;
  std::set<int> inter;
  for (int i : p)
    if (g.count(i)) inter.insert(i);
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

double capture_rate(const std::vector<int>& pred, int unit_begin, int unit_count,
                    bool sentence_level) {
  std::set<int> p = mask_to_set(pred);
  if (sentence_level) return p.count(unit_begin) ? 1.0 : 0.0;
  int hit = 0;
  for (int i = 0; i < unit_count; ++i) hit += p.count(unit_begin + i) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(unit_count);
}

int quadrant_of(const std::vector<int>& pred, const std::vector<int>& gold,
                int unit_begin, int unit_count, bool sentence_level) {
  std::set<int> p = mask_to_set(pred);
  std::set<int> g = mask_to_set(gold);
  bool gold_covered = true;
  for (int i : g) gold_covered = gold_covered && p.count(i) != 0;
  bool attack_selected = capture_rate(pred, unit_begin, unit_count, sentence_level) > 0.0;
  if (gold_covered) return attack_selected ? 0 : 1;
  return attack_selected ? 2 : 3;
}

std::vector<double> grid_project_capped_simplex(const std::vector<double>& s,
                                                double budget, double step) {
  const int L = static_cast<int>(s.size());
  if (L < 1 || L > 3) throw std::invalid_argument("grid oracle supports L in 1..3");
  const int n = static_cast<int>(std::lround(1.0 / step));
  auto val = [&](int i) { return static_cast<double>(i) * step; };

  std::vector<double> best(s.size(), 0.0);
  double best_obj = 1e300;
  auto consider = [&](double z0, double z1, double z2, double obj) {
    if (obj < best_obj) {
      best_obj = obj;
      best[0] = z0;
      if (L > 1) best[1] = z1;
      if (L > 2) best[2] = z2;
    }
  };

  if (L == 1) {
    for (int i = 0; i <= n; ++i) {
      double z0 = val(i);
      if (z0 > budget + 1e-12) break;
      double d0 = z0 - s[0];
      consider(z0, 0, 0, 0.5 * d0 * d0);
    }
    return best;
  }
  if (L == 2) {
    for (int i = 0; i <= n; ++i) {
      double z0 = val(i);
      if (z0 > budget + 1e-12) break;
      double d0 = 0.5 * (z0 - s[0]) * (z0 - s[0]);
      for (int j = 0; j <= n; ++j) {
        double z1 = val(j);
        if (z0 + z1 > budget + 1e-12) break;
        double d1 = z1 - s[1];
        consider(z0, z1, 0, d0 + 0.5 * d1 * d1);
      }
    }
    return best;
  }
  for (int i = 0; i <= n; ++i) {
    double z0 = val(i);
    if (z0 > budget + 1e-12) break;
    double d0 = 0.5 * (z0 - s[0]) * (z0 - s[0]);
    for (int j = 0; j <= n; ++j) {
      double z1 = val(j);
      if (z0 + z1 > budget + 1e-12) break;
      double d01 = d0 + 0.5 * (z1 - s[1]) * (z1 - s[1]);
      double remaining = budget - z0 - z1;
      int kmax = std::min(n, static_cast<int>(std::floor(remaining / step + 1e-12)));
      for (int k = 0; k <= kmax; ++k) {
        double z2 = val(k);
        double d2 = z2 - s[2];
        consider(z0, z1, z2, d01 + 0.5 * d2 * d2);
      }
    }
  }
  return best;
}

}  // namespace oracles
