#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace vad {

// Frame-level ROC-AUC as the Mann-Whitney statistic with midranks for ties:
// AUC = P(anomaly score > normal score) + P(tie)/2.
inline double frame_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("frame_auc: scores and labels differ in length");
  long n1 = 0, n0 = 0;
  for (int l : labels) {
    if (l == 1)
      ++n1;
    else if (l == 0)
      ++n0;
    else
      throw std::invalid_argument("frame_auc: labels must be 0 or 1");
  }
  if (n1 == 0 || n0 == 0) throw std::invalid_argument("AUC undefined: needs both classes");

  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t t = i; t <= j; ++t)
      if (labels[order[t]] == 1) rank_sum_pos += midrank;
    i = j + 1;
  }
  return (rank_sum_pos - 0.5 * static_cast<double>(n1) * (static_cast<double>(n1) + 1.0)) /
         (static_cast<double>(n1) * static_cast<double>(n0));
}

// ----------------------------------------------------------------------------
// Student-t quantile for the confidence interval, via the regularized
// incomplete beta function (continued fraction, Lentz's method) and bisection.
// ----------------------------------------------------------------------------
namespace detail {
inline double beta_cont_fraction(double a, double b, double x) {
  const int max_iter = 300;
  const double eps = 3e-14, tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

inline double reg_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cont_fraction(a, b, x) / a;
  return 1.0 - bt * beta_cont_fraction(b, a, 1.0 - x) / b;
}
}  // namespace detail

inline double student_t_cdf(double t, double df) {
  const double x = df / (df + t * t);
  const double tail = 0.5 * detail::reg_incomplete_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

inline double student_t_quantile(double p, double df) {
  if (df <= 0.0) throw std::invalid_argument("student_t_quantile: df must be positive");
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("student_t_quantile: p must be in (0,1)");
  if (p < 0.5) return -student_t_quantile(1.0 - p, df);
  double lo = 0.0, hi = 2.0;
  while (student_t_cdf(hi, df) < p) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, df) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

struct AucResult {
  double auc = 0.0;
  int n_runs = 0;
  double ci95_halfwidth = 0.0;
};

inline AucResult multi_run_auc(const std::vector<double>& run_aucs) {
  if (run_aucs.empty()) throw std::invalid_argument("multi_run_auc: needs at least one run");
  AucResult r;
  r.n_runs = static_cast<int>(run_aucs.size());
  r.auc = std::accumulate(run_aucs.begin(), run_aucs.end(), 0.0) / r.n_runs;
  if (r.n_runs >= 2) {
    double sq = 0.0;
    for (double a : run_aucs) sq += (a - r.auc) * (a - r.auc);
    const double sd = std::sqrt(sq / (r.n_runs - 1));
    r.ci95_halfwidth = student_t_quantile(0.975, r.n_runs - 1) * sd / std::sqrt(r.n_runs);
  }
  return r;
}

}  // namespace vad
