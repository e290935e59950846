#include "edgespec/harness/stats.hpp"

#include <array>
#include <cmath>

#include "edgespec/common/error.hpp"

namespace edgespec::harness {

double t_critical_95(int df) {
  require(df >= 1, "t_critical_95: df must be >= 1");
  static constexpr std::array<double, 30> table{
      12.706205, 4.302653, 3.182446, 2.776445, 2.570582, 2.446912, 2.364624, 2.306004, 2.262157, 2.228139,
      2.200985,  2.178813, 2.160369, 2.144787, 2.131450, 2.119905, 2.109816, 2.100922, 2.093024, 2.085963,
      2.079614,  2.073873, 2.068658, 2.063899, 2.059539, 2.055529, 2.051831, 2.048407, 2.045230, 2.042272};
  if (df <= 30) return table[df - 1];
  // Cornish-Fisher expansion around the normal quantile.
  const double z = 1.959963984540054;
  const double v = df;
  const double z3 = z * z * z;
  const double z5 = z3 * z * z;
  return z + (z3 + z) / (4.0 * v) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * v * v);
}

Summary summarize(std::span<const double> values) {
  require(!values.empty(), "summarize: no values");
  Summary s;
  s.n = static_cast<int>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.n;
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / (s.n - 1));
  s.ci_half = t_critical_95(s.n - 1) * s.stddev / std::sqrt(static_cast<double>(s.n));
  return s;
}

double improvement(double baseline, double ours) {
  require(baseline != 0.0, "improvement: zero baseline");
  return (baseline - ours) / baseline;
}

}  // namespace edgespec::harness
