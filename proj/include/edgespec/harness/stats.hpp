#pragma once

#include <span>

namespace edgespec::harness {

/// Two-sided 95% Student-t critical value for `df` degrees of freedom.
double t_critical_95(int df);

struct Summary {
  int n = 0;
  double mean = 0.0;
  double stddev = 0.0;   // sample (n - 1) standard deviation
  double ci_half = 0.0;  // 95% half-width; 0 for n < 2

  double lo() const { return mean - ci_half; }
  double hi() const { return mean + ci_half; }
};

Summary summarize(std::span<const double> values);

/// (baseline - ours) / baseline.
double improvement(double baseline, double ours);

}  // namespace edgespec::harness
