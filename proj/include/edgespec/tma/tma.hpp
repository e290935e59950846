#pragma once

#include <iosfwd>
#include <vector>

#include "edgespec/mec/types.hpp"

namespace edgespec::tma {

using mec::Matrix;

/// One accepted exchange: device m leaves server e for e', device m2 the reverse.
struct SwapRecord {
  int m = 0;
  int e = 0;
  int m2 = 0;
  int e2 = 0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  int iteration = 0;  // scan pass in which the swap was accepted
};

enum class ScanStrategy { first_improvement, best_improvement };

struct TmaOptions {
  double lambda = 0.0;
  double w = 0.0;
  ScanStrategy strategy = ScanStrategy::first_improvement;
  /// A swap is accepted only if it lowers the objective by more than
  /// rel_tol * max(1, |objective|).
  double rel_tol = 1e-12;
  int max_passes = 100000;
};

struct TmaResult {
  Matrix x;
  std::vector<SwapRecord> swaps;
  double initial_objective = 0.0;
  double objective = 0.0;
  int passes = 0;
};

/// Each device joins its highest-gain server; ties go to the lowest id.
Matrix tma_phase1(const Matrix& gains);

/// Objective of association x with raw fractions (y, z) projected onto it.
double association_objective(const Matrix& x, const Matrix& raw_y, const Matrix& raw_z,
                             const mec::EnvState& state, double lambda, double w);

/// Pairwise swap search from x. Candidate associations are scored with the
/// raw fractions re-projected, so a moved device takes up the candidate
/// column of the new server.
TmaResult tma_phase2(const Matrix& x, const Matrix& raw_y, const Matrix& raw_z,
                     const mec::EnvState& state, const TmaOptions& options);

/// Phase 1 on the state's channel gains followed by phase 2.
TmaResult tma(const Matrix& raw_y, const Matrix& raw_z, const mec::EnvState& state,
              const TmaOptions& options);

/// One line per accepted swap.
void write_swap_trace(std::ostream& out, const std::vector<SwapRecord>& swaps);

}  // namespace edgespec::tma
