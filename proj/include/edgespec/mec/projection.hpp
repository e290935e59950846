#pragma once

#include "edgespec/mec/types.hpp"

namespace edgespec::mec {

/// Smallest associated compute share kept after projection.
inline constexpr double kMinComputeShare = 1e-6;

/// Maps raw bandwidth/compute fractions onto the feasible set for X.
///
/// Entries are clamped to [0, 1] and zeroed outside X's support, each
/// associated compute share is floored at kMinComputeShare, rows are
/// normalised so sum_j y_ij <= 1, and each server column is scaled down so
/// its bandwidth and compute shares sum to at most 1. Inputs already feasible
/// and supported on X are returned unchanged; the map is idempotent.
Allocation project_actions(const Matrix& raw_y, const Matrix& raw_z, const Matrix& x);

}  // namespace edgespec::mec
