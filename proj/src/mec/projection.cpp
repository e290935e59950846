#include "edgespec/mec/projection.hpp"

#include <algorithm>
#include <cmath>

#include "edgespec/common/error.hpp"

namespace edgespec::mec {

namespace {

double clamp01(double v) { return std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0; }

// Exact sums a hair above 1 from rounding are left alone so a second pass
// does not rescale.
constexpr double kSlack = 1e-12;

}  // namespace

Allocation project_actions(const Matrix& raw_y, const Matrix& raw_z, const Matrix& x) {
  require(raw_y.rows() == x.rows() && raw_y.cols() == x.cols() && raw_z.rows() == x.rows() &&
              raw_z.cols() == x.cols(),
          "project_actions: shape mismatch");
  const auto m = x.rows();
  const auto e = x.cols();
  Allocation out{x, Matrix::Zero(m, e), Matrix::Zero(m, e)};
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < e; ++j) {
      if (x(i, j) != 1.0) continue;
      out.y(i, j) = clamp01(raw_y(i, j));
      out.z(i, j) = std::max(clamp01(raw_z(i, j)), kMinComputeShare);
    }
    const double row = out.y.row(i).sum();
    if (row > 1.0 + kSlack) out.y.row(i) /= row;
  }
  for (Eigen::Index j = 0; j < e; ++j) {
    const double band = out.y.col(j).sum();
    if (band > 1.0 + kSlack) out.y.col(j) /= band;
    const double compute = out.z.col(j).sum();
    if (compute > 1.0 + kSlack) out.z.col(j) /= compute;
  }
  return out;
}

}  // namespace edgespec::mec
