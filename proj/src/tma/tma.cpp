#include "edgespec/tma/tma.hpp"

#include <cmath>
#include <ostream>

#include "edgespec/common/error.hpp"
#include "edgespec/mec/model.hpp"
#include "edgespec/mec/projection.hpp"

namespace edgespec::tma {

namespace {

void check_association(const Matrix& x, const mec::EnvState& state) {
  require(x.rows() == state.num_devices() && x.cols() == state.num_servers(),
          "tma: association shape does not match the state");
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int ones = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      require(x(i, j) == 0.0 || x(i, j) == 1.0, "tma: association entries must be 0 or 1");
      ones += x(i, j) == 1.0;
    }
    require(ones == 1, "tma: device " + std::to_string(i) + " must join exactly one server");
  }
}

bool improves(double candidate, double current, double rel_tol) {
  return current - candidate > rel_tol * std::max(1.0, std::abs(current));
}

void apply_swap(Matrix& x, int m, int e, int m2, int e2) {
  x(m, e) = 0.0;
  x(m, e2) = 1.0;
  x(m2, e2) = 0.0;
  x(m2, e) = 1.0;
}

}  // namespace

Matrix tma_phase1(const Matrix& gains) {
  require(gains.cols() > 0, "tma_phase1: no servers");
  require(gains.allFinite(), "tma_phase1: gains must be finite");
  Matrix x = Matrix::Zero(gains.rows(), gains.cols());
  for (Eigen::Index i = 0; i < gains.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < gains.cols(); ++j) {
      if (gains(i, j) > gains(i, best)) best = j;
    }
    x(i, best) = 1.0;
  }
  return x;
}

double association_objective(const Matrix& x, const Matrix& raw_y, const Matrix& raw_z,
                             const mec::EnvState& state, double lambda, double w) {
  return mec::objective(state, mec::project_actions(raw_y, raw_z, x), lambda, w);
}

TmaResult tma_phase2(const Matrix& x, const Matrix& raw_y, const Matrix& raw_z,
                     const mec::EnvState& state, const TmaOptions& options) {
  check_association(x, state);
  TmaResult result;
  result.x = x;
  result.initial_objective = association_objective(x, raw_y, raw_z, state, options.lambda, options.w);
  double current = result.initial_objective;
  const int m_count = state.num_devices();
  std::vector<int> server_of = mec::association_of(result.x);

  auto score = [&](int m, int m2) {
    Matrix candidate = result.x;
    apply_swap(candidate, m, server_of[m], m2, server_of[m2]);
    return association_objective(candidate, raw_y, raw_z, state, options.lambda, options.w);
  };
  auto accept = [&](int m, int m2, double value) {
    const int e = server_of[m];
    const int e2 = server_of[m2];
    apply_swap(result.x, m, e, m2, e2);
    result.swaps.push_back({m, e, m2, e2, current, value, result.passes});
    server_of[m] = e2;
    server_of[m2] = e;
    current = value;
  };

  bool changed = true;
  while (changed) {
    require(result.passes < options.max_passes, "tma_phase2: pass limit reached");
    ++result.passes;
    changed = false;
    int best_m = -1;
    int best_m2 = -1;
    double best_value = current;
    for (int m = 0; m < m_count; ++m) {
      for (int m2 = m + 1; m2 < m_count; ++m2) {
        if (server_of[m] == server_of[m2]) continue;
        const double value = score(m, m2);
        if (options.strategy == ScanStrategy::first_improvement) {
          if (improves(value, current, options.rel_tol)) {
            accept(m, m2, value);
            changed = true;
          }
        } else if (improves(value, current, options.rel_tol) && value < best_value) {
          best_m = m;
          best_m2 = m2;
          best_value = value;
        }
      }
    }
    if (best_m >= 0) {
      accept(best_m, best_m2, best_value);
      changed = true;
    }
  }
  result.objective = current;
  return result;
}

TmaResult tma(const Matrix& raw_y, const Matrix& raw_z, const mec::EnvState& state,
              const TmaOptions& options) {
  return tma_phase2(tma_phase1(state.channel.h), raw_y, raw_z, state, options);
}

void write_swap_trace(std::ostream& out, const std::vector<SwapRecord>& swaps) {
  const auto precision = out.precision(17);
  for (const auto& s : swaps) {
    out << "pass=" << s.iteration << " (" << s.m << ',' << s.e << ")<->(" << s.m2 << ',' << s.e2
        << ") " << s.objective_before << " -> " << s.objective_after << '\n';
  }
  out.precision(precision);
}

}  // namespace edgespec::tma
