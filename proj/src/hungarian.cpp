#include <cmath>
#include <limits>
#include <string>

#include "tensamp/alignment.hpp"
#include "tensamp/error.hpp"

namespace tensamp {
namespace {

/// Shortest augmenting path with potentials, O(n^3).
std::vector<std::size_t> solve(const Eigen::MatrixXd& a) {
  const auto n = static_cast<std::size_t>(a.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> out(n);
  for (std::size_t j = 1; j <= n; ++j) out[p[j] - 1] = j - 1;
  return out;
}

double total(const Eigen::MatrixXd& a, const std::vector<std::size_t>& perm) {
  double s = 0.0;
  for (std::size_t r = 0; r < perm.size(); ++r) s += a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(perm[r]));
  return s;
}

}  // namespace

std::vector<std::size_t> hungarian(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols()) throw ShapeError("hungarian: cost matrix must be square");
  if (!cost.allFinite()) throw NumericalError("hungarian: cost matrix has non-finite entries");
  const auto n = static_cast<std::size_t>(cost.rows());
  if (n == 0) return {};
  const double best = total(cost, solve(cost));
  const double slack = 1e-9 * (1.0 + std::abs(best));

  // Lexicographic tie-break: fix rows in order to the smallest column that
  // still admits an optimal completion.
  std::vector<std::size_t> result(n);
  std::vector<bool> col_used(n, false);
  double fixed_cost = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t rest = n - r - 1;
    std::size_t pick = n;
    double pick_value = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (col_used[c]) continue;
      double completion = 0.0;
      if (rest > 0) {
        Eigen::MatrixXd sub(static_cast<Eigen::Index>(rest), static_cast<Eigen::Index>(rest));
        std::vector<std::size_t> cols;
        for (std::size_t q = 0; q < n; ++q)
          if (!col_used[q] && q != c) cols.push_back(q);
        for (std::size_t i = 0; i < rest; ++i)
          for (std::size_t j = 0; j < rest; ++j)
            sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                cost(static_cast<Eigen::Index>(r + 1 + i), static_cast<Eigen::Index>(cols[j]));
        completion = total(sub, solve(sub));
      }
      const double candidate = fixed_cost + cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) + completion;
      if (candidate <= best + slack) {
        pick = c;
        break;
      }
      if (candidate < pick_value) {
        pick_value = candidate;
        pick = c;
      }
    }
    result[r] = pick;
    col_used[pick] = true;
    fixed_cost += cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(pick));
  }
  return result;
}

}  // namespace tensamp
