#include "tensamp/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "logging.hpp"
#include "tensamp/error.hpp"

namespace tensamp {

void SubFactors::validate() const {
  if (static_cast<std::size_t>(A.rows()) != rows.size() || static_cast<std::size_t>(B.rows()) != cols.size() ||
      static_cast<std::size_t>(C.rows()) != fibers.size()) {
    throw ShapeError("sub-factors of pattern " + std::to_string(pattern) + " do not match their selections");
  }
  if (A.cols() != B.cols() || A.cols() != C.cols() || A.cols() < 1) {
    throw ShapeError("sub-factors of pattern " + std::to_string(pattern) + " have mismatched column counts");
  }
}

namespace {

constexpr double kTiny = 1e-12;

/// Rows of `s`'s mode-m factor at the given global indices.
Matrix shared_rows(const SubFactors& s, Mode m, const std::vector<std::size_t>& shared) {
  const Matrix& fac = s.factor(m);
  Matrix out(static_cast<Eigen::Index>(shared.size()), fac.cols());
  for (std::size_t p = 0; p < shared.size(); ++p) {
    const auto pos = s.selection(m).position(shared[p]);
    if (!pos) {
      throw ShapeError("index " + std::to_string(shared[p]) + " is not observed by pattern " + std::to_string(s.pattern) +
                       " in mode " + mode_name(m));
    }
    out.row(static_cast<Eigen::Index>(p)) = fac.row(static_cast<Eigen::Index>(*pos));
  }
  return out;
}

Matrix permuted(const Matrix& m, const std::vector<std::size_t>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t f = 0; f < perm.size(); ++f) out.col(static_cast<Eigen::Index>(f)) = m.col(static_cast<Eigen::Index>(perm[f]));
  return out;
}

/// Least-squares scale mu with ref ~= mu * other per column; empty if some
/// column has no usable equation.
std::vector<cplx> column_scales(const Matrix& ref, const Matrix& other) {
  std::vector<cplx> mu(static_cast<std::size_t>(ref.cols()));
  for (Eigen::Index f = 0; f < ref.cols(); ++f) {
    const double peak = ref.col(f).cwiseAbs().maxCoeff();
    cplx num(0.0, 0.0);
    double den = 0.0;
    for (Eigen::Index i = 0; i < ref.rows(); ++i) {
      if (std::abs(ref(i, f)) <= kTiny * std::max(peak, kTiny) || std::abs(other(i, f)) <= kTiny) continue;
      num += std::conj(other(i, f)) * ref(i, f);
      den += std::norm(other(i, f));
    }
    if (den == 0.0) return {};
    mu[static_cast<std::size_t>(f)] = num / den;
  }
  return mu;
}

}  // namespace

std::vector<std::size_t> match_permutation(const SubFactors& ref, const SubFactors& other, Mode mode,
                                           const std::vector<std::size_t>& shared) {
  if (shared.size() < 2) {
    throw ValidationError("match_permutation: patterns " + std::to_string(ref.pattern) + " and " + std::to_string(other.pattern) +
                          " share " + std::to_string(shared.size()) + " index(es) in mode " + mode_name(mode) + ", need >= 2");
  }
  if (ref.A.cols() != other.A.cols()) throw ShapeError("match_permutation: rank mismatch");
  const Matrix r = shared_rows(ref, mode, shared);
  const Matrix o = shared_rows(other, mode, shared);

  Eigen::Index anchor = -1;
  double anchor_score = 0.0;
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    const double score = std::min(r.row(i).cwiseAbs().minCoeff(), o.row(i).cwiseAbs().minCoeff());
    if (score > anchor_score) {
      anchor_score = score;
      anchor = i;
    }
  }
  if (anchor < 0 || anchor_score < kTiny) {
    throw NumericalError("match_permutation: every shared row between patterns " + std::to_string(ref.pattern) + " and " +
                         std::to_string(other.pattern) + " has a (near-)zero entry; no usable anchor");
  }
  const Matrix rn = r * r.row(anchor).cwiseInverse().asDiagonal();
  const Matrix on = o * o.row(anchor).cwiseInverse().asDiagonal();
  Eigen::MatrixXd cost(r.cols(), r.cols());
  for (Eigen::Index f = 0; f < r.cols(); ++f)
    for (Eigen::Index g = 0; g < r.cols(); ++g) cost(f, g) = (rn.col(f) - on.col(g)).squaredNorm();
  return hungarian(cost);
}

Assignment resolve_scaling(const SubFactors& ref, const SubFactors& other, const std::vector<std::size_t>& permutation,
                           Mode matched_mode) {
  const auto F = static_cast<std::size_t>(ref.A.cols());
  if (permutation.size() != F) throw ShapeError("resolve_scaling: permutation length does not match the rank");

  std::array<std::size_t, 3> overlap_size{};
  std::array<std::vector<std::size_t>, 3> shared;
  for (const Mode m : kAllModes) {
    const auto mi = static_cast<std::size_t>(index(m));
    shared[mi] = intersect(ref.selection(m), other.selection(m));
    overlap_size[mi] = shared[mi].size();
  }
  std::vector<Mode> order{matched_mode};
  std::vector<Mode> rest;
  for (const Mode m : kAllModes)
    if (m != matched_mode) rest.push_back(m);
  std::stable_sort(rest.begin(), rest.end(), [&](Mode a, Mode b) {
    return overlap_size[static_cast<std::size_t>(index(a))] > overlap_size[static_cast<std::size_t>(index(b))];
  });
  order.insert(order.end(), rest.begin(), rest.end());

  Assignment out;
  out.permutation = permutation;
  std::vector<Mode> solved;
  for (const Mode m : order) {
    if (solved.size() == 2) break;
    const auto mi = static_cast<std::size_t>(index(m));
    if (shared[mi].empty()) continue;
    const Matrix r = shared_rows(ref, m, shared[mi]);
    const Matrix o = permuted(shared_rows(other, m, shared[mi]), permutation);
    auto mu = column_scales(r, o);
    if (mu.empty()) continue;
    out.scales[mi] = std::move(mu);
    solved.push_back(m);
  }
  if (solved.size() < 2) {
    throw NumericalError("resolve_scaling: patterns " + std::to_string(ref.pattern) + " and " + std::to_string(other.pattern) +
                         " share usable rows in fewer than two modes");
  }
  for (const Mode m : kAllModes) {
    const auto mi = static_cast<std::size_t>(index(m));
    if (std::find(solved.begin(), solved.end(), m) != solved.end()) continue;
    const auto& a = out.scales[static_cast<std::size_t>(index(solved[0]))];
    const auto& b = out.scales[static_cast<std::size_t>(index(solved[1]))];
    out.scales[mi].resize(F);
    for (std::size_t f = 0; f < F; ++f) out.scales[mi][f] = 1.0 / (a[f] * b[f]);
  }
  return out;
}

SubFactors apply_assignment(const SubFactors& other, const Assignment& a) {
  SubFactors out = other;
  for (const Mode m : kAllModes) {
    const auto& s = a.scales[static_cast<std::size_t>(index(m))];
    Matrix p = permuted(other.factor(m), a.permutation);
    for (std::size_t f = 0; f < s.size(); ++f) p.col(static_cast<Eigen::Index>(f)) *= s[f];
    out.factor(m) = std::move(p);
  }
  return out;
}

std::vector<SubFactors> align_all(const std::vector<SubFactors>& subs) {
  if (subs.empty()) return {};
  for (const auto& s : subs) s.validate();
  std::vector<SubFactors> aligned(subs.size());
  std::vector<bool> done(subs.size(), false);
  aligned[0] = subs[0];
  done[0] = true;
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v = 0; v < subs.size(); ++v) {
      if (done[v]) continue;
      std::array<std::vector<std::size_t>, 3> shared;
      for (const Mode m : kAllModes) shared[static_cast<std::size_t>(index(m))] = intersect(aligned[u].selection(m), subs[v].selection(m));
      int best = -1;
      std::size_t nonempty = 0;
      for (int m = 0; m < 3; ++m) {
        if (!shared[static_cast<std::size_t>(m)].empty()) ++nonempty;
        if (shared[static_cast<std::size_t>(m)].size() >= 2 &&
            (best < 0 || shared[static_cast<std::size_t>(m)].size() > shared[static_cast<std::size_t>(best)].size()))
          best = m;
      }
      if (best < 0 || nonempty < 2) continue;
      const Mode mode = static_cast<Mode>(best);
      const auto perm = match_permutation(aligned[u], subs[v], mode, shared[static_cast<std::size_t>(best)]);
      aligned[v] = apply_assignment(subs[v], resolve_scaling(aligned[u], subs[v], perm, mode));
      done[v] = true;
      queue.push_back(v);
      detail::log().debug("aligned pattern {} to pattern {} via mode {}", subs[v].pattern, subs[u].pattern, mode_name(mode));
    }
  }
  for (std::size_t v = 0; v < subs.size(); ++v) {
    if (!done[v]) {
      throw ValidationError("alignment: pattern " + std::to_string(subs[v].pattern) +
                            " is not chained to pattern " + std::to_string(subs[0].pattern) + " by usable overlaps");
    }
  }
  return aligned;
}

FactorTriple stitch(const std::vector<SubFactors>& aligned, const Dims& dims, std::size_t rank) {
  std::array<Matrix, 3> sum;
  std::array<std::vector<std::size_t>, 3> count;
  for (const Mode m : kAllModes) {
    const auto mi = static_cast<std::size_t>(index(m));
    sum[mi] = Matrix::Zero(static_cast<Eigen::Index>(dims[mi]), static_cast<Eigen::Index>(rank));
    count[mi].assign(dims[mi], 0);
  }
  for (const auto& s : aligned) {
    s.validate();
    if (static_cast<std::size_t>(s.A.cols()) != rank) throw ShapeError("stitch: sub-factor rank mismatch");
    for (const Mode m : kAllModes) {
      const auto mi = static_cast<std::size_t>(index(m));
      const SelectionSet& sel = s.selection(m);
      if (sel.ambient() != dims[mi]) throw ShapeError("stitch: selection ambient does not match dims");
      for (std::size_t p = 0; p < sel.size(); ++p) {
        sum[mi].row(static_cast<Eigen::Index>(sel[p])) += s.factor(m).row(static_cast<Eigen::Index>(p));
        ++count[mi][sel[p]];
      }
    }
  }
  for (const Mode m : kAllModes) {
    const auto mi = static_cast<std::size_t>(index(m));
    for (std::size_t i = 0; i < dims[mi]; ++i) {
      if (count[mi][i] == 0) {
        throw ValidationError(std::string("stitch: ") + mode_name(m) + " index " + std::to_string(i) + " is covered by no pattern");
      }
      sum[mi].row(static_cast<Eigen::Index>(i)) /= static_cast<double>(count[mi][i]);
    }
  }
  return {std::move(sum[0]), std::move(sum[1]), std::move(sum[2])};
}

}  // namespace tensamp
