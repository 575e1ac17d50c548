#include "tensamp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tensamp/error.hpp"
#include "tensamp/kernels.hpp"

namespace tensamp {

Mode mode_from_number(int number) {
  if (number < 1 || number > 3) throw ShapeError("mode must be 1, 2 or 3, got " + std::to_string(number));
  return static_cast<Mode>(number - 1);
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::rows: return "rows";
    case Mode::cols: return "cols";
    case Mode::fibers: return "fibers";
  }
  return "?";
}

// ---------------------------------------------------------------- Tensor3

Tensor3::Tensor3(Dims dims) : dims_(dims), data_(dims[0] * dims[1] * dims[2], cplx(0.0, 0.0)) {}

Tensor3::Tensor3(Dims dims, std::vector<cplx> data) : dims_(dims), data_(std::move(data)) {
  if (data_.size() != dims_[0] * dims_[1] * dims_[2]) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match dims " +
                     std::to_string(dims_[0]) + "x" + std::to_string(dims_[1]) + "x" + std::to_string(dims_[2]));
  }
  if (!all_finite()) throw NumericalError("tensor data contains NaN or Inf");
}

double Tensor3::frobenius_norm() const { return std::sqrt(kernels::sqnorm(data_.data(), data_.size())); }

bool Tensor3::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

// ----------------------------------------------------------- SelectionSet

SelectionSet::SelectionSet(std::vector<std::size_t> indices, std::size_t ambient)
    : indices_(std::move(indices)), ambient_(ambient) {
  if (indices_.empty()) throw ShapeError("selection set is empty");
  for (std::size_t p = 0; p < indices_.size(); ++p) {
    if (indices_[p] >= ambient_) {
      throw ShapeError("selection index " + std::to_string(indices_[p]) + " out of range for dimension " +
                       std::to_string(ambient_));
    }
    if (p > 0 && indices_[p] <= indices_[p - 1]) throw ShapeError("selection indices must be strictly increasing");
  }
}

SelectionSet SelectionSet::all(std::size_t ambient) {
  std::vector<std::size_t> idx(ambient);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return {std::move(idx), ambient};
}

SelectionSet SelectionSet::strided(std::size_t ambient, std::size_t stride, std::size_t offset) {
  if (stride == 0) throw ShapeError("stride must be >= 1");
  std::vector<std::size_t> idx;
  for (std::size_t i = offset; i < ambient; i += stride) idx.push_back(i);
  return {std::move(idx), ambient};
}

SelectionSet SelectionSet::from_unsorted(std::vector<std::size_t> indices, std::size_t ambient) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return {std::move(indices), ambient};
}

bool SelectionSet::contains(std::size_t index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

std::optional<std::size_t> SelectionSet::position(std::size_t index) const {
  const auto it = std::lower_bound(indices_.begin(), indices_.end(), index);
  if (it == indices_.end() || *it != index) return std::nullopt;
  return static_cast<std::size_t>(it - indices_.begin());
}

std::vector<std::size_t> intersect(const SelectionSet& a, const SelectionSet& b) {
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// ----------------------------------------------------------- FactorTriple

FactorTriple::FactorTriple(Matrix a, Matrix b, Matrix c) : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
  if (A.cols() < 1 || A.cols() != B.cols() || A.cols() != C.cols()) {
    throw ShapeError("factor matrices must share a column count >= 1 (got " + std::to_string(A.cols()) + ", " +
                     std::to_string(B.cols()) + ", " + std::to_string(C.cols()) + ")");
  }
  if (!all_finite()) throw NumericalError("factor matrices contain NaN or Inf");
}

Dims FactorTriple::dims() const {
  return {static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(B.rows()), static_cast<std::size_t>(C.rows())};
}

Matrix& FactorTriple::factor(Mode m) {
  switch (m) {
    case Mode::rows: return A;
    case Mode::cols: return B;
    case Mode::fibers: return C;
  }
  return A;
}

const Matrix& FactorTriple::factor(Mode m) const { return const_cast<FactorTriple*>(this)->factor(m); }

bool FactorTriple::all_finite() const { return A.allFinite() && B.allFinite() && C.allFinite(); }

// ------------------------------------------------------------- unfoldings

Matrix unfold(const Tensor3& t, Mode mode) {
  const auto [I, J, K] = t.dims();
  switch (mode) {
    case Mode::rows: {  // JK x I, column i = vec(X(i,:,:))
      Matrix m(static_cast<Eigen::Index>(J * K), static_cast<Eigen::Index>(I));
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t j = 0; j < J; ++j)
          for (std::size_t i = 0; i < I; ++i) m(static_cast<Eigen::Index>(j + J * k), static_cast<Eigen::Index>(i)) = t(i, j, k);
      return m;
    }
    case Mode::cols: {  // IK x J, column j = vec(X(:,j,:))
      Matrix m(static_cast<Eigen::Index>(I * K), static_cast<Eigen::Index>(J));
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t j = 0; j < J; ++j)
          for (std::size_t i = 0; i < I; ++i) m(static_cast<Eigen::Index>(i + I * k), static_cast<Eigen::Index>(j)) = t(i, j, k);
      return m;
    }
    case Mode::fibers: {  // IJ x K, column k = vec(X(:,:,k)); same memory layout
      return Eigen::Map<const Matrix>(t.data().data(), static_cast<Eigen::Index>(I * J), static_cast<Eigen::Index>(K));
    }
  }
  throw ShapeError("invalid mode");
}

Tensor3 fold(const Matrix& m, Mode mode, const Dims& dims) {
  const auto [I, J, K] = dims;
  std::size_t rows = 0, cols = 0;
  switch (mode) {
    case Mode::rows: rows = J * K; cols = I; break;
    case Mode::cols: rows = I * K; cols = J; break;
    case Mode::fibers: rows = I * J; cols = K; break;
  }
  if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols) {
    throw ShapeError("cannot fold a " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " matrix along " +
                     mode_name(mode) + " into " + std::to_string(I) + "x" + std::to_string(J) + "x" + std::to_string(K));
  }
  Tensor3 t(dims);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t i = 0; i < I; ++i) {
        switch (mode) {
          case Mode::rows: t(i, j, k) = m(static_cast<Eigen::Index>(j + J * k), static_cast<Eigen::Index>(i)); break;
          case Mode::cols: t(i, j, k) = m(static_cast<Eigen::Index>(i + I * k), static_cast<Eigen::Index>(j)); break;
          case Mode::fibers: t(i, j, k) = m(static_cast<Eigen::Index>(i + I * j), static_cast<Eigen::Index>(k)); break;
        }
      }
  if (!t.all_finite()) throw NumericalError("folded matrix contains NaN or Inf");
  return t;
}

Matrix khatri_rao(const Matrix& p, const Matrix& q) {
  if (p.cols() != q.cols()) {
    throw ShapeError("khatri_rao: column counts differ (" + std::to_string(p.cols()) + " vs " + std::to_string(q.cols()) + ")");
  }
  const Eigen::Index np = p.rows(), nq = q.rows();
  Matrix out(np * nq, p.cols());
  for (Eigen::Index f = 0; f < p.cols(); ++f) {
    const cplx* qcol = q.col(f).data();
    for (Eigen::Index r = 0; r < np; ++r) {
      kernels::scale(out.col(f).data() + r * nq, p(r, f), qcol, static_cast<std::size_t>(nq));
    }
  }
  return out;
}

// -------------------------------------------------------------- selection

Tensor3 gather(const Tensor3& t, const SelectionSet& rows, const SelectionSet& cols, const SelectionSet& fibers) {
  const Dims& d = t.dims();
  if (rows.ambient() != d[0] || cols.ambient() != d[1] || fibers.ambient() != d[2]) {
    throw ShapeError("selection ambient dims do not match tensor dims");
  }
  Tensor3 out({rows.size(), cols.size(), fibers.size()});
  for (std::size_t kk = 0; kk < fibers.size(); ++kk)
    for (std::size_t jj = 0; jj < cols.size(); ++jj)
      for (std::size_t ii = 0; ii < rows.size(); ++ii) out(ii, jj, kk) = t(rows[ii], cols[jj], fibers[kk]);
  return out;
}

Tensor3 mode_product(const Tensor3& t, Mode mode, const SelectionSet& s) {
  const Dims& d = t.dims();
  if (s.ambient() != t.dim(mode)) {
    throw ShapeError(std::string("mode_product: selection ambient does not match the ") + mode_name(mode) + " dimension");
  }
  switch (mode) {
    case Mode::rows: return gather(t, s, SelectionSet::all(d[1]), SelectionSet::all(d[2]));
    case Mode::cols: return gather(t, SelectionSet::all(d[0]), s, SelectionSet::all(d[2]));
    case Mode::fibers: return gather(t, SelectionSet::all(d[0]), SelectionSet::all(d[1]), s);
  }
  throw ShapeError("invalid mode");
}

Matrix select_rows(const Matrix& m, const SelectionSet& s) {
  if (s.ambient() != static_cast<std::size_t>(m.rows())) throw ShapeError("select_rows: ambient mismatch");
  Matrix out(static_cast<Eigen::Index>(s.size()), m.cols());
  for (std::size_t p = 0; p < s.size(); ++p) out.row(static_cast<Eigen::Index>(p)) = m.row(static_cast<Eigen::Index>(s[p]));
  return out;
}

// --------------------------------------------------------- reconstruction

Tensor3 cpd_reconstruct(const FactorTriple& f) {
  const Dims dims = f.dims();
  const auto [I, J, K] = dims;
  Tensor3 t(dims);
  auto data = t.data();
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < J; ++j) {
      cplx* column = data.data() + I * (j + J * k);
      for (Eigen::Index r = 0; r < f.A.cols(); ++r) {
        const cplx w = f.B(static_cast<Eigen::Index>(j), r) * f.C(static_cast<Eigen::Index>(k), r);
        kernels::axpy(column, w, f.A.col(r).data(), I);
      }
    }
  return t;
}

double nre(const Tensor3& estimate, const Tensor3& truth) {
  if (estimate.dims() != truth.dims()) throw ShapeError("nre: dims differ");
  const Dims& d = truth.dims();
  const std::size_t slab = d[0] * d[1];
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < d[2]; ++k) {
    const cplx* e = estimate.data().data() + k * slab;
    const cplx* x = truth.data().data() + k * slab;
    num += std::sqrt(kernels::diff_sqnorm(e, x, slab));
    den += std::sqrt(kernels::sqnorm(x, slab));
  }
  if (den == 0.0) throw NumericalError("nre: reference tensor is identically zero");
  return num / den;
}

// ----------------------------------------------------------- rank helpers

std::size_t numerical_rank(const Matrix& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > kRankThreshold * s(0)) ++r;
  return r;
}

namespace {

// Visits all k-subsets of {0..n-1} in lexicographic order; stops when the
// visitor returns false. Returns false if stopped early.
template <typename Visit>
bool for_each_subset(std::size_t n, std::size_t k, Visit&& visit) {
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    if (!visit(idx)) return false;
    std::size_t p = k;
    while (p > 0 && idx[p - 1] == n - k + p - 1) --p;
    if (p == 0) return true;
    ++idx[p - 1];
    for (std::size_t q = p; q < k; ++q) idx[q] = idx[q - 1] + 1;
  }
}

}  // namespace

std::size_t kruskal_rank(const Matrix& m) {
  const auto F = static_cast<std::size_t>(m.cols());
  const auto N = static_cast<std::size_t>(m.rows());
  if (F > kKruskalCap) {
    throw ValidationError("kruskal_rank: " + std::to_string(F) + " columns exceeds the brute-force cap of " +
                          std::to_string(kKruskalCap) + "; use the generic (probabilistic) checker instead");
  }
  if (F == 0) return 0;
  for (Eigen::Index f = 0; f < m.cols(); ++f)
    if (m.col(f).squaredNorm() == 0.0) return 0;
  const std::size_t top = std::min(N, F);
  for (std::size_t k = 2; k <= top; ++k) {
    const bool all_independent = for_each_subset(F, k, [&](const std::vector<std::size_t>& cols) {
      Matrix sub(m.rows(), static_cast<Eigen::Index>(k));
      for (std::size_t c = 0; c < k; ++c) sub.col(static_cast<Eigen::Index>(c)) = m.col(static_cast<Eigen::Index>(cols[c]));
      return numerical_rank(sub) == k;
    });
    if (!all_independent) return k - 1;
  }
  return top;
}

std::size_t ceil_pow2(std::size_t x) {
  std::size_t p = 1;
  while (p < x) p <<= 1;
  return p;
}

}  // namespace tensamp
