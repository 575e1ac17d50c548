#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace tensamp {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Dims = std::array<std::size_t, 3>;

/// The three modes of a third-order tensor: rows (i), columns (j), fibers (k).
enum class Mode : int { rows = 0, cols = 1, fibers = 2 };

inline constexpr std::array<Mode, 3> kAllModes{Mode::rows, Mode::cols, Mode::fibers};

constexpr int index(Mode m) { return static_cast<int>(m); }
/// Maps the conventional 1-based mode number onto Mode. Throws ShapeError.
Mode mode_from_number(int number);
const char* mode_name(Mode m);

/// Dense complex I x J x K array, column-major: (i,j,k) lives at i + I*j + I*J*k.
class Tensor3 {
 public:
  Tensor3() = default;
  /// Zero tensor.
  explicit Tensor3(Dims dims);
  /// Takes ownership of `data`; throws ShapeError on a length mismatch and
  /// NumericalError on NaN/Inf entries.
  Tensor3(Dims dims, std::vector<cplx> data);

  const Dims& dims() const { return dims_; }
  std::size_t dim(Mode m) const { return dims_[static_cast<std::size_t>(index(m))]; }
  std::size_t size() const { return data_.size(); }

  cplx& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[offset(i, j, k)]; }
  const cplx& operator()(std::size_t i, std::size_t j, std::size_t k) const { return data_[offset(i, j, k)]; }

  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }

  /// Frontal slab X(:,:,k) as a contiguous I*J span.
  std::span<const cplx> slab(std::size_t k) const { return data().subspan(k * dims_[0] * dims_[1], dims_[0] * dims_[1]); }

  double frobenius_norm() const;
  bool all_finite() const;

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t offset(std::size_t i, std::size_t j, std::size_t k) const { return i + dims_[0] * (j + dims_[1] * k); }

  Dims dims_{0, 0, 0};
  std::vector<cplx> data_;
};

/// Sorted subset of {0, ..., ambient-1}; the index form of a full-row-rank
/// selection matrix.
class SelectionSet {
 public:
  SelectionSet() = default;
  /// Throws ShapeError unless `indices` is nonempty, strictly increasing and
  /// bounded by `ambient`.
  SelectionSet(std::vector<std::size_t> indices, std::size_t ambient);

  static SelectionSet all(std::size_t ambient);
  /// {offset, offset+stride, ...} below ambient.
  static SelectionSet strided(std::size_t ambient, std::size_t stride, std::size_t offset = 0);
  /// Sorts and deduplicates before validating.
  static SelectionSet from_unsorted(std::vector<std::size_t> indices, std::size_t ambient);

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  std::size_t ambient() const { return ambient_; }
  std::size_t operator[](std::size_t p) const { return indices_[p]; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  bool is_all() const { return indices_.size() == ambient_; }
  bool contains(std::size_t index) const;
  /// Local position of a global index, if selected.
  std::optional<std::size_t> position(std::size_t index) const;

  friend bool operator==(const SelectionSet&, const SelectionSet&) = default;

 private:
  std::vector<std::size_t> indices_;
  std::size_t ambient_ = 0;
};

/// Global indices selected by both sets (possibly empty).
std::vector<std::size_t> intersect(const SelectionSet& a, const SelectionSet& b);

/// CPD factors (A, B, C) sharing column count F >= 1.
struct FactorTriple {
  Matrix A, B, C;

  FactorTriple() = default;
  /// Throws ShapeError on mismatched or zero column counts, NumericalError on
  /// non-finite entries.
  FactorTriple(Matrix a, Matrix b, Matrix c);

  std::size_t rank() const { return static_cast<std::size_t>(A.cols()); }
  Dims dims() const;
  Matrix& factor(Mode m);
  const Matrix& factor(Mode m) const;
  bool all_finite() const;
};

Matrix unfold(const Tensor3& t, Mode mode);
Tensor3 fold(const Matrix& m, Mode mode, const Dims& dims);

/// Column-wise Kronecker product; column f is kron(P(:,f), Q(:,f)) with the
/// row index of Q varying fastest.
Matrix khatri_rao(const Matrix& p, const Matrix& q);

/// Restriction of `t` to the selected indices along `mode`.
Tensor3 mode_product(const Tensor3& t, Mode mode, const SelectionSet& s);
/// Joint restriction t(rows, cols, fibers).
Tensor3 gather(const Tensor3& t, const SelectionSet& rows, const SelectionSet& cols, const SelectionSet& fibers);
Matrix select_rows(const Matrix& m, const SelectionSet& s);

/// X(i,j,k) = sum_f A(i,f) B(j,f) C(k,f).
Tensor3 cpd_reconstruct(const FactorTriple& f);

/// Sum over frontal slabs of ||est_k - truth_k||_F divided by the sum of
/// ||truth_k||_F. Throws NumericalError if the truth is identically zero.
double nre(const Tensor3& estimate, const Tensor3& truth);

inline constexpr std::size_t kKruskalCap = 12;
inline constexpr double kRankThreshold = 1e-9;

/// Number of singular values above kRankThreshold * sigma_max.
std::size_t numerical_rank(const Matrix& m);

/// Largest k such that every k columns are linearly independent. Brute force
/// over column subsets; throws ValidationError when cols() > kKruskalCap.
std::size_t kruskal_rank(const Matrix& m);

/// Smallest power of two >= x (x >= 1).
std::size_t ceil_pow2(std::size_t x);

}  // namespace tensamp
