#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace hrsi {

/// Dense n-way array of doubles.
///
/// Storage is column-major: the first index varies fastest, so the flat
/// offset of (i_0, i_1, ..., i_{n-1}) is
///   i_0 + m_0 * (i_1 + m_1 * (i_2 + ...)).
/// Matrices are order-2 tensors, which makes every matrix column contiguous.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(std::vector<std::size_t> shape, double fill = 0.0);
  DenseTensor(std::vector<std::size_t> shape, std::vector<double> values);

  static DenseTensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Builds a matrix from nested row lists; handy in tests.
  static DenseTensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseTensor identity(std::size_t n);

  std::size_t order() const noexcept { return shape_.size(); }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t extent(std::size_t mode) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // Matrix views (order 2 only).
  std::size_t rows() const;
  std::size_t cols() const;
  std::span<double> column(std::size_t q);
  std::span<const double> column(std::size_t q) const;

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  double& operator[](std::size_t flat) noexcept { return data_[flat]; }
  double operator[](std::size_t flat) const noexcept { return data_[flat]; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i + shape_[0] * j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i + shape_[0] * j];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept {
    return data_[i + shape_[0] * (j + shape_[1] * k)];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return data_[i + shape_[0] * (j + shape_[1] * k)];
  }

  /// Bounds-checked access by multi-index.
  double& at(std::span<const std::size_t> index);
  double at(std::span<const std::size_t> index) const;

  bool is_nonnegative() const noexcept;
  void fill(double v) noexcept;

  bool operator==(const DenseTensor&) const = default;

 private:
  std::size_t offset(std::span<const std::size_t> index) const;

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Factor matrices X_i (m_i x r_i) plus an optional Tucker core.
///
/// Without a core all r_i must agree (NMF when there are two factors, CP
/// otherwise). With a core, its extent on mode i equals r_i.
struct FactorSet {
  std::vector<DenseTensor> factors;
  std::optional<DenseTensor> core;

  std::size_t order() const noexcept { return factors.size(); }
  /// Common column count. Throws for Tucker sets with unequal ranks.
  std::size_t rank() const;
  /// Factor blocks first, then the core if present.
  std::size_t num_blocks() const noexcept { return factors.size() + (core ? 1 : 0); }
  DenseTensor& block(std::size_t b);
  const DenseTensor& block(std::size_t b) const;

  /// Throws std::invalid_argument when shapes are inconsistent.
  void validate() const;
};

// --- Multilinear algebra -------------------------------------------------

/// Mode-n matricization, m_n x prod_{k != n} m_k.
///
/// Column index of entry (i_0, ..., i_{d-1}) is sum_{k != n} i_k J_k with
/// J_k = prod_{l < k, l != n} m_l, i.e. the remaining indices keep their
/// order and the lowest one varies fastest.
DenseTensor unfold(const DenseTensor& t, std::size_t mode);

/// Inverse of unfold for a target shape.
DenseTensor fold(const DenseTensor& m, std::size_t mode, const std::vector<std::size_t>& shape);

/// t x_mode u, with u of shape (rows, extent(t, mode)).
DenseTensor mode_product(const DenseTensor& t, const DenseTensor& u, std::size_t mode);

/// t x_mode u^T without forming the transpose; u has shape (extent(t, mode), cols).
DenseTensor mode_product_transposed(const DenseTensor& t, const DenseTensor& u,
                                    std::size_t mode);

DenseTensor kronecker(const DenseTensor& a, const DenseTensor& b);
DenseTensor khatri_rao(const DenseTensor& a, const DenseTensor& b);

/// Khatri-Rao product of all factors except `skip`, in descending mode
/// order, which matches the unfolding convention:
///   unfold(cp_reconstruct(f), n) == X_n * khatri_rao_except(f, n)^T.
DenseTensor khatri_rao_except(const std::vector<DenseTensor>& factors, std::size_t skip);

DenseTensor transpose(const DenseTensor& m);
DenseTensor matmul(const DenseTensor& a, const DenseTensor& b);
/// a * b^T.
DenseTensor matmul_transposed(const DenseTensor& a, const DenseTensor& b);
/// a^T * a.
DenseTensor gram(const DenseTensor& a);

/// Sum of |x_k|^p.
double lp_norm_pow(std::span<const double> x, double p);
double frobenius_norm_sq(const DenseTensor& t);
double sum(const DenseTensor& t);
std::vector<double> column_sums(const DenseTensor& m);

DenseTensor cp_reconstruct(const FactorSet& f);
DenseTensor tucker_reconstruct(const FactorSet& f);
/// Tucker when a core is present, CP otherwise.
DenseTensor reconstruct(const FactorSet& f);

/// Superdiagonal order-n core with ones on the diagonal.
DenseTensor superdiagonal(std::size_t order, std::size_t rank);

}  // namespace hrsi
