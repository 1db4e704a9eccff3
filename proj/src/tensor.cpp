#include "hrsi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hrsi {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_shape(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must have at least one mode");
  for (std::size_t e : shape)
    if (e == 0) throw std::invalid_argument("tensor extents must be positive");
}

void require_matrix(const DenseTensor& m, const char* what) {
  if (m.order() != 2) throw std::invalid_argument(std::string(what) + ": expected a matrix");
}

// Splits a tensor around `mode` into (left, extent, right) strides.
struct ModeSplit {
  std::size_t left = 1, extent = 1, right = 1;
};

ModeSplit split_at(const std::vector<std::size_t>& shape, std::size_t mode) {
  ModeSplit s;
  for (std::size_t k = 0; k < mode; ++k) s.left *= shape[k];
  s.extent = shape[mode];
  for (std::size_t k = mode + 1; k < shape.size(); ++k) s.right *= shape[k];
  return s;
}

}  // namespace

// --- DenseTensor ---------------------------------------------------------

DenseTensor::DenseTensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_product(shape_), fill);
}

DenseTensor::DenseTensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  check_shape(shape_);
  if (data_.size() != shape_product(shape_))
    throw std::invalid_argument("tensor data length does not match its shape");
}

DenseTensor DenseTensor::matrix(std::size_t rows, std::size_t cols, double fill) {
  return DenseTensor({rows, cols}, fill);
}

DenseTensor DenseTensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.begin()->size() : 0;
  DenseTensor out = matrix(m, n);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != n) throw std::invalid_argument("ragged rows");
    std::size_t j = 0;
    for (double v : row) out(i, j++) = v;
    ++i;
  }
  return out;
}

DenseTensor DenseTensor::identity(std::size_t n) {
  DenseTensor out = matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

std::size_t DenseTensor::extent(std::size_t mode) const {
  if (mode >= shape_.size()) throw std::out_of_range("mode out of range");
  return shape_[mode];
}

std::size_t DenseTensor::rows() const {
  require_matrix(*this, "rows");
  return shape_[0];
}

std::size_t DenseTensor::cols() const {
  require_matrix(*this, "cols");
  return shape_[1];
}

std::span<double> DenseTensor::column(std::size_t q) {
  if (q >= cols()) throw std::out_of_range("column out of range");
  return {data_.data() + q * shape_[0], shape_[0]};
}

std::span<const double> DenseTensor::column(std::size_t q) const {
  if (q >= cols()) throw std::out_of_range("column out of range");
  return {data_.data() + q * shape_[0], shape_[0]};
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw std::out_of_range("index order mismatch");
  std::size_t off = 0;
  for (std::size_t k = index.size(); k-- > 0;) {
    if (index[k] >= shape_[k]) throw std::out_of_range("index out of range");
    off = off * shape_[k] + index[k];
  }
  return off;
}

double& DenseTensor::at(std::span<const std::size_t> index) { return data_[offset(index)]; }
double DenseTensor::at(std::span<const std::size_t> index) const { return data_[offset(index)]; }

bool DenseTensor::is_nonnegative() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0; });
}

void DenseTensor::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

// --- FactorSet -----------------------------------------------------------

std::size_t FactorSet::rank() const {
  if (factors.empty()) throw std::invalid_argument("empty factor set");
  const std::size_t r = factors.front().cols();
  for (const auto& x : factors)
    if (x.cols() != r) throw std::invalid_argument("factors have different column counts");
  return r;
}

DenseTensor& FactorSet::block(std::size_t b) {
  if (b < factors.size()) return factors[b];
  if (b == factors.size() && core) return *core;
  throw std::out_of_range("block index out of range");
}

const DenseTensor& FactorSet::block(std::size_t b) const {
  if (b < factors.size()) return factors[b];
  if (b == factors.size() && core) return *core;
  throw std::out_of_range("block index out of range");
}

void FactorSet::validate() const {
  if (factors.empty()) throw std::invalid_argument("factor set has no factors");
  for (const auto& x : factors)
    if (x.order() != 2) throw std::invalid_argument("factors must be matrices");
  if (!core) {
    rank();
    return;
  }
  if (core->order() != factors.size())
    throw std::invalid_argument("core order must equal the number of factors");
  for (std::size_t i = 0; i < factors.size(); ++i)
    if (core->extent(i) != factors[i].cols())
      throw std::invalid_argument("core extent does not match factor column count");
}

// --- Unfold / fold -------------------------------------------------------

DenseTensor unfold(const DenseTensor& t, std::size_t mode) {
  if (mode >= t.order()) throw std::out_of_range("unfold: mode out of range");
  const ModeSplit s = split_at(t.shape(), mode);
  DenseTensor out = DenseTensor::matrix(s.extent, s.left * s.right);
  const double* src = t.data();
  for (std::size_t r = 0; r < s.right; ++r)
    for (std::size_t i = 0; i < s.extent; ++i)
      for (std::size_t l = 0; l < s.left; ++l)
        out(i, l + s.left * r) = src[l + s.left * (i + s.extent * r)];
  return out;
}

DenseTensor fold(const DenseTensor& m, std::size_t mode, const std::vector<std::size_t>& shape) {
  require_matrix(m, "fold");
  if (mode >= shape.size()) throw std::out_of_range("fold: mode out of range");
  const ModeSplit s = split_at(shape, mode);
  if (m.rows() != s.extent || m.cols() != s.left * s.right)
    throw std::invalid_argument("fold: matrix shape does not match target shape");
  DenseTensor out(shape);
  double* dst = out.data();
  for (std::size_t r = 0; r < s.right; ++r)
    for (std::size_t i = 0; i < s.extent; ++i)
      for (std::size_t l = 0; l < s.left; ++l)
        dst[l + s.left * (i + s.extent * r)] = m(i, l + s.left * r);
  return out;
}

// --- Mode products -------------------------------------------------------

DenseTensor mode_product(const DenseTensor& t, const DenseTensor& u, std::size_t mode) {
  require_matrix(u, "mode_product");
  if (mode >= t.order()) throw std::out_of_range("mode_product: mode out of range");
  if (u.cols() != t.extent(mode))
    throw std::invalid_argument("mode_product: columns of u must equal the mode extent");
  const ModeSplit s = split_at(t.shape(), mode);
  const std::size_t J = u.rows();
  std::vector<std::size_t> shape = t.shape();
  shape[mode] = J;
  DenseTensor out(shape);
  const double* src = t.data();
  double* dst = out.data();
  for (std::size_t r = 0; r < s.right; ++r) {
    const double* tr = src + s.left * s.extent * r;
    double* orr = dst + s.left * J * r;
    if (s.left == 1) {
      for (std::size_t i = 0; i < s.extent; ++i) {
        const double ti = tr[i];
        const double* ucol = u.data() + J * i;
        for (std::size_t j = 0; j < J; ++j) orr[j] += ucol[j] * ti;
      }
      continue;
    }
    for (std::size_t i = 0; i < s.extent; ++i)
      for (std::size_t j = 0; j < J; ++j) {
        const double a = u(j, i);
        const double* ti = tr + s.left * i;
        double* oj = orr + s.left * j;
        for (std::size_t l = 0; l < s.left; ++l) oj[l] += a * ti[l];
      }
  }
  return out;
}

DenseTensor mode_product_transposed(const DenseTensor& t, const DenseTensor& u,
                                    std::size_t mode) {
  require_matrix(u, "mode_product_transposed");
  if (mode >= t.order()) throw std::out_of_range("mode_product_transposed: mode out of range");
  if (u.rows() != t.extent(mode))
    throw std::invalid_argument("mode_product_transposed: rows of u must equal the mode extent");
  const ModeSplit s = split_at(t.shape(), mode);
  const std::size_t J = u.cols();
  std::vector<std::size_t> shape = t.shape();
  shape[mode] = J;
  DenseTensor out(shape);
  const double* src = t.data();
  double* dst = out.data();
  for (std::size_t r = 0; r < s.right; ++r) {
    const double* tr = src + s.left * s.extent * r;
    double* orr = dst + s.left * J * r;
    if (s.left == 1) {
      for (std::size_t j = 0; j < J; ++j) {
        const double* ucol = u.data() + s.extent * j;
        double acc = 0.0;
        for (std::size_t i = 0; i < s.extent; ++i) acc += ucol[i] * tr[i];
        orr[j] = acc;
      }
      continue;
    }
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t i = 0; i < s.extent; ++i) {
        const double a = u(i, j);
        const double* ti = tr + s.left * i;
        double* oj = orr + s.left * j;
        for (std::size_t l = 0; l < s.left; ++l) oj[l] += a * ti[l];
      }
  }
  return out;
}

// --- Kronecker family ----------------------------------------------------

DenseTensor kronecker(const DenseTensor& a, const DenseTensor& b) {
  require_matrix(a, "kronecker");
  require_matrix(b, "kronecker");
  const std::size_t m = a.rows(), n = a.cols(), p = b.rows(), q = b.cols();
  DenseTensor out = DenseTensor::matrix(m * p, n * q);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t l = 0; l < q; ++l)
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < p; ++k) out(i * p + k, j * q + l) = a(i, j) * b(k, l);
  return out;
}

DenseTensor khatri_rao(const DenseTensor& a, const DenseTensor& b) {
  require_matrix(a, "khatri_rao");
  require_matrix(b, "khatri_rao");
  if (a.cols() != b.cols()) throw std::invalid_argument("khatri_rao: column counts differ");
  const std::size_t m = a.rows(), p = b.rows(), r = a.cols();
  DenseTensor out = DenseTensor::matrix(m * p, r);
  for (std::size_t q = 0; q < r; ++q)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < p; ++k) out(i * p + k, q) = a(i, q) * b(k, q);
  return out;
}

DenseTensor khatri_rao_except(const std::vector<DenseTensor>& factors, std::size_t skip) {
  if (skip >= factors.size()) throw std::out_of_range("khatri_rao_except: mode out of range");
  std::optional<DenseTensor> acc;
  for (std::size_t k = factors.size(); k-- > 0;) {
    if (k == skip) continue;
    acc = acc ? khatri_rao(*acc, factors[k]) : factors[k];
  }
  if (!acc) return DenseTensor::matrix(1, factors[skip].cols(), 1.0);
  return *std::move(acc);
}

// --- Matrix helpers ------------------------------------------------------

DenseTensor transpose(const DenseTensor& m) {
  require_matrix(m, "transpose");
  DenseTensor out = DenseTensor::matrix(m.cols(), m.rows());
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) out(j, i) = m(i, j);
  return out;
}

DenseTensor matmul(const DenseTensor& a, const DenseTensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  DenseTensor out = DenseTensor::matrix(m, n);
  for (std::size_t j = 0; j < n; ++j) {
    double* oj = out.data() + m * j;
    for (std::size_t p = 0; p < k; ++p) {
      const double bpj = b(p, j);
      const double* ap = a.data() + m * p;
      for (std::size_t i = 0; i < m; ++i) oj[i] += ap[i] * bpj;
    }
  }
  return out;
}

DenseTensor matmul_transposed(const DenseTensor& a, const DenseTensor& b) {
  require_matrix(a, "matmul_transposed");
  require_matrix(b, "matmul_transposed");
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_transposed: inner dimensions differ");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  DenseTensor out = DenseTensor::matrix(m, n);
  for (std::size_t j = 0; j < n; ++j) {
    double* oj = out.data() + m * j;
    for (std::size_t p = 0; p < k; ++p) {
      const double bjp = b(j, p);
      const double* ap = a.data() + m * p;
      for (std::size_t i = 0; i < m; ++i) oj[i] += ap[i] * bjp;
    }
  }
  return out;
}

DenseTensor gram(const DenseTensor& a) {
  require_matrix(a, "gram");
  const std::size_t r = a.cols();
  DenseTensor out = DenseTensor::matrix(r, r);
  for (std::size_t p = 0; p < r; ++p)
    for (std::size_t q = p; q < r; ++q) {
      const auto cp = a.column(p), cq = a.column(q);
      double acc = 0.0;
      for (std::size_t i = 0; i < cp.size(); ++i) acc += cp[i] * cq[i];
      out(p, q) = acc;
      out(q, p) = acc;
    }
  return out;
}

// --- Norms ---------------------------------------------------------------

double lp_norm_pow(std::span<const double> x, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("lp_norm_pow: p must be positive");
  double acc = 0.0;
  if (p == 1.0) {
    for (double v : x) acc += std::abs(v);
  } else if (p == 2.0) {
    for (double v : x) acc += v * v;
  } else {
    for (double v : x) acc += std::pow(std::abs(v), p);
  }
  return acc;
}

double frobenius_norm_sq(const DenseTensor& t) { return lp_norm_pow(t.values(), 2.0); }

double sum(const DenseTensor& t) {
  double acc = 0.0;
  for (double v : t.values()) acc += v;
  return acc;
}

std::vector<double> column_sums(const DenseTensor& m) {
  require_matrix(m, "column_sums");
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t q = 0; q < m.cols(); ++q)
    for (double v : m.column(q)) out[q] += v;
  return out;
}

// --- Reconstructions -----------------------------------------------------

DenseTensor cp_reconstruct(const FactorSet& f) {
  if (f.core) throw std::invalid_argument("cp_reconstruct: factor set carries a core");
  f.validate();
  std::vector<std::size_t> shape;
  for (const auto& x : f.factors) shape.push_back(x.rows());
  if (f.order() == 1) return DenseTensor(shape, std::vector<double>(column_sums(transpose(f.factors[0]))));
  const DenseTensor flat = matmul_transposed(f.factors[0], khatri_rao_except(f.factors, 0));
  return DenseTensor(shape, std::vector<double>(flat.values().begin(), flat.values().end()));
}

DenseTensor tucker_reconstruct(const FactorSet& f) {
  if (!f.core) throw std::invalid_argument("tucker_reconstruct: missing core");
  f.validate();
  DenseTensor t = *f.core;
  for (std::size_t i = 0; i < f.order(); ++i) t = mode_product(t, f.factors[i], i);
  return t;
}

DenseTensor reconstruct(const FactorSet& f) {
  return f.core ? tucker_reconstruct(f) : cp_reconstruct(f);
}

DenseTensor superdiagonal(std::size_t order, std::size_t rank) {
  DenseTensor g(std::vector<std::size_t>(order, rank));
  std::vector<std::size_t> idx(order);
  for (std::size_t q = 0; q < rank; ++q) {
    std::fill(idx.begin(), idx.end(), q);
    g.at(idx) = 1.0;
  }
  return g;
}

}  // namespace hrsi
