#pragma once

// Dense covariant tensors of fixed rank at a single point.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace curvcert {

/// Index symmetry a tensor is declared to carry. Declared, verified by
/// `symmetry_defect`, never exploited for storage.
enum class Symmetry { none, sym2, riemann_like, derivation_image };

inline constexpr int kMaxRank = 8;

using MultiIndex = std::array<int, kMaxRank>;

class Tensor {
 public:
  Tensor() = default;
  Tensor(int dim, int rank, Symmetry sym = Symmetry::none) : dim_(dim), rank_(rank), sym_(sym) {
    if (dim < 0 || rank < 0 || rank > kMaxRank) throw std::invalid_argument("bad tensor shape");
    std::size_t size = 1;
    for (int r = 0; r < rank; ++r) size *= static_cast<std::size_t>(dim);
    data_.assign(size, 0.0);
  }

  int dim() const noexcept { return dim_; }
  int rank() const noexcept { return rank_; }
  Symmetry symmetry() const noexcept { return sym_; }
  void set_symmetry(Symmetry s) noexcept { sym_ = s; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  template <class... I>
  double& operator()(I... idx) {
    return data_[offset(idx...)];
  }
  template <class... I>
  double operator()(I... idx) const {
    return data_[offset(idx...)];
  }

  double& at(const MultiIndex& idx) { return data_[flat(idx)]; }
  double at(const MultiIndex& idx) const { return data_[flat(idx)]; }

  std::size_t flat(const MultiIndex& idx) const noexcept {
    std::size_t off = 0;
    for (int r = 0; r < rank_; ++r) off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx[r]);
    return off;
  }

  MultiIndex unflatten(std::size_t off) const noexcept {
    MultiIndex idx{};
    for (int r = rank_ - 1; r >= 0; --r) {
      idx[r] = static_cast<int>(off % static_cast<std::size_t>(dim_));
      off /= static_cast<std::size_t>(dim_);
    }
    return idx;
  }

  double norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }
  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }
  double dot(const Tensor& other) const {
    require_same_shape(other);
    return std::inner_product(data_.begin(), data_.end(), other.data_.begin(), 0.0);
  }

  Tensor& operator+=(const Tensor& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  void require_same_shape(const Tensor& o) const {
    if (o.dim_ != dim_ || o.rank_ != rank_)
      throw std::invalid_argument("tensor shape mismatch: (" + std::to_string(dim_) + "," + std::to_string(rank_) +
                                  ") vs (" + std::to_string(o.dim_) + "," + std::to_string(o.rank_) + ")");
  }

 private:
  template <class... I>
  std::size_t offset(I... idx) const noexcept {
    std::size_t off = 0;
    ((off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx)), ...);
    return off;
  }

  int dim_ = 0;
  int rank_ = 0;
  Symmetry sym_ = Symmetry::none;
  std::vector<double> data_;
};

inline Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
inline Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
inline Tensor operator*(Tensor a, double s) { return a *= s; }
inline Tensor operator*(double s, Tensor a) { return a *= s; }

/// Relative Frobenius distance ‖a − b‖ / (‖a‖ + ‖b‖ + tiny).
inline double relative_difference(const Tensor& a, const Tensor& b) {
  a.require_same_shape(b);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    diff += d * d;
  }
  return std::sqrt(diff) / (a.norm() + b.norm() + 1e-300);
}

/// Componentwise max |a − b| scaled by 1 + max(|a|, |b|).
inline double max_abs_difference(const Tensor& a, const Tensor& b) {
  a.require_same_shape(b);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a.data()[i] - b.data()[i]));
  return diff / (1.0 + std::max(a.max_abs(), b.max_abs()));
}

inline Tensor identity_matrix(int dim) {
  Tensor t(dim, 2, Symmetry::sym2);
  for (int i = 0; i < dim; ++i) t(i, i) = 1.0;
  return t;
}

/// Largest violation of the declared symmetry, normalised by max|component| + 1.
inline double symmetry_defect(const Tensor& t) {
  const int n = t.dim();
  double worst = 0.0;
  switch (t.symmetry()) {
    case Symmetry::none:
      return 0.0;
    case Symmetry::sym2:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(t(i, j) - t(j, i)));
      break;
    case Symmetry::riemann_like:
      for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
              const double v = t(h, i, j, k);
              worst = std::max(worst, std::abs(v + t(i, h, j, k)));
              worst = std::max(worst, std::abs(v + t(h, i, k, j)));
              worst = std::max(worst, std::abs(v - t(j, k, h, i)));
              worst = std::max(worst, std::abs(v + t(j, h, i, k) + t(i, j, h, k)));
            }
      break;
    case Symmetry::derivation_image: {
      // antisymmetric in the trailing pair of slots
      const int r = t.rank();
      for (std::size_t off = 0; off < t.size(); ++off) {
        MultiIndex idx = t.unflatten(off);
        MultiIndex sw = idx;
        std::swap(sw[r - 2], sw[r - 1]);
        worst = std::max(worst, std::abs(t.at(idx) + t.at(sw)));
      }
      break;
    }
  }
  return worst / (t.max_abs() + 1.0);
}

}  // namespace curvcert
