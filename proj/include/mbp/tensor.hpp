#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mbp/link.hpp"

namespace mbp {

/// Dense N x N x p coupling tensor. Entry (i, j, l) is the influence of
/// series j at lag l + 1 on series i. Storage is i-major, l-minor.
class ParamTensor {
 public:
  ParamTensor() = default;
  ParamTensor(std::size_t rows, std::size_t cols, std::size_t lags);
  ParamTensor(std::size_t rows, std::size_t cols, std::size_t lags, std::vector<double> values);

  static ParamTensor zeros(std::size_t n, std::size_t lags) { return ParamTensor(n, n, lags); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t lags() const noexcept { return lags_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool square() const noexcept { return rows_ == cols_; }
  bool same_shape(const ParamTensor& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_ && lags_ == other.lags_;
  }

  std::size_t index(std::size_t i, std::size_t j, std::size_t l) const noexcept {
    return (i * cols_ + j) * lags_ + l;
  }

  double operator()(std::size_t i, std::size_t j, std::size_t l) const noexcept {
    return values_[index(i, j, l)];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t l) noexcept {
    return values_[index(i, j, l)];
  }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Throws std::invalid_argument if any entry is NaN or infinite.
  void check_finite() const;

  ParamTensor& operator+=(const ParamTensor& rhs);
  ParamTensor& operator-=(const ParamTensor& rhs);
  ParamTensor& operator*=(double c) noexcept;

  friend ParamTensor operator+(ParamTensor lhs, const ParamTensor& rhs) { return lhs += rhs; }
  friend ParamTensor operator-(ParamTensor lhs, const ParamTensor& rhs) { return lhs -= rhs; }
  friend ParamTensor operator*(double c, ParamTensor t) { return t *= c; }

  friend bool operator==(const ParamTensor&, const ParamTensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t lags_ = 0;
  std::vector<double> values_;
};

/// Sum of elementwise products; shapes must agree.
double inner(const ParamTensor& a, const ParamTensor& b);

struct IndexTriple {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t l = 0;
  auto operator<=>(const IndexTriple&) const = default;
};

enum class NormKind {
  l111,  ///< sum of absolute entries
  inf,   ///< largest absolute entry
  frob,  ///< Euclidean norm of all entries
  l211,  ///< sqrt(sum_i (sum_{j,l} |t_ijl|)^2)
};

NormKind parse_norm_kind(const std::string& name);

double norm(const ParamTensor& t, NormKind kind);

/// Best s-term approximation in the elementwise l1 sense.
struct SparsityReport {
  std::size_t s = 0;
  std::vector<IndexTriple> support;  // sorted lexicographically
  double sigma_s = 0.0;
  double tau_s_sq = 0.0;  // sigma_s^2 / s, zero when s == 0
  double tau_tilde_sq = 0.0;
};

/// Indices of the s largest-magnitude entries; ties go to the
/// lexicographically smaller (i, j, l). Result is sorted lexicographically.
std::vector<IndexTriple> top_s_indices(const ParamTensor& t, std::size_t s);

SparsityReport sparse_approx(const ParamTensor& t, std::size_t s);

/// sqrt(sum_l sum_i (sum_j sum_{k >= l} |t_ijk|)^2), the part of the mixing
/// norm that does not depend on the link.
double gf_inner(const ParamTensor& t);

/// Mixing norm g_f = sqrt(3 L_f^2 / (2 eps)) * gf_inner(t).
double gf(const ParamTensor& t, const LinkSpec& link);

/// Concentration constant 8 c_f^2 [1 + p^2 / (1/g_f - 1)^2]; diverged when g_f >= 1.
struct ConcentrationConstant {
  double value = 0.0;
  bool diverged = false;
};

ConcentrationConstant concentration_constant(double gf_value, std::size_t lags, const LinkSpec& link);
ConcentrationConstant concentration_constant(const ParamTensor& t, const LinkSpec& link);

/// N x (N p) matrix [t_{..1} t_{..2} ... t_{..p}]; column l*N + j holds t(., j, l).
Eigen::MatrixXd stack(const ParamTensor& t);
ParamTensor unstack(const Eigen::MatrixXd& m, std::size_t lags);

/// Text format: header "rows cols lags", then rows*cols*lags reals in storage order.
ParamTensor read_tensor(std::istream& in);
void write_tensor(std::ostream& out, const ParamTensor& t);
ParamTensor load_tensor(const std::string& path);
void save_tensor(const std::string& path, const ParamTensor& t);

}  // namespace mbp
