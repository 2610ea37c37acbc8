#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mbp/link.hpp"
#include "mbp/tensor.hpp"

namespace mbp {

/// Binary (n + p) x N observation matrix. Rows 0..p-1 hold the initial
/// history x^{-p+1}..x^0, rows p..p+n-1 hold x^1..x^n.
class SamplePath {
 public:
  SamplePath() = default;
  SamplePath(std::size_t n, std::size_t dims, std::size_t lags, std::uint64_t seed, std::vector<std::uint8_t> bits);

  std::size_t n() const noexcept { return n_; }
  std::size_t dims() const noexcept { return dims_; }
  std::size_t lags() const noexcept { return lags_; }
  std::size_t total_rows() const noexcept { return n_ + lags_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Entry by storage row, 0 <= row < n + p.
  std::uint8_t row_bit(std::size_t row, std::size_t i) const noexcept { return bits_[row * dims_ + i]; }

  /// x_i^t for -p + 1 <= t <= n.
  std::uint8_t x(long t, std::size_t i) const noexcept {
    return bits_[static_cast<std::size_t>(t + static_cast<long>(lags_) - 1) * dims_ + i];
  }

  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  friend bool operator==(const SamplePath&, const SamplePath&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t dims_ = 0;
  std::size_t lags_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// n x (N p) lagged design; row t - 1 is [x^{t-1} x^{t-2} ... x^{t-p}].
struct DesignMatrix {
  Eigen::MatrixXd data;

  Eigen::Index rows() const noexcept { return data.rows(); }
  Eigen::Index cols() const noexcept { return data.cols(); }
};

inline constexpr std::size_t kDefaultBurnIn = 1000;

/// Runs the chain from an i.i.d. Ber(1/2) history through burn_in discarded
/// steps and records the next n + p states. Draws are consumed in (t, i)
/// order from a single stream seeded by `seed`.
SamplePath simulate(const ParamTensor& theta, const LinkSpec& link, std::size_t n, std::size_t burn_in,
                    std::uint64_t seed);

DesignMatrix design_matrix(const SamplePath& path);

/// Exactly s nonzeros at uniformly random distinct positions, magnitudes
/// uniform on [magnitude_low, magnitude_high] with a random sign.
ParamTensor random_sparse_theta(std::size_t n_dims, std::size_t lags, std::size_t s, double magnitude_low,
                                double magnitude_high, std::uint64_t seed);

/// Text format: header "n N p seed", then n + p lines of N space separated bits.
SamplePath read_path(std::istream& in);
void write_path(std::ostream& out, const SamplePath& path);
SamplePath load_path(const std::string& file);
void save_path(const std::string& file, const SamplePath& path);

}  // namespace mbp
