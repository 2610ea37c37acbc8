#include "mbp/process.hpp"

#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "mbp/rng.hpp"

namespace mbp {

SamplePath::SamplePath(std::size_t n, std::size_t dims, std::size_t lags, std::uint64_t seed,
                       std::vector<std::uint8_t> bits)
    : n_(n), dims_(dims), lags_(lags), seed_(seed), bits_(std::move(bits)) {
  if (n == 0 || dims == 0 || lags == 0) throw std::invalid_argument("sample path dimensions must be positive");
  if (bits_.size() != (n + lags) * dims) throw std::invalid_argument("sample path must have (n + p) * N entries");
  for (auto b : bits_) {
    if (b > 1) throw std::invalid_argument("sample path entries must be 0 or 1");
  }
}

SamplePath simulate(const ParamTensor& theta, const LinkSpec& link, std::size_t n, std::size_t burn_in,
                    std::uint64_t seed) {
  if (!theta.square()) throw std::invalid_argument("simulate requires a square tensor");
  if (n == 0) throw std::invalid_argument("simulate requires n >= 1");
  const std::size_t dims = theta.rows();
  const std::size_t p = theta.lags();
  const std::size_t steps = burn_in + n;  // steps beyond the initial p-row history
  const std::size_t total = p + steps;

  Rng rng(seed);
  std::vector<std::uint8_t> traj(total * dims);
  for (std::size_t k = 0; k < p * dims; ++k) traj[k] = rng.bernoulli(0.5) ? 1 : 0;

  std::vector<double> drive(dims);
  for (std::size_t row = p; row < total; ++row) {
    std::fill(drive.begin(), drive.end(), 0.0);
    for (std::size_t l = 0; l < p; ++l) {
      const std::uint8_t* past = &traj[(row - 1 - l) * dims];
      for (std::size_t j = 0; j < dims; ++j) {
        if (!past[j]) continue;
        for (std::size_t i = 0; i < dims; ++i) drive[i] += theta(i, j, l);
      }
    }
    std::uint8_t* now = &traj[row * dims];
    for (std::size_t i = 0; i < dims; ++i) now[i] = rng.bernoulli(link.eval(drive[i])) ? 1 : 0;
  }

  const std::size_t keep_from = (total - (n + p)) * dims;
  std::vector<std::uint8_t> kept(traj.begin() + static_cast<std::ptrdiff_t>(keep_from), traj.end());
  return SamplePath(n, dims, p, seed, std::move(kept));
}

DesignMatrix design_matrix(const SamplePath& path) {
  const std::size_t n = path.n();
  const std::size_t dims = path.dims();
  const std::size_t p = path.lags();
  DesignMatrix x{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dims * p))};
  for (std::size_t t = 1; t <= n; ++t) {
    for (std::size_t l = 0; l < p; ++l) {
      for (std::size_t j = 0; j < dims; ++j) {
        x.data(static_cast<Eigen::Index>(t - 1), static_cast<Eigen::Index>(l * dims + j)) =
            path.x(static_cast<long>(t) - 1 - static_cast<long>(l), j);
      }
    }
  }
  return x;
}

ParamTensor random_sparse_theta(std::size_t n_dims, std::size_t lags, std::size_t s, double magnitude_low,
                                double magnitude_high, std::uint64_t seed) {
  if (!(magnitude_low > 0.0) || magnitude_high < magnitude_low) {
    throw std::invalid_argument("need 0 < magnitude_low <= magnitude_high");
  }
  ParamTensor theta = ParamTensor::zeros(n_dims, lags);
  if (s > theta.size()) throw std::invalid_argument("sparsity exceeds N^2 p");
  Rng rng(seed);
  // Partial Fisher-Yates: the first s slots are a uniform s-subset.
  std::vector<std::size_t> slots(theta.size());
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  for (std::size_t k = 0; k < s; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng.below(slots.size() - k));
    std::swap(slots[k], slots[pick]);
    const double magnitude = rng.uniform(magnitude_low, magnitude_high);
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    theta.values()[slots[k]] = sign * magnitude;
  }
  return theta;
}

SamplePath read_path(std::istream& in) {
  long long n = 0, dims = 0, lags = 0;
  unsigned long long seed = 0;
  if (!(in >> n >> dims >> lags >> seed) || n <= 0 || dims <= 0 || lags <= 0) {
    throw std::invalid_argument("path file: bad header");
  }
  const std::size_t count = static_cast<std::size_t>((n + lags) * dims);
  std::vector<std::uint8_t> bits(count);
  for (std::size_t k = 0; k < count; ++k) {
    int b = 0;
    if (!(in >> b) || (b != 0 && b != 1)) throw std::invalid_argument("path file: expected binary entries");
    bits[k] = static_cast<std::uint8_t>(b);
  }
  return SamplePath(static_cast<std::size_t>(n), static_cast<std::size_t>(dims), static_cast<std::size_t>(lags), seed,
                    std::move(bits));
}

void write_path(std::ostream& out, const SamplePath& path) {
  out << path.n() << ' ' << path.dims() << ' ' << path.lags() << ' ' << path.seed() << '\n';
  for (std::size_t row = 0; row < path.total_rows(); ++row) {
    for (std::size_t i = 0; i < path.dims(); ++i) {
      if (i) out << ' ';
      out << static_cast<int>(path.row_bit(row, i));
    }
    out << '\n';
  }
}

SamplePath load_path(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open path file " + file);
  return read_path(in);
}

void save_path(const std::string& file, const SamplePath& path) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write path file " + file);
  write_path(out, path);
}

}  // namespace mbp
