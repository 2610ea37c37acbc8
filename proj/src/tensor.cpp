#include "mbp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace mbp {

ParamTensor::ParamTensor(std::size_t rows, std::size_t cols, std::size_t lags)
    : rows_(rows), cols_(cols), lags_(lags), values_(rows * cols * lags, 0.0) {
  if (rows == 0 || cols == 0 || lags == 0) {
    throw std::invalid_argument("tensor dimensions must be positive");
  }
}

ParamTensor::ParamTensor(std::size_t rows, std::size_t cols, std::size_t lags, std::vector<double> values)
    : rows_(rows), cols_(cols), lags_(lags), values_(std::move(values)) {
  if (rows == 0 || cols == 0 || lags == 0) {
    throw std::invalid_argument("tensor dimensions must be positive");
  }
  if (values_.size() != rows * cols * lags) {
    throw std::invalid_argument("tensor value count does not match rows*cols*lags");
  }
  check_finite();
}

void ParamTensor::check_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("tensor contains a non-finite entry");
  }
}

ParamTensor& ParamTensor::operator+=(const ParamTensor& rhs) {
  if (!same_shape(rhs)) throw std::invalid_argument("tensor shape mismatch");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += rhs.values_[k];
  return *this;
}

ParamTensor& ParamTensor::operator-=(const ParamTensor& rhs) {
  if (!same_shape(rhs)) throw std::invalid_argument("tensor shape mismatch");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= rhs.values_[k];
  return *this;
}

ParamTensor& ParamTensor::operator*=(double c) noexcept {
  for (double& v : values_) v *= c;
  return *this;
}

double inner(const ParamTensor& a, const ParamTensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("tensor shape mismatch");
  const auto x = a.values();
  const auto y = b.values();
  return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

NormKind parse_norm_kind(const std::string& name) {
  if (name == "111") return NormKind::l111;
  if (name == "inf") return NormKind::inf;
  if (name == "frob" || name == "F") return NormKind::frob;
  if (name == "211") return NormKind::l211;
  throw std::invalid_argument("unknown norm kind: " + name);
}

double norm(const ParamTensor& t, NormKind kind) {
  const auto v = t.values();
  switch (kind) {
    case NormKind::l111: {
      double acc = 0.0;
      for (double x : v) acc += std::abs(x);
      return acc;
    }
    case NormKind::inf: {
      double m = 0.0;
      for (double x : v) m = std::max(m, std::abs(x));
      return m;
    }
    case NormKind::frob: {
      double acc = 0.0;
      for (double x : v) acc += x * x;
      return std::sqrt(acc);
    }
    case NormKind::l211: {
      const std::size_t slice = t.cols() * t.lags();
      double acc = 0.0;
      for (std::size_t i = 0; i < t.rows(); ++i) {
        double row = 0.0;
        for (std::size_t k = 0; k < slice; ++k) row += std::abs(v[i * slice + k]);
        acc += row * row;
      }
      return std::sqrt(acc);
    }
  }
  return 0.0;
}

namespace {

IndexTriple triple_of(const ParamTensor& t, std::size_t flat) {
  const std::size_t l = flat % t.lags();
  const std::size_t ij = flat / t.lags();
  return {ij / t.cols(), ij % t.cols(), l};
}

}  // namespace

std::vector<IndexTriple> top_s_indices(const ParamTensor& t, std::size_t s) {
  if (s > t.size()) throw std::invalid_argument("support budget exceeds tensor size");
  const auto v = t.values();
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Storage order is lexicographic in (i, j, l), so a stable sort on
  // magnitude breaks ties by index.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(v[a]) > std::abs(v[b]); });
  order.resize(s);
  std::sort(order.begin(), order.end());
  std::vector<IndexTriple> out;
  out.reserve(s);
  for (std::size_t flat : order) out.push_back(triple_of(t, flat));
  return out;
}

SparsityReport sparse_approx(const ParamTensor& t, std::size_t s) {
  SparsityReport report;
  report.s = s;
  report.support = top_s_indices(t, s);
  std::vector<bool> in_support(t.size(), false);
  for (const auto& idx : report.support) in_support[t.index(idx.i, idx.j, idx.l)] = true;
  const auto v = t.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!in_support[k]) report.sigma_s += std::abs(v[k]);
  }
  report.tau_s_sq = s == 0 ? 0.0 : report.sigma_s * report.sigma_s / static_cast<double>(s);
  report.tau_tilde_sq = report.tau_s_sq + report.sigma_s;
  return report;
}

double gf_inner(const ParamTensor& t) {
  const std::size_t p = t.lags();
  double total = 0.0;
  std::vector<double> tail(p);
  for (std::size_t i = 0; i < t.rows(); ++i) {
    // tail[l] = sum_j sum_{k >= l} |t_ijk|
    std::fill(tail.begin(), tail.end(), 0.0);
    for (std::size_t j = 0; j < t.cols(); ++j) {
      double running = 0.0;
      for (std::size_t k = p; k-- > 0;) {
        running += std::abs(t(i, j, k));
        tail[k] += running;
      }
    }
    for (double x : tail) total += x * x;
  }
  return std::sqrt(total);
}

double gf(const ParamTensor& t, const LinkSpec& link) {
  const double lf = link.lipschitz();
  return std::sqrt(3.0 * lf * lf / (2.0 * link.eps())) * gf_inner(t);
}

ConcentrationConstant concentration_constant(double gf_value, std::size_t lags, const LinkSpec& link) {
  if (!(gf_value < 1.0)) return {std::numeric_limits<double>::infinity(), true};
  const double cf = link.curvature();
  const double p = static_cast<double>(lags);
  double mixing = 0.0;
  if (gf_value > 0.0) {
    const double d = 1.0 / gf_value - 1.0;
    mixing = p * p / (d * d);
  }
  return {8.0 * cf * cf * (1.0 + mixing), false};
}

ConcentrationConstant concentration_constant(const ParamTensor& t, const LinkSpec& link) {
  return concentration_constant(gf(t, link), t.lags(), link);
}

Eigen::MatrixXd stack(const ParamTensor& t) {
  const std::size_t n = t.cols();
  Eigen::MatrixXd m(t.rows(), n * t.lags());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < t.lags(); ++l) m(i, l * n + j) = t(i, j, l);
  return m;
}

ParamTensor unstack(const Eigen::MatrixXd& m, std::size_t lags) {
  if (lags == 0 || m.cols() % static_cast<Eigen::Index>(lags) != 0) {
    throw std::invalid_argument("stacked matrix width is not a multiple of the lag count");
  }
  const std::size_t rows = static_cast<std::size_t>(m.rows());
  const std::size_t cols = static_cast<std::size_t>(m.cols()) / lags;
  ParamTensor t(rows, cols, lags);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      for (std::size_t l = 0; l < lags; ++l) t(i, j, l) = m(i, l * cols + j);
  t.check_finite();
  return t;
}

ParamTensor read_tensor(std::istream& in) {
  long long rows = 0, cols = 0, lags = 0;
  if (!(in >> rows >> cols >> lags) || rows <= 0 || cols <= 0 || lags <= 0) {
    throw std::invalid_argument("tensor file: bad header");
  }
  const std::size_t count = static_cast<std::size_t>(rows * cols * lags);
  std::vector<double> values(count);
  for (std::size_t k = 0; k < count; ++k) {
    if (!(in >> values[k])) throw std::invalid_argument("tensor file: expected " + std::to_string(count) + " values");
  }
  return ParamTensor(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), static_cast<std::size_t>(lags),
                     std::move(values));
}

void write_tensor(std::ostream& out, const ParamTensor& t) {
  out << t.rows() << ' ' << t.cols() << ' ' << t.lags() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  const auto v = t.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    out << v[k] << ((k + 1) % t.lags() == 0 ? '\n' : ' ');
  }
}

ParamTensor load_tensor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tensor file " + path);
  return read_tensor(in);
}

void save_tensor(const std::string& path, const ParamTensor& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write tensor file " + path);
  write_tensor(out, t);
}

}  // namespace mbp
