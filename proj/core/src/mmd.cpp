#include "selfcheck/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "selfcheck/error.hpp"

namespace selfcheck {

namespace {

double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

// Mean Gaussian-kernel value over all row pairs of (a, b), diagonal included.
double mean_kernel(const Matrix& a, const Matrix& b, double inv_two_bw2) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j)
      sum += std::exp(-squared_distance(a.row(i), b.row(j), a.cols()) *
                      inv_two_bw2);
  return sum / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

}  // namespace

double mmd2(const Matrix& x, const Matrix& y, double bandwidth) {
  if (x.rows() == 0 || y.rows() == 0)
    throw RejectedInput("mmd2: both samples must be non-empty");
  if (x.cols() != y.cols())
    throw RejectedInput("mmd2: samples must share a feature dimension");
  if (!(bandwidth > 0.0)) throw RejectedInput("mmd2: bandwidth must be > 0");
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  const double xx = mean_kernel(x, x, inv);
  const double xy = mean_kernel(x, y, inv);
  const double yy = mean_kernel(y, y, inv);
  return xx - 2.0 * xy + yy;
}

double median_heuristic_bandwidth(const Matrix& x, const Matrix& y,
                                  std::size_t max_pool) {
  if (x.rows() == 0 || y.rows() == 0)
    throw RejectedInput("median_heuristic_bandwidth: empty sample");
  if (x.cols() != y.cols())
    throw RejectedInput("median_heuristic_bandwidth: dimension mismatch");
  if (max_pool < 2)
    throw RejectedInput("median_heuristic_bandwidth: max_pool must be >= 2");

  const std::size_t total = x.rows() + y.rows();
  const std::size_t stride = (total + max_pool - 1) / max_pool;
  std::vector<const double*> pool;
  for (std::size_t i = 0; i < total; i += stride)
    pool.push_back(i < x.rows() ? x.row(i) : y.row(i - x.rows()));
  if (pool.size() < 2) {
    pool.clear();
    pool.push_back(x.row(0));
    pool.push_back(y.row(0));
  }

  std::vector<double> dists;
  dists.reserve(pool.size() * (pool.size() - 1) / 2);
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j)
      dists.push_back(
          std::sqrt(squared_distance(pool[i], pool[j], x.cols())));

  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<long>(mid),
                   dists.end());
  const double median = dists[mid];
  return median > 0.0 ? median : 1.0;
}

}  // namespace selfcheck
