#pragma once

#include "selfcheck/matrix.hpp"

namespace selfcheck {

/// Squared maximum mean discrepancy between the rows of X and Y under a
/// Gaussian kernel k(a,b) = exp(-|a-b|^2 / (2 bandwidth^2)). This is the
/// biased V-statistic (diagonal terms included), so it is always >= 0 and is
/// exactly 0 when X and Y hold identical rows in identical order.
///
/// Preconditions: both matrices non-empty, equal column counts,
/// bandwidth > 0. Violations throw RejectedInput.
double mmd2(const Matrix& x, const Matrix& y, double bandwidth);

/// Median pairwise Euclidean distance over the pooled rows of X and Y - the
/// usual bandwidth heuristic for the Gaussian kernel. To keep the cost
/// bounded the pool is deterministically strided down to at most `max_pool`
/// rows before the all-pairs pass. Returns 1.0 if the median degenerates to
/// 0 (all pooled rows identical), so the kernel stays usable.
double median_heuristic_bandwidth(const Matrix& x, const Matrix& y,
                                  std::size_t max_pool = 512);

}  // namespace selfcheck
