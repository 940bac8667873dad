#include "sgfem/sparse.hpp"

#include <algorithm>

namespace sgfem::galerkin {

std::int64_t CsrPattern::slot(std::int32_t i, std::int32_t j) const {
  const auto begin = col.begin() + row_ptr[static_cast<std::size_t>(i)];
  const auto end = col.begin() + row_ptr[static_cast<std::size_t>(i) + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return -1;
  return it - col.begin();
}

CsrPattern CsrPattern::from_adjacency(std::size_t n, std::vector<std::vector<std::int32_t>> neighbours) {
  CsrPattern p;
  p.n = n;
  p.row_ptr.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = neighbours[i];
    row.push_back(static_cast<std::int32_t>(i));
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    p.row_ptr[i + 1] = p.row_ptr[i] + static_cast<std::int32_t>(row.size());
  }
  p.col.reserve(static_cast<std::size_t>(p.row_ptr[n]));
  for (const auto& row : neighbours) p.col.insert(p.col.end(), row.begin(), row.end());
  return p;
}

void csr_multiply(const CsrPattern& pattern, std::span<const double> values,
                  const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y,
                  double alpha, bool accumulate) {
  const auto n = static_cast<std::ptrdiff_t>(pattern.n);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double* xc = x.col(c).data();
    double* yc = y.col(c).data();
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::int32_t k = pattern.row_ptr[i]; k < pattern.row_ptr[i + 1]; ++k) {
        s += values[static_cast<std::size_t>(k)] * xc[pattern.col[static_cast<std::size_t>(k)]];
      }
      yc[i] = accumulate ? yc[i] + alpha * s : alpha * s;
    }
  }
}

Eigen::VectorXd csr_diagonal(const CsrPattern& pattern, std::span<const double> values) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pattern.n));
  for (std::size_t i = 0; i < pattern.n; ++i) {
    const auto k = pattern.slot(static_cast<std::int32_t>(i), static_cast<std::int32_t>(i));
    if (k >= 0) d[static_cast<Eigen::Index>(i)] = values[static_cast<std::size_t>(k)];
  }
  return d;
}

Eigen::SparseMatrix<double> to_eigen(const CsrPattern& pattern, std::span<const double> values) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(pattern.nnz());
  for (std::size_t i = 0; i < pattern.n; ++i) {
    for (std::int32_t k = pattern.row_ptr[i]; k < pattern.row_ptr[i + 1]; ++k) {
      triplets.emplace_back(static_cast<int>(i), pattern.col[static_cast<std::size_t>(k)],
                            values[static_cast<std::size_t>(k)]);
    }
  }
  const auto n = static_cast<Eigen::Index>(pattern.n);
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

}  // namespace sgfem::galerkin
