#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace sgfem::galerkin {

/// Symmetric CSR sparsity pattern shared by every operator of a family.
struct CsrPattern {
  std::size_t n = 0;
  std::vector<std::int32_t> row_ptr;
  std::vector<std::int32_t> col;

  std::size_t nnz() const { return col.size(); }
  /// Position of (i, j) in the value array, or -1.
  std::int64_t slot(std::int32_t i, std::int32_t j) const;

  static CsrPattern from_adjacency(std::size_t n, std::vector<std::vector<std::int32_t>> neighbours);
};

/// y (+)= alpha * A x for every column of X.
void csr_multiply(const CsrPattern& pattern, std::span<const double> values,
                  const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y,
                  double alpha = 1.0, bool accumulate = false);

Eigen::VectorXd csr_diagonal(const CsrPattern& pattern, std::span<const double> values);

Eigen::SparseMatrix<double> to_eigen(const CsrPattern& pattern, std::span<const double> values);

}  // namespace sgfem::galerkin
