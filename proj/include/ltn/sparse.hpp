// sparse.hpp: labeled sparse operators (thin wrapper over Eigen) with
// triplet assembly and MatrixMarket export.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "ltn/core.hpp"

namespace ltn {

using Triplet = Eigen::Triplet<double>;
using SpMat = Eigen::SparseMatrix<double>;

struct SparseOperator {
  SpMat mat;
  std::string row_set;  // label of the row index set
  std::string col_set;  // label of the column index set

  Index rows() const { return mat.rows(); }
  Index cols() const { return mat.cols(); }
};

// Compresses triplets (duplicates summed), checks all entries are finite.
SparseOperator operatorFromTriplets(Index rows, Index cols,
                                    const std::vector<Triplet>& triplets,
                                    std::string row_set, std::string col_set);

// Largest absolute entry (0 for an empty matrix).
double maxAbsEntry(const SpMat& mat);

// Extracts the sub-matrix with the given row/column ids (block row i maps to
// row_ids[i] of the source).
SpMat extractBlock(const SpMat& mat, const std::vector<Index>& row_ids,
                   const std::vector<Index>& col_ids);

// MatrixMarket coordinate format (general, real).
std::string toMatrixMarket(const SparseOperator& op);
void writeMatrixMarketFile(const SparseOperator& op, const std::string& path);

}  // namespace ltn
