#include "ltn/sparse.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ltn {

SparseOperator operatorFromTriplets(Index rows, Index cols,
                                    const std::vector<Triplet>& triplets,
                                    std::string row_set, std::string col_set) {
  SparseOperator op;
  op.row_set = std::move(row_set);
  op.col_set = std::move(col_set);
  op.mat.resize(rows, cols);
  op.mat.setFromTriplets(triplets.begin(), triplets.end());
  op.mat.makeCompressed();
  for (int k = 0; k < op.mat.outerSize(); ++k) {
    for (SpMat::InnerIterator it(op.mat, k); it; ++it) {
      require(std::isfinite(it.value()),
              "operatorFromTriplets: non-finite entry in " + op.row_set + "x" +
                  op.col_set);
    }
  }
  return op;
}

double maxAbsEntry(const SpMat& mat) {
  double m = 0.0;
  for (int k = 0; k < mat.outerSize(); ++k) {
    for (SpMat::InnerIterator it(mat, k); it; ++it) {
      m = std::max(m, std::abs(it.value()));
    }
  }
  return m;
}

SpMat extractBlock(const SpMat& mat, const std::vector<Index>& row_ids,
                   const std::vector<Index>& col_ids) {
  std::vector<Index> rowPos(static_cast<std::size_t>(mat.rows()), -1);
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    require(row_ids[i] >= 0 && row_ids[i] < mat.rows(),
            "extractBlock: row id out of range");
    rowPos[static_cast<std::size_t>(row_ids[i])] = static_cast<Index>(i);
  }
  std::vector<Triplet> trips;
  for (std::size_t j = 0; j < col_ids.size(); ++j) {
    const Index col = col_ids[j];
    require(col >= 0 && col < mat.cols(), "extractBlock: col id out of range");
    for (SpMat::InnerIterator it(mat, static_cast<int>(col)); it; ++it) {
      const Index r = rowPos[static_cast<std::size_t>(it.row())];
      if (r >= 0) {
        trips.emplace_back(static_cast<int>(r), static_cast<int>(j), it.value());
      }
    }
  }
  SpMat out(static_cast<Index>(row_ids.size()), static_cast<Index>(col_ids.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

std::string toMatrixMarket(const SparseOperator& op) {
  std::ostringstream os;
  os.precision(17);
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << "% rows: " << op.row_set << "  cols: " << op.col_set << "\n";
  os << op.mat.rows() << " " << op.mat.cols() << " " << op.mat.nonZeros()
     << "\n";
  for (int k = 0; k < op.mat.outerSize(); ++k) {
    for (SpMat::InnerIterator it(op.mat, k); it; ++it) {
      os << (it.row() + 1) << " " << (it.col() + 1) << " " << it.value()
         << "\n";
    }
  }
  return os.str();
}

void writeMatrixMarketFile(const SparseOperator& op, const std::string& path) {
  std::ofstream f(path);
  require(static_cast<bool>(f), "writeMatrixMarketFile: cannot open " + path);
  f << toMatrixMarket(op);
  require(static_cast<bool>(f), "writeMatrixMarketFile: write failed " + path);
}

}  // namespace ltn
