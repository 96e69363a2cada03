#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "zsl/matrix.hpp"

namespace zsl {

// Hot data-parallel kernels. Each OpenMP kernel partitions output rows across
// threads; every output element is accumulated in the same order as the serial
// reference, so results are bitwise identical for any thread count.

Matrix matmul(const Matrix& a, const Matrix& b);     // a  . b
Matrix matmul_ta(const Matrix& a, const Matrix& b);  // a^T . b
Matrix matmul_tb(const Matrix& a, const Matrix& b);  // a  . b^T

/// Symmetric Euclidean distance matrix over the rows of x.
Matrix pairwise_distances(const Matrix& x);

/// Per query row: indices of the k reference rows with the highest cosine
/// similarity, descending, ties broken by ascending index.
/// Throws NumericalError on any zero-norm row.
std::vector<std::vector<std::size_t>> rank_by_cosine(const Matrix& queries,
                                                     const Matrix& refs,
                                                     std::size_t k);

namespace ref {
// Serial reference implementations, kept for equivalence tests and the
// kernel benchmark.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_ta(const Matrix& a, const Matrix& b);
Matrix matmul_tb(const Matrix& a, const Matrix& b);
Matrix pairwise_distances(const Matrix& x);
std::vector<std::vector<std::size_t>> rank_by_cosine(const Matrix& queries,
                                                     const Matrix& refs,
                                                     std::size_t k);
}  // namespace ref

}  // namespace zsl
