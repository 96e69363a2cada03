#pragma once

#include <span>
#include <vector>

#include "zsl/kernels.hpp"
#include "zsl/matrix.hpp"

namespace zsl {

/// Encodes L*W + W*R + M = 0 with L (n x n), R (d x d), M (n x d).
struct SylvesterProblem {
    Matrix l;
    Matrix r;
    Matrix m;
};

struct EigResult {
    std::vector<double> eigenvalues;  // descending
    Matrix eigenvectors;              // column i pairs with eigenvalues[i]
};

/// Real Schur form a = q * t * q^T with t upper quasi-triangular
/// (1x1 and 2x2 diagonal blocks).
struct SchurResult {
    Matrix q;
    Matrix t;
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// Input is symmetrized as (B+B^T)/2; a larger symmetry defect is an error.
EigResult sym_eig(const Matrix& b);

/// Hessenberg reduction followed by Francis double-shift QR iteration.
SchurResult real_schur(const Matrix& a);

/// Eigenvalues of a quasi-triangular Schur factor, as (re, im) pairs.
std::vector<std::pair<double, double>> schur_eigenvalues(const Matrix& t);

/// Solves L*W + W*R + M = 0. Symmetric L,R take the spectral path; otherwise
/// dims <= 32 fall back to the dense Kronecker solve and larger systems use
/// the Schur reduction. Near-shared eigenvalues of L and -R raise
/// NumericalError naming the offending pair, except in the symmetric path
/// where a consistent degenerate pair yields the minimum-norm component.
Matrix solve_sylvester(const SylvesterProblem& p);

/// General Bartels-Stewart path (two real Schur forms, block back-substitution).
Matrix solve_sylvester_schur(const SylvesterProblem& p);

/// Dense (L (x) I + I (x) R^T) vec(W) = -vec(M) elimination. Kept as the
/// independent oracle and the small-system fallback.
Matrix solve_sylvester_kron(const SylvesterProblem& p);

/// Spectral path with precomputed factorizations; rectify reuses eig(R)
/// across epochs.
Matrix solve_sylvester_sym(const EigResult& eig_l, const EigResult& eig_r, const Matrix& m);

/// Minimum-norm least squares: x minimizing ||a*x - b||_2, one solution
/// column per column of b.
Matrix least_squares(const Matrix& a, const Matrix& b);

double cosine_similarity(std::span<const double> u, std::span<const double> v);

bool is_symmetric(const Matrix& a, double tol_scale = 1e-12);

/// Gaussian elimination with partial pivoting; throws on a negligible pivot.
Matrix solve_lu(Matrix a, Matrix b);

double relative_sylvester_residual(const SylvesterProblem& p, const Matrix& w);

}  // namespace zsl
