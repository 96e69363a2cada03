#include "zsl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "zsl/error.hpp"

namespace zsl {

namespace {

// Loops below this many multiply-adds are not worth a parallel region.
constexpr std::size_t kParallelFlopCutoff = 1u << 15;

void check_inner(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw ShapeError(std::string(what) + ": inner dimension mismatch " + std::to_string(a) +
                         " vs " + std::to_string(b));
}

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += a[t] * b[t];
    return s;
}

// Row i of out accumulates a(i,k)*b(k,:) over k; identical order serial or not.
void matmul_rows(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    const std::size_t n = b.cols(), inner = a.cols();
    double* ci = out.row(i);
    for (std::size_t k = 0; k < inner; ++k) {
        const double aik = a(i, k);
        const double* bk = b.row(k);
        for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
}

std::vector<std::size_t> top_k_row(const double* sims, std::size_t m, std::size_t k) {
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t kk = std::min(k, m);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kk), idx.end(),
                      [&](std::size_t x, std::size_t y) {
                          if (sims[x] != sims[y]) return sims[x] > sims[y];
                          return x < y;
                      });
    idx.resize(kk);
    return idx;
}

std::vector<double> row_norms(const Matrix& x, const char* what) {
    std::vector<double> norms(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        norms[i] = std::sqrt(dot(x.row(i), x.row(i), x.cols()));
        if (norms[i] == 0.0)
            throw NumericalError(std::string(what) + ": zero-norm row " + std::to_string(i));
    }
    return norms;
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_inner(a.cols(), b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    const std::int64_t m = static_cast<std::int64_t>(a.rows());
    const bool par = a.rows() * a.cols() * b.cols() > kParallelFlopCutoff;
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < m; ++i) matmul_rows(a, b, c, static_cast<std::size_t>(i));
    return c;
}

Matrix matmul_ta(const Matrix& a, const Matrix& b) {
    check_inner(a.rows(), b.rows(), "matmul_ta");
    Matrix c(a.cols(), b.cols());
    const std::int64_t m = static_cast<std::int64_t>(a.cols());
    const bool par = a.rows() * a.cols() * b.cols() > kParallelFlopCutoff;
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < m; ++i) {
        double* ci = c.row(static_cast<std::size_t>(i));
        for (std::size_t k = 0; k < a.rows(); ++k) {
            const double aki = a(k, static_cast<std::size_t>(i));
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

Matrix matmul_tb(const Matrix& a, const Matrix& b) {
    check_inner(a.cols(), b.cols(), "matmul_tb");
    Matrix c(a.rows(), b.rows());
    const std::int64_t m = static_cast<std::int64_t>(a.rows());
    const bool par = a.rows() * a.cols() * b.rows() > kParallelFlopCutoff;
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < b.rows(); ++j)
            c(static_cast<std::size_t>(i), j) =
                dot(a.row(static_cast<std::size_t>(i)), b.row(j), a.cols());
    return c;
}

Matrix pairwise_distances(const Matrix& x) {
    const std::size_t n = x.rows();
    Matrix d(n, n);
    const std::int64_t nn = static_cast<std::int64_t>(n);
    const bool par = n * n * x.cols() > kParallelFlopCutoff;
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < nn; ++i) {
        for (std::size_t j = static_cast<std::size_t>(i) + 1; j < n; ++j) {
            double s = 0.0;
            const double* xi = x.row(static_cast<std::size_t>(i));
            const double* xj = x.row(j);
            for (std::size_t t = 0; t < x.cols(); ++t) {
                const double diff = xi[t] - xj[t];
                s += diff * diff;
            }
            d(static_cast<std::size_t>(i), j) = std::sqrt(s);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) d(i, j) = d(j, i);
    return d;
}

std::vector<std::vector<std::size_t>> rank_by_cosine(const Matrix& queries, const Matrix& refs,
                                                     std::size_t k) {
    check_inner(queries.cols(), refs.cols(), "rank_by_cosine");
    const auto qn = row_norms(queries, "rank_by_cosine queries");
    const auto rn = row_norms(refs, "rank_by_cosine refs");
    std::vector<std::vector<std::size_t>> out(queries.rows());
    const std::int64_t nq = static_cast<std::int64_t>(queries.rows());
    const bool par = queries.rows() * refs.rows() * refs.cols() > kParallelFlopCutoff;
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < nq; ++i) {
        std::vector<double> sims(refs.rows());
        const double* qi = queries.row(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < refs.rows(); ++j)
            sims[j] = dot(qi, refs.row(j), refs.cols()) /
                      (qn[static_cast<std::size_t>(i)] * rn[j]);
        out[static_cast<std::size_t>(i)] = top_k_row(sims.data(), refs.rows(), k);
    }
    return out;
}

namespace ref {

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_inner(a.cols(), b.rows(), "ref::matmul");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) matmul_rows(a, b, c, i);
    return c;
}

Matrix matmul_ta(const Matrix& a, const Matrix& b) {
    check_inner(a.rows(), b.rows(), "ref::matmul_ta");
    Matrix c(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.cols(); ++i) {
        double* ci = c.row(i);
        for (std::size_t k = 0; k < a.rows(); ++k) {
            const double aki = a(k, i);
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

Matrix matmul_tb(const Matrix& a, const Matrix& b) {
    check_inner(a.cols(), b.cols(), "ref::matmul_tb");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = dot(a.row(i), b.row(j), a.cols());
    return c;
}

Matrix pairwise_distances(const Matrix& x) {
    const std::size_t n = x.rows();
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < x.cols(); ++t) {
                const double diff = x(i, t) - x(j, t);
                s += diff * diff;
            }
            d(i, j) = std::sqrt(s);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) d(i, j) = d(j, i);
    return d;
}

std::vector<std::vector<std::size_t>> rank_by_cosine(const Matrix& queries, const Matrix& refs,
                                                     std::size_t k) {
    check_inner(queries.cols(), refs.cols(), "ref::rank_by_cosine");
    const auto qn = row_norms(queries, "rank_by_cosine queries");
    const auto rn = row_norms(refs, "rank_by_cosine refs");
    std::vector<std::vector<std::size_t>> out(queries.rows());
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        std::vector<double> sims(refs.rows());
        for (std::size_t j = 0; j < refs.rows(); ++j)
            sims[j] = dot(queries.row(i), refs.row(j), refs.cols()) / (qn[i] * rn[j]);
        out[i] = top_k_row(sims.data(), refs.rows(), k);
    }
    return out;
}

}  // namespace ref

}  // namespace zsl
