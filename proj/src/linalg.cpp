#include "zsl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "zsl/error.hpp"

namespace zsl {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kDegenerateGap = 1e-10;  // vs spectral radius
constexpr std::size_t kKronCutoff = 32;

double sign_of(double v) { return v >= 0.0 ? 1.0 : -1.0; }

// ---------------------------------------------------------------- Jacobi ---

void jacobi_rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    if (apq == 0.0) return;
    const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = sign_of(tau) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;
    const std::size_t n = a.rows();

    const double app = a(p, p), aqq = a(q, q);
    a(p, p) = app - t * apq;
    a(q, q) = aqq + t * apq;
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == p || i == q) continue;
        const double aip = a(i, p), aiq = a(i, q);
        a(i, p) = c * aip - s * aiq;
        a(p, i) = a(i, p);
        a(i, q) = s * aip + c * aiq;
        a(q, i) = a(i, q);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double vip = v(i, p), viq = v(i, q);
        v(i, p) = c * vip - s * viq;
        v(i, q) = s * vip + c * viq;
    }
}

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
}

// ------------------------------------------------------------ Hessenberg ---

// In-place reduction; q accumulates the orthogonal similarity.
void hessenberg_reduce(Matrix& a, Matrix& q) {
    const std::size_t n = a.rows();
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double scale = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) scale = std::max(scale, std::fabs(a(i, k)));
        if (scale == 0.0) continue;
        std::vector<double> v(n - k - 1);
        double norm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i - k - 1] = a(i, k) / scale;
            norm2 += v[i - k - 1] * v[i - k - 1];
        }
        const double alpha = -sign_of(v[0]) * std::sqrt(norm2);
        v[0] -= alpha;
        double vtv = 0.0;
        for (double x : v) vtv += x * x;
        if (vtv == 0.0) continue;
        const double beta = 2.0 / vtv;

        // left: rows k+1..n-1
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i - k - 1] * a(i, j);
            s *= beta;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i - k - 1];
        }
        // right: columns k+1..n-1
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j - k - 1];
            s *= beta;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j - k - 1];
        }
        // accumulate q
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += q(i, j) * v[j - k - 1];
            s *= beta;
            for (std::size_t j = k + 1; j < n; ++j) q(i, j) -= s * v[j - k - 1];
        }
        a(k + 1, k) = alpha * scale;
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

// --------------------------------------------------------- Francis sweep ---

struct Reflector {
    double v[3];
    double beta;
    std::size_t size;
    double signed_norm;  // reflector maps the input vector to (-signed_norm, 0, 0)
    bool valid;
};

Reflector make_reflector(double x, double y, double z, std::size_t size) {
    Reflector r{};
    r.size = size;
    const double scale = std::fabs(x) + std::fabs(y) + (size == 3 ? std::fabs(z) : 0.0);
    if (scale == 0.0) {
        r.valid = false;
        return r;
    }
    const double xs = x / scale, ys = y / scale, zs = size == 3 ? z / scale : 0.0;
    double norm = std::sqrt(xs * xs + ys * ys + zs * zs);
    norm *= sign_of(xs);
    r.v[0] = xs + norm;
    r.v[1] = ys;
    r.v[2] = zs;
    double vtv = r.v[0] * r.v[0] + r.v[1] * r.v[1] + r.v[2] * r.v[2];
    if (vtv == 0.0) {
        r.valid = false;
        return r;
    }
    r.beta = 2.0 / vtv;
    r.signed_norm = norm * scale;
    r.valid = true;
    return r;
}

void reflect_rows(Matrix& h, const Reflector& r, std::size_t k, std::size_t col_begin,
                  std::size_t col_end) {
    for (std::size_t j = col_begin; j < col_end; ++j) {
        double s = r.v[0] * h(k, j) + r.v[1] * h(k + 1, j);
        if (r.size == 3) s += r.v[2] * h(k + 2, j);
        s *= r.beta;
        h(k, j) -= s * r.v[0];
        h(k + 1, j) -= s * r.v[1];
        if (r.size == 3) h(k + 2, j) -= s * r.v[2];
    }
}

void reflect_cols(Matrix& h, const Reflector& r, std::size_t k, std::size_t row_begin,
                  std::size_t row_end) {
    for (std::size_t i = row_begin; i < row_end; ++i) {
        double s = h(i, k) * r.v[0] + h(i, k + 1) * r.v[1];
        if (r.size == 3) s += h(i, k + 2) * r.v[2];
        s *= r.beta;
        h(i, k) -= s * r.v[0];
        h(i, k + 1) -= s * r.v[1];
        if (r.size == 3) h(i, k + 2) -= s * r.v[2];
    }
}

// Triangularize a trailing 2x2 block with real eigenvalues via one rotation.
void split_real_2x2(Matrix& h, Matrix& q, std::size_t lo, std::size_t hi) {
    const std::size_t n = h.rows();
    const double w = h(hi, lo) * h(lo, hi);
    const double p = (h(lo, lo) - h(hi, hi)) / 2.0;
    const double disc = p * p + w;
    if (disc < 0.0) return;  // complex pair stays a 2x2 block
    double z = std::sqrt(disc);
    z = p + sign_of(p) * z;
    if (z == 0.0 && h(hi, lo) == 0.0) {
        return;
    }
    const double x = h(hi, lo);
    const double s0 = std::fabs(x) + std::fabs(z);
    if (s0 == 0.0) return;
    double cp = x / s0, cq = z / s0;
    const double r = std::sqrt(cp * cp + cq * cq);
    cp /= r;
    cq /= r;
    // rows
    for (std::size_t j = lo; j < n; ++j) {
        const double tmp = h(lo, j);
        h(lo, j) = cq * tmp + cp * h(hi, j);
        h(hi, j) = cq * h(hi, j) - cp * tmp;
    }
    // cols
    for (std::size_t i = 0; i <= hi; ++i) {
        const double tmp = h(i, lo);
        h(i, lo) = cq * tmp + cp * h(i, hi);
        h(i, hi) = cq * h(i, hi) - cp * tmp;
    }
    // accumulate
    for (std::size_t i = 0; i < n; ++i) {
        const double tmp = q(i, lo);
        q(i, lo) = cq * tmp + cp * q(i, hi);
        q(i, hi) = cq * q(i, hi) - cp * tmp;
    }
    h(hi, lo) = 0.0;
}

void francis_iterate(Matrix& h, Matrix& q) {
    const std::size_t n = h.rows();
    if (n < 2) return;
    double hnorm = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) hnorm += std::fabs(h.data()[i]);
    if (hnorm == 0.0) return;

    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1;
    std::size_t iters_this_block = 0;
    std::size_t total_iters = 0;
    const std::size_t total_cap = 60 * n;

    while (hi >= 1) {
        // deflation scan: zero negligible subdiagonals, find window start
        std::ptrdiff_t lo = hi;
        while (lo > 0) {
            double small = kEps * (std::fabs(h(lo - 1, lo - 1)) + std::fabs(h(lo, lo)));
            if (small == 0.0) small = kEps * hnorm;
            if (std::fabs(h(lo, lo - 1)) <= small) {
                h(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }

        if (lo == hi) {
            --hi;
            iters_this_block = 0;
            continue;
        }
        if (lo == hi - 1) {
            split_real_2x2(h, q, static_cast<std::size_t>(lo), static_cast<std::size_t>(hi));
            hi -= 2;
            iters_this_block = 0;
            continue;
        }

        ++iters_this_block;
        if (++total_iters > total_cap)
            throw NumericalError("real_schur: QR iteration failed to converge");

        // double shift from the trailing 2x2 (trace and determinant)
        double shift_sum = h(hi - 1, hi - 1) + h(hi, hi);
        double shift_prod =
            h(hi - 1, hi - 1) * h(hi, hi) - h(hi - 1, hi) * h(hi, hi - 1);
        if (iters_this_block % 10 == 0) {
            // exceptional shift against stagnation
            const double s = std::fabs(h(hi, hi - 1)) + std::fabs(h(hi - 1, hi - 2));
            shift_sum = 1.5 * s;
            shift_prod = -0.4375 * s * s;
        }

        const std::size_t l = static_cast<std::size_t>(lo);
        const std::size_t hh = static_cast<std::size_t>(hi);
        double x = h(l, l) * h(l, l) + h(l, l + 1) * h(l + 1, l) - shift_sum * h(l, l) +
                   shift_prod;
        double y = h(l + 1, l) * (h(l, l) + h(l + 1, l + 1) - shift_sum);
        double z = (l + 2 <= hh) ? h(l + 1, l) * h(l + 2, l + 1) : 0.0;

        for (std::size_t k = l; k <= hh - 1; ++k) {
            const bool last = (k == hh - 1);
            if (k > l) {
                x = h(k, k - 1);
                y = h(k + 1, k - 1);
                z = last ? 0.0 : h(k + 2, k - 1);
            }
            const Reflector r = make_reflector(x, y, z, last ? 2 : 3);
            if (!r.valid) continue;
            if (k > l) {
                h(k, k - 1) = -r.signed_norm;
                h(k + 1, k - 1) = 0.0;
                if (!last) h(k + 2, k - 1) = 0.0;
            }
            reflect_rows(h, r, k, k, n);
            const std::size_t row_end = std::min(k + (last ? 2 : 3), hh) + 1;
            reflect_cols(h, r, k, 0, row_end);
            reflect_cols(q, r, k, 0, n);
        }
    }
}

Matrix kron_operator(const Matrix& l, const Matrix& r) {
    const std::size_t n = l.rows(), d = r.rows();
    Matrix a(n * d, n * d);
    // row-major vec: index(i,j) = i*d + j
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const double lik = l(i, k);
            if (lik == 0.0) continue;
            for (std::size_t j = 0; j < d; ++j) a(i * d + j, k * d + j) += lik;
        }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t j = 0; j < d; ++j) a(i * d + j, i * d + k) += r(k, j);
    return a;
}

void check_sylvester_shapes(const SylvesterProblem& p) {
    if (p.l.rows() != p.l.cols()) throw ShapeError("solve_sylvester: L must be square");
    if (p.r.rows() != p.r.cols()) throw ShapeError("solve_sylvester: R must be square");
    if (p.m.rows() != p.l.rows() || p.m.cols() != p.r.rows())
        throw ShapeError("solve_sylvester: M must be L.rows x R.rows");
}

// Throws when some lambda_L + lambda_R is negligible relative to the
// spectral radius, naming the pair.
void check_spectra_disjoint(const std::vector<std::pair<double, double>>& el,
                            const std::vector<std::pair<double, double>>& er) {
    double radius = 0.0;
    for (const auto& [re, im] : el) radius = std::max(radius, std::hypot(re, im));
    for (const auto& [re, im] : er) radius = std::max(radius, std::hypot(re, im));
    const double tol = kDegenerateGap * std::max(radius, 1e-300);
    for (const auto& [lre, lim] : el)
        for (const auto& [rre, rim] : er) {
            const double gap = std::hypot(lre + rre, lim + rim);
            if (gap < tol) {
                std::ostringstream os;
                os << "solve_sylvester: near-singular system, eigenvalue of L (" << lre;
                if (lim != 0.0) os << (lim > 0 ? "+" : "") << lim << "i";
                os << ") nearly cancels eigenvalue of R (" << rre;
                if (rim != 0.0) os << (rim > 0 ? "+" : "") << rim << "i";
                os << "), gap " << gap;
                throw NumericalError(os.str());
            }
        }
}

// Block back-substitution for TL*Y + Y*TR = C with quasi-triangular TL, TR.
Matrix quasi_tri_sylvester(const Matrix& tl, const Matrix& tr, const Matrix& c) {
    const std::size_t n = tl.rows(), d = tr.rows();
    auto blocks_of = [](const Matrix& t) {
        std::vector<std::pair<std::size_t, std::size_t>> blocks;  // (start, size)
        std::size_t i = 0;
        while (i < t.rows()) {
            if (i + 1 < t.rows() && t(i + 1, i) != 0.0) {
                blocks.emplace_back(i, 2);
                i += 2;
            } else {
                blocks.emplace_back(i, 1);
                i += 1;
            }
        }
        return blocks;
    };
    const auto lb = blocks_of(tl);
    const auto rb = blocks_of(tr);

    Matrix y(n, d);
    for (std::size_t jb = 0; jb < rb.size(); ++jb) {
        const auto [j0, jq] = rb[jb];
        for (std::size_t kb = lb.size(); kb-- > 0;) {
            const auto [k0, kp] = lb[kb];
            // rhs = C[K,J] - sum_{K'>K} TL[K,K'] Y[K',J] - sum_{I<J} Y[K,I] TR[I,J]
            Matrix rhs(kp, jq);
            for (std::size_t a = 0; a < kp; ++a)
                for (std::size_t b = 0; b < jq; ++b) rhs(a, b) = c(k0 + a, j0 + b);
            for (std::size_t a = 0; a < kp; ++a)
                for (std::size_t b = 0; b < jq; ++b) {
                    double s = 0.0;
                    for (std::size_t t = k0 + kp; t < n; ++t) s += tl(k0 + a, t) * y(t, j0 + b);
                    for (std::size_t t = 0; t < j0; ++t) s += y(k0 + a, t) * tr(t, j0 + b);
                    rhs(a, b) -= s;
                }
            // small system (TL_KK (x) I + I (x) TR_JJ^T) vec_r(Z) = vec_r(rhs)
            const std::size_t sz = kp * jq;
            Matrix small(sz, sz);
            for (std::size_t a = 0; a < kp; ++a)
                for (std::size_t b = 0; b < jq; ++b) {
                    for (std::size_t a2 = 0; a2 < kp; ++a2)
                        small(a * jq + b, a2 * jq + b) += tl(k0 + a, k0 + a2);
                    for (std::size_t b2 = 0; b2 < jq; ++b2)
                        small(a * jq + b, a * jq + b2) += tr(j0 + b2, j0 + b);
                }
            Matrix rhs_vec(sz, 1);
            for (std::size_t a = 0; a < kp; ++a)
                for (std::size_t b = 0; b < jq; ++b) rhs_vec(a * jq + b, 0) = rhs(a, b);
            Matrix zv = solve_lu(small, rhs_vec);
            for (std::size_t a = 0; a < kp; ++a)
                for (std::size_t b = 0; b < jq; ++b) y(k0 + a, j0 + b) = zv(a * jq + b, 0);
        }
    }
    return y;
}

}  // namespace

EigResult sym_eig(const Matrix& b) {
    if (b.rows() != b.cols()) throw ShapeError("sym_eig: matrix must be square");
    const std::size_t n = b.rows();
    double defect = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            defect = std::max(defect, std::fabs(b(i, j) - b(j, i)));
    if (defect > 1e-9 * std::max(1.0, max_abs(b)))
        throw NumericalError("sym_eig: symmetry defect " + std::to_string(defect) +
                             " exceeds tolerance");

    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (b(i, j) + b(j, i));
    Matrix v = Matrix::identity(n);

    const double fro = frobenius_norm(a);
    const double stop = std::max(1e-300, 1e-14 * fro);
    constexpr std::size_t kMaxSweeps = 100;
    for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
        if (off_diagonal_norm(a) <= stop) break;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) jacobi_rotate(a, v, p, q);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (a(x, x) != a(y, y)) return a(x, x) > a(y, y);
        return x < y;
    });

    EigResult out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    }
    return out;
}

SchurResult real_schur(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("real_schur: matrix must be square");
    SchurResult res;
    res.t = a;
    res.q = Matrix::identity(a.rows());
    if (a.rows() == 1) return res;
    hessenberg_reduce(res.t, res.q);
    francis_iterate(res.t, res.q);
    // enforce exact zeros below the quasi-triangular structure
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = j + 2; i < n; ++i) res.t(i, j) = 0.0;
    return res;
}

std::vector<std::pair<double, double>> schur_eigenvalues(const Matrix& t) {
    std::vector<std::pair<double, double>> eig;
    std::size_t i = 0;
    const std::size_t n = t.rows();
    while (i < n) {
        if (i + 1 < n && t(i + 1, i) != 0.0) {
            const double a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), d = t(i + 1, i + 1);
            const double ph = (a - d) / 2.0;
            const double disc = ph * ph + b * c;
            const double re = (a + d) / 2.0;
            if (disc >= 0.0) {
                const double rt = std::sqrt(disc);
                eig.emplace_back(re + rt, 0.0);
                eig.emplace_back(re - rt, 0.0);
            } else {
                const double im = std::sqrt(-disc);
                eig.emplace_back(re, im);
                eig.emplace_back(re, -im);
            }
            i += 2;
        } else {
            eig.emplace_back(t(i, i), 0.0);
            i += 1;
        }
    }
    return eig;
}

bool is_symmetric(const Matrix& a, double tol_scale) {
    if (a.rows() != a.cols()) return false;
    const double tol = tol_scale * std::max(1.0, max_abs(a));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::fabs(a(i, j) - a(j, i)) > tol) return false;
    return true;
}

Matrix solve_lu(Matrix a, Matrix b) {
    if (a.rows() != a.cols()) throw ShapeError("solve_lu: matrix must be square");
    if (a.rows() != b.rows()) throw ShapeError("solve_lu: rhs row mismatch");
    const std::size_t n = a.rows(), m = b.cols();
    const double pivot_floor = 1e-13 * std::max(1.0, max_abs(a)) * static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(a(i, k)) > std::fabs(a(piv, k))) piv = i;
        if (std::fabs(a(piv, k)) <= pivot_floor)
            throw NumericalError("solve_lu: near-singular system (pivot " +
                                 std::to_string(a(piv, k)) + ")");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            for (std::size_t j = 0; j < m; ++j) std::swap(b(k, j), b(piv, j));
        }
        const double inv = 1.0 / a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) * inv;
            if (f == 0.0) continue;
            a(i, k) = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
            for (std::size_t j = 0; j < m; ++j) b(i, j) -= f * b(k, j);
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = b(k, j);
            for (std::size_t t = k + 1; t < n; ++t) s -= a(k, t) * b(t, j);
            b(k, j) = s / a(k, k);
        }
    }
    return b;
}

Matrix solve_sylvester_kron(const SylvesterProblem& p) {
    check_sylvester_shapes(p);
    const std::size_t n = p.l.rows(), d = p.r.rows();
    Matrix op = kron_operator(p.l, p.r);
    Matrix rhs(n * d, 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) rhs(i * d + j, 0) = -p.m(i, j);
    Matrix sol = solve_lu(std::move(op), std::move(rhs));
    Matrix w(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) w(i, j) = sol(i * d + j, 0);
    return w;
}

Matrix solve_sylvester_sym(const EigResult& eig_l, const EigResult& eig_r, const Matrix& m) {
    const std::size_t n = eig_l.eigenvalues.size(), d = eig_r.eigenvalues.size();
    if (m.rows() != n || m.cols() != d) throw ShapeError("solve_sylvester_sym: shape mismatch");
    double radius = 0.0;
    for (double v : eig_l.eigenvalues) radius = std::max(radius, std::fabs(v));
    for (double v : eig_r.eigenvalues) radius = std::max(radius, std::fabs(v));
    const double gap_tol = kDegenerateGap * std::max(radius, 1e-300);

    // C = -U^T M V
    Matrix c = matmul_ta(eig_l.eigenvectors, matmul(m, eig_r.eigenvectors));
    const double consistency_tol = 1e-8 * (1.0 + frobenius_norm(m));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double denom = eig_l.eigenvalues[i] + eig_r.eigenvalues[j];
            if (std::fabs(denom) < gap_tol) {
                if (std::fabs(c(i, j)) > consistency_tol) {
                    std::ostringstream os;
                    os << "solve_sylvester: near-singular system, eigenvalue of L ("
                       << eig_l.eigenvalues[i] << ") nearly cancels eigenvalue of R ("
                       << eig_r.eigenvalues[j] << ") with inconsistent right-hand side";
                    throw NumericalError(os.str());
                }
                c(i, j) = 0.0;  // minimum-norm component
            } else {
                c(i, j) = -c(i, j) / denom;
            }
        }
    return matmul(eig_l.eigenvectors, matmul_tb(c, eig_r.eigenvectors));
}

Matrix solve_sylvester_schur(const SylvesterProblem& p) {
    check_sylvester_shapes(p);
    if (is_symmetric(p.l) && is_symmetric(p.r))
        return solve_sylvester_sym(sym_eig(p.l), sym_eig(p.r), p.m);
    const SchurResult sl = real_schur(p.l);
    const SchurResult sr = real_schur(p.r);
    check_spectra_disjoint(schur_eigenvalues(sl.t), schur_eigenvalues(sr.t));
    // TL Y + Y TR = -QL^T M QR
    Matrix c = scale(matmul_ta(sl.q, matmul(p.m, sr.q)), -1.0);
    Matrix y = quasi_tri_sylvester(sl.t, sr.t, c);
    return matmul(sl.q, matmul_tb(y, sr.q));
}

Matrix solve_sylvester(const SylvesterProblem& p) {
    check_sylvester_shapes(p);
    if (is_symmetric(p.l) && is_symmetric(p.r))
        return solve_sylvester_sym(sym_eig(p.l), sym_eig(p.r), p.m);
    if (std::max(p.l.rows(), p.r.rows()) <= kKronCutoff) {
        check_spectra_disjoint(schur_eigenvalues(real_schur(p.l).t),
                               schur_eigenvalues(real_schur(p.r).t));
        return solve_sylvester_kron(p);
    }
    return solve_sylvester_schur(p);
}

double relative_sylvester_residual(const SylvesterProblem& p, const Matrix& w) {
    Matrix res = add(add(matmul(p.l, w), matmul(w, p.r)), p.m);
    const double denom = frobenius_norm(p.l) * frobenius_norm(w) +
                         frobenius_norm(w) * frobenius_norm(p.r) + frobenius_norm(p.m);
    return frobenius_norm(res) / std::max(denom, 1e-300);
}

Matrix least_squares(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ShapeError("least_squares: A.rows must equal b.rows");
    // minimum-norm solution through the spectral pseudo-inverse of A^T A
    Matrix gram = matmul_ta(a, a);
    EigResult eig = sym_eig(gram);
    const double lmax = eig.eigenvalues.empty() ? 0.0 : std::max(eig.eigenvalues.front(), 0.0);
    const double cutoff = lmax * 1e-12;
    Matrix atb = matmul_ta(a, b);                      // k x m
    Matrix proj = matmul_ta(eig.eigenvectors, atb);    // Q^T A^T b
    for (std::size_t i = 0; i < proj.rows(); ++i) {
        const double lam = eig.eigenvalues[i];
        const double f = lam > cutoff ? 1.0 / lam : 0.0;
        for (std::size_t j = 0; j < proj.cols(); ++j) proj(i, j) *= f;
    }
    return matmul(eig.eigenvectors, proj);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw ShapeError("cosine_similarity: length mismatch");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0)
        throw NumericalError("cosine_similarity: zero-norm input vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

}  // namespace zsl
