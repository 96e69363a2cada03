#include "zsl/rectify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "zsl/error.hpp"
#include "zsl/io.hpp"
#include "zsl/kernels.hpp"

namespace zsl {

namespace {

// Duplicate class rows into one column per example: out(:, j) = rows(y[j], :).
Matrix duplicate_by_label(const Matrix& rows, const std::vector<int>& y_pos) {
    Matrix out(rows.cols(), y_pos.size());
    for (std::size_t j = 0; j < y_pos.size(); ++j) {
        const auto c = static_cast<std::size_t>(y_pos[j]);
        for (std::size_t t = 0; t < rows.cols(); ++t) out(t, j) = rows(c, t);
    }
    return out;
}

std::vector<int> to_positions(const Dataset& ds) {
    std::vector<int> pos(ds.y_train.size());
    for (std::size_t i = 0; i < ds.y_train.size(); ++i)
        pos[i] = static_cast<int>(ds.seen_pos(ds.y_train[i]));
    return pos;
}

void check_labels(const std::vector<int>& y_pos, std::size_t m, const char* what) {
    std::vector<std::size_t> counts(m, 0);
    for (int y : y_pos) {
        if (y < 0 || static_cast<std::size_t>(y) >= m)
            throw ConfigError(std::string(what) + ": label position out of range");
        ++counts[static_cast<std::size_t>(y)];
    }
    for (std::size_t c = 0; c < m; ++c)
        if (counts[c] == 0)
            throw ConfigError(std::string(what) + ": class " + std::to_string(c) +
                              " has zero examples");
}

}  // namespace

void validate_rectify_params(const RectifyParams& p, std::size_t num_seen) {
    if (p.alpha < 0 || p.beta < 0)
        throw ConfigError("rectify: alpha and beta must be nonnegative");
    if (std::fabs(p.lambda1 + p.gamma1 - 1.0) > 1e-12)
        throw ConfigError("rectify: lambda1 + gamma1 must equal 1 (convex mixing)");
    if (std::fabs(p.lambda2 + p.gamma2 - 1.0) > 1e-12)
        throw ConfigError("rectify: lambda2 + gamma2 must equal 1 (convex mixing)");
    if (p.k_neighbors == 0 || p.k_neighbors > num_seen)
        throw ConfigError("rectify: k_neighbors must be in [1, seen class count]");
    if (p.conv_tol <= 0) throw ConfigError("rectify: conv_tol must be positive");
    if (p.max_epochs == 0) throw ConfigError("rectify: max_epochs must be >= 1");
}

Matrix adjust_seen_prototypes(const Matrix& p_seen, const Matrix& s_mapped,
                              const std::vector<int>& y_pos, double lambda1, double gamma1) {
    if (s_mapped.cols() != p_seen.cols())
        throw ShapeError("adjust_seen_prototypes: semantic width mismatch");
    const Matrix centroids = class_centroids(s_mapped, y_pos, p_seen.rows());
    Matrix out(p_seen.rows(), p_seen.cols());
    for (std::size_t c = 0; c < p_seen.rows(); ++c)
        for (std::size_t t = 0; t < p_seen.cols(); ++t)
            out(c, t) = lambda1 * p_seen(c, t) + gamma1 * centroids(c, t);
    return out;
}

Matrix adjust_unseen_prototypes(const Matrix& p_unseen, const Matrix& p_seen, std::size_t k,
                                double lambda2, double gamma2) {
    if (p_unseen.cols() != p_seen.cols())
        throw ShapeError("adjust_unseen_prototypes: semantic width mismatch");
    if (k == 0 || k > p_seen.rows())
        throw ConfigError("adjust_unseen_prototypes: k must be in [1, seen class count]");

    const auto neighbors = rank_by_cosine(p_unseen, p_seen, k);
    Matrix out(p_unseen.rows(), p_unseen.cols());
    const std::size_t n = p_unseen.cols();
    for (std::size_t i = 0; i < p_unseen.rows(); ++i) {
        std::vector<double> weights(k);
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t s = neighbors[i][j];
            double sim = cosine_similarity({p_unseen.row(i), n}, {p_seen.row(s), n});
            if (sim < 0.0) sim = 0.0;  // clamp before normalization
            weights[j] = sim;
            total += sim;
        }
        if (total <= 0.0)
            throw NumericalError("adjust_unseen_prototypes: degenerate neighborhood for "
                                 "unseen prototype " +
                                 std::to_string(i));
        for (std::size_t t = 0; t < n; ++t) {
            double blend = 0.0;
            for (std::size_t j = 0; j < k; ++j)
                blend += (weights[j] / total) * p_seen(neighbors[i][j], t);
            out(i, t) = lambda2 * p_unseen(i, t) + gamma2 * blend;
        }
    }
    return out;
}

Matrix class_centroids(const Matrix& s_mapped, const std::vector<int>& y_pos, std::size_t m) {
    if (y_pos.size() != s_mapped.rows())
        throw ShapeError("class_centroids: label count != row count");
    check_labels(y_pos, m, "class_centroids");
    Matrix out(m, s_mapped.cols());
    std::vector<double> counts(m, 0.0);
    for (std::size_t i = 0; i < s_mapped.rows(); ++i) {
        const auto c = static_cast<std::size_t>(y_pos[i]);
        counts[c] += 1.0;
        for (std::size_t t = 0; t < s_mapped.cols(); ++t) out(c, t) += s_mapped(i, t);
    }
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t t = 0; t < s_mapped.cols(); ++t) out(c, t) /= counts[c];
    return out;
}

SylvesterProblem assemble_sylvester(const Matrix& x_cols, const Matrix& p_dup,
                                    const Matrix& o_dup, double alpha, double beta) {
    if (p_dup.cols() != x_cols.cols() || o_dup.cols() != x_cols.cols())
        throw ShapeError("assemble_sylvester: example count mismatch");
    if (p_dup.rows() != o_dup.rows())
        throw ShapeError("assemble_sylvester: semantic dimension mismatch");
    SylvesterProblem prob;
    prob.l = matmul_tb(p_dup, p_dup);
    prob.r = scale(matmul_tb(x_cols, x_cols), alpha + beta);
    Matrix combo = scale(p_dup, 1.0 + beta);
    axpy_in_place(combo, alpha, o_dup);
    prob.m = scale(matmul_tb(combo, x_cols), -1.0);
    return prob;
}

double rectify_objective(const Matrix& w, const Matrix& x_cols, const Matrix& p_dup,
                         const Matrix& o_dup, double alpha, double beta) {
    // W X once; the decoder term uses ||X - W^T P||_F = ||X^T - P^T W||_F
    const Matrix wx = matmul(w, x_cols);
    const Matrix wtp = matmul_ta(w, p_dup);  // d x N
    double recon = 0.0;
    for (std::size_t t = 0; t < x_cols.size(); ++t) {
        const double diff = x_cols.data()[t] - wtp.data()[t];
        recon += diff * diff;
    }
    double centroid = 0.0, constraint = 0.0;
    for (std::size_t t = 0; t < wx.size(); ++t) {
        const double dc = wx.data()[t] - o_dup.data()[t];
        const double dp = wx.data()[t] - p_dup.data()[t];
        centroid += dc * dc;
        constraint += dp * dp;
    }
    return 0.5 * recon + 0.5 * alpha * centroid + 0.5 * beta * constraint;
}

RectifyModel train_rectify(const Dataset& ds, const RectifyParams& params) {
    validate_rectify_params(params, ds.num_seen());
    const std::vector<int> y_pos = to_positions(ds);
    check_labels(y_pos, ds.num_seen(), "train_rectify");

    const Matrix x_cols = transpose(ds.x_train);  // d x N
    const std::size_t m = ds.num_seen();

    // R = (alpha+beta) X X^T is constant across epochs; factor once
    const Matrix xxt = matmul_tb(x_cols, x_cols);
    const EigResult eig_r_full = sym_eig(scale(xxt, params.alpha + params.beta));
    const EigResult eig_r_init = sym_eig(scale(xxt, params.beta));

    RectifyModel model;
    model.p_seen_adj = ds.p_seen;
    model.p_unseen_adj = ds.p_unseen;

    // R is factored once above, so each epoch only assembles L and M
    auto solve_epoch = [&](const Matrix& p_dup, const Matrix& o_dup, double alpha, double beta,
                           const EigResult& eig_r) {
        const Matrix l = matmul_tb(p_dup, p_dup);
        Matrix combo = scale(p_dup, 1.0 + beta);
        axpy_in_place(combo, alpha, o_dup);
        const Matrix m_mat = scale(matmul_tb(combo, x_cols), -1.0);
        Matrix w = solve_sylvester_sym(sym_eig(l), eig_r, m_mat);
        if (!w.all_finite()) throw NumericalError("train_rectify: non-finite solution");
        return w;
    };

    // init: cycle mapping plus relaxed constraint only (alpha = 0)
    Matrix p_dup = duplicate_by_label(model.p_seen_adj, y_pos);
    Matrix o_zero(p_dup.rows(), p_dup.cols());
    model.w = solve_epoch(p_dup, o_zero, 0.0, params.beta, eig_r_init);
    double prev_obj = rectify_objective(model.w, x_cols, p_dup, o_zero, 0.0, params.beta);
    if (!std::isfinite(prev_obj)) throw NumericalError("train_rectify: non-finite objective");
    model.history.push_back(prev_obj);

    for (std::size_t epoch = 0; epoch < params.max_epochs; ++epoch) {
        const Matrix s_mapped = matmul_tb(ds.x_train, model.w);  // N x n
        model.p_seen_adj = adjust_seen_prototypes(model.p_seen_adj, s_mapped, y_pos,
                                                  params.lambda1, params.gamma1);
        model.p_unseen_adj = adjust_unseen_prototypes(model.p_unseen_adj, model.p_seen_adj,
                                                      params.k_neighbors, params.lambda2,
                                                      params.gamma2);
        const Matrix centroids = class_centroids(s_mapped, y_pos, m);
        p_dup = duplicate_by_label(model.p_seen_adj, y_pos);
        const Matrix o_dup = duplicate_by_label(centroids, y_pos);
        model.w = solve_epoch(p_dup, o_dup, params.alpha, params.beta, eig_r_full);

        const double obj =
            rectify_objective(model.w, x_cols, p_dup, o_dup, params.alpha, params.beta);
        if (!std::isfinite(obj)) throw NumericalError("train_rectify: non-finite objective");
        model.history.push_back(obj);
        const double rel = std::fabs(obj - prev_obj) / std::max(std::fabs(prev_obj), 1e-12);
        prev_obj = obj;
        if (rel < params.conv_tol) break;
    }
    return model;
}

std::vector<std::vector<std::size_t>> infer_v2s(const RectifyModel& model, const Matrix& x_test,
                                                std::size_t k) {
    const Matrix s = matmul_tb(x_test, model.w);  // N x n
    return rank_by_cosine(s, model.p_unseen_adj, k);
}

std::vector<std::vector<std::size_t>> infer_s2v(const RectifyModel& model, const Matrix& x_test,
                                                std::size_t k) {
    // template visual vector per unseen class: t_c = W^T p_c, one row per class
    const Matrix templates = matmul(model.p_unseen_adj, model.w);  // v x d
    return rank_by_cosine(x_test, templates, k);
}

void save_rectify(const RectifyModel& model, const RectifyParams& params,
                  const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_matrix_binary(model.w, dir / "W.zslm");
    save_matrix_binary(model.p_seen_adj, dir / "P_seen_adj.zslm");
    save_matrix_binary(model.p_unseen_adj, dir / "P_unseen_adj.zslm");
    std::vector<std::pair<std::string, std::string>> manifest{
        {"method", "rectify"},
        {"alpha", format_double(params.alpha)},
        {"beta", format_double(params.beta)},
        {"lambda1", format_double(params.lambda1)},
        {"gamma1", format_double(params.gamma1)},
        {"lambda2", format_double(params.lambda2)},
        {"gamma2", format_double(params.gamma2)},
        {"k_neighbors", std::to_string(params.k_neighbors)},
        {"epochs_run", std::to_string(model.history.empty() ? 0 : model.history.size() - 1)},
        {"final_objective",
         model.history.empty() ? "nan" : format_double(model.history.back())},
    };
    save_manifest(manifest, dir / "manifest.txt");
}

RectifyModel load_rectify(const std::filesystem::path& dir) {
    const auto manifest = load_manifest(dir / "manifest.txt");
    if (manifest_get(manifest, "method") != "rectify")
        throw ConfigError("load_rectify: bundle method is not rectify");
    RectifyModel model;
    model.w = load_matrix_binary(dir / "W.zslm");
    model.p_seen_adj = load_matrix_binary(dir / "P_seen_adj.zslm");
    model.p_unseen_adj = load_matrix_binary(dir / "P_unseen_adj.zslm");
    return model;
}

}  // namespace zsl
