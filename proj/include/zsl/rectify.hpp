#pragma once

#include <filesystem>
#include <vector>

#include "zsl/dataset.hpp"
#include "zsl/linalg.hpp"
#include "zsl/matrix.hpp"

namespace zsl {

struct RectifyParams {
    double alpha = 0.1;    // centroid-regularizer weight
    double beta = 1.0;     // relaxed-constraint weight
    double lambda1 = 0.75;
    double gamma1 = 0.25;
    double lambda2 = 0.8;
    double gamma2 = 0.2;
    std::size_t k_neighbors = 12;
    std::size_t max_epochs = 50;
    double conv_tol = 1e-6;
};

void validate_rectify_params(const RectifyParams& p, std::size_t num_seen);

/// Tied-weight cycle-mapping model: encoder W (n_sem x d_vis), decoder W^T,
/// plus the per-epoch rectified prototype sets.
struct RectifyModel {
    Matrix w;
    Matrix p_seen_adj;
    Matrix p_unseen_adj;
    std::vector<double> history;  // objective per epoch, element 0 = init solve
};

/// Row i becomes lambda1 * p_i + gamma1 * (mean mapped semantic row of class i).
/// Labels are positions 0..m-1; every class must be populated.
Matrix adjust_seen_prototypes(const Matrix& p_seen, const Matrix& s_mapped,
                              const std::vector<int>& y_pos, double lambda1, double gamma1);

/// Row i becomes lambda2 * p_i + gamma2 * (similarity-weighted mean of its k
/// cosine-nearest seen prototypes). Negative similarities inside the selected
/// neighborhood clamp to zero; an all-clamped neighborhood is an error.
Matrix adjust_unseen_prototypes(const Matrix& p_unseen, const Matrix& p_seen, std::size_t k,
                                double lambda2, double gamma2);

/// Row i = mean of mapped semantic rows with label i.
Matrix class_centroids(const Matrix& s_mapped, const std::vector<int>& y_pos, std::size_t m);

/// L = P P^T, R = (alpha+beta) X X^T, M = -((1+beta) P + alpha O) X^T,
/// with X (d x N) column-per-example and P, O (n x N) duplicated per example.
SylvesterProblem assemble_sylvester(const Matrix& x_cols, const Matrix& p_dup,
                                    const Matrix& o_dup, double alpha, double beta);

/// 0.5||X^T - P^T W||_F^2 + alpha/2 ||W X - O||_F^2 + beta/2 ||W X - P||_F^2.
double rectify_objective(const Matrix& w, const Matrix& x_cols, const Matrix& p_dup,
                         const Matrix& o_dup, double alpha, double beta);

RectifyModel train_rectify(const Dataset& ds, const RectifyParams& params);

/// Map test rows to semantic space with W and rank unseen prototypes by
/// cosine similarity; top-k prototype row indices per test row.
std::vector<std::vector<std::size_t>> infer_v2s(const RectifyModel& model, const Matrix& x_test,
                                                std::size_t k);

/// Map each unseen prototype to a visual template with W^T and rank classes
/// by cosine similarity against each test row.
std::vector<std::vector<std::size_t>> infer_s2v(const RectifyModel& model, const Matrix& x_test,
                                                std::size_t k);

void save_rectify(const RectifyModel& model, const RectifyParams& params,
                  const std::filesystem::path& dir);
RectifyModel load_rectify(const std::filesystem::path& dir);

}  // namespace zsl
