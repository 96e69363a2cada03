#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "zsl/matrix.hpp"

namespace zsl {

/// A zero-shot split: visual features plus semantic prototypes for
/// disjoint seen/unseen class sets sharing one semantic space.
struct Dataset {
    Matrix x_train;            // N_train x d visual features, seen classes
    std::vector<int> y_train;  // class ids, one per train row
    Matrix p_seen;             // m x n prototypes, row i belongs to seen_ids[i]
    Matrix p_unseen;           // v x n prototypes, row i belongs to unseen_ids[i]
    Matrix x_test;             // N_test x d visual features, unseen classes
    std::vector<int> y_test;
    std::vector<int> seen_ids;    // ascending
    std::vector<int> unseen_ids;  // ascending

    std::size_t num_seen() const { return p_seen.rows(); }
    std::size_t num_unseen() const { return p_unseen.rows(); }
    std::size_t visual_dim() const { return x_train.cols(); }
    std::size_t semantic_dim() const { return p_seen.cols(); }

    /// Position of class id within seen_ids (prototype row index).
    std::size_t seen_pos(int id) const;
    std::size_t unseen_pos(int id) const;
};

struct SyntheticSpec {
    std::size_t m_seen = 15;
    std::size_t v_unseen = 5;
    std::size_t d = 64;  // visual dim
    std::size_t n = 20;  // semantic dim
    std::size_t examples_per_class = 30;
    double noise_sigma = 0.05;
    std::uint64_t seed = 0;
    double cosine_reject = 0.95;  // prototypes with any pairwise cosine >= this are resampled
};

void validate_synthetic_spec(const SyntheticSpec& spec);

/// Deterministic function of the spec: unit-norm prototypes with pairwise
/// cosine below the rejection threshold, a fixed Gaussian map G from semantic
/// to visual space, examples x = G p_class + noise. Train rows cover seen
/// classes, test rows cover unseen classes.
Dataset synthesize_dataset(const SyntheticSpec& spec);

/// Throws on any violated Dataset invariant.
void validate_dataset(const Dataset& ds);

// Directory layout: X_train.zslm, y_train.csv, P_seen.zslm, P_unseen.zslm,
// X_test.zslm, y_test.csv. Class ids are dense 0-based over both splits;
// prototype row i corresponds to the i-th smallest id of its split.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// L2-normalize each row in place (optional ingestion step; off by default).
void l2_normalize_rows(Matrix& m);

}  // namespace zsl
