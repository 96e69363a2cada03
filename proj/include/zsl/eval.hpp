#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "zsl/matrix.hpp"

namespace zsl {

struct EvalReport {
    std::map<std::size_t, double> hit_at_k;  // micro accuracy per requested k
    std::map<int, double> per_class;         // macro accuracy per populated class
    double macro_mean = 0.0;
    Matrix confusion;            // row-stochastic, rows = truth order of `classes`
    std::vector<int> classes;    // class ids indexing confusion rows/cols
    bool has_gzsl = false;
    double u = 0.0, s = 0.0, h = 0.0;
};

/// Fraction of examples whose truth appears among the first k entries.
double hit_at_k(const std::vector<std::vector<int>>& topk_ids, const std::vector<int>& truths,
                std::size_t k);

/// 2US/(U+S); 0 when U+S = 0.
double harmonic_mean(double u, double s);

/// Per-class correct/total over rank-1 predictions; classes with no test
/// examples are absent from the map.
std::map<int, double> per_class_accuracy(const std::vector<int>& preds,
                                         const std::vector<int>& truths,
                                         const std::vector<int>& classes);

/// Row-normalized counts, rows = truth, cols = prediction, both in the order
/// of `classes`. Rows of unpopulated classes stay zero.
Matrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& truths,
                        const std::vector<int>& classes);

/// Top-k prototype row indices per row of s, cosine descending, ties by
/// ascending index.
std::vector<std::vector<std::size_t>> nearest_prototypes(const Matrix& s, const Matrix& p,
                                                         std::size_t k);

/// CSV with a label column followed by the coordinate columns.
void export_embeddings_csv(const Matrix& s, const std::vector<int>& labels,
                           const std::filesystem::path& path);

/// Builds hit@k (micro), per-class accuracy, macro mean and confusion from
/// ranked id lists.
EvalReport build_report(const std::vector<std::vector<int>>& topk_ids,
                        const std::vector<int>& truths, const std::vector<int>& classes,
                        const std::vector<std::size_t>& ks);

void write_report(const EvalReport& report, const std::filesystem::path& path);

}  // namespace zsl
