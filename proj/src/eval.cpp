#include "zsl/eval.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "zsl/error.hpp"
#include "zsl/io.hpp"
#include "zsl/kernels.hpp"

namespace zsl {

double hit_at_k(const std::vector<std::vector<int>>& topk_ids, const std::vector<int>& truths,
                std::size_t k) {
    if (topk_ids.size() != truths.size())
        throw ShapeError("hit_at_k: prediction/truth count mismatch");
    if (topk_ids.empty()) throw ConfigError("hit_at_k: no predictions");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < topk_ids.size(); ++i) {
        if (topk_ids[i].size() < k)
            throw ConfigError("hit_at_k: prediction list " + std::to_string(i) +
                              " shorter than k");
        for (std::size_t j = 0; j < k; ++j)
            if (topk_ids[i][j] == truths[i]) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / static_cast<double>(topk_ids.size());
}

double harmonic_mean(double u, double s) {
    if (u + s == 0.0) return 0.0;
    return 2.0 * u * s / (u + s);
}

std::map<int, double> per_class_accuracy(const std::vector<int>& preds,
                                         const std::vector<int>& truths,
                                         const std::vector<int>& classes) {
    if (preds.size() != truths.size())
        throw ShapeError("per_class_accuracy: prediction/truth count mismatch");
    std::map<int, std::pair<std::size_t, std::size_t>> tally;  // class -> (correct, total)
    for (int c : classes) tally[c];
    for (std::size_t i = 0; i < truths.size(); ++i) {
        auto it = tally.find(truths[i]);
        if (it == tally.end())
            throw ConfigError("per_class_accuracy: truth class " + std::to_string(truths[i]) +
                              " not in class set");
        ++it->second.second;
        if (preds[i] == truths[i]) ++it->second.first;
    }
    std::map<int, double> out;
    for (const auto& [c, counts] : tally)
        if (counts.second > 0)
            out[c] = static_cast<double>(counts.first) / static_cast<double>(counts.second);
    return out;
}

Matrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& truths,
                        const std::vector<int>& classes) {
    if (preds.size() != truths.size())
        throw ShapeError("confusion_matrix: prediction/truth count mismatch");
    std::map<int, std::size_t> index;
    for (std::size_t i = 0; i < classes.size(); ++i) index[classes[i]] = i;
    Matrix counts(classes.size(), classes.size());
    std::vector<double> row_totals(classes.size(), 0.0);
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const auto t = index.find(truths[i]);
        const auto p = index.find(preds[i]);
        if (t == index.end() || p == index.end())
            throw ConfigError("confusion_matrix: label outside the class set");
        counts(t->second, p->second) += 1.0;
        row_totals[t->second] += 1.0;
    }
    for (std::size_t i = 0; i < classes.size(); ++i)
        if (row_totals[i] > 0.0)
            for (std::size_t j = 0; j < classes.size(); ++j) counts(i, j) /= row_totals[i];
    return counts;
}

std::vector<std::vector<std::size_t>> nearest_prototypes(const Matrix& s, const Matrix& p,
                                                         std::size_t k) {
    return rank_by_cosine(s, p, k);
}

void export_embeddings_csv(const Matrix& s, const std::vector<int>& labels,
                           const std::filesystem::path& path) {
    if (labels.size() != s.rows())
        throw ShapeError("export_embeddings_csv: label count != row count");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open file for writing");
    out << "label";
    for (std::size_t j = 0; j < s.cols(); ++j) out << ",c" << j;
    out << "\n";
    for (std::size_t i = 0; i < s.rows(); ++i) {
        out << labels[i];
        for (std::size_t j = 0; j < s.cols(); ++j) out << "," << format_double(s(i, j));
        out << "\n";
    }
    if (!out) throw IoError(path.string() + ": write failed");
}

EvalReport build_report(const std::vector<std::vector<int>>& topk_ids,
                        const std::vector<int>& truths, const std::vector<int>& classes,
                        const std::vector<std::size_t>& ks) {
    EvalReport report;
    report.classes = classes;
    for (std::size_t k : ks) report.hit_at_k[k] = hit_at_k(topk_ids, truths, k);
    std::vector<int> top1(topk_ids.size());
    for (std::size_t i = 0; i < topk_ids.size(); ++i) top1[i] = topk_ids[i].front();
    report.per_class = per_class_accuracy(top1, truths, classes);
    double sum = 0.0;
    for (const auto& [c, acc] : report.per_class) sum += acc;
    report.macro_mean =
        report.per_class.empty() ? 0.0 : sum / static_cast<double>(report.per_class.size());
    report.confusion = confusion_matrix(top1, truths, classes);
    return report;
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open file for writing");
    for (const auto& [k, acc] : report.hit_at_k)
        out << "hit@" << k << "=" << format_double(acc) << "\n";
    out << "macro_accuracy=" << format_double(report.macro_mean) << "\n";
    for (const auto& [c, acc] : report.per_class)
        out << "class_" << c << "_accuracy=" << format_double(acc) << "\n";
    if (report.has_gzsl) {
        out << "gzsl_unseen=" << format_double(report.u) << "\n";
        out << "gzsl_seen=" << format_double(report.s) << "\n";
        out << "gzsl_harmonic=" << format_double(report.h) << "\n";
    }
    if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace zsl
