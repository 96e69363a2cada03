#include "zsl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "zsl/error.hpp"
#include "zsl/io.hpp"
#include "zsl/kernels.hpp"

namespace zsl {

namespace {

std::size_t pos_in(const std::vector<int>& ids, int id, const char* what) {
    const auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id)
        throw ConfigError(std::string(what) + ": unknown class id " + std::to_string(id));
    return static_cast<std::size_t>(it - ids.begin());
}

std::vector<int> sorted_unique(const std::vector<int>& labels) {
    std::vector<int> ids(labels);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

double row_cosine(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t t = 0; t < a.cols(); ++t) {
        dot += a(i, t) * b(j, t);
        na += a(i, t) * a(i, t);
        nb += b(j, t) * b(j, t);
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

std::size_t Dataset::seen_pos(int id) const { return pos_in(seen_ids, id, "seen_pos"); }
std::size_t Dataset::unseen_pos(int id) const { return pos_in(unseen_ids, id, "unseen_pos"); }

void validate_synthetic_spec(const SyntheticSpec& spec) {
    if (spec.m_seen < 2) throw ConfigError("synthetic spec: m_seen must be >= 2");
    if (spec.v_unseen < 1) throw ConfigError("synthetic spec: v_unseen must be >= 1");
    if (spec.n < 2) throw ConfigError("synthetic spec: n must be >= 2");
    if (spec.d < spec.n) throw ConfigError("synthetic spec: d must be >= n");
    if (spec.examples_per_class < 1)
        throw ConfigError("synthetic spec: examples_per_class must be >= 1");
    if (spec.noise_sigma < 0) throw ConfigError("synthetic spec: noise_sigma must be >= 0");
    if (spec.cosine_reject <= 0 || spec.cosine_reject > 1)
        throw ConfigError("synthetic spec: cosine_reject must be in (0, 1]");
}

Dataset synthesize_dataset(const SyntheticSpec& spec) {
    validate_synthetic_spec(spec);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const std::size_t classes = spec.m_seen + spec.v_unseen;
    Matrix protos(classes, spec.n);
    constexpr std::size_t kMaxAttemptsPerClass = 1000;
    for (std::size_t c = 0; c < classes; ++c) {
        bool placed = false;
        for (std::size_t attempt = 0; attempt < kMaxAttemptsPerClass && !placed; ++attempt) {
            double norm2 = 0.0;
            for (std::size_t t = 0; t < spec.n; ++t) {
                protos(c, t) = gauss(rng);
                norm2 += protos(c, t) * protos(c, t);
            }
            const double inv = 1.0 / std::sqrt(norm2);
            for (std::size_t t = 0; t < spec.n; ++t) protos(c, t) *= inv;
            placed = true;
            for (std::size_t prev = 0; prev < c; ++prev) {
                if (row_cosine(protos, c, protos, prev) >= spec.cosine_reject) {
                    placed = false;
                    break;
                }
            }
        }
        if (!placed)
            throw NumericalError(
                "synthesize_dataset: prototype rejection sampling failed for class " +
                std::to_string(c) + "; semantic dim too small for requested class count");
    }

    // fixed full-rank semantic-to-visual map
    Matrix g(spec.d, spec.n);
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = gauss(rng);

    Dataset ds;
    ds.p_seen = Matrix(spec.m_seen, spec.n);
    ds.p_unseen = Matrix(spec.v_unseen, spec.n);
    for (std::size_t c = 0; c < spec.m_seen; ++c)
        for (std::size_t t = 0; t < spec.n; ++t) ds.p_seen(c, t) = protos(c, t);
    for (std::size_t c = 0; c < spec.v_unseen; ++c)
        for (std::size_t t = 0; t < spec.n; ++t) ds.p_unseen(c, t) = protos(spec.m_seen + c, t);
    for (std::size_t c = 0; c < spec.m_seen; ++c) ds.seen_ids.push_back(static_cast<int>(c));
    for (std::size_t c = 0; c < spec.v_unseen; ++c)
        ds.unseen_ids.push_back(static_cast<int>(spec.m_seen + c));

    auto emit = [&](const Matrix& p, std::size_t class_count, int id_offset, Matrix& x,
                    std::vector<int>& y) {
        x = Matrix(class_count * spec.examples_per_class, spec.d);
        y.clear();
        std::size_t r = 0;
        for (std::size_t c = 0; c < class_count; ++c) {
            // template = G * p_c, computed once per class
            std::vector<double> base(spec.d, 0.0);
            for (std::size_t i = 0; i < spec.d; ++i)
                for (std::size_t t = 0; t < spec.n; ++t) base[i] += g(i, t) * p(c, t);
            for (std::size_t e = 0; e < spec.examples_per_class; ++e, ++r) {
                for (std::size_t i = 0; i < spec.d; ++i) {
                    double v = base[i];
                    if (spec.noise_sigma > 0) v += spec.noise_sigma * gauss(rng);
                    x(r, i) = v;
                }
                y.push_back(id_offset + static_cast<int>(c));
            }
        }
    };
    emit(ds.p_seen, spec.m_seen, 0, ds.x_train, ds.y_train);
    emit(ds.p_unseen, spec.v_unseen, static_cast<int>(spec.m_seen), ds.x_test, ds.y_test);

    validate_dataset(ds);
    return ds;
}

void validate_dataset(const Dataset& ds) {
    if (ds.x_train.empty() || ds.p_seen.empty() || ds.p_unseen.empty() || ds.x_test.empty())
        throw ConfigError("dataset: missing component");
    if (ds.p_seen.cols() != ds.p_unseen.cols())
        throw ConfigError("dataset: P_seen and P_unseen disagree on semantic dimension (" +
                          std::to_string(ds.p_seen.cols()) + " vs " +
                          std::to_string(ds.p_unseen.cols()) + ")");
    if (ds.x_train.cols() != ds.x_test.cols())
        throw ConfigError("dataset: X_train and X_test disagree on visual dimension");
    if (ds.y_train.size() != ds.x_train.rows())
        throw ConfigError("dataset: y_train length != X_train rows");
    if (ds.y_test.size() != ds.x_test.rows())
        throw ConfigError("dataset: y_test length != X_test rows");
    if (ds.seen_ids.size() != ds.p_seen.rows())
        throw ConfigError("dataset: seen class count " + std::to_string(ds.seen_ids.size()) +
                          " != P_seen rows " + std::to_string(ds.p_seen.rows()));
    if (ds.unseen_ids.size() != ds.p_unseen.rows())
        throw ConfigError("dataset: unseen class count " + std::to_string(ds.unseen_ids.size()) +
                          " != P_unseen rows " + std::to_string(ds.p_unseen.rows()));
    if (!std::is_sorted(ds.seen_ids.begin(), ds.seen_ids.end()) ||
        !std::is_sorted(ds.unseen_ids.begin(), ds.unseen_ids.end()))
        throw ConfigError("dataset: class id lists must be ascending");

    std::set<int> seen(ds.seen_ids.begin(), ds.seen_ids.end());
    for (int id : ds.unseen_ids)
        if (seen.count(id))
            throw ConfigError("dataset: split overlap, class " + std::to_string(id) +
                              " appears in both seen and unseen sets");

    std::set<int> all(seen);
    all.insert(ds.unseen_ids.begin(), ds.unseen_ids.end());
    const int total = static_cast<int>(ds.seen_ids.size() + ds.unseen_ids.size());
    if (*all.begin() != 0 || *all.rbegin() != total - 1)
        throw ConfigError("dataset: class ids must be dense 0-based integers");

    for (int y : ds.y_train)
        if (!seen.count(y))
            throw ConfigError("dataset: train label " + std::to_string(y) +
                              " references an unknown seen class");
    std::set<int> unseen(ds.unseen_ids.begin(), ds.unseen_ids.end());
    for (int y : ds.y_test)
        if (!unseen.count(y))
            throw ConfigError("dataset: test label " + std::to_string(y) +
                              " references an unknown unseen class");

    if (!ds.x_train.all_finite() || !ds.x_test.all_finite() || !ds.p_seen.all_finite() ||
        !ds.p_unseen.all_finite())
        throw ConfigError("dataset: non-finite values");
    auto check_nonzero_rows = [](const Matrix& p, const char* name) {
        for (std::size_t i = 0; i < p.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < p.cols(); ++j) s += std::fabs(p(i, j));
            if (s == 0.0)
                throw ConfigError(std::string("dataset: zero prototype row ") +
                                  std::to_string(i) + " in " + name);
        }
    };
    check_nonzero_rows(ds.p_seen, "P_seen");
    check_nonzero_rows(ds.p_unseen, "P_unseen");
}

Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset ds;
    ds.x_train = load_matrix_binary(dir / "X_train.zslm");
    ds.y_train = load_labels_csv(dir / "y_train.csv");
    ds.p_seen = load_matrix_binary(dir / "P_seen.zslm");
    ds.p_unseen = load_matrix_binary(dir / "P_unseen.zslm");
    ds.x_test = load_matrix_binary(dir / "X_test.zslm");
    ds.y_test = load_labels_csv(dir / "y_test.csv");
    ds.seen_ids = sorted_unique(ds.y_train);
    ds.unseen_ids = sorted_unique(ds.y_test);
    validate_dataset(ds);
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_matrix_binary(ds.x_train, dir / "X_train.zslm");
    save_labels_csv(ds.y_train, dir / "y_train.csv");
    save_matrix_binary(ds.p_seen, dir / "P_seen.zslm");
    save_matrix_binary(ds.p_unseen, dir / "P_unseen.zslm");
    save_matrix_binary(ds.x_test, dir / "X_test.zslm");
    save_labels_csv(ds.y_test, dir / "y_test.csv");
}

void l2_normalize_rows(Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double norm2 = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) norm2 += m(i, j) * m(i, j);
        if (norm2 == 0.0)
            throw NumericalError("l2_normalize_rows: zero-norm row " + std::to_string(i));
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) *= inv;
    }
}

}  // namespace zsl
