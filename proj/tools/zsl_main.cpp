// zsl: synthesize datasets, train the three zero-shot pipelines, evaluate,
// and grid-tune. Exit codes: 0 success, 2 usage/config, 3 I/O, 4 numerical.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "zsl/amssfe.hpp"
#include "zsl/config.hpp"
#include "zsl/dataset.hpp"
#include "zsl/error.hpp"
#include "zsl/eval.hpp"
#include "zsl/graphzsl.hpp"
#include "zsl/io.hpp"
#include "zsl/nn.hpp"
#include "zsl/rectify.hpp"

namespace fs = std::filesystem;
using namespace zsl;

namespace {

void apply_thread_cap() {
#ifdef _OPENMP
    if (const char* env = std::getenv("ZSL_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) omp_set_num_threads(std::min(cap, omp_get_max_threads()));
    }
#endif
}

// Removes everything this run created when a command fails partway.
class OutputGuard {
public:
    explicit OutputGuard(const fs::path& dir) : dir_(dir), existed_(fs::exists(dir)) {
        fs::create_directories(dir);
    }
    void track(const fs::path& p) { created_.push_back(p); }
    void commit() { committed_ = true; }
    ~OutputGuard() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& p : created_) fs::remove(p, ec);
        if (!existed_) fs::remove(dir_, ec);
    }

private:
    fs::path dir_;
    bool existed_;
    bool committed_ = false;
    std::vector<fs::path> created_;
};

void write_history_csv(const std::vector<double>& history, const fs::path& path) {
    Matrix h(std::max<std::size_t>(history.size(), 1), 2);
    for (std::size_t i = 0; i < history.size(); ++i) {
        h(i, 0) = static_cast<double>(i);
        h(i, 1) = history[i];
    }
    save_matrix_csv(h, path, "epoch,objective");
}

std::vector<int> positions_for(const Dataset& ds) {
    std::vector<int> pos(ds.y_train.size());
    for (std::size_t i = 0; i < ds.y_train.size(); ++i)
        pos[i] = static_cast<int>(ds.seen_pos(ds.y_train[i]));
    return pos;
}

// ------------------------------------------------------------- synthesis ---

void synth_graph_bundle(const RunConfig& cfg, const Dataset& ds, const fs::path& out,
                        OutputGuard& guard) {
    const std::size_t p = cfg.graph_parts, dp = cfg.graph_part_dim;
    std::mt19937_64 rng(cfg.seed ^ 0x5bd1e995u);
    const std::size_t classes = ds.num_seen() + ds.num_unseen();

    // per-class per-part feature generators
    std::vector<Matrix> base;
    base.reserve(classes);
    for (std::size_t c = 0; c < classes; ++c) base.push_back(gaussian_matrix(p, dp, rng));

    auto emit = [&](const std::vector<int>& labels, const std::string& stem) {
        std::vector<Matrix> graphs;
        graphs.reserve(labels.size());
        for (int y : labels) {
            Matrix f = base[static_cast<std::size_t>(y)];
            if (cfg.data.noise_sigma > 0) {
                const Matrix noise = gaussian_matrix(p, dp, rng);
                axpy_in_place(f, cfg.data.noise_sigma, noise);
            }
            graphs.push_back(std::move(f));
        }
        save_part_features(graphs, out, stem);
        guard.track(out / (stem + ".zslm"));
        guard.track(out / (stem + "_index.csv"));
    };
    emit(ds.y_train, "F_train");
    emit(ds.y_test, "F_test");

    // keypoints on a grid inside a 224x224 frame, 56x56 crops
    Matrix kp(p, 3);
    for (std::size_t i = 0; i < p; ++i) {
        kp(i, 0) = static_cast<double>(i);
        kp(i, 1) = 28.0 + static_cast<double>(i % 4) * 56.0;
        kp(i, 2) = 28.0 + static_cast<double>((i / 4) % 4) * 56.0;
    }
    save_matrix_csv(kp, out / "keypoints.csv");
    guard.track(out / "keypoints.csv");
    save_manifest({{"image_w", "224"},
                   {"image_h", "224"},
                   {"crop_w", "56"},
                   {"crop_h", "56"},
                   {"parts", std::to_string(p)},
                   {"part_dim", std::to_string(dp)}},
                  out / "graph.manifest");
    guard.track(out / "graph.manifest");
}

int cmd_synth(const fs::path& spec_path, const fs::path& out) {
    const RunConfig cfg = load_config(spec_path);
    const Dataset ds = synthesize_dataset(cfg.data);
    OutputGuard guard(out);
    for (const char* name : {"X_train.zslm", "y_train.csv", "P_seen.zslm", "P_unseen.zslm",
                             "X_test.zslm", "y_test.csv"})
        guard.track(out / name);
    save_dataset(ds, out);
    if (cfg.synth_graphs) synth_graph_bundle(cfg, ds, out, guard);
    guard.commit();
    std::cout << "seen=" << ds.num_seen() << " unseen=" << ds.num_unseen()
              << " d=" << ds.visual_dim() << " n=" << ds.semantic_dim()
              << " train_rows=" << ds.x_train.rows() << " test_rows=" << ds.x_test.rows()
              << "\n";
    return 0;
}

// -------------------------------------------------------------- training ---

Dataset load_dataset_cfg(const fs::path& dir, const RunConfig& cfg) {
    Dataset ds = load_dataset(dir);
    if (cfg.normalize_features) {
        l2_normalize_rows(ds.x_train);
        l2_normalize_rows(ds.x_test);
    }
    return ds;
}

void train_rectify_cmd(const Dataset& ds, const RunConfig& cfg, const fs::path& out,
                       OutputGuard& guard) {
    const RectifyModel model = train_rectify(ds, cfg.rectify);
    for (const char* name : {"W.zslm", "P_seen_adj.zslm", "P_unseen_adj.zslm", "manifest.txt"})
        guard.track(out / name);
    save_rectify(model, cfg.rectify, out);
    guard.track(out / "history.csv");
    write_history_csv(model.history, out / "history.csv");
}

void train_amssfe_cmd(const Dataset& ds, const RunConfig& cfg, const fs::path& out,
                      OutputGuard& guard) {
    const ExpansionModel model = train_expansion(ds, cfg.amssfe);
    Matrix p_combined_seen = model.p_seen_combined;
    const LinearMapping mapping =
        train_mapping(ds.x_train, positions_for(ds), p_combined_seen, cfg.mapping);
    // track every bundle file prefix; save_expansion writes a fixed set
    save_expansion(model, mapping, out);
    for (const auto& entry : fs::directory_iterator(out)) guard.track(entry.path());
    write_history_csv(model.history, out / "history.csv");
    guard.track(out / "history.csv");
}

struct GraphData {
    PartLayout layout;
    std::vector<Matrix> train_graphs;
    std::vector<Matrix> test_graphs;
    std::size_t parts = 0;
};

GraphData load_graph_data(const fs::path& dir) {
    GraphData gd;
    gd.layout = load_part_layout(dir);
    gd.parts = gd.layout.keypoints.size();
    gd.train_graphs = load_part_features(dir, "F_train", gd.parts);
    gd.test_graphs = load_part_features(dir, "F_test", gd.parts);
    return gd;
}

void train_graphzsl_cmd(const Dataset& ds, const RunConfig& cfg, const fs::path& data_dir,
                        const fs::path& out, OutputGuard& guard) {
    const GraphData gd = load_graph_data(data_dir);
    if (gd.train_graphs.size() != ds.y_train.size())
        throw ConfigError("graph bundle: F_train example count != y_train length");
    crop_parts(gd.layout);  // validates the keypoint geometry

    const std::vector<int> y_pos = positions_for(ds);

    // whole-example features for the relation classifier: part average
    Matrix whole(gd.train_graphs.size(), gd.train_graphs[0].cols());
    for (std::size_t e = 0; e < gd.train_graphs.size(); ++e) {
        const Matrix& f = gd.train_graphs[e];
        for (std::size_t i = 0; i < f.rows(); ++i)
            for (std::size_t t = 0; t < f.cols(); ++t) whole(e, t) += f(i, t);
        for (std::size_t t = 0; t < whole.cols(); ++t)
            whole(e, t) /= static_cast<double>(f.rows());
    }
    const SoftmaxClassifier clf = train_softmax_classifier(
        whole, y_pos, ds.num_seen(), cfg.classifier_epochs, cfg.classifier_lr, cfg.seed + 7);
    const Matrix conf = part_pair_confidence(clf, gd.train_graphs, y_pos);
    std::vector<double> single(gd.parts);
    for (std::size_t i = 0; i < gd.parts; ++i) single[i] = conf(i, i);

    Matrix adjacency;
    double chosen_eps = cfg.graph_epsilon;
    if (cfg.graph_target_edges > 0)
        adjacency = build_adjacency_target(conf, single, cfg.graph_target_edges, &chosen_eps);
    else
        adjacency = build_adjacency(conf, single, cfg.graph_epsilon);

    const GcnModel model = gcn_train(adjacency, gd.train_graphs, y_pos, ds.p_seen,
                                     cfg.graphzsl);
    save_gcn(model, out);
    for (const auto& entry : fs::directory_iterator(out)) guard.track(entry.path());
    write_history_csv(model.history, out / "history.csv");
    save_matrix_csv(conf, out / "pair_confidence.csv");
    guard.track(out / "history.csv");
    guard.track(out / "pair_confidence.csv");
}

int cmd_train(const std::string& method, const fs::path& data_dir, const fs::path& cfg_path,
              const fs::path& out) {
    const RunConfig cfg = load_config(cfg_path);
    const Dataset ds = load_dataset_cfg(data_dir, cfg);
    OutputGuard guard(out);
    if (method == "rectify")
        train_rectify_cmd(ds, cfg, out, guard);
    else if (method == "amssfe")
        train_amssfe_cmd(ds, cfg, out, guard);
    else if (method == "graphzsl")
        train_graphzsl_cmd(ds, cfg, data_dir, out, guard);
    else
        throw ConfigError("unknown method \"" + method + "\"");
    guard.commit();
    std::cout << "trained " << method << " -> " << out.string() << "\n";
    return 0;
}

// ------------------------------------------------------------ evaluation ---

std::vector<int> map_rank_ids(const std::vector<std::vector<std::size_t>>& ranks,
                              const std::vector<int>& ids, std::size_t pick) {
    std::vector<int> out(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) out[i] = ids[ranks[i][pick]];
    return out;
}

std::vector<std::vector<int>> ranks_to_ids(const std::vector<std::vector<std::size_t>>& ranks,
                                           const std::vector<int>& ids) {
    std::vector<std::vector<int>> out(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        out[i].reserve(ranks[i].size());
        for (std::size_t r : ranks[i]) out[i].push_back(ids[r]);
    }
    return out;
}

struct GzslInputs {
    // ranked id lists for unseen-truth examples and seen-truth examples
    std::vector<std::vector<int>> unseen_ranked;
    std::vector<std::vector<int>> seen_ranked;
};

EvalReport gzsl_report(const GzslInputs& in, const Dataset& ds) {
    EvalReport report;
    report.has_gzsl = true;
    auto top1 = [](const std::vector<std::vector<int>>& ranked) {
        std::vector<int> out(ranked.size());
        for (std::size_t i = 0; i < ranked.size(); ++i) out[i] = ranked[i].front();
        return out;
    };
    const auto unseen_acc = per_class_accuracy(top1(in.unseen_ranked), ds.y_test,
                                               ds.unseen_ids);
    const auto seen_acc = per_class_accuracy(top1(in.seen_ranked), ds.y_train, ds.seen_ids);
    double u = 0.0;
    for (const auto& [c, a] : unseen_acc) u += a;
    report.u = unseen_acc.empty() ? 0.0 : u / static_cast<double>(unseen_acc.size());
    double s = 0.0;
    for (const auto& [c, a] : seen_acc) s += a;
    report.s = seen_acc.empty() ? 0.0 : s / static_cast<double>(seen_acc.size());
    report.h = harmonic_mean(report.u, report.s);
    return report;
}

void print_czsl(const std::string& prefix, const EvalReport& report) {
    for (const auto& [k, acc] : report.hit_at_k)
        std::cout << prefix << "hit@" << k << "=" << format_double(acc) << "\n";
    std::cout << prefix << "macro_accuracy=" << format_double(report.macro_mean) << "\n";
}

void print_gzsl(const std::string& prefix, const EvalReport& report) {
    std::cout << prefix << "U=" << format_double(report.u) << "\n";
    std::cout << prefix << "S=" << format_double(report.s) << "\n";
    std::cout << prefix << "H=" << format_double(report.h) << "\n";
}

std::vector<int> all_ids(const Dataset& ds) {
    std::vector<int> ids = ds.seen_ids;
    ids.insert(ids.end(), ds.unseen_ids.begin(), ds.unseen_ids.end());
    return ids;
}

int cmd_eval(const fs::path& model_dir, const fs::path& data_dir, const std::string& scope,
             const std::vector<std::size_t>& ks, const fs::path& report_path,
             const fs::path& export_path) {
    const auto manifest = load_manifest(model_dir / "manifest.txt");
    const std::string method = manifest_get(manifest, "method");
    const Dataset ds = load_dataset(data_dir);
    const std::size_t max_k = *std::max_element(ks.begin(), ks.end());

    std::vector<EvalReport> reports;
    std::vector<std::string> prefixes;

    if (method == "rectify") {
        const RectifyModel model = load_rectify(model_dir);
        if (model.w.cols() != ds.visual_dim())
            throw ShapeError("eval: model visual dimension != dataset");
        if (scope == "czsl") {
            const auto v2s = ranks_to_ids(infer_v2s(model, ds.x_test,
                                                    std::min(max_k, ds.num_unseen())),
                                          ds.unseen_ids);
            const auto s2v = ranks_to_ids(infer_s2v(model, ds.x_test,
                                                    std::min(max_k, ds.num_unseen())),
                                          ds.unseen_ids);
            reports.push_back(build_report(v2s, ds.y_test, ds.unseen_ids, ks));
            prefixes.push_back("v2s_");
            reports.push_back(build_report(s2v, ds.y_test, ds.unseen_ids, ks));
            prefixes.push_back("s2v_");
            if (!export_path.empty()) {
                const Matrix s = matmul_tb(ds.x_test, model.w);
                export_embeddings_csv(s, ds.y_test, export_path);
            }
        } else {
            Matrix stacked = vstack(model.p_seen_adj, model.p_unseen_adj);
            RectifyModel all = model;
            all.p_unseen_adj = stacked;
            GzslInputs in;
            in.unseen_ranked = ranks_to_ids(infer_v2s(all, ds.x_test, 1), all_ids(ds));
            in.seen_ranked = ranks_to_ids(infer_v2s(all, ds.x_train, 1), all_ids(ds));
            reports.push_back(gzsl_report(in, ds));
            prefixes.push_back("v2s_");
            GzslInputs in2;
            in2.unseen_ranked = ranks_to_ids(infer_s2v(all, ds.x_test, 1), all_ids(ds));
            in2.seen_ranked = ranks_to_ids(infer_s2v(all, ds.x_train, 1), all_ids(ds));
            reports.push_back(gzsl_report(in2, ds));
            prefixes.push_back("s2v_");
        }
    } else if (method == "amssfe") {
        const LoadedExpansion bundle = load_expansion(model_dir);
        if (bundle.mapping.encoder.in_width() != ds.visual_dim())
            throw ShapeError("eval: model visual dimension != dataset");
        if (scope == "czsl") {
            const auto ranked = recognize_mapping(bundle.mapping, ds.x_test,
                                                  bundle.model.p_unseen_combined,
                                                  std::min(max_k, ds.num_unseen()));
            reports.push_back(
                build_report(ranks_to_ids(ranked, ds.unseen_ids), ds.y_test, ds.unseen_ids, ks));
            prefixes.push_back("");
            if (!export_path.empty())
                export_embeddings_csv(mlp_forward(bundle.mapping.encoder, ds.x_test), ds.y_test,
                                      export_path);
        } else {
            const Matrix stacked =
                vstack(bundle.model.p_seen_combined, bundle.model.p_unseen_combined);
            GzslInputs in;
            in.unseen_ranked = ranks_to_ids(
                recognize_mapping(bundle.mapping, ds.x_test, stacked, 1), all_ids(ds));
            in.seen_ranked = ranks_to_ids(
                recognize_mapping(bundle.mapping, ds.x_train, stacked, 1), all_ids(ds));
            reports.push_back(gzsl_report(in, ds));
            prefixes.push_back("");
        }
    } else if (method == "graphzsl") {
        const GcnModel model = load_gcn(model_dir);
        const GraphData gd = load_graph_data(data_dir);
        if (scope == "czsl") {
            const auto ranked = recognize_graph(model, gd.test_graphs, ds.p_unseen,
                                                std::min(max_k, ds.num_unseen()));
            reports.push_back(
                build_report(ranks_to_ids(ranked, ds.unseen_ids), ds.y_test, ds.unseen_ids, ks));
            prefixes.push_back("");
            if (!export_path.empty())
                export_embeddings_csv(gcn_predict(model, gd.test_graphs), ds.y_test,
                                      export_path);
        } else {
            const Matrix stacked = vstack(ds.p_seen, ds.p_unseen);
            GzslInputs in;
            in.unseen_ranked =
                ranks_to_ids(recognize_graph(model, gd.test_graphs, stacked, 1), all_ids(ds));
            in.seen_ranked =
                ranks_to_ids(recognize_graph(model, gd.train_graphs, stacked, 1), all_ids(ds));
            reports.push_back(gzsl_report(in, ds));
            prefixes.push_back("");
        }
    } else {
        throw ConfigError("eval: unknown method \"" + method + "\" in model manifest");
    }

    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (scope == "czsl")
            print_czsl(prefixes[i], reports[i]);
        else
            print_gzsl(prefixes[i], reports[i]);
    }
    if (!report_path.empty()) {
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const fs::path part = report_path.string() +
                                  (reports.size() > 1 ? "." + std::to_string(i) : "");
            write_report(reports[i], part);
        }
    }
    return 0;
}

// ----------------------------------------------------------------- tuning ---

// Class-wise 20% holdout of seen classes, remapped to dense ids: surviving
// seen classes become 0..m'-1, held-out classes m'..m'+h-1.
Dataset make_validation_split(const Dataset& ds) {
    const std::size_t m = ds.num_seen();
    std::size_t holdout = (m + 4) / 5;
    if (holdout == 0) holdout = 1;
    if (holdout >= m) holdout = m - 1;
    // evenly spaced class positions; distinct because m >= holdout
    std::set<std::size_t> held;
    for (std::size_t i = 0; i < holdout; ++i) held.insert(i * m / holdout);

    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < m; ++c)
        if (!held.count(c)) keep.push_back(c);

    Dataset sub;
    sub.p_seen = Matrix(keep.size(), ds.semantic_dim());
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (std::size_t t = 0; t < ds.semantic_dim(); ++t)
            sub.p_seen(i, t) = ds.p_seen(keep[i], t);
    sub.p_unseen = Matrix(held.size(), ds.semantic_dim());
    std::vector<std::size_t> held_list(held.begin(), held.end());
    for (std::size_t i = 0; i < held_list.size(); ++i)
        for (std::size_t t = 0; t < ds.semantic_dim(); ++t)
            sub.p_unseen(i, t) = ds.p_seen(held_list[i], t);

    std::map<std::size_t, int> new_train_id, new_val_id;
    for (std::size_t i = 0; i < keep.size(); ++i) new_train_id[keep[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < held_list.size(); ++i)
        new_val_id[held_list[i]] = static_cast<int>(keep.size() + i);

    std::vector<std::size_t> train_rows, val_rows;
    for (std::size_t r = 0; r < ds.x_train.rows(); ++r) {
        const std::size_t pos = ds.seen_pos(ds.y_train[r]);
        if (held.count(pos))
            val_rows.push_back(r);
        else
            train_rows.push_back(r);
    }
    sub.x_train = Matrix(train_rows.size(), ds.visual_dim());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
        for (std::size_t t = 0; t < ds.visual_dim(); ++t)
            sub.x_train(i, t) = ds.x_train(train_rows[i], t);
        sub.y_train.push_back(new_train_id[ds.seen_pos(ds.y_train[train_rows[i]])]);
    }
    sub.x_test = Matrix(val_rows.size(), ds.visual_dim());
    for (std::size_t i = 0; i < val_rows.size(); ++i) {
        for (std::size_t t = 0; t < ds.visual_dim(); ++t)
            sub.x_test(i, t) = ds.x_train(val_rows[i], t);
        sub.y_test.push_back(new_val_id[ds.seen_pos(ds.y_train[val_rows[i]])]);
    }
    for (std::size_t i = 0; i < keep.size(); ++i) sub.seen_ids.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < held_list.size(); ++i)
        sub.unseen_ids.push_back(static_cast<int>(keep.size() + i));
    validate_dataset(sub);
    return sub;
}

double tune_point_metric(const std::string& method, const Dataset& sub, const RunConfig& cfg) {
    if (method == "rectify") {
        RectifyParams params = cfg.rectify;
        params.k_neighbors = std::min(params.k_neighbors, sub.num_seen());
        const RectifyModel model = train_rectify(sub, params);
        const auto ranked = infer_v2s(model, sub.x_test, 1);
        std::vector<std::vector<int>> ids = ranks_to_ids(ranked, sub.unseen_ids);
        return hit_at_k(ids, sub.y_test, 1);
    }
    if (method == "amssfe") {
        ExpansionParams params = cfg.amssfe;
        params.g = std::min(params.g, sub.num_seen());
        const ExpansionModel model = train_expansion(sub, params);
        std::vector<int> y_pos(sub.y_train.size());
        for (std::size_t i = 0; i < sub.y_train.size(); ++i)
            y_pos[i] = static_cast<int>(sub.seen_pos(sub.y_train[i]));
        const LinearMapping mapping =
            train_mapping(sub.x_train, y_pos, model.p_seen_combined, cfg.mapping);
        const auto ranked =
            recognize_mapping(mapping, sub.x_test, model.p_unseen_combined, 1);
        return hit_at_k(ranks_to_ids(ranked, sub.unseen_ids), sub.y_test, 1);
    }
    throw ConfigError("tune: method \"" + method + "\" has no tuning path");
}

int cmd_tune(const std::string& method, const fs::path& data_dir, const fs::path& grid_path,
             const std::string& preset, const fs::path& out_path) {
    GridSpec grid;
    if (!grid_path.empty()) grid = load_grid(grid_path);
    if (!preset.empty())
        for (auto& [k, v] : preset_grid(preset)) grid[k] = v;
    if (grid.empty()) throw ConfigError("tune: empty grid");

    // single-valued keys pin the base config; multi-valued keys are swept
    RunConfig base;
    base.data.seed = base.seed;
    std::vector<std::pair<std::string, std::vector<std::string>>> swept;
    for (const auto& [key, values] : grid) {
        if (values.size() == 1)
            apply_config_override(base, key, values[0]);
        else
            swept.emplace_back(key, values);
    }

    const Dataset ds = load_dataset(data_dir);
    const Dataset sub = make_validation_split(ds);

    std::size_t total = 1;
    for (const auto& [k, v] : swept) total *= v.size();

    struct Row {
        std::size_t index;
        std::string settings;
        double metric;
    };
    std::vector<Row> rows;
    for (std::size_t point = 0; point < total; ++point) {
        RunConfig cfg = base;
        std::string settings;
        std::size_t rem = point;
        for (std::size_t i = 0; i < swept.size(); ++i) {
            const auto& [key, values] = swept[i];
            const std::string& v = values[rem % values.size()];
            rem /= values.size();
            apply_config_override(cfg, key, v);
            settings += (settings.empty() ? "" : " ") + key + "=" + v;
        }
        rows.push_back({point, settings, tune_point_metric(method, sub, cfg)});
    }

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.metric != b.metric) return a.metric > b.metric;
        return a.index < b.index;
    });
    std::string table = "rank\tmetric\tsettings\n";
    for (std::size_t r = 0; r < rows.size(); ++r)
        table += std::to_string(r + 1) + "\t" + format_double(rows[r].metric) + "\t" +
                 (rows[r].settings.empty() ? "(defaults)" : rows[r].settings) + "\n";
    std::cout << table;
    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError(out_path.string() + ": cannot open for writing");
        f << table;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_cap();
    CLI::App app{"zero-shot learning toolkit"};
    app.require_subcommand(1);

    std::string spec_path, out_dir, data_dir, cfg_path, method, scope = "czsl";
    std::string model_dir, report_path, export_path, grid_path, preset, k_list = "1";

    auto* synth = app.add_subcommand("synth", "synthesize a dataset directory");
    synth->add_option("--spec", spec_path, "synthesis config")->required();
    synth->add_option("--out", out_dir, "output dataset directory")->required();

    auto* train = app.add_subcommand("train", "train a model");
    train->add_option("method", method, "rectify|amssfe|graphzsl")->required();
    train->add_option("--data", data_dir, "dataset directory")->required();
    train->add_option("--config", cfg_path, "run config")->required();
    train->add_option("--out", out_dir, "model bundle directory")->required();

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model bundle");
    eval_cmd->add_option("--model", model_dir, "model bundle directory")->required();
    eval_cmd->add_option("--data", data_dir, "dataset directory")->required();
    eval_cmd->add_option("--scope", scope, "czsl|gzsl")
        ->check(CLI::IsMember({"czsl", "gzsl"}));
    eval_cmd->add_option("--k", k_list, "comma-separated hit@k list");
    eval_cmd->add_option("--out", report_path, "report file");
    eval_cmd->add_option("--export-embeddings", export_path, "embedding CSV path");

    auto* tune = app.add_subcommand("tune", "grid-search hyperparameters");
    tune->add_option("method", method, "rectify|amssfe")->required();
    tune->add_option("--data", data_dir, "dataset directory")->required();
    tune->add_option("--grid", grid_path, "grid config file");
    tune->add_option("--preset", preset, "named preset grid (amssfe-paper)");
    tune->add_option("--out", report_path, "tuning report file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(spec_path, out_dir);
        if (train->parsed()) return cmd_train(method, data_dir, cfg_path, out_dir);
        if (eval_cmd->parsed()) {
            std::vector<std::size_t> ks;
            std::size_t start = 0;
            while (start <= k_list.size()) {
                const std::size_t comma = k_list.find(',', start);
                ks.push_back(std::stoul(k_list.substr(start, comma - start)));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            return cmd_eval(model_dir, data_dir, scope, ks, report_path, export_path);
        }
        if (tune->parsed()) return cmd_tune(method, data_dir, grid_path, preset, report_path);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
