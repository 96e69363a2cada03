#include "zsl/graphzsl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>

#include "zsl/error.hpp"
#include "zsl/io.hpp"
#include "zsl/kernels.hpp"

namespace zsl {

namespace {

void check_adjacency(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("adjacency must be square");
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (a(i, i) != 0.0) throw ConfigError("adjacency must have a zero diagonal");
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (a(i, j) != 0.0 && a(i, j) != 1.0)
                throw ConfigError("adjacency entries must be 0 or 1");
            if (a(i, j) != a(j, i)) throw ConfigError("adjacency must be symmetric");
        }
    }
}

// Stack per-example node features into one (N*p) x d matrix.
Matrix stack_graphs(const std::vector<Matrix>& graphs) {
    if (graphs.empty()) throw ConfigError("no example graphs");
    const std::size_t p = graphs[0].rows(), d = graphs[0].cols();
    Matrix stacked(graphs.size() * p, d);
    for (std::size_t g = 0; g < graphs.size(); ++g) {
        if (graphs[g].rows() != p || graphs[g].cols() != d)
            throw ShapeError("example graphs must share node count and feature width");
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t t = 0; t < d; ++t) stacked(g * p + i, t) = graphs[g](i, t);
    }
    return stacked;
}

// Block-diagonal application of the shared propagation operator: every
// p-row slice is one graph. Writes are disjoint per slice, so the parallel
// loop is bitwise deterministic.
Matrix apply_operator_blocks(const Matrix& op, const Matrix& stacked) {
    const std::size_t p = op.rows();
    if (stacked.rows() % p != 0)
        throw ShapeError("stacked feature rows are not a multiple of the node count");
    const std::size_t groups = stacked.rows() / p;
    Matrix out(stacked.rows(), stacked.cols());
    const auto ng = static_cast<std::int64_t>(groups);
#pragma omp parallel for if (groups * p * p * stacked.cols() > (1u << 15)) schedule(static)
    for (std::int64_t g = 0; g < ng; ++g) {
        const std::size_t base = static_cast<std::size_t>(g) * p;
        for (std::size_t i = 0; i < p; ++i) {
            double* oi = out.row(base + i);
            for (std::size_t k = 0; k < p; ++k) {
                const double w = op(i, k);
                if (w == 0.0) continue;
                const double* sk = stacked.row(base + k);
                for (std::size_t t = 0; t < stacked.cols(); ++t) oi[t] += w * sk[t];
            }
        }
    }
    return out;
}

struct GcnForward {
    std::vector<Matrix> propagated;  // T_k = op * H_{k-1}, per layer
    std::vector<Matrix> pre;         // Z_k = T_k theta_k
    std::vector<Matrix> post;        // H_k = relu(Z_k)
    Matrix readout;                  // graphs x sum(c_i)
};

GcnForward gcn_forward_stacked(const Matrix& op, const Matrix& stacked,
                               const std::vector<Matrix>& thetas, std::size_t p) {
    GcnForward f;
    const std::size_t groups = stacked.rows() / p;
    const Matrix* h = &stacked;
    std::size_t total_width = 0;
    for (const Matrix& theta : thetas) total_width += theta.cols();
    f.readout = Matrix(groups, total_width);
    f.propagated.reserve(thetas.size());
    f.pre.reserve(thetas.size());
    f.post.reserve(thetas.size());

    std::size_t offset = 0;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        Matrix t = apply_operator_blocks(op, *h);
        Matrix z = matmul(t, thetas[k]);
        Matrix a = z;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a.data()[i] < 0.0) a.data()[i] = 0.0;
        f.propagated.push_back(std::move(t));
        f.pre.push_back(std::move(z));
        f.post.push_back(std::move(a));
        h = &f.post.back();

        // column means per graph slice
        const Matrix& hk = f.post.back();
        const double inv_p = 1.0 / static_cast<double>(p);
        for (std::size_t g = 0; g < groups; ++g)
            for (std::size_t j = 0; j < hk.cols(); ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < p; ++i) s += hk(g * p + i, j);
                f.readout(g, offset + j) = s * inv_p;
            }
        offset += hk.cols();
    }
    return f;
}

}  // namespace

std::vector<CropBox> crop_parts(const PartLayout& layout) {
    if (layout.keypoints.empty()) throw ConfigError("crop_parts: no keypoints");
    if (layout.crop_w > layout.image_w || layout.crop_h > layout.image_h)
        throw ConfigError("crop_parts: crop size exceeds image size");
    std::vector<CropBox> boxes;
    boxes.reserve(layout.keypoints.size());
    for (const auto& [xk, yk] : layout.keypoints) {
        if (xk < 0 || xk >= layout.image_w || yk < 0 || yk >= layout.image_h)
            throw ConfigError("crop_parts: keypoint outside the image");
        CropBox b;
        b.w = layout.crop_w;
        b.h = layout.crop_h;
        b.x = std::clamp(xk - layout.crop_w / 2.0, 0.0, layout.image_w - layout.crop_w);
        b.y = std::clamp(yk - layout.crop_h / 2.0, 0.0, layout.image_h - layout.crop_h);
        boxes.push_back(b);
    }
    return boxes;
}

Matrix SoftmaxClassifier::probabilities(const Matrix& x) const {
    if (!trained) throw ConfigError("SoftmaxClassifier: classifier not trained");
    Matrix logits = matmul(x, w);
    for (std::size_t i = 0; i < logits.rows(); ++i)
        for (std::size_t j = 0; j < logits.cols(); ++j) logits(i, j) += b(0, j);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        double mx = logits(i, 0);
        for (std::size_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, logits(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            logits(i, j) = std::exp(logits(i, j) - mx);
            sum += logits(i, j);
        }
        for (std::size_t j = 0; j < logits.cols(); ++j) logits(i, j) /= sum;
    }
    return logits;
}

SoftmaxClassifier train_softmax_classifier(const Matrix& x, const std::vector<int>& y_pos,
                                           std::size_t classes, std::size_t epochs, double lr,
                                           std::uint64_t seed) {
    if (y_pos.size() != x.rows())
        throw ShapeError("train_softmax_classifier: label count != row count");
    SoftmaxClassifier clf;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-0.01, 0.01);
    clf.w = Matrix(x.cols(), classes);
    for (std::size_t t = 0; t < clf.w.size(); ++t) clf.w.data()[t] = dist(rng);
    clf.b = Matrix(1, classes);
    clf.trained = true;

    std::vector<Matrix*> params{&clf.w, &clf.b};
    AdamState adam = AdamState::init(params, lr);
    const double inv_batch = 1.0 / static_cast<double>(x.rows());
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Matrix probs = clf.probabilities(x);
        // d(cross-entropy)/dlogits = probs - onehot
        for (std::size_t i = 0; i < probs.rows(); ++i)
            probs(i, static_cast<std::size_t>(y_pos[i])) -= 1.0;
        for (std::size_t t = 0; t < probs.size(); ++t) probs.data()[t] *= inv_batch;
        Matrix gw = matmul_ta(x, probs);
        Matrix gb(1, classes);
        for (std::size_t i = 0; i < probs.rows(); ++i)
            for (std::size_t j = 0; j < classes; ++j) gb(0, j) += probs(i, j);
        adam_step(adam, params, {&gw, &gb});
    }
    return clf;
}

Matrix part_pair_confidence(const SoftmaxClassifier& clf, const std::vector<Matrix>& parts,
                            const std::vector<int>& y_pos) {
    if (!clf.trained) throw ConfigError("part_pair_confidence: classifier not trained");
    if (parts.size() != y_pos.size())
        throw ShapeError("part_pair_confidence: label count != example count");
    const std::size_t p = parts[0].rows();
    const std::size_t n_ex = parts.size();
    Matrix c(p, p);
    Matrix blend(n_ex, parts[0].cols());
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            for (std::size_t e = 0; e < n_ex; ++e) {
                const Matrix& f = parts[e];
                for (std::size_t t = 0; t < f.cols(); ++t)
                    blend(e, t) = i == j ? f(i, t) : 0.5 * (f(i, t) + f(j, t));
            }
            const Matrix probs = clf.probabilities(blend);
            double mean = 0.0;
            for (std::size_t e = 0; e < n_ex; ++e)
                mean += probs(e, static_cast<std::size_t>(y_pos[e]));
            mean /= static_cast<double>(n_ex);
            c(i, j) = mean;
            c(j, i) = mean;
        }
    }
    return c;
}

Matrix build_adjacency(const Matrix& c, const std::vector<double>& single, double epsilon) {
    if (c.rows() != c.cols()) throw ShapeError("build_adjacency: C must be square");
    if (single.size() != c.rows())
        throw ShapeError("build_adjacency: single-score length mismatch");
    const std::size_t p = c.rows();
    Matrix a(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j)
            if (c(i, j) > single[i] + epsilon && c(i, j) > single[j] + epsilon) {
                a(i, j) = 1.0;
                a(j, i) = 1.0;
            }
    return a;
}

Matrix build_adjacency_target(const Matrix& c, const std::vector<double>& single,
                              std::size_t target_edges, double* chosen_eps) {
    if (c.rows() != c.cols()) throw ShapeError("build_adjacency_target: C must be square");
    const std::size_t p = c.rows();
    if (target_edges > p * (p - 1) / 2)
        throw ConfigError("build_adjacency_target: target_edges exceeds the pair count");

    // edge (i,j) exists iff eps < margin_ij
    std::vector<double> margins;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j)
            margins.push_back(std::min(c(i, j) - single[i], c(i, j) - single[j]));
    std::sort(margins.begin(), margins.end(), std::greater<double>());

    // candidate counts are the sizes of {margin > v} over distinct values v,
    // plus all edges; pick the largest count <= target
    double eps = margins.empty() ? 0.0 : margins.back() - 1.0;
    std::size_t count = margins.size();
    if (count > target_edges) {
        count = 0;
        eps = margins.empty() ? 0.0 : margins.front();
        for (std::size_t t = 0; t < margins.size(); ++t) {
            // choosing eps = margins[t] keeps exactly the strictly larger margins
            const std::size_t kept =
                static_cast<std::size_t>(std::lower_bound(margins.begin(), margins.end(),
                                                          margins[t],
                                                          std::greater<double>()) -
                                         margins.begin());
            if (kept <= target_edges && kept > count) {
                count = kept;
                eps = margins[t];
            }
        }
    }
    if (chosen_eps) *chosen_eps = eps;
    return build_adjacency(c, single, eps);
}

Matrix normalized_operator(const Matrix& a) {
    check_adjacency(a);
    const std::size_t p = a.rows();
    Matrix op(p, p);
    std::vector<double> inv_sqrt_deg(p);
    for (std::size_t i = 0; i < p; ++i) {
        double deg = 1.0;  // self-loop
        for (std::size_t j = 0; j < p; ++j) deg += a(i, j);
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            const double atilde = a(i, j) + (i == j ? 1.0 : 0.0);
            op(i, j) = inv_sqrt_deg[i] * atilde * inv_sqrt_deg[j];
        }
    return op;
}

Matrix gcn_layer(const Matrix& a, const Matrix& h, const Matrix& theta) {
    if (h.rows() != a.rows()) throw ShapeError("gcn_layer: node count mismatch");
    const Matrix op = normalized_operator(a);
    Matrix out = matmul(matmul(op, h), theta);
    for (std::size_t t = 0; t < out.size(); ++t)
        if (out.data()[t] < 0.0) out.data()[t] = 0.0;
    return out;
}

Matrix gcn_readout(const Matrix& a, const Matrix& f, const std::vector<Matrix>& thetas) {
    if (thetas.empty()) throw ConfigError("gcn_readout: need at least one layer");
    const Matrix op = normalized_operator(a);
    const GcnForward fwd = gcn_forward_stacked(op, f, thetas, f.rows());
    return fwd.readout;  // 1 x sum(c_i)
}

GcnStep gcn_loss_grads(const GcnModel& model, const std::vector<Matrix>& graphs,
                       const std::vector<int>& y_pos, const Matrix& prototypes) {
    if (graphs.size() != y_pos.size())
        throw ShapeError("gcn_loss_grads: label count mismatch");
    for (int y : y_pos)
        if (y < 0 || static_cast<std::size_t>(y) >= prototypes.rows())
            throw ConfigError("gcn_loss_grads: label position out of range");

    const Matrix stacked = stack_graphs(graphs);
    const std::size_t p = graphs[0].rows();
    const std::size_t groups = graphs.size();
    const std::size_t n_sem = prototypes.cols();
    const Matrix op = normalized_operator(model.a);

    GcnForward fwd = gcn_forward_stacked(op, stacked, model.thetas, p);
    MlpCache head_cache;
    const Matrix preds = mlp_forward(model.head, fwd.readout, &head_cache);

    Matrix targets(groups, n_sem);
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t t = 0; t < n_sem; ++t)
            targets(g, t) = prototypes(static_cast<std::size_t>(y_pos[g]), t);

    const double inv_elems = 1.0 / static_cast<double>(groups * n_sem);
    const double inv_p = 1.0 / static_cast<double>(p);

    GcnStep step;
    Matrix dpred(preds.rows(), preds.cols());
    for (std::size_t t = 0; t < preds.size(); ++t) {
        const double diff = preds.data()[t] - targets.data()[t];
        step.loss += std::fabs(diff);
        dpred.data()[t] = (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) * inv_elems;
    }
    step.loss *= inv_elems;
    if (!std::isfinite(step.loss)) throw NumericalError("gcn_loss_grads: divergent loss");

    step.head = mlp_backward(model.head, head_cache, dpred);
    const Matrix& dv = step.head.input;  // groups x total_width

    std::size_t total_width = 0;
    for (const Matrix& theta : model.thetas) total_width += theta.cols();

    step.dtheta.resize(model.thetas.size());
    Matrix dh;  // gradient wrt H_k, built top-down
    std::size_t offset = total_width;
    for (std::size_t k = model.thetas.size(); k-- > 0;) {
        const std::size_t width = model.thetas[k].cols();
        offset -= width;
        // readout contribution: column means per graph slice
        Matrix dh_k(stacked.rows(), width);
        for (std::size_t g = 0; g < groups; ++g)
            for (std::size_t j = 0; j < width; ++j) {
                const double v = dv(g, offset + j) * inv_p;
                for (std::size_t i = 0; i < p; ++i) dh_k(g * p + i, j) = v;
            }
        if (!dh.empty()) add_in_place(dh_k, dh);
        // relu mask
        const Matrix& pre = fwd.pre[k];
        for (std::size_t t = 0; t < dh_k.size(); ++t)
            if (pre.data()[t] <= 0.0) dh_k.data()[t] = 0.0;
        step.dtheta[k] = matmul_ta(fwd.propagated[k], dh_k);
        if (k > 0) dh = apply_operator_blocks(op, matmul_tb(dh_k, model.thetas[k]));
    }
    return step;
}

GcnModel gcn_train(const Matrix& a, const std::vector<Matrix>& graphs,
                   const std::vector<int>& y_pos, const Matrix& prototypes,
                   const GcnSpec& spec) {
    if (graphs.size() != y_pos.size()) throw ShapeError("gcn_train: label count mismatch");
    if (spec.layers == 0) throw ConfigError("gcn_train: need at least one layer");
    if (spec.epochs == 0) throw ConfigError("gcn_train: epochs must be >= 1");

    GcnModel model;
    model.a = a;
    const std::size_t d_part = graphs.empty() ? 0 : graphs[0].cols();

    std::mt19937_64 rng(spec.seed);
    std::size_t in_width = d_part;
    std::size_t total_width = 0;
    for (std::size_t k = 0; k < spec.layers; ++k) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in_width + spec.hidden));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Matrix theta(in_width, spec.hidden);
        for (std::size_t t = 0; t < theta.size(); ++t) theta.data()[t] = dist(rng);
        model.thetas.push_back(std::move(theta));
        in_width = spec.hidden;
        total_width += spec.hidden;
    }
    MlpSpec head_spec;
    head_spec.widths.push_back(total_width);
    for (std::size_t h : spec.head_hidden) head_spec.widths.push_back(h);
    head_spec.widths.push_back(prototypes.cols());
    head_spec.acts.assign(head_spec.widths.size() - 1, Activation::relu);
    head_spec.acts.back() = Activation::identity;
    head_spec.seed = spec.seed + 1;
    model.head = Mlp::init(head_spec);

    std::vector<Matrix*> params;
    for (Matrix& theta : model.thetas) params.push_back(&theta);
    for (Matrix* ptr : mlp_parameters(model.head)) params.push_back(ptr);
    AdamState adam = AdamState::init(params, spec.lr);

    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        GcnStep step = gcn_loss_grads(model, graphs, y_pos, prototypes);
        model.history.push_back(step.loss);
        std::vector<const Matrix*> grads;
        for (Matrix& g : step.dtheta) grads.push_back(&g);
        for (Matrix* g : mlp_grad_list(step.head)) grads.push_back(g);
        adam_step(adam, params, grads);
    }
    return model;
}

Matrix gcn_predict(const GcnModel& model, const std::vector<Matrix>& graphs) {
    const Matrix stacked = stack_graphs(graphs);
    const Matrix op = normalized_operator(model.a);
    const GcnForward fwd = gcn_forward_stacked(op, stacked, model.thetas, graphs[0].rows());
    return mlp_forward(model.head, fwd.readout);
}

std::vector<std::vector<std::size_t>> recognize_graph(const GcnModel& model,
                                                      const std::vector<Matrix>& graphs,
                                                      const Matrix& protos, std::size_t k) {
    return rank_by_cosine(gcn_predict(model, graphs), protos, k);
}

void save_gcn(const GcnModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::pair<std::string, std::string>> manifest{
        {"method", "graphzsl"},
        {"layers", std::to_string(model.thetas.size())},
        {"epochs_run", std::to_string(model.history.size())},
        {"final_loss", model.history.empty() ? "nan" : format_double(model.history.back())},
    };
    save_matrix_binary(model.a, dir / "A.zslm");
    for (std::size_t k = 0; k < model.thetas.size(); ++k)
        save_matrix_binary(model.thetas[k], dir / ("theta" + std::to_string(k) + ".zslm"));
    save_mlp(model.head, dir, "head", manifest);
    save_manifest(manifest, dir / "manifest.txt");
}

GcnModel load_gcn(const std::filesystem::path& dir) {
    const auto manifest = load_manifest(dir / "manifest.txt");
    if (manifest_get(manifest, "method") != "graphzsl")
        throw ConfigError("load_gcn: bundle method is not graphzsl");
    GcnModel model;
    model.a = load_matrix_binary(dir / "A.zslm");
    const std::size_t layers = std::stoul(manifest_get(manifest, "layers"));
    for (std::size_t k = 0; k < layers; ++k)
        model.thetas.push_back(load_matrix_binary(dir / ("theta" + std::to_string(k) + ".zslm")));
    model.head = load_mlp(dir, "head", manifest);
    return model;
}

PartLayout load_part_layout(const std::filesystem::path& dir) {
    const auto kp_path = dir / "keypoints.csv";
    if (!std::filesystem::exists(kp_path))
        throw ConfigError("missing keypoints: " + kp_path.string());
    const Matrix kp = load_matrix_csv(kp_path, false);
    if (kp.cols() != 3)
        throw ConfigError("keypoints.csv must have part_id,x,y columns");
    const auto manifest = load_manifest(dir / "graph.manifest");
    PartLayout layout;
    layout.image_w = std::stod(manifest_get(manifest, "image_w"));
    layout.image_h = std::stod(manifest_get(manifest, "image_h"));
    layout.crop_w = std::stod(manifest_get(manifest, "crop_w"));
    layout.crop_h = std::stod(manifest_get(manifest, "crop_h"));
    layout.keypoints.resize(kp.rows());
    for (std::size_t i = 0; i < kp.rows(); ++i) {
        const auto part = static_cast<std::size_t>(kp(i, 0));
        if (part >= kp.rows()) throw ConfigError("keypoints.csv: part_id out of range");
        layout.keypoints[part] = {kp(i, 1), kp(i, 2)};
    }
    return layout;
}

std::vector<Matrix> load_part_features(const std::filesystem::path& dir,
                                       const std::string& stem, std::size_t parts) {
    const Matrix stacked = load_matrix_binary(dir / (stem + ".zslm"));
    if (stacked.rows() % parts != 0)
        throw ConfigError(stem + ": stacked rows not divisible by part count");
    const std::size_t n_ex = stacked.rows() / parts;
    // sidecar gives (example_id, part_id) per stacked row
    const Matrix index = load_matrix_csv(dir / (stem + "_index.csv"), false);
    if (index.rows() != stacked.rows() || index.cols() != 2)
        throw ConfigError(stem + "_index.csv: sidecar shape mismatch");
    for (std::size_t r = 0; r < index.rows(); ++r) {
        if (static_cast<std::size_t>(index(r, 0)) != r / parts ||
            static_cast<std::size_t>(index(r, 1)) != r % parts)
            throw ConfigError(stem + "_index.csv: rows must be example-major, part-minor");
    }
    std::vector<Matrix> out(n_ex, Matrix(parts, stacked.cols()));
    for (std::size_t e = 0; e < n_ex; ++e)
        for (std::size_t i = 0; i < parts; ++i)
            for (std::size_t t = 0; t < stacked.cols(); ++t)
                out[e](i, t) = stacked(e * parts + i, t);
    return out;
}

void save_part_features(const std::vector<Matrix>& parts, const std::filesystem::path& dir,
                        const std::string& stem) {
    const Matrix stacked = stack_graphs(parts);
    save_matrix_binary(stacked, dir / (stem + ".zslm"));
    const std::size_t p = parts[0].rows();
    Matrix index(stacked.rows(), 2);
    for (std::size_t r = 0; r < stacked.rows(); ++r) {
        index(r, 0) = static_cast<double>(r / p);
        index(r, 1) = static_cast<double>(r % p);
    }
    save_matrix_csv(index, dir / (stem + "_index.csv"));
}

}  // namespace zsl
