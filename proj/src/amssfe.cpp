#include "zsl/amssfe.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "zsl/error.hpp"
#include "zsl/io.hpp"
#include "zsl/kernels.hpp"
#include "zsl/linalg.hpp"

namespace zsl {

namespace {

std::vector<int> seen_positions(const Dataset& ds) {
    std::vector<int> pos(ds.y_train.size());
    for (std::size_t i = 0; i < ds.y_train.size(); ++i)
        pos[i] = static_cast<int>(ds.seen_pos(ds.y_train[i]));
    return pos;
}

void check_populated(const std::vector<int>& y_pos, std::size_t m, const char* what) {
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

// Mean encoder output (mu) per class, m x k.
Matrix class_mean_mu(const VaeModel& vae, const Matrix& x, const std::vector<int>& y_pos,
                     std::size_t m) {
    MlpCache trunk_cache;
    const Matrix trunk_out = mlp_forward(vae.trunk, x, &trunk_cache);
    const Matrix mu = mlp_forward(vae.mu_head, trunk_out);
    Matrix centers(m, mu.cols());
    std::vector<double> counts(m, 0.0);
    for (std::size_t i = 0; i < mu.rows(); ++i) {
        const auto c = static_cast<std::size_t>(y_pos[i]);
        counts[c] += 1.0;
        for (std::size_t t = 0; t < mu.cols(); ++t) centers(c, t) += mu(i, t);
    }
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t t = 0; t < centers.cols(); ++t) centers(c, t) /= counts[c];
    return centers;
}

}  // namespace

Matrix class_centers_visual(const Matrix& x, const std::vector<int>& y_pos, std::size_t m) {
    if (y_pos.size() != x.rows())
        throw ShapeError("class_centers_visual: label count != row count");
    check_populated(y_pos, m, "class_centers_visual");
    Matrix centers(m, x.cols());
    std::vector<double> counts(m, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto c = static_cast<std::size_t>(y_pos[i]);
        counts[c] += 1.0;
        for (std::size_t t = 0; t < x.cols(); ++t) centers(c, t) += x(i, t);
    }
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t t = 0; t < x.cols(); ++t) centers(c, t) /= counts[c];
    return centers;
}

EmbeddedManifold extract_embedded_manifold(const Matrix& d, std::size_t target_dim) {
    if (d.rows() != d.cols()) throw ShapeError("extract_embedded_manifold: D must be square");
    const std::size_t m = d.rows();
    if (target_dim == 0 || target_dim > m - 1)
        throw ConfigError("extract_embedded_manifold: target_dim must be in [1, m-1]");

    // b_ij = -1/2 (d_ij^2 - d_i.^2 - d_.j^2 + d_..^2)
    Matrix d2(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) d2(i, j) = d(i, j) * d(i, j);
    std::vector<double> row_mean(m, 0.0), col_mean(m, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            row_mean[i] += d2(i, j);
            col_mean[j] += d2(i, j);
            grand += d2(i, j);
        }
    for (std::size_t i = 0; i < m; ++i) {
        row_mean[i] /= static_cast<double>(m);
        col_mean[i] /= static_cast<double>(m);
    }
    grand /= static_cast<double>(m * m);
    Matrix b(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            b(i, j) = -0.5 * (d2(i, j) - row_mean[i] - col_mean[j] + grand);

    const EigResult eig = sym_eig(b);
    EmbeddedManifold out;
    out.o = Matrix(m, target_dim);
    out.spectrum.resize(target_dim);
    for (std::size_t t = 0; t < target_dim; ++t) {
        double lam = eig.eigenvalues[t];
        if (lam < 0.0) {
            out.clamped_mass += -lam;
            lam = 0.0;
        }
        out.spectrum[t] = lam;
        const double s = std::sqrt(lam);
        for (std::size_t i = 0; i < m; ++i) out.o(i, t) = eig.eigenvectors(i, t) * s;
    }
    return out;
}

double alignment_loss(const Matrix& s_combined, const Matrix& o, const std::vector<int>& y_pos,
                      Matrix* ds) {
    if (s_combined.cols() != o.cols())
        throw ShapeError("alignment_loss: width mismatch between S and O");
    if (y_pos.size() != s_combined.rows())
        throw ShapeError("alignment_loss: label count != row count");
    const std::size_t width = o.cols();
    if (ds) *ds = Matrix(s_combined.rows(), s_combined.cols());
    double loss = 0.0;
    for (std::size_t i = 0; i < s_combined.rows(); ++i) {
        const auto c = static_cast<std::size_t>(y_pos[i]);
        if (c >= o.rows()) throw ConfigError("alignment_loss: label position out of range");
        const double* s = s_combined.row(i);
        const double* t = o.row(c);
        double dot = 0.0, ns = 0.0, nt = 0.0;
        for (std::size_t w = 0; w < width; ++w) {
            dot += s[w] * t[w];
            ns += s[w] * s[w];
            nt += t[w] * t[w];
        }
        if (ns == 0.0 || nt == 0.0)
            throw NumericalError("alignment_loss: zero-norm row " + std::to_string(i));
        const double inv_ns = 1.0 / std::sqrt(ns);
        const double inv_nt = 1.0 / std::sqrt(nt);
        const double cosv = dot * inv_ns * inv_nt;
        loss += 1.0 - cosv;
        if (ds) {
            // d(1 - cos)/ds = -(t/(|s||t|) - cos * s/|s|^2)
            for (std::size_t w = 0; w < width; ++w)
                (*ds)(i, w) = -(t[w] * inv_ns * inv_nt - cosv * s[w] * inv_ns * inv_ns);
        }
    }
    return loss;
}

Matrix update_seen_prototypes(const VaeModel& vae, const Dataset& ds) {
    const std::vector<int> y_pos = seen_positions(ds);
    check_populated(y_pos, ds.num_seen(), "update_seen_prototypes");
    const Matrix expanded = class_mean_mu(vae, ds.x_train, y_pos, ds.num_seen());
    return hstack(ds.p_seen, expanded);
}

Matrix update_unseen_prototypes(const Matrix& p_unseen_pre, const Matrix& p_seen_pre,
                                const Matrix& p_seen_exp, std::size_t g) {
    if (p_unseen_pre.cols() != p_seen_pre.cols())
        throw ShapeError("update_unseen_prototypes: predefined width mismatch");
    if (p_seen_exp.rows() != p_seen_pre.rows())
        throw ShapeError("update_unseen_prototypes: expansion row mismatch");
    if (g == 0 || g > p_seen_pre.rows())
        throw ConfigError("update_unseen_prototypes: g must be in [1, seen class count]");

    const auto neighbors = rank_by_cosine(p_unseen_pre, p_seen_pre, g);
    const std::size_t n = p_seen_pre.cols(), k = p_seen_exp.cols();
    Matrix out(p_unseen_pre.rows(), n + k);
    for (std::size_t i = 0; i < p_unseen_pre.rows(); ++i) {
        // theta = argmin || p' - theta P^p_{1..g} ||, stacked as columns of A
        Matrix a(n, g);
        for (std::size_t j = 0; j < g; ++j)
            for (std::size_t t = 0; t < n; ++t) a(t, j) = p_seen_pre(neighbors[i][j], t);
        Matrix b(n, 1);
        for (std::size_t t = 0; t < n; ++t) b(t, 0) = p_unseen_pre(i, t);
        const Matrix theta = least_squares(a, b);  // g x 1
        if (!theta.all_finite())
            throw NumericalError("update_unseen_prototypes: degenerate neighborhood for row " +
                                 std::to_string(i));
        for (std::size_t t = 0; t < n; ++t) out(i, t) = p_unseen_pre(i, t);
        for (std::size_t t = 0; t < k; ++t) {
            double v = 0.0;
            for (std::size_t j = 0; j < g; ++j)
                v += theta(j, 0) * p_seen_exp(neighbors[i][j], t);
            out(i, n + t) = v;
        }
    }
    return out;
}

ExpansionModel train_expansion(const Dataset& ds, ExpansionParams params) {
    const std::size_t n = ds.semantic_dim();
    const std::size_t dvis = ds.visual_dim();
    if (params.k == 0)
        params.k = static_cast<std::size_t>(std::lround(0.6 * static_cast<double>(n)));
    if (params.k == 0) params.k = 1;
    if (params.enforce_width_limit && params.k > dvis - n)
        throw ConfigError("train_expansion: expansion width exceeds d - n");
    if (params.alpha < 0 || params.beta < 0)
        throw ConfigError("train_expansion: alpha and beta must be nonnegative");
    if (params.epochs == 0) throw ConfigError("train_expansion: epochs must be >= 1");
    if (params.g == 0 || params.g > ds.num_seen())
        throw ConfigError("train_expansion: g must be in [1, seen class count]");

    const std::vector<int> y_pos = seen_positions(ds);
    check_populated(y_pos, ds.num_seen(), "train_expansion");
    const std::size_t combined = n + params.k;
    const std::size_t target_dim = std::min(combined, ds.num_seen() - 1);

    ExpansionModel model;
    model.params = params;
    model.expansion_width = params.k;

    const Matrix centers = class_centers_visual(ds.x_train, y_pos, ds.num_seen());
    const Matrix dists = pairwise_distances(centers);
    model.manifold = extract_embedded_manifold(dists, target_dim);
    if (target_dim < combined) {
        // a centered m-point configuration spans at most m-1 dimensions;
        // the remaining coordinates carry zero eigenvalues
        Matrix padded(ds.num_seen(), combined);
        for (std::size_t i = 0; i < padded.rows(); ++i)
            for (std::size_t t = 0; t < target_dim; ++t) padded(i, t) = model.manifold.o(i, t);
        model.manifold.o = std::move(padded);
        model.manifold.spectrum.resize(combined, 0.0);
    }

    model.vae = vae_init(dvis, params.hidden, params.k, params.seed);
    std::vector<Matrix*> vae_params = vae_parameters(model.vae);
    AdamState adam = AdamState::init(vae_params, params.lr);
    std::mt19937_64 eps_rng(params.seed ^ 0x9e3779b97f4a7c15ull);

    const double inv_batch = 1.0 / static_cast<double>(ds.x_train.rows());

    double smoothed = 0.0;
    std::size_t stalled = 0;
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        const Matrix eps = gaussian_matrix(ds.x_train.rows(), params.k, eps_rng);
        VaeForward fwd = vae_forward(model.vae, ds.x_train, eps);

        // reconstruction: sum of squared errors over the batch
        double recon = 0.0;
        Matrix dxhat(fwd.xhat.rows(), fwd.xhat.cols());
        for (std::size_t t = 0; t < fwd.xhat.size(); ++t) {
            const double diff = fwd.xhat.data()[t] - ds.x_train.data()[t];
            recon += diff * diff;
            dxhat.data()[t] = 2.0 * diff * params.alpha * inv_batch;
        }
        Matrix dmu, dlogvar;
        const double kl = kl_diag_gaussian(fwd.mu, fwd.logvar, &dmu, &dlogvar);
        for (std::size_t t = 0; t < dmu.size(); ++t) {
            dmu.data()[t] *= params.alpha * inv_batch;
            dlogvar.data()[t] *= params.alpha * inv_batch;
        }

        // combined semantic rows: [class prototype | z_i]
        Matrix s_combined(ds.x_train.rows(), combined);
        for (std::size_t i = 0; i < s_combined.rows(); ++i) {
            const auto c = static_cast<std::size_t>(y_pos[i]);
            for (std::size_t t = 0; t < n; ++t) s_combined(i, t) = ds.p_seen(c, t);
            for (std::size_t t = 0; t < params.k; ++t) s_combined(i, n + t) = fwd.z(i, t);
        }
        Matrix ds_combined;
        const double align =
            alignment_loss(s_combined, model.manifold.o, y_pos, &ds_combined);
        Matrix dz(fwd.z.rows(), fwd.z.cols());
        for (std::size_t i = 0; i < dz.rows(); ++i)
            for (std::size_t t = 0; t < params.k; ++t)
                dz(i, t) = ds_combined(i, n + t) * params.beta * inv_batch;

        const double loss =
            (params.alpha * (recon + kl) + params.beta * align) * inv_batch;
        if (!std::isfinite(loss)) throw NumericalError("train_expansion: divergent loss");
        model.history.push_back(loss);

        VaeGrads grads = vae_backward(model.vae, fwd, dxhat, dmu, dlogvar, dz);
        std::vector<Matrix*> grad_ptrs = vae_grad_list(grads);
        std::vector<const Matrix*> grad_view(grad_ptrs.begin(), grad_ptrs.end());
        adam_step(adam, vae_params, grad_view);

        // plateau detection on an exponentially smoothed loss
        if (epoch == 0) {
            smoothed = loss;
        } else {
            const double prev = smoothed;
            smoothed = 0.9 * smoothed + 0.1 * loss;
            const double rel = (prev - smoothed) / std::max(std::fabs(prev), 1e-12);
            stalled = rel < params.plateau_tol ? stalled + 1 : 0;
            if (stalled >= params.patience) break;
        }
    }

    model.p_seen_combined = update_seen_prototypes(model.vae, ds);
    Matrix p_seen_exp(ds.num_seen(), params.k);
    for (std::size_t c = 0; c < ds.num_seen(); ++c)
        for (std::size_t t = 0; t < params.k; ++t)
            p_seen_exp(c, t) = model.p_seen_combined(c, n + t);
    model.p_unseen_combined =
        update_unseen_prototypes(ds.p_unseen, ds.p_seen, p_seen_exp, params.g);
    return model;
}

LinearMapping train_mapping(const Matrix& x, const std::vector<int>& y_pos,
                            const Matrix& p_combined, const MappingParams& params) {
    if (y_pos.size() != x.rows()) throw ShapeError("train_mapping: label count != row count");
    check_populated(y_pos, p_combined.rows(), "train_mapping");
    const std::size_t width = p_combined.cols();

    LinearMapping map;
    map.encoder = Mlp::init({{x.cols(), width}, {Activation::identity}, params.seed});
    map.decoder = Mlp::init({{width, x.cols()}, {Activation::identity}, params.seed + 1});
    std::vector<Matrix*> all_params = mlp_parameters(map.encoder);
    for (Matrix* p : mlp_parameters(map.decoder)) all_params.push_back(p);
    AdamState adam = AdamState::init(all_params, params.lr);

    // per-example prototype targets
    Matrix targets(x.rows(), width);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t t = 0; t < width; ++t)
            targets(i, t) = p_combined(static_cast<std::size_t>(y_pos[i]), t);

    const double inv_batch = 1.0 / static_cast<double>(x.rows());
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        MlpCache enc_cache, dec_cache;
        const Matrix h = mlp_forward(map.encoder, x, &enc_cache);
        const Matrix xhat = mlp_forward(map.decoder, h, &dec_cache);

        double recon = 0.0, proto = 0.0;
        Matrix dxhat(xhat.rows(), xhat.cols());
        for (std::size_t t = 0; t < xhat.size(); ++t) {
            const double diff = xhat.data()[t] - x.data()[t];
            recon += diff * diff;
            dxhat.data()[t] = 2.0 * diff * inv_batch;
        }
        Matrix dh_direct(h.rows(), h.cols());
        for (std::size_t t = 0; t < h.size(); ++t) {
            const double diff = h.data()[t] - targets.data()[t];
            proto += diff * diff;
            dh_direct.data()[t] = 2.0 * diff * params.prototype_weight * inv_batch;
        }
        const double loss = (recon + params.prototype_weight * proto) * inv_batch;
        if (!std::isfinite(loss)) throw NumericalError("train_mapping: divergent loss");
        map.history.push_back(loss);

        MlpGrads dec_grads = mlp_backward(map.decoder, dec_cache, dxhat);
        Matrix dh = dec_grads.input;
        add_in_place(dh, dh_direct);
        MlpGrads enc_grads = mlp_backward(map.encoder, enc_cache, dh);

        std::vector<Matrix*> grad_ptrs = mlp_grad_list(enc_grads);
        for (Matrix* p : mlp_grad_list(dec_grads)) grad_ptrs.push_back(p);
        std::vector<const Matrix*> grad_view(grad_ptrs.begin(), grad_ptrs.end());
        adam_step(adam, all_params, grad_view);
    }
    return map;
}

std::vector<std::vector<std::size_t>> recognize_mapping(const LinearMapping& mapping,
                                                        const Matrix& x, const Matrix& protos,
                                                        std::size_t k) {
    const Matrix s = mlp_forward(mapping.encoder, x);
    return rank_by_cosine(s, protos, k);
}

void save_expansion(const ExpansionModel& model, const LinearMapping& mapping,
                    const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::pair<std::string, std::string>> manifest{
        {"method", "amssfe"},
        {"expansion_width", std::to_string(model.expansion_width)},
        {"alpha", format_double(model.params.alpha)},
        {"beta", format_double(model.params.beta)},
        {"g", std::to_string(model.params.g)},
        {"epochs_run", std::to_string(model.history.size())},
        {"clamped_mass", format_double(model.manifold.clamped_mass)},
    };
    save_matrix_binary(model.manifold.o, dir / "O.zslm");
    save_matrix_binary(model.p_seen_combined, dir / "P_seen_combined.zslm");
    save_matrix_binary(model.p_unseen_combined, dir / "P_unseen_combined.zslm");
    save_mlp(model.vae.trunk, dir, "vae_trunk", manifest);
    save_mlp(model.vae.mu_head, dir, "vae_mu", manifest);
    save_mlp(model.vae.logvar_head, dir, "vae_logvar", manifest);
    save_mlp(model.vae.decoder, dir, "vae_dec", manifest);
    manifest.emplace_back("latent_dim", std::to_string(model.vae.latent_dim));
    save_mlp(mapping.encoder, dir, "map_enc", manifest);
    save_mlp(mapping.decoder, dir, "map_dec", manifest);
    save_manifest(manifest, dir / "manifest.txt");
}

LoadedExpansion load_expansion(const std::filesystem::path& dir) {
    const auto manifest = load_manifest(dir / "manifest.txt");
    if (manifest_get(manifest, "method") != "amssfe")
        throw ConfigError("load_expansion: bundle method is not amssfe");
    LoadedExpansion out;
    out.model.manifold.o = load_matrix_binary(dir / "O.zslm");
    out.model.p_seen_combined = load_matrix_binary(dir / "P_seen_combined.zslm");
    out.model.p_unseen_combined = load_matrix_binary(dir / "P_unseen_combined.zslm");
    out.model.expansion_width = std::stoul(manifest_get(manifest, "expansion_width"));
    out.model.vae.trunk = load_mlp(dir, "vae_trunk", manifest);
    out.model.vae.mu_head = load_mlp(dir, "vae_mu", manifest);
    out.model.vae.logvar_head = load_mlp(dir, "vae_logvar", manifest);
    out.model.vae.decoder = load_mlp(dir, "vae_dec", manifest);
    out.model.vae.latent_dim = std::stoul(manifest_get(manifest, "latent_dim"));
    out.mapping.encoder = load_mlp(dir, "map_enc", manifest);
    out.mapping.decoder = load_mlp(dir, "map_dec", manifest);
    return out;
}

}  // namespace zsl
