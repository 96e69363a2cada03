#include "zsl/nn.hpp"

#include <cmath>
#include <string>

#include "zsl/error.hpp"
#include "zsl/io.hpp"
#include "zsl/kernels.hpp"

namespace zsl {

Mlp Mlp::init(const MlpSpec& spec) {
    if (spec.widths.size() < 2) throw ConfigError("Mlp: need at least input and output widths");
    if (spec.acts.size() != spec.widths.size() - 1)
        throw ConfigError("Mlp: activation list length must equal layer count");
    for (std::size_t w : spec.widths)
        if (w == 0) throw ConfigError("Mlp: zero layer width");
    Mlp mlp;
    mlp.spec = spec;
    std::mt19937_64 rng(spec.seed);
    for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
        const std::size_t fan_in = spec.widths[i], fan_out = spec.widths[i + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Matrix w(fan_in, fan_out);
        for (std::size_t t = 0; t < w.size(); ++t) w.data()[t] = dist(rng);
        mlp.w.push_back(std::move(w));
        mlp.b.emplace_back(1, fan_out);
    }
    return mlp;
}

Matrix mlp_forward(const Mlp& mlp, const Matrix& x, MlpCache* cache) {
    if (x.cols() != mlp.in_width())
        throw ShapeError("mlp_forward: input width " + std::to_string(x.cols()) +
                         " != spec width " + std::to_string(mlp.in_width()));
    if (cache) {
        cache->input = &x;
        cache->pre.clear();
        cache->post.clear();
    }
    Matrix h = x;
    for (std::size_t layer = 0; layer < mlp.w.size(); ++layer) {
        Matrix z = matmul(h, mlp.w[layer]);
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += mlp.b[layer](0, j);
        Matrix a = z;
        if (mlp.spec.acts[layer] == Activation::relu)
            for (std::size_t t = 0; t < a.size(); ++t)
                if (a.data()[t] < 0.0) a.data()[t] = 0.0;
        if (cache) {
            cache->pre.push_back(std::move(z));
            cache->post.push_back(a);
        }
        h = std::move(a);
    }
    return h;
}

MlpGrads mlp_backward(const Mlp& mlp, const MlpCache& cache, const Matrix& dy) {
    if (!cache.input || cache.pre.size() != mlp.w.size())
        throw ConfigError("mlp_backward: cache does not match a forward pass");
    if (dy.rows() != cache.input->rows() || dy.cols() != mlp.out_width())
        throw ShapeError("mlp_backward: upstream gradient shape mismatch");

    MlpGrads g;
    g.w.resize(mlp.w.size());
    g.b.resize(mlp.w.size());
    Matrix delta = dy;
    for (std::size_t layer = mlp.w.size(); layer-- > 0;) {
        if (mlp.spec.acts[layer] == Activation::relu) {
            const Matrix& pre = cache.pre[layer];
            for (std::size_t t = 0; t < delta.size(); ++t)
                if (pre.data()[t] <= 0.0) delta.data()[t] = 0.0;
        }
        const Matrix& below = layer == 0 ? *cache.input : cache.post[layer - 1];
        g.w[layer] = matmul_ta(below, delta);
        Matrix db(1, delta.cols());
        for (std::size_t i = 0; i < delta.rows(); ++i)
            for (std::size_t j = 0; j < delta.cols(); ++j) db(0, j) += delta(i, j);
        g.b[layer] = std::move(db);
        delta = matmul_tb(delta, mlp.w[layer]);
    }
    g.input = std::move(delta);
    return g;
}

double kl_diag_gaussian(const Matrix& mu, const Matrix& logvar, Matrix* dmu, Matrix* dlogvar) {
    require_same_shape(mu, logvar, "kl_diag_gaussian");
    double kl = 0.0;
    if (dmu) *dmu = Matrix(mu.rows(), mu.cols());
    if (dlogvar) *dlogvar = Matrix(mu.rows(), mu.cols());
    for (std::size_t t = 0; t < mu.size(); ++t) {
        const double m = mu.data()[t], lv = logvar.data()[t];
        const double ev = std::exp(lv);
        kl += 0.5 * (m * m + ev - 1.0 - lv);
        if (dmu) dmu->data()[t] = m;
        if (dlogvar) dlogvar->data()[t] = 0.5 * (ev - 1.0);
    }
    return kl;
}

VaeModel vae_init(std::size_t input_dim, std::size_t hidden, std::size_t latent_dim,
                  std::uint64_t seed) {
    if (latent_dim == 0) throw ConfigError("vae_init: latent_dim must be >= 1");
    VaeModel m;
    m.latent_dim = latent_dim;
    m.trunk = Mlp::init({{input_dim, hidden}, {Activation::relu}, seed});
    m.mu_head = Mlp::init({{hidden, latent_dim}, {Activation::identity}, seed + 1});
    m.logvar_head = Mlp::init({{hidden, latent_dim}, {Activation::identity}, seed + 2});
    m.decoder = Mlp::init({{latent_dim, hidden, input_dim},
                           {Activation::relu, Activation::identity},
                           seed + 3});
    return m;
}

VaeForward vae_forward(const VaeModel& model, const Matrix& x, const Matrix& eps) {
    if (eps.rows() != x.rows() || eps.cols() != model.latent_dim)
        throw ShapeError("vae_forward: eps must be batch x latent_dim");
    VaeForward f;
    f.eps = &eps;
    Matrix trunk_out = mlp_forward(model.trunk, x, &f.trunk_cache);
    f.mu = mlp_forward(model.mu_head, trunk_out, &f.mu_cache);
    f.logvar = mlp_forward(model.logvar_head, trunk_out, &f.logvar_cache);
    f.z = Matrix(f.mu.rows(), f.mu.cols());
    for (std::size_t t = 0; t < f.z.size(); ++t)
        f.z.data()[t] = f.mu.data()[t] + std::exp(0.5 * f.logvar.data()[t]) * eps.data()[t];
    f.xhat = mlp_forward(model.decoder, f.z, &f.dec_cache);
    return f;
}

VaeGrads vae_backward(const VaeModel& model, const VaeForward& fwd, const Matrix& dxhat,
                      const Matrix& dmu_direct, const Matrix& dlogvar_direct,
                      const Matrix& dz_direct) {
    VaeGrads g;
    g.decoder = mlp_backward(model.decoder, fwd.dec_cache, dxhat);
    Matrix dz = g.decoder.input;
    if (!dz_direct.empty()) add_in_place(dz, dz_direct);

    // z = mu + exp(logvar/2) .* eps
    Matrix dmu = dz;
    if (!dmu_direct.empty()) add_in_place(dmu, dmu_direct);
    Matrix dlogvar(fwd.logvar.rows(), fwd.logvar.cols());
    for (std::size_t t = 0; t < dlogvar.size(); ++t)
        dlogvar.data()[t] = dz.data()[t] * fwd.eps->data()[t] * 0.5 *
                            std::exp(0.5 * fwd.logvar.data()[t]);
    if (!dlogvar_direct.empty()) add_in_place(dlogvar, dlogvar_direct);

    g.mu_head = mlp_backward(model.mu_head, fwd.mu_cache, dmu);
    g.logvar_head = mlp_backward(model.logvar_head, fwd.logvar_cache, dlogvar);
    Matrix dtrunk = g.mu_head.input;
    add_in_place(dtrunk, g.logvar_head.input);
    g.trunk = mlp_backward(model.trunk, fwd.trunk_cache, dtrunk);
    return g;
}

std::vector<Matrix*> mlp_parameters(Mlp& mlp) {
    std::vector<Matrix*> params;
    for (std::size_t i = 0; i < mlp.w.size(); ++i) {
        params.push_back(&mlp.w[i]);
        params.push_back(&mlp.b[i]);
    }
    return params;
}

std::vector<Matrix*> vae_parameters(VaeModel& model) {
    std::vector<Matrix*> params;
    for (auto* list : {&model.trunk, &model.mu_head, &model.logvar_head, &model.decoder})
        for (Matrix* p : mlp_parameters(*list)) params.push_back(p);
    return params;
}

std::vector<Matrix*> mlp_grad_list(MlpGrads& g) {
    std::vector<Matrix*> out;
    for (std::size_t i = 0; i < g.w.size(); ++i) {
        out.push_back(&g.w[i]);
        out.push_back(&g.b[i]);
    }
    return out;
}

std::vector<Matrix*> vae_grad_list(VaeGrads& g) {
    std::vector<Matrix*> out;
    for (auto* list : {&g.trunk, &g.mu_head, &g.logvar_head, &g.decoder})
        for (Matrix* p : mlp_grad_list(*list)) out.push_back(p);
    return out;
}

AdamState AdamState::init(const std::vector<Matrix*>& params, double lr) {
    AdamState s;
    s.lr = lr;
    for (const Matrix* p : params) {
        s.m1.emplace_back(p->rows(), p->cols());
        s.m2.emplace_back(p->rows(), p->cols());
    }
    return s;
}

void adam_step(AdamState& state, const std::vector<Matrix*>& params,
               const std::vector<const Matrix*>& grads) {
    if (params.size() != grads.size() || params.size() != state.m1.size())
        throw ConfigError("adam_step: parameter/gradient/state count mismatch");
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& w = *params[p];
        const Matrix& g = *grads[p];
        require_same_shape(w, g, "adam_step");
        Matrix& m1 = state.m1[p];
        Matrix& m2 = state.m2[p];
        for (std::size_t t = 0; t < w.size(); ++t) {
            const double gv = g.data()[t];
            if (!std::isfinite(gv))
                throw NumericalError("adam_step: non-finite gradient in parameter " +
                                     std::to_string(p));
            m1.data()[t] = state.beta1 * m1.data()[t] + (1.0 - state.beta1) * gv;
            m2.data()[t] = state.beta2 * m2.data()[t] + (1.0 - state.beta2) * gv * gv;
            const double mhat = m1.data()[t] / bc1;
            const double vhat = m2.data()[t] / bc2;
            w.data()[t] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix m(rows, cols);
    for (std::size_t t = 0; t < m.size(); ++t) m.data()[t] = gauss(rng);
    return m;
}

void save_mlp(const Mlp& mlp, const std::filesystem::path& dir, const std::string& name,
              std::vector<std::pair<std::string, std::string>>& manifest) {
    manifest.emplace_back(name + "_layers", std::to_string(mlp.w.size()));
    std::string widths;
    for (std::size_t w : mlp.spec.widths)
        widths += (widths.empty() ? "" : ",") + std::to_string(w);
    manifest.emplace_back(name + "_widths", widths);
    std::string acts;
    for (Activation a : mlp.spec.acts)
        acts += (acts.empty() ? "" : ",") + std::string(a == Activation::relu ? "relu" : "id");
    manifest.emplace_back(name + "_acts", acts);
    for (std::size_t i = 0; i < mlp.w.size(); ++i) {
        save_matrix_binary(mlp.w[i], dir / (name + "_w" + std::to_string(i) + ".zslm"));
        save_matrix_binary(mlp.b[i], dir / (name + "_b" + std::to_string(i) + ".zslm"));
    }
}

Mlp load_mlp(const std::filesystem::path& dir, const std::string& name,
             const std::vector<std::pair<std::string, std::string>>& manifest) {
    const std::size_t layers = std::stoul(manifest_get(manifest, name + "_layers"));
    Mlp mlp;
    const std::string widths = manifest_get(manifest, name + "_widths");
    std::size_t start = 0;
    while (start <= widths.size()) {
        const std::size_t comma = widths.find(',', start);
        mlp.spec.widths.push_back(std::stoul(widths.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    const std::string acts = manifest_get(manifest, name + "_acts");
    start = 0;
    while (start <= acts.size()) {
        const std::size_t comma = acts.find(',', start);
        const std::string tag = acts.substr(start, comma - start);
        mlp.spec.acts.push_back(tag == "relu" ? Activation::relu : Activation::identity);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    for (std::size_t i = 0; i < layers; ++i) {
        mlp.w.push_back(load_matrix_binary(dir / (name + "_w" + std::to_string(i) + ".zslm")));
        mlp.b.push_back(load_matrix_binary(dir / (name + "_b" + std::to_string(i) + ".zslm")));
    }
    return mlp;
}

}  // namespace zsl
