#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "zsl/matrix.hpp"

namespace zsl {

enum class Activation { relu, identity };

struct MlpSpec {
    std::vector<std::size_t> widths;  // input width first
    std::vector<Activation> acts;     // one per layer (widths.size() - 1)
    std::uint64_t seed = 0;
};

/// Dense feed-forward stack. Batches are row-per-example matrices.
struct Mlp {
    MlpSpec spec;
    std::vector<Matrix> w;  // layer i: widths[i] x widths[i+1]
    std::vector<Matrix> b;  // 1 x widths[i+1]

    static Mlp init(const MlpSpec& spec);
    std::size_t in_width() const { return spec.widths.front(); }
    std::size_t out_width() const { return spec.widths.back(); }
};

struct MlpCache {
    const Matrix* input = nullptr;
    std::vector<Matrix> pre;   // affine outputs per layer
    std::vector<Matrix> post;  // activated outputs per layer
};

struct MlpGrads {
    std::vector<Matrix> w;
    std::vector<Matrix> b;
    Matrix input;  // gradient wrt the batch input
};

/// Affine-then-activation composition; fills cache for backward when given.
Matrix mlp_forward(const Mlp& mlp, const Matrix& x, MlpCache* cache = nullptr);

/// Exact reverse-mode gradients of the cached forward.
MlpGrads mlp_backward(const Mlp& mlp, const MlpCache& cache, const Matrix& dy);

/// KL( N(mu, diag(exp(logvar))) || N(0, I) ) summed over the batch:
/// 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar). Optional gradients.
double kl_diag_gaussian(const Matrix& mu, const Matrix& logvar, Matrix* dmu = nullptr,
                        Matrix* dlogvar = nullptr);

struct VaeModel {
    Mlp trunk;        // shared encoder body
    Mlp mu_head;      // trunk_out -> k, identity
    Mlp logvar_head;  // trunk_out -> k, identity
    Mlp decoder;      // k -> d
    std::size_t latent_dim = 0;
};

VaeModel vae_init(std::size_t input_dim, std::size_t hidden, std::size_t latent_dim,
                  std::uint64_t seed);

struct VaeForward {
    Matrix mu, logvar, z, xhat;
    MlpCache trunk_cache, mu_cache, logvar_cache, dec_cache;
    const Matrix* eps = nullptr;
};

/// Reparameterized pass: z = mu + exp(logvar/2) .* eps, xhat = decoder(z).
/// eps is a caller-supplied standard-normal draw of shape batch x k.
VaeForward vae_forward(const VaeModel& model, const Matrix& x, const Matrix& eps);

struct VaeGrads {
    MlpGrads trunk, mu_head, logvar_head, decoder;
};

/// Backward through the reparameterization given upstream dxhat plus direct
/// gradients on mu/logvar (KL) and z (extra losses); any of them may be empty.
VaeGrads vae_backward(const VaeModel& model, const VaeForward& fwd, const Matrix& dxhat,
                      const Matrix& dmu_direct, const Matrix& dlogvar_direct,
                      const Matrix& dz_direct);

/// Collect every parameter matrix of a model in a fixed order.
std::vector<Matrix*> mlp_parameters(Mlp& mlp);
std::vector<Matrix*> vae_parameters(VaeModel& model);
std::vector<Matrix*> mlp_grad_list(MlpGrads& g);
std::vector<Matrix*> vae_grad_list(VaeGrads& g);

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Matrix> m1;  // first moments, shapes mirror parameters
    std::vector<Matrix> m2;  // second moments

    static AdamState init(const std::vector<Matrix*>& params, double lr = 1e-3);
};

/// Bias-corrected Adam update; throws NumericalError on non-finite gradients.
void adam_step(AdamState& state, const std::vector<Matrix*>& params,
               const std::vector<const Matrix*>& grads);

/// Standard-normal draws with a dedicated engine, batch x dim.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

// Parameter persistence: one ZSLM file per matrix plus manifest entries
// describing the spec.
void save_mlp(const Mlp& mlp, const std::filesystem::path& dir, const std::string& name,
              std::vector<std::pair<std::string, std::string>>& manifest);
Mlp load_mlp(const std::filesystem::path& dir, const std::string& name,
             const std::vector<std::pair<std::string, std::string>>& manifest);

}  // namespace zsl
