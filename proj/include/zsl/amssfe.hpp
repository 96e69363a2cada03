#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "zsl/dataset.hpp"
#include "zsl/matrix.hpp"
#include "zsl/nn.hpp"

namespace zsl {

/// Classical-MDS coordinates of the class centers: one row per class,
/// target_dim columns, columns zero-mean.
struct EmbeddedManifold {
    Matrix o;                      // m x target_dim
    std::vector<double> spectrum;  // retained eigenvalues, descending
    double clamped_mass = 0.0;     // total magnitude of clamped negative eigenvalues
};

/// Row i = mean of visual rows of class i; labels are positions 0..m-1.
Matrix class_centers_visual(const Matrix& x, const std::vector<int>& y_pos, std::size_t m);

/// Double-centering recovery of the inner-product matrix followed by
/// eigendecomposition; coordinates scale eigenvectors by sqrt(eigenvalue).
/// Negative retained eigenvalues clamp to zero.
EmbeddedManifold extract_embedded_manifold(const Matrix& d, std::size_t target_dim);

/// Sum over examples of (1 - cos(S_i, o_{y_i})); the gradient wrt S is
/// written into ds when given.
double alignment_loss(const Matrix& s_combined, const Matrix& o, const std::vector<int>& y_pos,
                      Matrix* ds = nullptr);

struct ExpansionParams {
    std::size_t k = 0;  // expansion width; 0 selects round(0.6 * n)
    double alpha = 9.0;
    double beta = 77.0;
    std::size_t g = 8;
    std::size_t epochs = 200;
    std::size_t hidden = 64;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    // early stop: relative smoothed-loss improvement below tol for `patience`
    // consecutive epochs
    double plateau_tol = 1e-5;
    std::size_t patience = 25;
    bool enforce_width_limit = false;  // optional k <= d - n check
};

struct ExpansionModel {
    VaeModel vae;
    EmbeddedManifold manifold;
    Matrix p_seen_combined;    // m x (n+k), first n columns = predefined
    Matrix p_unseen_combined;  // v x (n+k)
    ExpansionParams params;
    std::size_t expansion_width = 0;
    std::vector<double> history;
};

/// Trains the expansion VAE with the joint objective
/// alpha * (reconstruction + KL) + beta * alignment, then updates both
/// prototype sets.
ExpansionModel train_expansion(const Dataset& ds, ExpansionParams params);

/// Expanded seen prototype = class mean of encoder means; row = concat of
/// predefined prototype and expansion.
Matrix update_seen_prototypes(const VaeModel& vae, const Dataset& ds);

/// For each unseen prototype: least-squares weights over its g cosine-nearest
/// predefined seen prototypes, applied to their expansions.
Matrix update_unseen_prototypes(const Matrix& p_unseen_pre, const Matrix& p_seen_pre,
                                const Matrix& p_seen_exp, std::size_t g);

struct MappingParams {
    std::size_t epochs = 400;
    double lr = 1e-2;
    double prototype_weight = 1.0;  // weight on the hidden-equals-prototype penalty
    std::uint64_t seed = 0;
};

/// One-hidden-layer linear autoencoder; hidden activations are pulled toward
/// each example's combined class prototype.
struct LinearMapping {
    Mlp encoder;  // d -> n+k, identity
    Mlp decoder;  // n+k -> d, identity
    std::vector<double> history;
};

LinearMapping train_mapping(const Matrix& x, const std::vector<int>& y_pos,
                            const Matrix& p_combined, const MappingParams& params);

/// Cosine ranking of encoder(x) rows against prototype rows.
std::vector<std::vector<std::size_t>> recognize_mapping(const LinearMapping& mapping,
                                                        const Matrix& x, const Matrix& protos,
                                                        std::size_t k);

void save_expansion(const ExpansionModel& model, const LinearMapping& mapping,
                    const std::filesystem::path& dir);
struct LoadedExpansion {
    ExpansionModel model;
    LinearMapping mapping;
};
LoadedExpansion load_expansion(const std::filesystem::path& dir);

}  // namespace zsl
