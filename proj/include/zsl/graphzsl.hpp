#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "zsl/matrix.hpp"
#include "zsl/nn.hpp"

namespace zsl {

/// Keypoint-anchored crop layout for one image geometry shared by all
/// examples of a dataset.
struct PartLayout {
    std::vector<std::pair<double, double>> keypoints;  // (x, y) per part
    double image_w = 0, image_h = 0;
    double crop_w = 0, crop_h = 0;
};

struct CropBox {
    double x = 0, y = 0, w = 0, h = 0;
};

/// Top-left corners at keypoint minus half the crop size, clamped into
/// [0, W-w] x [0, H-h].
std::vector<CropBox> crop_parts(const PartLayout& layout);

/// Multinomial logistic regression on whole-example features; confidence is
/// the softmax probability of the true class.
struct SoftmaxClassifier {
    Matrix w;  // d x classes
    Matrix b;  // 1 x classes
    bool trained = false;

    Matrix probabilities(const Matrix& x) const;  // batch x classes
};

SoftmaxClassifier train_softmax_classifier(const Matrix& x, const std::vector<int>& y_pos,
                                           std::size_t classes, std::size_t epochs, double lr,
                                           std::uint64_t seed);

/// C[i][j] = mean over training examples of the true-class confidence of
/// (f_i + f_j)/2; the diagonal scores each part alone. parts[e] is the
/// p x d_part node-feature matrix of example e.
Matrix part_pair_confidence(const SoftmaxClassifier& clf, const std::vector<Matrix>& parts,
                            const std::vector<int>& y_pos);

/// Edge (i,j) iff C[i][j] > single[i]+eps and C[i][j] > single[j]+eps.
Matrix build_adjacency(const Matrix& c, const std::vector<double>& single, double epsilon);

/// Chooses the epsilon whose undirected edge count is the largest value
/// <= target_edges; reports it through chosen_eps when non-null.
Matrix build_adjacency_target(const Matrix& c, const std::vector<double>& single,
                              std::size_t target_edges, double* chosen_eps = nullptr);

/// normalized propagation operator D~^{-1/2} (A+I) D~^{-1/2}
Matrix normalized_operator(const Matrix& a);

/// H_out = relu(normalized_operator(A) * H * theta)
Matrix gcn_layer(const Matrix& a, const Matrix& h, const Matrix& theta);

/// Stack layers, concatenate all layer outputs, column-wise average pool.
/// Returns a 1 x sum(c_i) row vector.
Matrix gcn_readout(const Matrix& a, const Matrix& f, const std::vector<Matrix>& thetas);

struct GcnSpec {
    std::size_t layers = 4;
    std::size_t hidden = 512;
    std::vector<std::size_t> head_hidden = {512, 512};
    std::size_t epochs = 5000;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

struct GcnModel {
    Matrix a;  // shared adjacency
    std::vector<Matrix> thetas;
    Mlp head;  // sum(c_i) -> n_sem regression
    std::vector<double> history;
};

/// One full-batch MAE evaluation with exact gradients for every layer weight
/// and the regression head; the training loop applies these with Adam.
struct GcnStep {
    double loss = 0.0;
    std::vector<Matrix> dtheta;
    MlpGrads head;
};
GcnStep gcn_loss_grads(const GcnModel& model, const std::vector<Matrix>& graphs,
                       const std::vector<int>& y_pos, const Matrix& prototypes);

/// MAE-supervised regression from example graphs to class prototypes; all
/// graphs share one adjacency.
GcnModel gcn_train(const Matrix& a, const std::vector<Matrix>& graphs,
                   const std::vector<int>& y_pos, const Matrix& prototypes,
                   const GcnSpec& spec);

/// One semantic prediction row per graph.
Matrix gcn_predict(const GcnModel& model, const std::vector<Matrix>& graphs);

/// Cosine ranking of predictions against prototype rows.
std::vector<std::vector<std::size_t>> recognize_graph(const GcnModel& model,
                                                      const std::vector<Matrix>& graphs,
                                                      const Matrix& protos, std::size_t k);

void save_gcn(const GcnModel& model, const std::filesystem::path& dir);
GcnModel load_gcn(const std::filesystem::path& dir);

// Graph bundle ingestion: keypoints.csv (part_id,x,y per line),
// graph.manifest (key=value geometry), stacked part features with an
// (example_id, part_id) sidecar.
PartLayout load_part_layout(const std::filesystem::path& dir);
std::vector<Matrix> load_part_features(const std::filesystem::path& dir,
                                       const std::string& stem, std::size_t parts);
void save_part_features(const std::vector<Matrix>& parts, const std::filesystem::path& dir,
                        const std::string& stem);

}  // namespace zsl
