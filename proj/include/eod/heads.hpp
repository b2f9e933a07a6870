#ifndef EOD_HEADS_HPP
#define EOD_HEADS_HPP

#include "eod/core.hpp"
#include "eod/network.hpp"

#include <vector>

namespace eod {

struct LossResult {
    double mean_loss = 0.0;
    Matrix grad_embeddings;  // n x D
};

// Affine classification head: logits = f W^T + b.
struct SoftMaxHead {
    Matrix weights;  // N x D
    Vector biases;   // N
    Matrix grad_weights;
    Vector grad_biases;
    Matrix vel_weights;
    Vector vel_biases;

    static SoftMaxHead init(int n_classes, int embed_dim, Rng& rng);
    int n_classes() const { return static_cast<int>(weights.rows()); }
    int param_count() const { return static_cast<int>(weights.size() + biases.size()); }
    void zero_grad();
    void sgd_step(const TrainConfig& cfg, int epoch);
};

// Distance head: logits = -E_s * ||f - p_j||. Prototypes start at the zero
// vector; the entropic scale is a constant and never trains.
struct IsoMaxHead {
    Matrix prototypes;  // N x D
    double entropic_scale = 10.0;
    Matrix grad_prototypes;
    Matrix vel_prototypes;

    static IsoMaxHead init(int n_classes, int embed_dim, double entropic_scale = 10.0);
    int n_classes() const { return static_cast<int>(prototypes.rows()); }
    int param_count() const { return static_cast<int>(prototypes.size()); }
    void zero_grad();
    void sgd_step(const TrainConfig& cfg, int epoch);
};

Matrix softmax_head_logits(const SoftMaxHead& head, const Matrix& embeddings);
Matrix isomax_logits(const IsoMaxHead& head, const Matrix& embeddings);

// Mean cross-entropy via fused log-sum-exp; gradients into the head buffers.
LossResult softmax_head_loss(SoftMaxHead& head, const Matrix& embeddings,
                             const std::vector<int>& labels);

// Probabilities first, then the clamped log of the picked entry as a separate
// step. Gradients into head.grad_prototypes.
LossResult isomax_loss(IsoMaxHead& head, const Matrix& embeddings,
                       const std::vector<int>& labels);

}  // namespace eod

#endif
