#include "eod/heads.hpp"

#include <cmath>

namespace eod {

namespace {

void check_labels(const std::vector<int>& labels, Eigen::Index n, int n_classes) {
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw ContractError("loss: label count does not match batch size");
    }
    for (int k : labels) {
        if (k < 0 || k >= n_classes) {
            throw ContractError("loss: label " + std::to_string(k) + " out of range [0, " +
                                std::to_string(n_classes) + ")");
        }
    }
}

}  // namespace

SoftMaxHead SoftMaxHead::init(int n_classes, int embed_dim, Rng& rng) {
    if (n_classes < 2 || embed_dim < 1) {
        throw ContractError("SoftMaxHead::init: need n_classes >= 2, embed_dim >= 1");
    }
    SoftMaxHead h;
    h.weights.resize(n_classes, embed_dim);
    const double std_dev = std::sqrt(2.0 / (embed_dim + n_classes));  // Xavier
    for (Eigen::Index r = 0; r < h.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < h.weights.cols(); ++c) {
            h.weights(r, c) = rng.normal(0.0, std_dev);
        }
    }
    h.biases = Vector::Zero(n_classes);
    h.grad_weights = Matrix::Zero(n_classes, embed_dim);
    h.grad_biases = Vector::Zero(n_classes);
    h.vel_weights = Matrix::Zero(n_classes, embed_dim);
    h.vel_biases = Vector::Zero(n_classes);
    return h;
}

void SoftMaxHead::zero_grad() {
    grad_weights.setZero();
    grad_biases.setZero();
}

void SoftMaxHead::sgd_step(const TrainConfig& cfg, int epoch) {
    const double lr = cfg.lr_at(epoch);
    nesterov_update(weights, grad_weights, vel_weights, lr, cfg.momentum, cfg.weight_decay);
    nesterov_update(biases, grad_biases, vel_biases, lr, cfg.momentum, cfg.weight_decay);
}

IsoMaxHead IsoMaxHead::init(int n_classes, int embed_dim, double entropic_scale) {
    if (n_classes < 2 || embed_dim < 1) {
        throw ContractError("IsoMaxHead::init: need n_classes >= 2, embed_dim >= 1");
    }
    if (entropic_scale <= 0.0) {
        throw ContractError("IsoMaxHead::init: entropic_scale must be positive");
    }
    IsoMaxHead h;
    h.prototypes = Matrix::Zero(n_classes, embed_dim);
    h.entropic_scale = entropic_scale;
    h.grad_prototypes = Matrix::Zero(n_classes, embed_dim);
    h.vel_prototypes = Matrix::Zero(n_classes, embed_dim);
    return h;
}

void IsoMaxHead::zero_grad() {
    grad_prototypes.setZero();
}

void IsoMaxHead::sgd_step(const TrainConfig& cfg, int epoch) {
    nesterov_update(prototypes, grad_prototypes, vel_prototypes,
                    cfg.lr_at(epoch), cfg.momentum, cfg.weight_decay);
}

Matrix softmax_head_logits(const SoftMaxHead& head, const Matrix& embeddings) {
    if (embeddings.cols() != head.weights.cols()) {
        throw DimensionError("softmax_head_logits: embedding width mismatch");
    }
    Matrix logits = embeddings * head.weights.transpose();
    logits.rowwise() += head.biases.transpose();
    return logits;
}

Matrix isomax_logits(const IsoMaxHead& head, const Matrix& embeddings) {
    return -head.entropic_scale *
           pairwise_euclidean(embeddings, head.prototypes, kDistanceFloor);
}

LossResult softmax_head_loss(SoftMaxHead& head, const Matrix& embeddings,
                             const std::vector<int>& labels) {
    const Eigen::Index n = embeddings.rows();
    check_labels(labels, n, head.n_classes());
    const Matrix logits = softmax_head_logits(head, embeddings);
    const Matrix probs = stable_softmax(logits);

    // Fused -logit_k + logsumexp; the two-step separation is IsoMax-only.
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = logits.row(i).maxCoeff();
        const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
        loss += lse - logits(i, labels[static_cast<std::size_t>(i)]);
    }
    loss /= static_cast<double>(n);

    Matrix grad_logits = probs;
    for (Eigen::Index i = 0; i < n; ++i) {
        grad_logits(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    }
    grad_logits /= static_cast<double>(n);

    head.grad_weights = grad_logits.transpose() * embeddings;
    head.grad_biases = grad_logits.colwise().sum().transpose();

    LossResult result;
    result.mean_loss = loss;
    result.grad_embeddings = grad_logits * head.weights;
    require_finite(result.grad_embeddings, "softmax_head_loss gradients");
    return result;
}

LossResult isomax_loss(IsoMaxHead& head, const Matrix& embeddings,
                       const std::vector<int>& labels) {
    const Eigen::Index n = embeddings.rows();
    const Eigen::Index n_cls = head.prototypes.rows();
    check_labels(labels, n, head.n_classes());

    const Matrix dist = pairwise_euclidean(embeddings, head.prototypes, kDistanceFloor);
    const Matrix probs = stable_softmax(-head.entropic_scale * dist);

    // Probability and logarithm as separate steps, clamped before the log.
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        loss -= std::log(std::max(probs(i, labels[static_cast<std::size_t>(i)]), kProbFloor));
    }
    loss /= static_cast<double>(n);

    // dL/d dist(i,j) = -E_s * (p_ij - [j == label_i]) / n
    Matrix grad_dist = probs;
    for (Eigen::Index i = 0; i < n; ++i) {
        grad_dist(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    }
    grad_dist *= -head.entropic_scale / static_cast<double>(n);

    LossResult result;
    result.mean_loss = loss;
    result.grad_embeddings = Matrix::Zero(n, embeddings.cols());
    head.grad_prototypes.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n_cls; ++j) {
            // d dist/df = (f - p)/dist with the floored distance.
            const auto diff = embeddings.row(i) - head.prototypes.row(j);
            const double scale = grad_dist(i, j) / dist(i, j);
            result.grad_embeddings.row(i) += scale * diff;
            head.grad_prototypes.row(j) -= scale * diff;
        }
    }
    require_finite(result.grad_embeddings, "isomax_loss embedding gradients");
    require_finite(head.grad_prototypes, "isomax_loss prototype gradients");
    return result;
}

}  // namespace eod
