#include "eod/network.hpp"

#include <algorithm>
#include <cmath>

namespace eod {

double TrainConfig::lr_at(int epoch) const {
    int hit = 0;
    for (int m : lr_milestones) {
        if (m <= epoch) {
            ++hit;
        }
    }
    return lr0 / std::pow(lr_decay_factor, hit);
}

void TrainConfig::validate() const {
    if (lr0 <= 0.0) {
        throw ContractError("TrainConfig: lr0 must be positive");
    }
    if (momentum < 0.0 || momentum >= 1.0) {
        throw ContractError("TrainConfig: momentum must be in [0, 1)");
    }
    if (weight_decay < 0.0) {
        throw ContractError("TrainConfig: weight_decay must be non-negative");
    }
    if (epochs < 1 || batch_size < 1) {
        throw ContractError("TrainConfig: epochs and batch_size must be positive");
    }
}

ModelParams ModelParams::init(const std::vector<LayerSpec>& specs, Rng& rng) {
    if (specs.empty()) {
        throw ContractError("ModelParams::init: empty layer spec");
    }
    for (std::size_t i = 0; i + 1 < specs.size(); ++i) {
        if (specs[i].out_dim != specs[i + 1].in_dim) {
            throw ContractError("ModelParams::init: dimension chain mismatch at layer " +
                                std::to_string(i));
        }
    }
    ModelParams p;
    for (const auto& spec : specs) {
        if (spec.in_dim < 1 || spec.out_dim < 1) {
            throw ContractError("ModelParams::init: non-positive layer dimension");
        }
        DenseLayer layer;
        layer.activation = spec.activation;
        layer.weight.resize(spec.out_dim, spec.in_dim);
        const double std_dev = spec.activation == Activation::relu
                                   ? std::sqrt(2.0 / spec.in_dim)    // Kaiming
                                   : std::sqrt(2.0 / (spec.in_dim + spec.out_dim));  // Xavier
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
                layer.weight(r, c) = rng.normal(0.0, std_dev);
            }
        }
        layer.bias = Vector::Zero(spec.out_dim);
        layer.grad_weight = Matrix::Zero(spec.out_dim, spec.in_dim);
        layer.grad_bias = Vector::Zero(spec.out_dim);
        layer.vel_weight = Matrix::Zero(spec.out_dim, spec.in_dim);
        layer.vel_bias = Vector::Zero(spec.out_dim);
        p.layers_.push_back(std::move(layer));
    }
    return p;
}

int ModelParams::in_dim() const {
    return static_cast<int>(layers_.front().weight.cols());
}

int ModelParams::embedding_dim() const {
    return static_cast<int>(layers_.back().weight.rows());
}

Matrix ModelParams::forward(const Matrix& batch, ForwardCache* cache) const {
    if (batch.cols() != layers_.front().weight.cols()) {
        throw DimensionError("forward: batch width " + std::to_string(batch.cols()) +
                             " does not match first layer in_dim " +
                             std::to_string(layers_.front().weight.cols()));
    }
    if (cache) {
        cache->inputs.clear();
        cache->pre_activations.clear();
    }
    Matrix x = batch;
    for (const auto& layer : layers_) {
        if (cache) {
            cache->inputs.push_back(x);
        }
        Matrix z = x * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        if (cache) {
            cache->pre_activations.push_back(z);
        }
        if (layer.activation == Activation::relu) {
            x = z.cwiseMax(0.0);
        } else {
            x = std::move(z);
        }
    }
    require_finite(x, "forward embeddings");
    return x;
}

void ModelParams::backward(const ForwardCache& cache, const Matrix& grad_embeddings) {
    if (cache.inputs.size() != layers_.size() ||
        cache.pre_activations.size() != layers_.size()) {
        throw ContractError("backward: cache does not match this model");
    }
    Matrix grad = grad_embeddings;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        auto& layer = layers_[li];
        if (grad.rows() != cache.pre_activations[li].rows() ||
            grad.cols() != cache.pre_activations[li].cols()) {
            throw ContractError("backward: upstream gradient shape does not match cache");
        }
        Matrix grad_z = grad;
        if (layer.activation == Activation::relu) {
            grad_z = (cache.pre_activations[li].array() > 0.0)
                         .select(grad_z, Matrix::Zero(grad_z.rows(), grad_z.cols()));
        }
        layer.grad_weight = grad_z.transpose() * cache.inputs[li];
        layer.grad_bias = grad_z.colwise().sum().transpose();
        if (li > 0) {
            grad = grad_z * layer.weight;
        }
    }
}

void ModelParams::zero_grad() {
    for (auto& layer : layers_) {
        layer.grad_weight.setZero();
        layer.grad_bias.setZero();
    }
}

void nesterov_update(Matrix& param, const Matrix& grad, Matrix& vel,
                     double lr, double momentum, double weight_decay) {
    Matrix g = grad + weight_decay * param;
    vel = momentum * vel + g;
    param -= lr * (g + momentum * vel);
}

void nesterov_update(Vector& param, const Vector& grad, Vector& vel,
                     double lr, double momentum, double weight_decay) {
    Vector g = grad + weight_decay * param;
    vel = momentum * vel + g;
    param -= lr * (g + momentum * vel);
}

void ModelParams::sgd_step(const TrainConfig& cfg, int epoch) {
    const double lr = cfg.lr_at(epoch);
    for (auto& layer : layers_) {
        nesterov_update(layer.weight, layer.grad_weight, layer.vel_weight,
                        lr, cfg.momentum, cfg.weight_decay);
        nesterov_update(layer.bias, layer.grad_bias, layer.vel_bias,
                        lr, cfg.momentum, cfg.weight_decay);
    }
}

}  // namespace eod
