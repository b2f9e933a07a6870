#ifndef EOD_NETWORK_HPP
#define EOD_NETWORK_HPP

#include "eod/core.hpp"

#include <vector>

namespace eod {

enum class Activation { relu, none };

struct LayerSpec {
    int in_dim;
    int out_dim;
    Activation activation;
};

// One affine layer with its gradient and momentum buffers.
struct DenseLayer {
    Matrix weight;    // out x in
    Vector bias;      // out
    Activation activation;
    Matrix grad_weight;
    Vector grad_bias;
    Matrix vel_weight;
    Vector vel_bias;
};

struct TrainConfig {
    double lr0 = 0.1;
    double momentum = 0.9;          // Nesterov
    double weight_decay = 1e-4;
    int epochs = 200;
    int batch_size = 64;
    double lr_decay_factor = 10.0;
    std::vector<int> lr_milestones = {100, 150};
    std::uint64_t seed = 0;

    double lr_at(int epoch) const;
    void validate() const;
};

struct ForwardCache {
    std::vector<Matrix> inputs;          // input to each layer
    std::vector<Matrix> pre_activations; // affine outputs before activation
};

class ModelParams {
public:
    ModelParams() = default;

    // Kaiming-normal for relu layers, Xavier-normal otherwise; biases zero.
    static ModelParams init(const std::vector<LayerSpec>& specs, Rng& rng);

    Matrix forward(const Matrix& batch, ForwardCache* cache = nullptr) const;

    // Fills grad_weight/grad_bias from a forward cache and the gradient of the
    // loss w.r.t. the embeddings. Returns nothing else.
    void backward(const ForwardCache& cache, const Matrix& grad_embeddings);

    void zero_grad();
    void sgd_step(const TrainConfig& cfg, int epoch);

    int in_dim() const;
    int embedding_dim() const;
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }

private:
    std::vector<DenseLayer> layers_;
};

// Nesterov momentum with weight decay folded into the gradient:
//   g <- g + wd * p;  v <- mu * v + g;  p <- p - lr * (g + mu * v)
void nesterov_update(Matrix& param, const Matrix& grad, Matrix& vel,
                     double lr, double momentum, double weight_decay);
void nesterov_update(Vector& param, const Vector& grad, Vector& vel,
                     double lr, double momentum, double weight_decay);

}  // namespace eod

#endif
