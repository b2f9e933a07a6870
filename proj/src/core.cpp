#include "eod/core.hpp"

#include <cmath>

namespace eod {

void require_finite(const Matrix& m, const std::string& what) {
    if (!m.allFinite()) {
        throw NumericError(what + ": non-finite value");
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions disagree (" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + ")");
    }
    return a * b;
}

Matrix stable_softmax(const Matrix& logits) {
    require_finite(logits, "stable_softmax input");
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        out.row(i) = (logits.row(i).array() - m).exp();
        out.row(i) /= out.row(i).sum();
    }
    return out;
}

Matrix pairwise_euclidean(const Matrix& embeddings, const Matrix& prototypes, double eps) {
    if (embeddings.cols() != prototypes.cols()) {
        throw DimensionError("pairwise_euclidean: feature widths disagree");
    }
    if (eps <= 0.0) {
        throw ContractError("pairwise_euclidean: eps must be positive");
    }
    Matrix d(embeddings.rows(), prototypes.rows());
    for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
        for (Eigen::Index j = 0; j < prototypes.rows(); ++j) {
            const double raw = (embeddings.row(i) - prototypes.row(j)).norm();
            d(i, j) = std::max(raw, eps);
        }
    }
    return d;
}

Vector entropy(const Matrix& probs) {
    Vector h(probs.rows());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const double sum = probs.row(i).sum();
        if (std::abs(sum - 1.0) > 1e-6 || probs.row(i).minCoeff() < 0.0) {
            throw ContractError("entropy: row " + std::to_string(i) +
                                " is not a probability distribution");
        }
        double acc = 0.0;
        for (Eigen::Index j = 0; j < probs.cols(); ++j) {
            const double p = probs(i, j);
            acc -= p * std::log(std::max(p, kProbFloor));
        }
        h(i) = acc;
    }
    return h;
}

Eigen::Index argmax_row(const Matrix& probs, Eigen::Index row) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < probs.cols(); ++j) {
        if (probs(row, j) > probs(row, best)) {
            best = j;
        }
    }
    return best;
}

std::vector<int> argmax_rows(const Matrix& probs) {
    std::vector<int> out(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        out[static_cast<std::size_t>(i)] = static_cast<int>(argmax_row(probs, i));
    }
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& s : state_) {
        s = splitmix64(sm);
    }
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

double Rng::normal(double mean, double stddev) {
    return mean + stddev * normal();
}

std::uint64_t Rng::bounded(std::uint64_t bound) {
    if (bound == 0) {
        throw ContractError("Rng::bounded: bound must be positive");
    }
    const std::uint64_t threshold = (0ULL - bound) % bound;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) {
            return r % bound;
        }
    }
}

}  // namespace eod
