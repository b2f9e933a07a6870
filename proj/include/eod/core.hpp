#ifndef EOD_CORE_HPP
#define EOD_CORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace eod {

// Row-major dense doubles everywhere. All batch arrays are n x width.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Distance floor: keeps the (f - p)/d gradient bounded when an embedding
// lands exactly on a prototype (reachable, prototypes start at zero).
inline constexpr double kDistanceFloor = 1e-6;

// Clamp applied to a probability before any logarithm.
inline constexpr double kProbFloor = 1e-12;

void require_finite(const Matrix& m, const std::string& what);

Matrix matmul(const Matrix& a, const Matrix& b);

// Per-row max-subtracted softmax. Rows sum to 1 within 1e-12.
Matrix stable_softmax(const Matrix& logits);

// d(i,j) = max(||emb.row(i) - protos.row(j)||, eps). Nonsquared Euclidean.
Matrix pairwise_euclidean(const Matrix& embeddings, const Matrix& prototypes,
                          double eps = kDistanceFloor);

// Shannon entropy in nats, one value per row. Rows must sum to 1 within 1e-6.
Vector entropy(const Matrix& probs);

// Lowest index wins ties.
Eigen::Index argmax_row(const Matrix& probs, Eigen::Index row);
std::vector<int> argmax_rows(const Matrix& probs);

// xoshiro256** seeded through splitmix64. Identical seed gives an identical
// stream on every platform. Normal variates via Box-Muller.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);
    double normal();                        // standard normal
    double normal(double mean, double stddev);
    // Unbiased integer in [0, bound).
    std::uint64_t bounded(std::uint64_t bound);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[bounded(i)]);
        }
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t state_[4];
    std::uint64_t seed_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace eod

#endif
