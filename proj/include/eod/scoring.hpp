#ifndef EOD_SCORING_HPP
#define EOD_SCORING_HPP

#include "eod/core.hpp"
#include "eod/heads.hpp"

#include <string>
#include <vector>

namespace eod {

enum class ScoreKind { entropic, max_prob };

// Score orientation is always higher-is-in-distribution.
struct ScoredExample {
    double score;
    int predicted_class;
    double entropy;
    double max_prob;
};

// Inference probabilities with the entropic scale removed from the logits.
// temperature exists only for the calibration comparison; default 1.
Matrix isomax_inference_probs(const IsoMaxHead& head, const Matrix& embeddings,
                              double temperature = 1.0);
Matrix softmax_inference_probs(const SoftMaxHead& head, const Matrix& embeddings,
                               double temperature = 1.0);

Vector entropic_score(const Matrix& probs);
Vector max_prob_score(const Matrix& probs);

std::vector<ScoredExample> score_examples(const Matrix& probs, ScoreKind kind);

// CSV: example_id,origin,predicted_class,max_prob,entropy,score
void write_score_csv(const std::string& path,
                     const std::vector<ScoredExample>& in_examples,
                     const std::vector<ScoredExample>& out_examples);

struct ScoreCsvRow {
    int example_id;
    std::string origin;  // "in" or "out"
    int predicted_class;
    double max_prob;
    double entropy;
    double score;
};
std::vector<ScoreCsvRow> read_score_csv(const std::string& path);

}  // namespace eod

#endif
