#include "eod/scoring.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace eod {

namespace {

void check_temperature(double t) {
    if (t <= 0.0) {
        throw ContractError("inference: temperature must be positive");
    }
}

}  // namespace

Matrix isomax_inference_probs(const IsoMaxHead& head, const Matrix& embeddings,
                              double temperature) {
    check_temperature(temperature);
    const Matrix dist = pairwise_euclidean(embeddings, head.prototypes, kDistanceFloor);
    return stable_softmax(-dist / temperature);
}

Matrix softmax_inference_probs(const SoftMaxHead& head, const Matrix& embeddings,
                               double temperature) {
    check_temperature(temperature);
    return stable_softmax(softmax_head_logits(head, embeddings) / temperature);
}

Vector entropic_score(const Matrix& probs) {
    return -entropy(probs);
}

Vector max_prob_score(const Matrix& probs) {
    Vector s(probs.rows());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const double sum = probs.row(i).sum();
        if (std::abs(sum - 1.0) > 1e-6 || probs.row(i).minCoeff() < 0.0) {
            throw ContractError("max_prob_score: row is not a probability distribution");
        }
        s(i) = probs.row(i).maxCoeff();
    }
    return s;
}

std::vector<ScoredExample> score_examples(const Matrix& probs, ScoreKind kind) {
    const Vector ent = entropy(probs);
    const Vector mp = max_prob_score(probs);
    std::vector<ScoredExample> out;
    out.reserve(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        ScoredExample e;
        e.predicted_class = static_cast<int>(argmax_row(probs, i));
        e.entropy = ent(i);
        e.max_prob = mp(i);
        e.score = kind == ScoreKind::entropic ? -ent(i) : mp(i);
        out.push_back(e);
    }
    return out;
}

void write_score_csv(const std::string& path,
                     const std::vector<ScoredExample>& in_examples,
                     const std::vector<ScoredExample>& out_examples) {
    std::ofstream os(path);
    if (!os) {
        throw ParseError("score csv: cannot open for writing: " + path);
    }
    os << "example_id,origin,predicted_class,max_prob,entropy,score\n";
    int id = 0;
    char buf[128];
    auto emit = [&](const ScoredExample& e, const char* origin) {
        std::snprintf(buf, sizeof(buf), "%d,%s,%d,%.17g,%.17g,%.17g\n",
                      id++, origin, e.predicted_class, e.max_prob, e.entropy, e.score);
        os << buf;
    };
    for (const auto& e : in_examples) {
        emit(e, "in");
    }
    for (const auto& e : out_examples) {
        emit(e, "out");
    }
}

std::vector<ScoreCsvRow> read_score_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw ParseError("score csv: cannot open: " + path);
    }
    std::string line;
    if (!std::getline(is, line)) {
        throw ParseError("score csv: empty file: " + path);
    }
    std::vector<ScoreCsvRow> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        ScoreCsvRow row;
        char origin[8];
        if (std::sscanf(line.c_str(), "%d,%7[^,],%d,%lf,%lf,%lf", &row.example_id, origin,
                        &row.predicted_class, &row.max_prob, &row.entropy, &row.score) != 6) {
            throw ParseError("score csv: malformed line " + std::to_string(lineno) +
                             " in " + path);
        }
        row.origin = origin;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace eod
