#include "eod/scoring.hpp"
#include "eod/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace eod;

TEST_CASE("isomax inference probabilities") {
    auto head = IsoMaxHead::init(3, 2);
    const Matrix emb = Matrix::Zero(2, 2);
    const Matrix p = isomax_inference_probs(head, emb);
    CHECK(p(0, 0) == doctest::Approx(1.0 / 3.0));  // equal distances -> uniform

    // d = [1, 2] -> p0 = 1 / (1 + e^-1)
    auto two = IsoMaxHead::init(2, 1);
    two.prototypes(0, 0) = 0.0;
    two.prototypes(1, 0) = 3.0;
    Matrix e(1, 1);
    e << 1.0;
    const Matrix p2 = isomax_inference_probs(two, e);
    CHECK(std::abs(p2(0, 0) - 1.0 / (1.0 + std::exp(-1.0))) < 1e-9);
    CHECK(p2(0, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-9));

    // Sharper at T = 0.1.
    const Matrix sharp = isomax_inference_probs(two, e, 0.1);
    CHECK(sharp.row(0).maxCoeff() > p2.row(0).maxCoeff());

    CHECK_THROWS_AS(isomax_inference_probs(two, e, 0.0), ContractError);
}

TEST_CASE("softmax inference probabilities") {
    Rng rng(1);
    auto head = SoftMaxHead::init(4, 3, rng);
    head.weights.setZero();
    head.biases.setZero();
    const Matrix p = softmax_inference_probs(head, Matrix::Zero(2, 3));
    CHECK(p(1, 2) == doctest::Approx(0.25));

    auto id = SoftMaxHead::init(2, 2, rng);
    id.weights = Matrix::Identity(2, 2);
    id.biases.setZero();
    Matrix emb(1, 2);
    emb << 1.0, 2.0;
    const Matrix q = softmax_inference_probs(id, emb);
    CHECK(q(0, 0) == doctest::Approx(0.2689414213699951).epsilon(1e-9));

    // argmax invariant under any temperature.
    for (double t : {0.1, 0.5, 2.0, 10.0}) {
        const Matrix qt = softmax_inference_probs(id, emb, t);
        CHECK(argmax_row(qt, 0) == argmax_row(q, 0));
    }
}

TEST_CASE("entropic and max-prob scores") {
    Matrix p(3, 4);
    p << 1, 0, 0, 0,
         0.25, 0.25, 0.25, 0.25,
         0.5, 0.25, 0.25, 0.0;
    const Vector es = entropic_score(p);
    CHECK(es(0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(es(1) == doctest::Approx(-std::log(4.0)).epsilon(1e-6));
    CHECK(es(2) == doctest::Approx(-1.0397207708399179).epsilon(1e-6));

    const Vector mp = max_prob_score(p);
    CHECK(mp(0) == 1.0);
    CHECK(mp(1) == 0.25);
    CHECK(mp(2) == 0.5);

    Matrix bad(1, 2);
    bad << 0.9, 0.9;
    CHECK_THROWS_AS(max_prob_score(bad), ContractError);
}

TEST_CASE("scores are permutation-invariant over classes") {
    Matrix p(1, 4);
    p << 0.1, 0.4, 0.3, 0.2;
    Matrix q(1, 4);
    q << 0.4, 0.2, 0.1, 0.3;
    CHECK(entropic_score(p)(0) == doctest::Approx(entropic_score(q)(0)).epsilon(1e-12));
    CHECK(max_prob_score(p)(0) == max_prob_score(q)(0));
}

TEST_CASE("binary case: entropic and max-prob scores rank identically") {
    Rng rng(2);
    ScoreSet es_set, mp_set;
    auto add = [&](std::vector<double>& es_v, std::vector<double>& mp_v, int count) {
        for (int i = 0; i < count; ++i) {
            Matrix logits(1, 2);
            logits << rng.normal() * 2.0, rng.normal() * 2.0;
            const Matrix p = stable_softmax(logits);
            es_v.push_back(entropic_score(p)(0));
            mp_v.push_back(max_prob_score(p)(0));
        }
    };
    add(es_set.in_scores, mp_set.in_scores, 150);
    add(es_set.out_scores, mp_set.out_scores, 150);
    CHECK(std::abs(auroc(es_set) - auroc(mp_set)) < 1e-9);
}

TEST_CASE("score csv round trip") {
    const std::string path = std::filesystem::temp_directory_path() / "eod_scores_test.csv";
    std::vector<ScoredExample> in = {{-0.1, 2, 0.1, 0.9}, {-0.5, 0, 0.5, 0.6}};
    std::vector<ScoredExample> out = {{-1.2, 1, 1.2, 0.4}};
    write_score_csv(path, in, out);
    const auto rows = read_score_csv(path);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].origin == "in");
    CHECK(rows[2].origin == "out");
    CHECK(rows[1].score == -0.5);
    CHECK(rows[2].entropy == 1.2);
    CHECK(rows[2].predicted_class == 1);
    std::filesystem::remove(path);
}
