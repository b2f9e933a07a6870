#include "eod/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace eod;

namespace {

// O(m*k) pair-counting oracle for AUROC.
double auroc_brute(const ScoreSet& s) {
    double wins = 0.0;
    for (double a : s.in_scores) {
        for (double b : s.out_scores) {
            if (a > b) {
                wins += 1.0;
            } else if (a == b) {
                wins += 0.5;
            }
        }
    }
    return wins / (static_cast<double>(s.in_scores.size()) *
                   static_cast<double>(s.out_scores.size()));
}

// Exhaustive-threshold oracle for the TPR-quantile rule: the largest delta
// (over observed score values) with frac(in >= delta) >= target.
double tnr_brute(const ScoreSet& s, double target) {
    std::vector<double> candidates = s.in_scores;
    double best_delta = -std::numeric_limits<double>::infinity();
    for (double delta : candidates) {
        std::size_t cnt = 0;
        for (double v : s.in_scores) {
            if (v >= delta) {
                ++cnt;
            }
        }
        const double tpr = static_cast<double>(cnt) / static_cast<double>(s.in_scores.size());
        if (tpr >= target - 1e-15) {
            best_delta = std::max(best_delta, delta);
        }
    }
    std::size_t below = 0;
    for (double v : s.out_scores) {
        if (v < best_delta) {
            ++below;
        }
    }
    return static_cast<double>(below) / static_cast<double>(s.out_scores.size());
}

double dtacc_brute(const ScoreSet& s) {
    std::vector<double> candidates;
    candidates.insert(candidates.end(), s.in_scores.begin(), s.in_scores.end());
    candidates.insert(candidates.end(), s.out_scores.begin(), s.out_scores.end());
    candidates.push_back(std::numeric_limits<double>::lowest());
    candidates.push_back(std::numeric_limits<double>::max());
    double best = 0.0;
    for (double delta : candidates) {
        std::size_t tp = 0, tn = 0;
        for (double v : s.in_scores) {
            if (v >= delta) {
                ++tp;
            }
        }
        for (double v : s.out_scores) {
            if (v < delta) {
                ++tn;
            }
        }
        best = std::max(best,
                        0.5 * (static_cast<double>(tp) / s.in_scores.size() +
                               static_cast<double>(tn) / s.out_scores.size()));
    }
    return best;
}

ScoreSet random_set(Rng& rng, std::size_t m, std::size_t k, bool with_ties) {
    ScoreSet s;
    for (std::size_t i = 0; i < m; ++i) {
        double v = rng.normal() + 1.0;
        if (with_ties) {
            v = std::round(v * 4.0) / 4.0;
        }
        s.in_scores.push_back(v);
    }
    for (std::size_t i = 0; i < k; ++i) {
        double v = rng.normal();
        if (with_ties) {
            v = std::round(v * 4.0) / 4.0;
        }
        s.out_scores.push_back(v);
    }
    return s;
}

}  // namespace

TEST_CASE("auroc on perfect separation and identical distributions") {
    CHECK(auroc({{3, 4}, {1, 2}}) == 1.0);
    CHECK(auroc({{1, 2, 3}, {1, 2, 3}}) == 0.5);
    CHECK_THROWS_AS(auroc({{}, {1.0}}), ContractError);
}

TEST_CASE("auroc matches brute-force pair counting") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const ScoreSet s = random_set(rng, 200, 200, trial % 2 == 0);
        CHECK(std::abs(auroc(s) - auroc_brute(s)) < 1e-12);
    }
}

TEST_CASE("auroc swap antisymmetry") {
    Rng rng(19);
    for (int trial = 0; trial < 20; ++trial) {
        const ScoreSet s = random_set(rng, 80, 110, trial % 2 == 0);
        const ScoreSet swapped{s.out_scores, s.in_scores};
        CHECK(std::abs(auroc(s) + auroc(swapped) - 1.0) < 1e-12);
    }
}

TEST_CASE("tnr_at_tpr on disjoint supports and identical multisets") {
    ScoreSet disjoint;
    disjoint.in_scores.assign(10, 1.0);
    disjoint.out_scores.assign(10, 0.0);
    CHECK(tnr_at_tpr(disjoint, 0.95) == 1.0);

    ScoreSet same;
    for (int i = 1; i <= 100; ++i) {
        same.in_scores.push_back(i);
        same.out_scores.push_back(i);
    }
    CHECK(tnr_at_tpr(same, 0.95) == doctest::Approx(0.05));
    // Identical distributions: whatever TPR the threshold admits, the same
    // fraction of out-scores passes it, so FPR@TPR90 is 0.90 (TNR 0.10).
    CHECK(fpr_at_tpr(same, 0.90) == doctest::Approx(0.90));
}

TEST_CASE("tnr_at_tpr matches the exhaustive-threshold oracle") {
    ScoreSet shifted;
    for (int i = 1; i <= 100; ++i) {
        shifted.in_scores.push_back(i + 0.5);
        shifted.out_scores.push_back(i);
    }
    CHECK(tnr_at_tpr(shifted, 0.95) == doctest::Approx(tnr_brute(shifted, 0.95)));

    Rng rng(23);
    for (int trial = 0; trial < 25; ++trial) {
        const ScoreSet s = random_set(rng, 150, 130, trial % 2 == 0);
        for (double target : {0.9, 0.95}) {
            CHECK(tnr_at_tpr(s, target) == doctest::Approx(tnr_brute(s, target)).epsilon(1e-12));
        }
    }
}

TEST_CASE("fpr complements tnr") {
    Rng rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const ScoreSet s = random_set(rng, 90, 70, trial % 2 == 0);
        CHECK(std::abs(fpr_at_tpr(s, 0.9) + tnr_at_tpr(s, 0.9) - 1.0) < 1e-12);
    }
    ScoreSet disjoint;
    disjoint.in_scores.assign(5, 2.0);
    disjoint.out_scores.assign(5, -2.0);
    CHECK(fpr_at_tpr(disjoint, 0.90) == 0.0);
}

TEST_CASE("tnr_at_tpr is non-increasing in the target") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const ScoreSet s = random_set(rng, 120, 120, trial % 2 == 0);
        double prev = 1.0;
        for (double target : {0.5, 0.7, 0.9, 0.95, 0.99}) {
            const double v = tnr_at_tpr(s, target);
            CHECK(v <= prev + 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("dtacc hand cases and brute force") {
    CHECK(dtacc({{3, 4}, {1, 2}}) == 1.0);
    CHECK(dtacc({{1, 2, 3}, {1, 2, 3}}) == 0.5);

    Rng rng(37);
    for (int trial = 0; trial < 25; ++trial) {
        const ScoreSet s = random_set(rng, 100, 100, trial % 2 == 0);
        CHECK(dtacc(s) == dtacc_brute(s));
        CHECK(dtacc(s) >= 0.5);
        CHECK(dtacc(s) <= 1.0);
    }
}

TEST_CASE("metrics invariant under strictly increasing transforms") {
    Rng rng(41);
    const ScoreSet s = random_set(rng, 140, 160, true);
    auto apply = [&](auto f) {
        ScoreSet t;
        for (double v : s.in_scores) {
            t.in_scores.push_back(f(v));
        }
        for (double v : s.out_scores) {
            t.out_scores.push_back(f(v));
        }
        return t;
    };
    const ScoreSet affine = apply([](double x) { return 2.0 * x + 1.0; });
    const ScoreSet tanhed = apply([](double x) { return std::tanh(x); });
    for (const ScoreSet* t : {&affine, &tanhed}) {
        CHECK(auroc(*t) == auroc(s));
        CHECK(dtacc(*t) == dtacc(s));
        CHECK(tnr_at_tpr(*t, 0.95) == tnr_at_tpr(s, 0.95));
        CHECK(fpr_at_tpr(*t, 0.90) == fpr_at_tpr(s, 0.90));
    }
}

TEST_CASE("metrics json emits every field") {
    const ScoreSet s{{2, 3}, {0, 1}};
    const auto r = compute_metrics(s);
    const std::string j = metrics_to_json(r);
    CHECK(j.find("\"auroc\"") != std::string::npos);
    CHECK(j.find("\"dtacc\"") != std::string::npos);
    CHECK(j.find("\"tnr_at_tpr95\"") != std::string::npos);
    CHECK(j.find("\"fpr_at_tpr90\"") != std::string::npos);
    CHECK(j.find("\"m\": 2") != std::string::npos);
}
