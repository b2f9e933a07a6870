#include "eod/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace eod {

void ScoreSet::validate() const {
    if (in_scores.empty() || out_scores.empty()) {
        throw ContractError("ScoreSet: both sides must be non-empty");
    }
    for (double v : in_scores) {
        if (!std::isfinite(v)) {
            throw ContractError("ScoreSet: non-finite in-distribution score");
        }
    }
    for (double v : out_scores) {
        if (!std::isfinite(v)) {
            throw ContractError("ScoreSet: non-finite out-of-distribution score");
        }
    }
}

double auroc(const ScoreSet& s) {
    s.validate();
    std::vector<double> out_sorted = s.out_scores;
    std::sort(out_sorted.begin(), out_sorted.end());
    double wins = 0.0;
    for (double v : s.in_scores) {
        const auto lo = std::lower_bound(out_sorted.begin(), out_sorted.end(), v);
        const auto hi = std::upper_bound(lo, out_sorted.end(), v);
        wins += static_cast<double>(lo - out_sorted.begin());
        wins += 0.5 * static_cast<double>(hi - lo);
    }
    return wins / (static_cast<double>(s.in_scores.size()) *
                   static_cast<double>(s.out_scores.size()));
}

double tnr_at_tpr(const ScoreSet& s, double tpr_target) {
    s.validate();
    if (tpr_target <= 0.0 || tpr_target >= 1.0) {
        throw ContractError("tnr_at_tpr: target must be in (0, 1)");
    }
    std::vector<double> in_sorted = s.in_scores;
    std::sort(in_sorted.begin(), in_sorted.end(), std::greater<>());
    const std::size_t m = in_sorted.size();
    const auto t = static_cast<std::size_t>(
        std::ceil(tpr_target * static_cast<double>(m) - 1e-12));
    const double delta = in_sorted[std::min(t, m) - 1];
    std::size_t below = 0;
    for (double v : s.out_scores) {
        if (v < delta) {
            ++below;
        }
    }
    return static_cast<double>(below) / static_cast<double>(s.out_scores.size());
}

double fpr_at_tpr(const ScoreSet& s, double tpr_target) {
    return 1.0 - tnr_at_tpr(s, tpr_target);
}

double dtacc(const ScoreSet& s) {
    s.validate();
    std::vector<double> in_sorted = s.in_scores;
    std::vector<double> out_sorted = s.out_scores;
    std::sort(in_sorted.begin(), in_sorted.end());
    std::sort(out_sorted.begin(), out_sorted.end());
    const double m = static_cast<double>(in_sorted.size());
    const double k = static_cast<double>(out_sorted.size());

    std::vector<double> candidates;
    candidates.reserve(in_sorted.size() + out_sorted.size());
    candidates.insert(candidates.end(), in_sorted.begin(), in_sorted.end());
    candidates.insert(candidates.end(), out_sorted.begin(), out_sorted.end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // Sentinels: everything classified in (delta = -inf) or out (delta = +inf)
    // both give balanced accuracy 1/2.
    double best = 0.5;
    for (double delta : candidates) {
        const double tp = static_cast<double>(
            in_sorted.end() - std::lower_bound(in_sorted.begin(), in_sorted.end(), delta));
        const double tn = static_cast<double>(
            std::lower_bound(out_sorted.begin(), out_sorted.end(), delta) - out_sorted.begin());
        best = std::max(best, 0.5 * (tp / m + tn / k));
    }
    return best;
}

MetricsReport compute_metrics(const ScoreSet& s) {
    MetricsReport r;
    r.auroc = auroc(s);
    r.dtacc = dtacc(s);
    r.tnr_at_tpr95 = tnr_at_tpr(s, 0.95);
    r.fpr_at_tpr90 = fpr_at_tpr(s, 0.90);
    r.m = s.in_scores.size();
    r.k = s.out_scores.size();
    return r;
}

std::string metrics_to_json(const MetricsReport& r) {
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "{\"auroc\": %.17g, \"dtacc\": %.17g, \"tnr_at_tpr95\": %.17g, "
                  "\"fpr_at_tpr90\": %.17g, \"m\": %zu, \"k\": %zu}",
                  r.auroc, r.dtacc, r.tnr_at_tpr95, r.fpr_at_tpr90, r.m, r.k);
    return buf;
}

}  // namespace eod
