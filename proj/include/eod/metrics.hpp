#ifndef EOD_METRICS_HPP
#define EOD_METRICS_HPP

#include "eod/core.hpp"

#include <string>
#include <vector>

namespace eod {

// in_scores are positives, out_scores negatives; higher score means more
// in-distribution. An example is classified in-distribution when score >= delta.
struct ScoreSet {
    std::vector<double> in_scores;
    std::vector<double> out_scores;

    void validate() const;
};

// Mann-Whitney statistic with the half-tie rule, via a single sort.
double auroc(const ScoreSet& s);

// delta = largest value with frac(in >= delta) >= tpr_target, i.e. the
// ceil(tpr_target * m)-th largest in-score. Returns frac(out < delta).
double tnr_at_tpr(const ScoreSet& s, double tpr_target = 0.95);
double fpr_at_tpr(const ScoreSet& s, double tpr_target = 0.90);

// Best balanced accuracy max over thresholds of (TPR + TNR) / 2, candidates
// at every distinct score plus the all-in / all-out sentinels.
double dtacc(const ScoreSet& s);

struct MetricsReport {
    double auroc;
    double dtacc;
    double tnr_at_tpr95;
    double fpr_at_tpr90;
    std::size_t m;  // in-distribution count
    std::size_t k;  // out-of-distribution count
};

MetricsReport compute_metrics(const ScoreSet& s);
std::string metrics_to_json(const MetricsReport& r);

}  // namespace eod

#endif
