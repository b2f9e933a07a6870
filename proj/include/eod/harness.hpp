#ifndef EOD_HARNESS_HPP
#define EOD_HARNESS_HPP

#include "eod/core.hpp"
#include "eod/datasets.hpp"
#include "eod/heads.hpp"
#include "eod/metrics.hpp"
#include "eod/network.hpp"
#include "eod/scoring.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace eod {

enum class HeadKind { softmax, isomax };
enum class DatasetKind { gaussian_ring, csv, idx };

struct DatasetSpec {
    DatasetKind kind = DatasetKind::gaussian_ring;
    // gaussian_ring
    int n_classes = 4;
    int per_class = 250;
    int dim = 2;
    double radius = 4.0;
    double sigma = 0.5;
    double ring_min = 7.0;
    double ring_max = 9.0;
    int ood_count = 500;
    double train_fraction = 0.8;
    // csv
    std::string in_csv;
    int label_column = 0;
    std::string out_csv;
    // idx
    std::string in_train_images, in_train_labels;
    std::string in_test_images, in_test_labels;
    std::string out_images;
};

struct ArchSpec {
    std::vector<int> hidden_dims = {64, 64};
    int embed_dim = 16;
};

struct ExperimentConfig {
    DatasetSpec data;
    ArchSpec arch;
    HeadKind head = HeadKind::isomax;
    double entropic_scale = 10.0;
    ScoreKind score = ScoreKind::entropic;
    double inference_temperature = 1.0;
    TrainConfig train;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string out_dir = "out";

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig parse(std::istream& is, const std::string& origin);
    void validate() const;

    // Canonical key=value listing of every resolved field; what gets hashed
    // and embedded in reports.
    std::string resolved_text() const;
    std::uint64_t config_hash() const;
};

struct TrainedModel {
    HeadKind head_kind;
    ModelParams backbone;
    std::optional<SoftMaxHead> softmax_head;
    std::optional<IsoMaxHead> isomax_head;
    Standardizer standardizer;  // fit on raw in_train features

    int n_classes() const;
    void save(const std::string& path) const;
    static TrainedModel load(const std::string& path);
};

struct SeedResult {
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    MetricsReport metrics{};
    double mean_in_entropy = 0.0;
    double mean_out_entropy = 0.0;
    // IsoMax only: entropy with the entropic scale left in the logits.
    double mean_in_entropy_scale_retained = 0.0;
};

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;  // sample stddev, 0 when a single seed
};

struct DetectionReport {
    std::string resolved_config;
    std::uint64_t config_hash = 0;
    std::string code_version;
    std::vector<std::uint64_t> seeds;
    std::vector<SeedResult> per_seed;
    Aggregate accuracy, auroc, dtacc, tnr_at_tpr95, fpr_at_tpr90;
    Aggregate mean_in_entropy, mean_out_entropy;
};

// Deterministic sub-streams derived from one experiment seed.
struct SeedStreams {
    std::uint64_t data;
    std::uint64_t ood;
    std::uint64_t init;
    std::uint64_t shuffle;
};
SeedStreams derive_streams(std::uint64_t seed);

OodPair prepare_data(const ExperimentConfig& cfg, std::uint64_t seed);
TrainedModel train_model(const ExperimentConfig& cfg, const OodPair& pair,
                         std::uint64_t seed);
SeedResult evaluate_model(const ExperimentConfig& cfg, const TrainedModel& model,
                          const OodPair& pair, std::uint64_t seed,
                          std::vector<ScoredExample>* in_scored = nullptr,
                          std::vector<ScoredExample>* out_scored = nullptr);

// Full protocol: per seed, prepare + train + score + metrics; writes
// report.json, scores_seed<N>.csv and model_seed<N>.ckpt under cfg.out_dir.
DetectionReport run_experiment(const ExperimentConfig& cfg);

void write_report_json(const std::string& path, const DetectionReport& report);
DetectionReport load_report_json(const std::string& path);

struct SweepRow {
    double scale;
    double accuracy;
    double auroc;
    double mean_in_entropy;
    double mean_out_entropy;
};

// One isomax run_experiment per scale; writes sweep.csv plus per-scale
// entropy histograms under cfg.out_dir.
std::vector<SweepRow> entropic_scale_sweep(const ExperimentConfig& cfg,
                                           const std::vector<double>& scales);

struct HistogramRow {
    std::string kind;  // "entropy" or "max_prob"
    double bin_lo;
    double bin_hi;
    std::size_t in_count;
    std::size_t out_count;
};

std::vector<HistogramRow> make_histograms(const std::vector<ScoredExample>& in_examples,
                                          const std::vector<ScoredExample>& out_examples,
                                          int n_classes, int bins);
// Takes "in" rows from the first CSV and "out" rows from the second.
void emit_histograms(const std::string& score_csv_in, const std::string& score_csv_out,
                     int n_classes, int bins, const std::string& out_path);

struct MetricDelta {
    std::string metric;
    double a;
    double b;
    double delta;  // a - b
};

// Requires identical dataset spec and seed list in both reports.
std::vector<MetricDelta> compare_report(const DetectionReport& a, const DetectionReport& b);

}  // namespace eod

#endif
