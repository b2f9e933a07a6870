#include "eod/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

eod::ExperimentConfig load_config(const std::string& config_path,
                                  const std::vector<std::uint64_t>& seed_override,
                                  const std::string& out_override) {
    eod::ExperimentConfig cfg = config_path.empty()
                                    ? eod::ExperimentConfig{}
                                    : eod::ExperimentConfig::from_file(config_path);
    if (!seed_override.empty()) {
        cfg.seeds = seed_override;
    }
    if (!out_override.empty()) {
        cfg.out_dir = out_override;
    }
    return cfg;
}

void print_report(const eod::DetectionReport& r) {
    auto line = [](const char* name, const eod::Aggregate& a) {
        std::printf("  %-16s %.4f +/- %.4f\n", name, a.mean, a.stddev);
    };
    std::printf("seeds: %zu\n", r.seeds.size());
    line("accuracy", r.accuracy);
    line("auroc", r.auroc);
    line("dtacc", r.dtacc);
    line("tnr_at_tpr95", r.tnr_at_tpr95);
    line("fpr_at_tpr90", r.fpr_at_tpr90);
    line("mean_in_entropy", r.mean_in_entropy);
    line("mean_out_entropy", r.mean_out_entropy);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entropic out-of-distribution detection experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::uint64_t> seeds;
    std::string out_dir;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config file");
        cmd->add_option("--seed", seeds, "seed override (repeatable)");
        cmd->add_option("--out", out_dir, "output directory override");
    };

    auto* train = app.add_subcommand("train", "train and evaluate per the config");
    add_common(train);

    auto* evaluate = app.add_subcommand("evaluate",
                                        "re-score saved checkpoints and rebuild the report");
    add_common(evaluate);

    auto* sweep = app.add_subcommand("sweep", "entropic-scale sweep (isomax head)");
    add_common(sweep);
    std::vector<double> scales{1.0, 3.0, 10.0};
    sweep->add_option("--scales", scales, "entropic scales to sweep");

    auto* hist = app.add_subcommand("hist", "emit score histograms from score CSVs");
    std::string hist_in, hist_out, hist_path = "histograms.csv";
    int hist_bins = 20;
    int hist_classes = 4;
    hist->add_option("scores_in", hist_in, "CSV supplying in-distribution rows")->required();
    hist->add_option("scores_out", hist_out, "CSV supplying out-of-distribution rows")
        ->required();
    hist->add_option("--bins", hist_bins, "number of bins");
    hist->add_option("--classes", hist_classes, "number of classes (sets value ranges)");
    hist->add_option("--out", hist_path, "output CSV path");

    auto* compare = app.add_subcommand("compare", "per-metric deltas between reports");
    std::vector<std::string> report_paths;
    compare->add_option("reports", report_paths, "2 or 3 report.json paths")
        ->expected(2, 3);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            const auto cfg = load_config(config_path, seeds, out_dir);
            print_report(eod::run_experiment(cfg));
        } else if (evaluate->parsed()) {
            auto cfg = load_config(config_path, seeds, out_dir);
            cfg.validate();
            eod::DetectionReport report;
            report.resolved_config = cfg.resolved_text();
            report.config_hash = cfg.config_hash();
            report.code_version = "eod 1.0.0";
            report.seeds = cfg.seeds;
            for (std::uint64_t seed : cfg.seeds) {
                const auto pair = eod::prepare_data(cfg, seed);
                const auto model = eod::TrainedModel::load(
                    cfg.out_dir + "/model_seed" + std::to_string(seed) + ".ckpt");
                std::vector<eod::ScoredExample> in_scored, out_scored;
                report.per_seed.push_back(
                    eod::evaluate_model(cfg, model, pair, seed, &in_scored, &out_scored));
                eod::write_score_csv(
                    cfg.out_dir + "/scores_seed" + std::to_string(seed) + ".csv",
                    in_scored, out_scored);
            }
            for (const auto& r : report.per_seed) {
                std::printf("seed %llu: accuracy %.4f auroc %.4f\n",
                            static_cast<unsigned long long>(r.seed), r.accuracy,
                            r.metrics.auroc);
            }
        } else if (sweep->parsed()) {
            const auto cfg = load_config(config_path, seeds, out_dir);
            const auto rows = eod::entropic_scale_sweep(cfg, scales);
            std::printf("scale      accuracy  auroc    in_entropy  out_entropy\n");
            for (const auto& r : rows) {
                std::printf("%-10g %.4f    %.4f   %.4f      %.4f\n", r.scale, r.accuracy,
                            r.auroc, r.mean_in_entropy, r.mean_out_entropy);
            }
        } else if (hist->parsed()) {
            eod::emit_histograms(hist_in, hist_out, hist_classes, hist_bins, hist_path);
            std::printf("wrote %s\n", hist_path.c_str());
        } else if (compare->parsed()) {
            std::vector<eod::DetectionReport> reports;
            for (const auto& p : report_paths) {
                reports.push_back(eod::load_report_json(p));
            }
            const auto deltas = eod::compare_report(reports[0], reports[1]);
            if (reports.size() == 2) {
                std::printf("%-18s %10s %10s %10s\n", "metric", "a", "b", "a-b");
                for (const auto& d : deltas) {
                    std::printf("%-18s %10.4f %10.4f %+10.4f\n", d.metric.c_str(), d.a, d.b,
                                d.delta);
                }
            } else {
                const auto d02 = eod::compare_report(reports[0], reports[2]);
                std::printf("%-18s %10s %10s %10s\n", "metric", "report1", "report2",
                            "report3");
                for (std::size_t i = 0; i < deltas.size(); ++i) {
                    std::printf("%-18s %10.4f %10.4f %10.4f\n", deltas[i].metric.c_str(),
                                deltas[i].a, deltas[i].b, d02[i].b);
                }
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
