#include "eod/harness.hpp"

#include "eod/checkpoint.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace eod {

namespace {

constexpr const char* kCodeVersion = "eod 1.0.0";

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Aggregate aggregate_of(const std::vector<SeedResult>& rs, double SeedResult::*field) {
    Aggregate a;
    if (rs.empty()) {
        return a;
    }
    for (const auto& r : rs) {
        a.mean += r.*field;
    }
    a.mean /= static_cast<double>(rs.size());
    if (rs.size() >= 2) {
        double ss = 0.0;
        for (const auto& r : rs) {
            ss += (r.*field - a.mean) * (r.*field - a.mean);
        }
        a.stddev = std::sqrt(ss / static_cast<double>(rs.size() - 1));
    }
    return a;
}

Aggregate aggregate_metric(const std::vector<SeedResult>& rs, double MetricsReport::*field) {
    std::vector<SeedResult> tmp = rs;
    for (auto& r : tmp) {
        r.accuracy = r.metrics.*field;  // reuse the generic path
    }
    return aggregate_of(tmp, &SeedResult::accuracy);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw ParseError("config: cannot open: " + path);
    }
    return parse(is, path);
}

ExperimentConfig ExperimentConfig::parse(std::istream& is, const std::string& origin) {
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config: expected `key = value` at " + origin + ":" +
                             std::to_string(lineno));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "dataset") {
                if (value == "gaussian_ring") {
                    cfg.data.kind = DatasetKind::gaussian_ring;
                } else if (value == "csv") {
                    cfg.data.kind = DatasetKind::csv;
                } else if (value == "idx") {
                    cfg.data.kind = DatasetKind::idx;
                } else {
                    throw ParseError("unknown dataset kind: " + value);
                }
            } else if (key == "n_classes") {
                cfg.data.n_classes = std::stoi(value);
            } else if (key == "per_class") {
                cfg.data.per_class = std::stoi(value);
            } else if (key == "dim") {
                cfg.data.dim = std::stoi(value);
            } else if (key == "radius") {
                cfg.data.radius = std::stod(value);
            } else if (key == "sigma") {
                cfg.data.sigma = std::stod(value);
            } else if (key == "ring_min") {
                cfg.data.ring_min = std::stod(value);
            } else if (key == "ring_max") {
                cfg.data.ring_max = std::stod(value);
            } else if (key == "ood_count") {
                cfg.data.ood_count = std::stoi(value);
            } else if (key == "train_fraction") {
                cfg.data.train_fraction = std::stod(value);
            } else if (key == "in_csv") {
                cfg.data.in_csv = value;
            } else if (key == "label_column") {
                cfg.data.label_column = std::stoi(value);
            } else if (key == "out_csv") {
                cfg.data.out_csv = value;
            } else if (key == "in_train_images") {
                cfg.data.in_train_images = value;
            } else if (key == "in_train_labels") {
                cfg.data.in_train_labels = value;
            } else if (key == "in_test_images") {
                cfg.data.in_test_images = value;
            } else if (key == "in_test_labels") {
                cfg.data.in_test_labels = value;
            } else if (key == "out_images") {
                cfg.data.out_images = value;
            } else if (key == "hidden_dims") {
                cfg.arch.hidden_dims.clear();
                for (const auto& tok : split_commas(value)) {
                    cfg.arch.hidden_dims.push_back(std::stoi(tok));
                }
            } else if (key == "embed_dim") {
                cfg.arch.embed_dim = std::stoi(value);
            } else if (key == "head") {
                if (value == "softmax") {
                    cfg.head = HeadKind::softmax;
                } else if (value == "isomax") {
                    cfg.head = HeadKind::isomax;
                } else {
                    throw ParseError("unknown head: " + value);
                }
            } else if (key == "entropic_scale") {
                cfg.entropic_scale = std::stod(value);
            } else if (key == "score") {
                if (value == "entropic") {
                    cfg.score = ScoreKind::entropic;
                } else if (value == "max_prob") {
                    cfg.score = ScoreKind::max_prob;
                } else {
                    throw ParseError("unknown score: " + value);
                }
            } else if (key == "inference_temperature") {
                cfg.inference_temperature = std::stod(value);
            } else if (key == "lr0") {
                cfg.train.lr0 = std::stod(value);
            } else if (key == "momentum") {
                cfg.train.momentum = std::stod(value);
            } else if (key == "weight_decay") {
                cfg.train.weight_decay = std::stod(value);
            } else if (key == "epochs") {
                cfg.train.epochs = std::stoi(value);
            } else if (key == "batch_size") {
                cfg.train.batch_size = std::stoi(value);
            } else if (key == "lr_decay_factor") {
                cfg.train.lr_decay_factor = std::stod(value);
            } else if (key == "lr_milestones") {
                cfg.train.lr_milestones.clear();
                for (const auto& tok : split_commas(value)) {
                    cfg.train.lr_milestones.push_back(std::stoi(tok));
                }
            } else if (key == "seeds") {
                cfg.seeds.clear();
                for (const auto& tok : split_commas(value)) {
                    cfg.seeds.push_back(std::stoull(tok));
                }
            } else if (key == "out_dir") {
                cfg.out_dir = value;
            } else {
                throw ParseError("unknown key: " + key);
            }
        } catch (const std::invalid_argument&) {
            throw ParseError("config: bad value for `" + key + "` at " + origin + ":" +
                             std::to_string(lineno));
        }
    }
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    if (entropic_scale <= 0.0) {
        throw ContractError("config: entropic_scale must be positive");
    }
    if (inference_temperature <= 0.0) {
        throw ContractError("config: inference_temperature must be positive");
    }
    if (seeds.empty()) {
        throw ContractError("config: seeds must be non-empty");
    }
    if (arch.embed_dim < 1) {
        throw ContractError("config: embed_dim must be positive");
    }
    train.validate();
}

std::string ExperimentConfig::resolved_text() const {
    std::ostringstream os;
    os << "dataset = ";
    switch (data.kind) {
        case DatasetKind::gaussian_ring: os << "gaussian_ring"; break;
        case DatasetKind::csv: os << "csv"; break;
        case DatasetKind::idx: os << "idx"; break;
    }
    os << "\n";
    os << "dataset.n_classes = " << data.n_classes << "\n";
    os << "dataset.per_class = " << data.per_class << "\n";
    os << "dataset.dim = " << data.dim << "\n";
    os << "dataset.radius = " << fmt_double(data.radius) << "\n";
    os << "dataset.sigma = " << fmt_double(data.sigma) << "\n";
    os << "dataset.ring_min = " << fmt_double(data.ring_min) << "\n";
    os << "dataset.ring_max = " << fmt_double(data.ring_max) << "\n";
    os << "dataset.ood_count = " << data.ood_count << "\n";
    os << "dataset.train_fraction = " << fmt_double(data.train_fraction) << "\n";
    os << "dataset.in_csv = " << data.in_csv << "\n";
    os << "dataset.label_column = " << data.label_column << "\n";
    os << "dataset.out_csv = " << data.out_csv << "\n";
    os << "dataset.in_train_images = " << data.in_train_images << "\n";
    os << "dataset.in_train_labels = " << data.in_train_labels << "\n";
    os << "dataset.in_test_images = " << data.in_test_images << "\n";
    os << "dataset.in_test_labels = " << data.in_test_labels << "\n";
    os << "dataset.out_images = " << data.out_images << "\n";
    os << "arch.hidden_dims = ";
    for (std::size_t i = 0; i < arch.hidden_dims.size(); ++i) {
        os << (i ? "," : "") << arch.hidden_dims[i];
    }
    os << "\n";
    os << "arch.embed_dim = " << arch.embed_dim << "\n";
    os << "head = " << (head == HeadKind::softmax ? "softmax" : "isomax") << "\n";
    os << "entropic_scale = " << fmt_double(entropic_scale) << "\n";
    os << "score = " << (score == ScoreKind::entropic ? "entropic" : "max_prob") << "\n";
    os << "inference_temperature = " << fmt_double(inference_temperature) << "\n";
    os << "train.lr0 = " << fmt_double(train.lr0) << "\n";
    os << "train.momentum = " << fmt_double(train.momentum) << "\n";
    os << "train.weight_decay = " << fmt_double(train.weight_decay) << "\n";
    os << "train.epochs = " << train.epochs << "\n";
    os << "train.batch_size = " << train.batch_size << "\n";
    os << "train.lr_decay_factor = " << fmt_double(train.lr_decay_factor) << "\n";
    os << "train.lr_milestones = ";
    for (std::size_t i = 0; i < train.lr_milestones.size(); ++i) {
        os << (i ? "," : "") << train.lr_milestones[i];
    }
    os << "\n";
    os << "seeds = ";
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        os << (i ? "," : "") << seeds[i];
    }
    os << "\n";
    return os.str();
}

std::uint64_t ExperimentConfig::config_hash() const {
    // FNV-1a over the resolved text.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : resolved_text()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

SeedStreams derive_streams(std::uint64_t seed) {
    Rng r(seed);
    SeedStreams s;
    s.data = r.next_u64();
    s.ood = r.next_u64();
    s.init = r.next_u64();
    s.shuffle = r.next_u64();
    return s;
}

OodPair prepare_data(const ExperimentConfig& cfg, std::uint64_t seed) {
    const SeedStreams streams = derive_streams(seed);
    switch (cfg.data.kind) {
        case DatasetKind::gaussian_ring: {
            LabeledSet all =
                gen_gaussian_classes(streams.data, cfg.data.n_classes, cfg.data.per_class,
                                     cfg.data.dim, cfg.data.radius, cfg.data.sigma);
            auto [train, test] = split(all, cfg.data.train_fraction, streams.data);
            Matrix ood = gen_ring_ood(streams.ood, cfg.data.ood_count, cfg.data.dim,
                                      cfg.data.ring_min, cfg.data.ring_max);
            return OodPair::make(std::move(train), std::move(test), std::move(ood));
        }
        case DatasetKind::csv: {
            LabeledSet in = load_csv(cfg.data.in_csv, cfg.data.label_column);
            auto [train, test] = split(in, cfg.data.train_fraction, streams.data);
            LabeledSet out_raw = load_csv(cfg.data.out_csv, cfg.data.label_column);
            return OodPair::make(std::move(train), std::move(test),
                                 std::move(out_raw.features));
        }
        case DatasetKind::idx: {
            LabeledSet train = load_idx(cfg.data.in_train_images, cfg.data.in_train_labels);
            LabeledSet test = load_idx(cfg.data.in_test_images, cfg.data.in_test_labels);
            Matrix out = load_idx_images(cfg.data.out_images);
            return OodPair::make(std::move(train), std::move(test), std::move(out));
        }
    }
    throw ContractError("prepare_data: unreachable dataset kind");
}

int TrainedModel::n_classes() const {
    return head_kind == HeadKind::softmax ? softmax_head->n_classes()
                                          : isomax_head->n_classes();
}

TrainedModel train_model(const ExperimentConfig& cfg, const OodPair& pair,
                         std::uint64_t seed) {
    const SeedStreams streams = derive_streams(seed);
    TrainedModel model;
    model.head_kind = cfg.head;
    model.standardizer = Standardizer::fit(pair.in_train.features);
    const Matrix train_x = model.standardizer.apply(pair.in_train.features);
    const std::vector<int>& train_y = pair.in_train.labels;
    const int n_classes = pair.in_train.n_classes;

    std::vector<LayerSpec> specs;
    int in_dim = static_cast<int>(train_x.cols());
    for (int h : cfg.arch.hidden_dims) {
        specs.push_back({in_dim, h, Activation::relu});
        in_dim = h;
    }
    specs.push_back({in_dim, cfg.arch.embed_dim, Activation::none});

    Rng init_rng(streams.init);
    model.backbone = ModelParams::init(specs, init_rng);
    if (cfg.head == HeadKind::softmax) {
        model.softmax_head = SoftMaxHead::init(n_classes, cfg.arch.embed_dim, init_rng);
    } else {
        model.isomax_head = IsoMaxHead::init(n_classes, cfg.arch.embed_dim,
                                             cfg.entropic_scale);
    }

    Rng shuffle_rng(streams.shuffle);
    std::vector<std::size_t> order(static_cast<std::size_t>(train_x.rows()));
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    const int bs = cfg.train.batch_size;
    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(bs)) {
            const std::size_t count = std::min<std::size_t>(bs, order.size() - start);
            Matrix batch(static_cast<Eigen::Index>(count), train_x.cols());
            std::vector<int> labels(count);
            for (std::size_t i = 0; i < count; ++i) {
                batch.row(static_cast<Eigen::Index>(i)) =
                    train_x.row(static_cast<Eigen::Index>(order[start + i]));
                labels[i] = train_y[order[start + i]];
            }
            ForwardCache cache;
            const Matrix embeddings = model.backbone.forward(batch, &cache);
            LossResult loss;
            if (cfg.head == HeadKind::softmax) {
                loss = softmax_head_loss(*model.softmax_head, embeddings, labels);
            } else {
                loss = isomax_loss(*model.isomax_head, embeddings, labels);
            }
            model.backbone.backward(cache, loss.grad_embeddings);
            model.backbone.sgd_step(cfg.train, epoch);
            if (cfg.head == HeadKind::softmax) {
                model.softmax_head->sgd_step(cfg.train, epoch);
            } else {
                model.isomax_head->sgd_step(cfg.train, epoch);
            }
        }
    }
    return model;
}

SeedResult evaluate_model(const ExperimentConfig& cfg, const TrainedModel& model,
                          const OodPair& pair, std::uint64_t seed,
                          std::vector<ScoredExample>* in_scored,
                          std::vector<ScoredExample>* out_scored) {
    const Matrix in_x = model.standardizer.apply(pair.in_test.features);
    const Matrix out_x = model.standardizer.apply(pair.out_test);
    const Matrix in_emb = model.backbone.forward(in_x);
    const Matrix out_emb = model.backbone.forward(out_x);

    Matrix in_probs, out_probs;
    if (model.head_kind == HeadKind::softmax) {
        in_probs = softmax_inference_probs(*model.softmax_head, in_emb,
                                           cfg.inference_temperature);
        out_probs = softmax_inference_probs(*model.softmax_head, out_emb,
                                            cfg.inference_temperature);
    } else {
        in_probs = isomax_inference_probs(*model.isomax_head, in_emb,
                                          cfg.inference_temperature);
        out_probs = isomax_inference_probs(*model.isomax_head, out_emb,
                                           cfg.inference_temperature);
    }

    SeedResult r;
    r.seed = seed;
    const auto preds = argmax_rows(in_probs);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == pair.in_test.labels[i]) {
            ++correct;
        }
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());

    const auto in_examples = score_examples(in_probs, cfg.score);
    const auto out_examples = score_examples(out_probs, cfg.score);
    ScoreSet scores;
    for (const auto& e : in_examples) {
        scores.in_scores.push_back(e.score);
    }
    for (const auto& e : out_examples) {
        scores.out_scores.push_back(e.score);
    }
    r.metrics = compute_metrics(scores);
    r.mean_in_entropy = entropy(in_probs).mean();
    r.mean_out_entropy = entropy(out_probs).mean();
    if (model.head_kind == HeadKind::isomax) {
        const Matrix retained = stable_softmax(isomax_logits(*model.isomax_head, in_emb));
        r.mean_in_entropy_scale_retained = entropy(retained).mean();
    }
    if (in_scored) {
        *in_scored = in_examples;
    }
    if (out_scored) {
        *out_scored = out_examples;
    }
    return r;
}

DetectionReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    DetectionReport report;
    report.resolved_config = cfg.resolved_text();
    report.config_hash = cfg.config_hash();
    report.code_version = kCodeVersion;
    report.seeds = cfg.seeds;
    for (std::uint64_t seed : cfg.seeds) {
        try {
            const OodPair pair = prepare_data(cfg, seed);
            const TrainedModel model = train_model(cfg, pair, seed);
            std::vector<ScoredExample> in_scored, out_scored;
            const SeedResult r =
                evaluate_model(cfg, model, pair, seed, &in_scored, &out_scored);
            write_score_csv(cfg.out_dir + "/scores_seed" + std::to_string(seed) + ".csv",
                            in_scored, out_scored);
            model.save(cfg.out_dir + "/model_seed" + std::to_string(seed) + ".ckpt");
            report.per_seed.push_back(r);
        } catch (const std::exception& e) {
            throw NumericError("experiment seed " + std::to_string(seed) +
                               " failed: " + e.what());
        }
    }
    report.accuracy = aggregate_of(report.per_seed, &SeedResult::accuracy);
    report.auroc = aggregate_metric(report.per_seed, &MetricsReport::auroc);
    report.dtacc = aggregate_metric(report.per_seed, &MetricsReport::dtacc);
    report.tnr_at_tpr95 = aggregate_metric(report.per_seed, &MetricsReport::tnr_at_tpr95);
    report.fpr_at_tpr90 = aggregate_metric(report.per_seed, &MetricsReport::fpr_at_tpr90);
    report.mean_in_entropy = aggregate_of(report.per_seed, &SeedResult::mean_in_entropy);
    report.mean_out_entropy = aggregate_of(report.per_seed, &SeedResult::mean_out_entropy);
    write_report_json(cfg.out_dir + "/report.json", report);
    return report;
}

namespace {

ordered_json aggregate_json(const Aggregate& a) {
    return ordered_json{{"mean", a.mean}, {"stddev", a.stddev}};
}

Aggregate aggregate_from_json(const ordered_json& j) {
    Aggregate a;
    a.mean = j.at("mean").get<double>();
    a.stddev = j.at("stddev").get<double>();
    return a;
}

}  // namespace

void write_report_json(const std::string& path, const DetectionReport& report) {
    ordered_json j;
    j["provenance"] = {
        {"config_hash", report.config_hash},
        {"code_version", report.code_version},
        {"seeds", report.seeds},
        {"resolved_config", report.resolved_config},
    };
    j["per_seed"] = ordered_json::array();
    for (const auto& r : report.per_seed) {
        j["per_seed"].push_back({
            {"seed", r.seed},
            {"accuracy", r.accuracy},
            {"auroc", r.metrics.auroc},
            {"dtacc", r.metrics.dtacc},
            {"tnr_at_tpr95", r.metrics.tnr_at_tpr95},
            {"fpr_at_tpr90", r.metrics.fpr_at_tpr90},
            {"m", r.metrics.m},
            {"k", r.metrics.k},
            {"mean_in_entropy", r.mean_in_entropy},
            {"mean_out_entropy", r.mean_out_entropy},
            {"mean_in_entropy_scale_retained", r.mean_in_entropy_scale_retained},
        });
    }
    j["aggregate"] = {
        {"accuracy", aggregate_json(report.accuracy)},
        {"auroc", aggregate_json(report.auroc)},
        {"dtacc", aggregate_json(report.dtacc)},
        {"tnr_at_tpr95", aggregate_json(report.tnr_at_tpr95)},
        {"fpr_at_tpr90", aggregate_json(report.fpr_at_tpr90)},
        {"mean_in_entropy", aggregate_json(report.mean_in_entropy)},
        {"mean_out_entropy", aggregate_json(report.mean_out_entropy)},
    };
    std::ofstream os(path);
    if (!os) {
        throw ParseError("report: cannot open for writing: " + path);
    }
    os << j.dump(2) << "\n";
}

DetectionReport load_report_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw ParseError("report: cannot open: " + path);
    }
    ordered_json j = ordered_json::parse(is);
    DetectionReport report;
    report.config_hash = j.at("provenance").at("config_hash").get<std::uint64_t>();
    report.code_version = j.at("provenance").at("code_version").get<std::string>();
    report.seeds = j.at("provenance").at("seeds").get<std::vector<std::uint64_t>>();
    report.resolved_config = j.at("provenance").at("resolved_config").get<std::string>();
    for (const auto& rj : j.at("per_seed")) {
        SeedResult r;
        r.seed = rj.at("seed").get<std::uint64_t>();
        r.accuracy = rj.at("accuracy").get<double>();
        r.metrics.auroc = rj.at("auroc").get<double>();
        r.metrics.dtacc = rj.at("dtacc").get<double>();
        r.metrics.tnr_at_tpr95 = rj.at("tnr_at_tpr95").get<double>();
        r.metrics.fpr_at_tpr90 = rj.at("fpr_at_tpr90").get<double>();
        r.metrics.m = rj.at("m").get<std::size_t>();
        r.metrics.k = rj.at("k").get<std::size_t>();
        r.mean_in_entropy = rj.at("mean_in_entropy").get<double>();
        r.mean_out_entropy = rj.at("mean_out_entropy").get<double>();
        r.mean_in_entropy_scale_retained =
            rj.at("mean_in_entropy_scale_retained").get<double>();
        report.per_seed.push_back(r);
    }
    const auto& agg = j.at("aggregate");
    report.accuracy = aggregate_from_json(agg.at("accuracy"));
    report.auroc = aggregate_from_json(agg.at("auroc"));
    report.dtacc = aggregate_from_json(agg.at("dtacc"));
    report.tnr_at_tpr95 = aggregate_from_json(agg.at("tnr_at_tpr95"));
    report.fpr_at_tpr90 = aggregate_from_json(agg.at("fpr_at_tpr90"));
    report.mean_in_entropy = aggregate_from_json(agg.at("mean_in_entropy"));
    report.mean_out_entropy = aggregate_from_json(agg.at("mean_out_entropy"));
    return report;
}

std::vector<SweepRow> entropic_scale_sweep(const ExperimentConfig& cfg,
                                           const std::vector<double>& scales) {
    if (scales.empty()) {
        throw ContractError("sweep: scales must be non-empty");
    }
    for (double s : scales) {
        if (s <= 0.0) {
            throw ContractError("sweep: scales must be positive");
        }
    }
    fs::create_directories(cfg.out_dir);
    std::vector<SweepRow> rows;
    std::ofstream table(cfg.out_dir + "/sweep.csv");
    table << "scale,accuracy,auroc,mean_in_entropy,mean_out_entropy\n";
    for (double scale : scales) {
        ExperimentConfig run_cfg = cfg;
        run_cfg.head = HeadKind::isomax;
        run_cfg.entropic_scale = scale;
        char scale_tag[40];
        std::snprintf(scale_tag, sizeof(scale_tag), "%g", scale);
        run_cfg.out_dir = cfg.out_dir + "/scale_" + scale_tag;
        const DetectionReport report = run_experiment(run_cfg);
        SweepRow row;
        row.scale = scale;
        row.accuracy = report.accuracy.mean;
        row.auroc = report.auroc.mean;
        row.mean_in_entropy = report.mean_in_entropy.mean;
        row.mean_out_entropy = report.mean_out_entropy.mean;
        rows.push_back(row);
        char line[240];
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g\n", row.scale,
                      row.accuracy, row.auroc, row.mean_in_entropy, row.mean_out_entropy);
        table << line;
        // Per-scale entropy histogram over all seeds.
        std::vector<ScoredExample> in_all, out_all;
        for (std::uint64_t seed : run_cfg.seeds) {
            const auto rowset = read_score_csv(run_cfg.out_dir + "/scores_seed" +
                                               std::to_string(seed) + ".csv");
            for (const auto& r : rowset) {
                ScoredExample e{r.score, r.predicted_class, r.entropy, r.max_prob};
                (r.origin == "in" ? in_all : out_all).push_back(e);
            }
        }
        const auto hist = make_histograms(in_all, out_all, cfg.data.n_classes, 20);
        std::ofstream hs(cfg.out_dir + "/hist_scale_" + scale_tag + ".csv");
        hs << "kind,bin_lo,bin_hi,in_count,out_count\n";
        for (const auto& h : hist) {
            char hline[200];
            std::snprintf(hline, sizeof(hline), "%s,%.17g,%.17g,%zu,%zu\n", h.kind.c_str(),
                          h.bin_lo, h.bin_hi, h.in_count, h.out_count);
            hs << hline;
        }
    }
    return rows;
}

std::vector<HistogramRow> make_histograms(const std::vector<ScoredExample>& in_examples,
                                          const std::vector<ScoredExample>& out_examples,
                                          int n_classes, int bins) {
    if (bins < 2) {
        throw ContractError("histogram: need at least 2 bins");
    }
    if (in_examples.empty() && out_examples.empty()) {
        throw ContractError("histogram: empty inputs");
    }
    if (n_classes < 2) {
        throw ContractError("histogram: n_classes must be at least 2");
    }
    const double log_n = std::log(static_cast<double>(n_classes));
    std::vector<HistogramRow> rows;
    auto fill = [&](const char* kind, double lo, double hi,
                    auto value_of) {
        std::vector<std::size_t> in_counts(static_cast<std::size_t>(bins), 0);
        std::vector<std::size_t> out_counts(static_cast<std::size_t>(bins), 0);
        auto bin_of = [&](double v) {
            const double t = (v - lo) / (hi - lo);
            auto b = static_cast<long>(std::floor(t * bins));
            return static_cast<std::size_t>(std::clamp<long>(b, 0, bins - 1));
        };
        for (const auto& e : in_examples) {
            ++in_counts[bin_of(value_of(e))];
        }
        for (const auto& e : out_examples) {
            ++out_counts[bin_of(value_of(e))];
        }
        for (int b = 0; b < bins; ++b) {
            HistogramRow r;
            r.kind = kind;
            r.bin_lo = lo + (hi - lo) * b / bins;
            r.bin_hi = lo + (hi - lo) * (b + 1) / bins;
            r.in_count = in_counts[static_cast<std::size_t>(b)];
            r.out_count = out_counts[static_cast<std::size_t>(b)];
            rows.push_back(std::move(r));
        }
    };
    fill("entropy", 0.0, log_n, [](const ScoredExample& e) { return e.entropy; });
    fill("max_prob", 1.0 / n_classes, 1.0,
         [](const ScoredExample& e) { return e.max_prob; });
    return rows;
}

void emit_histograms(const std::string& score_csv_in, const std::string& score_csv_out,
                     int n_classes, int bins, const std::string& out_path) {
    std::vector<ScoredExample> in_examples, out_examples;
    for (const auto& r : read_score_csv(score_csv_in)) {
        if (r.origin == "in") {
            in_examples.push_back({r.score, r.predicted_class, r.entropy, r.max_prob});
        }
    }
    for (const auto& r : read_score_csv(score_csv_out)) {
        if (r.origin == "out") {
            out_examples.push_back({r.score, r.predicted_class, r.entropy, r.max_prob});
        }
    }
    const auto rows = make_histograms(in_examples, out_examples, n_classes, bins);
    std::ofstream os(out_path);
    if (!os) {
        throw ParseError("histogram: cannot open for writing: " + out_path);
    }
    os << "kind,bin_lo,bin_hi,in_count,out_count\n";
    for (const auto& r : rows) {
        char line[200];
        std::snprintf(line, sizeof(line), "%s,%.17g,%.17g,%zu,%zu\n", r.kind.c_str(),
                      r.bin_lo, r.bin_hi, r.in_count, r.out_count);
        os << line;
    }
}

namespace {

// Lines of the resolved config that must agree for a comparison to be valid.
std::string comparable_subset(const std::string& resolved) {
    std::istringstream is(resolved);
    std::ostringstream os;
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind("dataset", 0) == 0 || line.rfind("seeds", 0) == 0) {
            os << line << "\n";
        }
    }
    return os.str();
}

}  // namespace

std::vector<MetricDelta> compare_report(const DetectionReport& a, const DetectionReport& b) {
    if (comparable_subset(a.resolved_config) != comparable_subset(b.resolved_config)) {
        throw ContractError("compare: reports come from different datasets or seed lists");
    }
    std::vector<MetricDelta> deltas;
    auto add = [&](const char* name, const Aggregate& x, const Aggregate& y) {
        deltas.push_back({name, x.mean, y.mean, x.mean - y.mean});
    };
    add("accuracy", a.accuracy, b.accuracy);
    add("auroc", a.auroc, b.auroc);
    add("dtacc", a.dtacc, b.dtacc);
    add("tnr_at_tpr95", a.tnr_at_tpr95, b.tnr_at_tpr95);
    add("fpr_at_tpr90", a.fpr_at_tpr90, b.fpr_at_tpr90);
    add("mean_in_entropy", a.mean_in_entropy, b.mean_in_entropy);
    add("mean_out_entropy", a.mean_out_entropy, b.mean_out_entropy);
    return deltas;
}

void TrainedModel::save(const std::string& path) const {
    std::vector<NamedTensor> tensors;
    for (std::size_t i = 0; i < backbone.layers().size(); ++i) {
        const auto& layer = backbone.layers()[i];
        const std::string base = "backbone." + std::to_string(i);
        tensors.push_back(tensor_record(base + ".weight", layer.weight));
        tensors.push_back(tensor_record(base + ".bias", layer.bias));
        tensors.push_back(scalar_record(base + ".relu",
                                        layer.activation == Activation::relu ? 1.0 : 0.0));
    }
    if (head_kind == HeadKind::softmax) {
        tensors.push_back(tensor_record("head.weights", softmax_head->weights));
        tensors.push_back(tensor_record("head.biases", softmax_head->biases));
    } else {
        tensors.push_back(tensor_record("head.prototypes", isomax_head->prototypes));
        tensors.push_back(scalar_record("head.entropic_scale", isomax_head->entropic_scale));
    }
    tensors.push_back(tensor_record("standardizer.mean", Vector(standardizer.mean)));
    tensors.push_back(tensor_record("standardizer.stddev", Vector(standardizer.stddev)));
    save_checkpoint(path, tensors);
}

TrainedModel TrainedModel::load(const std::string& path) {
    const auto tensors = load_checkpoint(path);
    std::map<std::string, const NamedTensor*> by_name;
    for (const auto& t : tensors) {
        by_name[t.name] = &t;
    }
    auto need = [&](const std::string& name) -> const NamedTensor& {
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw ParseError("checkpoint: missing tensor " + name);
        }
        return *it->second;
    };
    TrainedModel model;
    for (std::size_t i = 0;; ++i) {
        const std::string base = "backbone." + std::to_string(i);
        if (!by_name.count(base + ".weight")) {
            break;
        }
        DenseLayer layer;
        layer.weight = record_to_matrix(need(base + ".weight"));
        layer.bias = record_to_vector(need(base + ".bias"));
        layer.activation = need(base + ".relu").data.at(0) != 0.0 ? Activation::relu
                                                                  : Activation::none;
        layer.grad_weight = Matrix::Zero(layer.weight.rows(), layer.weight.cols());
        layer.grad_bias = Vector::Zero(layer.bias.size());
        layer.vel_weight = Matrix::Zero(layer.weight.rows(), layer.weight.cols());
        layer.vel_bias = Vector::Zero(layer.bias.size());
        model.backbone.layers().push_back(std::move(layer));
    }
    if (model.backbone.layers().empty()) {
        throw ParseError("checkpoint: no backbone layers in " + path);
    }
    if (by_name.count("head.prototypes")) {
        model.head_kind = HeadKind::isomax;
        IsoMaxHead head;
        head.prototypes = record_to_matrix(need("head.prototypes"));
        head.entropic_scale = need("head.entropic_scale").data.at(0);
        head.grad_prototypes = Matrix::Zero(head.prototypes.rows(), head.prototypes.cols());
        head.vel_prototypes = Matrix::Zero(head.prototypes.rows(), head.prototypes.cols());
        model.isomax_head = std::move(head);
    } else {
        model.head_kind = HeadKind::softmax;
        SoftMaxHead head;
        head.weights = record_to_matrix(need("head.weights"));
        head.biases = record_to_vector(need("head.biases"));
        head.grad_weights = Matrix::Zero(head.weights.rows(), head.weights.cols());
        head.grad_biases = Vector::Zero(head.biases.size());
        head.vel_weights = Matrix::Zero(head.weights.rows(), head.weights.cols());
        head.vel_biases = Vector::Zero(head.biases.size());
        model.softmax_head = std::move(head);
    }
    model.standardizer.mean = record_to_vector(need("standardizer.mean"));
    model.standardizer.stddev = record_to_vector(need("standardizer.stddev"));
    return model;
}

}  // namespace eod
