#include "eod/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace eod {

void LabeledSet::validate() const {
    if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
        throw ContractError("LabeledSet: label count does not match feature rows");
    }
    if (n_classes < 1) {
        throw ContractError("LabeledSet: n_classes must be positive");
    }
    std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
    for (int l : labels) {
        if (l < 0 || l >= n_classes) {
            throw ContractError("LabeledSet: label out of range");
        }
        ++counts[static_cast<std::size_t>(l)];
    }
}

OodPair OodPair::make(LabeledSet in_train, LabeledSet in_test, Matrix out_test) {
    in_train.validate();
    in_test.validate();
    if (in_test.features.cols() != out_test.cols() ||
        in_train.features.cols() != out_test.cols()) {
        throw ContractError("OodPair: feature dimensionality mismatch");
    }
    for (Eigen::Index i = 0; i < out_test.rows(); ++i) {
        for (Eigen::Index j = 0; j < in_train.features.rows(); ++j) {
            if (out_test.row(i) == in_train.features.row(j)) {
                throw ContractError("OodPair: out_test row " + std::to_string(i) +
                                    " is identical to an in_train row (leak)");
            }
        }
    }
    OodPair p;
    p.in_train = std::move(in_train);
    p.in_test = std::move(in_test);
    p.out_test = std::move(out_test);
    return p;
}

LabeledSet gen_gaussian_classes(std::uint64_t seed, int n_classes, int per_class,
                                int dim, double radius, double sigma) {
    if (n_classes < 2) {
        throw ContractError("gen_gaussian_classes: need at least 2 classes");
    }
    if (per_class < 1) {
        throw ContractError("gen_gaussian_classes: per_class must be positive");
    }
    if (dim < 2) {
        throw ContractError("gen_gaussian_classes: dim must be at least 2");
    }
    if (sigma < 0.0) {
        throw ContractError("gen_gaussian_classes: sigma must be non-negative");
    }
    Rng rng(seed);
    Matrix means = Matrix::Zero(n_classes, dim);
    for (int c = 0; c < n_classes; ++c) {
        const double angle = 2.0 * M_PI * c / n_classes;
        means(c, 0) = radius * std::cos(angle);
        means(c, 1) = radius * std::sin(angle);
    }
    LabeledSet set;
    set.n_classes = n_classes;
    set.features.resize(static_cast<Eigen::Index>(n_classes) * per_class, dim);
    set.labels.reserve(static_cast<std::size_t>(n_classes) * per_class);
    Eigen::Index row = 0;
    for (int c = 0; c < n_classes; ++c) {
        for (int i = 0; i < per_class; ++i) {
            for (int d = 0; d < dim; ++d) {
                set.features(row, d) = means(c, d) + sigma * rng.normal();
            }
            set.labels.push_back(c);
            ++row;
        }
    }
    return set;
}

Matrix gen_ring_ood(std::uint64_t seed, int k, int dim, double r_min, double r_max) {
    if (!(r_max > r_min && r_min > 0.0)) {
        throw ContractError("gen_ring_ood: need r_max > r_min > 0");
    }
    if (k < 1 || dim < 1) {
        throw ContractError("gen_ring_ood: k and dim must be positive");
    }
    Rng rng(seed);
    Matrix out(k, dim);
    for (int i = 0; i < k; ++i) {
        Vector dir(dim);
        double norm = 0.0;
        do {
            for (int d = 0; d < dim; ++d) {
                dir(d) = rng.normal();
            }
            norm = dir.norm();
        } while (norm < 1e-12);
        const double r = rng.uniform(r_min, r_max);
        out.row(i) = (r / norm) * dir.transpose();
    }
    return out;
}

LabeledSet load_csv(const std::string& path, int label_column) {
    std::ifstream is(path);
    if (!is) {
        throw ParseError("load_csv: cannot open: " + path);
    }
    std::vector<std::vector<double>> rows;
    std::vector<double> raw_labels;
    std::string line;
    int lineno = 0;
    std::size_t width = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::vector<double> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            std::size_t consumed = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &consumed);
            } catch (const std::exception&) {
                throw ParseError("load_csv: non-numeric cell at line " +
                                 std::to_string(lineno) + " in " + path);
            }
            if (consumed != cell.size()) {
                throw ParseError("load_csv: non-numeric cell at line " +
                                 std::to_string(lineno) + " in " + path);
            }
            cells.push_back(v);
        }
        if (rows.empty() && raw_labels.empty()) {
            width = cells.size();
        } else if (cells.size() != width) {
            throw ParseError("load_csv: ragged row at line " + std::to_string(lineno) +
                             " in " + path);
        }
        if (label_column < 0 || static_cast<std::size_t>(label_column) >= cells.size()) {
            throw ParseError("load_csv: label column " + std::to_string(label_column) +
                             " missing at line " + std::to_string(lineno));
        }
        raw_labels.push_back(cells[static_cast<std::size_t>(label_column)]);
        cells.erase(cells.begin() + label_column);
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) {
        throw ParseError("load_csv: no data rows in " + path);
    }
    // Dense-remap labels preserving first appearance.
    std::vector<double> seen;
    std::vector<int> labels;
    for (double rl : raw_labels) {
        auto it = std::find(seen.begin(), seen.end(), rl);
        if (it == seen.end()) {
            seen.push_back(rl);
            labels.push_back(static_cast<int>(seen.size()) - 1);
        } else {
            labels.push_back(static_cast<int>(it - seen.begin()));
        }
    }
    LabeledSet set;
    set.n_classes = static_cast<int>(seen.size());
    set.labels = std::move(labels);
    set.features.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            set.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return set;
}

void save_csv(const std::string& path, const LabeledSet& set, int label_column) {
    set.validate();
    if (label_column < 0 || label_column > set.features.cols()) {
        throw ContractError("save_csv: label column out of range");
    }
    std::ofstream os(path);
    if (!os) {
        throw ParseError("save_csv: cannot open for writing: " + path);
    }
    char buf[64];
    for (Eigen::Index i = 0; i < set.features.rows(); ++i) {
        Eigen::Index src = 0;
        for (Eigen::Index col = 0; col <= set.features.cols(); ++col) {
            if (col > 0) {
                os << ',';
            }
            if (col == label_column) {
                os << set.labels[static_cast<std::size_t>(i)];
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", set.features(i, src++));
                os << buf;
            }
        }
        os << '\n';
    }
}

namespace {

std::uint32_t read_be_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) {
        throw ParseError("load_idx: truncated while reading " + what);
    }
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

Matrix load_idx_images(const std::string& images_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) {
        throw ParseError("load_idx: cannot open: " + images_path);
    }
    const std::uint32_t img_magic = read_be_u32(img, "image magic");
    if (img_magic != 0x00000803u) {
        throw ParseError("load_idx: wrong image magic in " + images_path);
    }
    const std::uint32_t count = read_be_u32(img, "image count");
    const std::uint32_t rows = read_be_u32(img, "rows");
    const std::uint32_t cols = read_be_u32(img, "cols");
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> payload(static_cast<std::size_t>(count) * pixels);
    img.read(reinterpret_cast<char*>(payload.data()),
             static_cast<std::streamsize>(payload.size()));
    if (static_cast<std::size_t>(img.gcount()) != payload.size()) {
        throw ParseError("load_idx: image payload truncated in " + images_path);
    }
    Matrix features(count, static_cast<Eigen::Index>(pixels));
    for (std::uint32_t i = 0; i < count; ++i) {
        for (std::size_t p = 0; p < pixels; ++p) {
            features(i, static_cast<Eigen::Index>(p)) =
                static_cast<double>(payload[i * pixels + p]) / 255.0;
        }
    }
    return features;
}

LabeledSet load_idx(const std::string& images_path, const std::string& labels_path) {
    Matrix features = load_idx_images(images_path);
    const auto count = static_cast<std::uint32_t>(features.rows());

    std::ifstream lbl(labels_path, std::ios::binary);
    if (!lbl) {
        throw ParseError("load_idx: cannot open: " + labels_path);
    }
    const std::uint32_t lbl_magic = read_be_u32(lbl, "label magic");
    if (lbl_magic != 0x00000801u) {
        throw ParseError("load_idx: wrong label magic in " + labels_path);
    }
    const std::uint32_t lbl_count = read_be_u32(lbl, "label count");
    if (lbl_count != count) {
        throw ParseError("load_idx: image/label count mismatch (" + std::to_string(count) +
                         " vs " + std::to_string(lbl_count) + ")");
    }
    std::vector<unsigned char> label_bytes(count);
    lbl.read(reinterpret_cast<char*>(label_bytes.data()), count);
    if (static_cast<std::size_t>(lbl.gcount()) != label_bytes.size()) {
        throw ParseError("load_idx: label payload truncated in " + labels_path);
    }

    LabeledSet set;
    set.features = std::move(features);
    int max_label = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        const int l = label_bytes[i];
        set.labels.push_back(l);
        max_label = std::max(max_label, l);
    }
    set.n_classes = max_label + 1;
    return set;
}

std::pair<LabeledSet, LabeledSet> split(const LabeledSet& set, double train_fraction,
                                        std::uint64_t seed) {
    set.validate();
    if (train_fraction <= 0.0 || train_fraction >= 1.0) {
        throw ContractError("split: train_fraction must be in (0, 1)");
    }
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(set.n_classes));
    for (std::size_t i = 0; i < set.labels.size(); ++i) {
        by_class[static_cast<std::size_t>(set.labels[i])].push_back(i);
    }
    Rng rng(seed);
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    for (auto& members : by_class) {
        if (members.size() < 2) {
            throw ContractError("split: every class needs at least 2 examples");
        }
        rng.shuffle(members);
        auto n_train = static_cast<std::size_t>(
            std::floor(train_fraction * static_cast<double>(members.size()) + 1e-12));
        n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
        train_idx.insert(train_idx.end(), members.begin(), members.begin() + n_train);
        test_idx.insert(test_idx.end(), members.begin() + n_train, members.end());
    }
    auto take = [&](const std::vector<std::size_t>& idx) {
        LabeledSet out;
        out.n_classes = set.n_classes;
        out.features.resize(static_cast<Eigen::Index>(idx.size()), set.features.cols());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            out.features.row(static_cast<Eigen::Index>(i)) =
                set.features.row(static_cast<Eigen::Index>(idx[i]));
            out.labels.push_back(set.labels[idx[i]]);
        }
        return out;
    };
    return {take(train_idx), take(test_idx)};
}

Standardizer Standardizer::fit(const Matrix& features) {
    if (features.rows() < 1) {
        throw ContractError("Standardizer: empty feature matrix");
    }
    Standardizer s;
    s.mean = features.colwise().mean();
    Vector var(features.cols());
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        var(j) = (features.col(j).array() - s.mean(j)).square().mean();
    }
    s.stddev = var.array().sqrt().max(1e-12);
    return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
    if (features.cols() != mean.size()) {
        throw DimensionError("Standardizer: feature width mismatch");
    }
    Matrix out = features;
    out.rowwise() -= mean.transpose();
    out.array().rowwise() /= stddev.transpose().array();
    return out;
}

}  // namespace eod
