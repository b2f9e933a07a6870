#ifndef EOD_DATASETS_HPP
#define EOD_DATASETS_HPP

#include "eod/core.hpp"

#include <string>
#include <utility>
#include <vector>

namespace eod {

struct LabeledSet {
    Matrix features;          // n x d
    std::vector<int> labels;  // values in [0, n_classes)
    int n_classes = 0;

    Eigen::Index size() const { return features.rows(); }
    void validate() const;
};

// Out-of-distribution rows never enter training; construction enforces the
// leak guard (no out row bit-identical to an in_train row).
struct OodPair {
    LabeledSet in_train;
    LabeledSet in_test;
    Matrix out_test;

    static OodPair make(LabeledSet in_train, LabeledSet in_test, Matrix out_test);
};

// Class means equally spaced on a radius-r shell (regular polygon in the
// first two coordinates), isotropic Gaussian noise per class.
LabeledSet gen_gaussian_classes(std::uint64_t seed, int n_classes, int per_class,
                                int dim, double radius, double sigma);

// Uniform direction, radius uniform in [r_min, r_max].
Matrix gen_ring_ood(std::uint64_t seed, int k, int dim, double r_min, double r_max);

LabeledSet load_csv(const std::string& path, int label_column);
void save_csv(const std::string& path, const LabeledSet& set, int label_column);

// IDX binary: magic 0x00000803 u8 rank-3 images, 0x00000801 labels.
// Pixels scaled to [0, 1], images flattened row-major.
LabeledSet load_idx(const std::string& images_path, const std::string& labels_path);

// Images only, same format and scaling; for unlabeled OOD sets.
Matrix load_idx_images(const std::string& images_path);

// Stratified per class with a seeded shuffle; both splits non-empty per class.
std::pair<LabeledSet, LabeledSet> split(const LabeledSet& set, double train_fraction,
                                        std::uint64_t seed);

// Per-dimension standardization fit on in_train, applied to every split.
struct Standardizer {
    Vector mean;
    Vector stddev;  // floored at 1e-12

    static Standardizer fit(const Matrix& features);
    Matrix apply(const Matrix& features) const;
};

}  // namespace eod

#endif
