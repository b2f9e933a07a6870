#include "eod/datasets.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

using namespace eod;

namespace {

namespace fs = std::filesystem;

fs::path tmp_file(const std::string& name) {
    return fs::temp_directory_path() / name;
}

void write_be_u32(std::ofstream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

// 2 images of 2x2 pixels plus matching labels.
void write_idx_fixture(const fs::path& images, const fs::path& labels,
                       std::uint32_t image_magic = 0x00000803u,
                       std::uint32_t label_count = 2, bool truncate_payload = false) {
    std::ofstream img(images, std::ios::binary);
    write_be_u32(img, image_magic);
    write_be_u32(img, 2);
    write_be_u32(img, 2);
    write_be_u32(img, 2);
    const unsigned char pixels[8] = {0, 51, 102, 153, 204, 255, 0, 255};
    img.write(reinterpret_cast<const char*>(pixels),
              truncate_payload ? 5 : 8);
    img.close();

    std::ofstream lbl(labels, std::ios::binary);
    write_be_u32(lbl, 0x00000801u);
    write_be_u32(lbl, label_count);
    const unsigned char ls[2] = {1, 0};
    lbl.write(reinterpret_cast<const char*>(ls), std::min<std::uint32_t>(label_count, 2));
}

}  // namespace

TEST_CASE("gaussian generator collapses at sigma 0 and is deterministic") {
    const auto zero = gen_gaussian_classes(1, 4, 10, 2, 4.0, 0.0);
    CHECK(zero.size() == 40);
    // Each class is a single repeated point on the radius-4 circle.
    for (int c = 0; c < 4; ++c) {
        const auto r0 = zero.features.row(c * 10);
        CHECK(r0.norm() == doctest::Approx(4.0));
        for (int i = 1; i < 10; ++i) {
            CHECK((zero.features.row(c * 10 + i) - r0).norm() == 0.0);
        }
    }

    const auto a = gen_gaussian_classes(42, 3, 20, 2, 4.0, 0.5);
    const auto b = gen_gaussian_classes(42, 3, 20, 2, 4.0, 0.5);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);

    CHECK_THROWS_AS(gen_gaussian_classes(1, 4, 0, 2, 4.0, 0.5), ContractError);
}

TEST_CASE("gaussian per-class sample means concentrate") {
    const double sigma = 0.5;
    const int per_class = 500;
    const auto set = gen_gaussian_classes(7, 4, per_class, 2, 4.0, sigma);
    const double bound = 3.0 * sigma / std::sqrt(static_cast<double>(per_class));
    for (int c = 0; c < 4; ++c) {
        Vector mean = Vector::Zero(2);
        for (int i = 0; i < per_class; ++i) {
            mean += set.features.row(c * per_class + i).transpose();
        }
        mean /= per_class;
        const double angle = 2.0 * M_PI * c / 4;
        Vector truth(2);
        truth << 4.0 * std::cos(angle), 4.0 * std::sin(angle);
        // Componentwise 3-sigma bound; allow a touch of slack for the joint test.
        CHECK((mean - truth).cwiseAbs().maxCoeff() < 1.5 * bound);
    }
}

TEST_CASE("ring generator radii and determinism") {
    const Matrix ring = gen_ring_ood(3, 1000, 2, 7.0, 9.0);
    for (Eigen::Index i = 0; i < ring.rows(); ++i) {
        const double r = ring.row(i).norm();
        CHECK(r >= 7.0 - 1e-9);
        CHECK(r <= 9.0 + 1e-9);
    }
    CHECK((gen_ring_ood(3, 1000, 2, 7.0, 9.0) - ring).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(gen_ring_ood(3, 10, 2, 9.0, 7.0), ContractError);
}

TEST_CASE("ring radius distribution passes a coarse chi-squared check") {
    const int k = 5000;
    const Matrix ring = gen_ring_ood(11, k, 3, 7.0, 9.0);
    int counts[10] = {0};
    for (Eigen::Index i = 0; i < ring.rows(); ++i) {
        const double t = (ring.row(i).norm() - 7.0) / 2.0;
        auto bin = static_cast<int>(t * 10.0);
        counts[std::min(bin, 9)] += 1;
    }
    const double expected = k / 10.0;
    double chi2 = 0.0;
    for (int c : counts) {
        chi2 += (c - expected) * (c - expected) / expected;
    }
    CHECK(chi2 < 21.666);  // chi2_{9 dof} at p = 0.01
}

TEST_CASE("csv load with dense label remap") {
    const auto path = tmp_file("eod_csv_test.csv");
    {
        std::ofstream os(path);
        os << "7,1.5,2.5\n2,3.5,4.5\n7,5.5,6.5\n";
    }
    const auto set = load_csv(path, 0);
    CHECK(set.size() == 3);
    CHECK(set.features.cols() == 2);
    CHECK(set.n_classes == 2);
    CHECK(set.labels == std::vector<int>{0, 1, 0});
    CHECK(set.features(2, 1) == 6.5);
    fs::remove(path);
}

TEST_CASE("csv parse errors carry line numbers") {
    const auto ragged = tmp_file("eod_csv_ragged.csv");
    {
        std::ofstream os(ragged);
        os << "1,2,3\n1,2\n";
    }
    CHECK_THROWS_WITH_AS(load_csv(ragged, 0), doctest::Contains("line 2"), ParseError);
    fs::remove(ragged);

    const auto nonnum = tmp_file("eod_csv_nonnum.csv");
    {
        std::ofstream os(nonnum);
        os << "1,2\n1,abc\n";
    }
    CHECK_THROWS_AS(load_csv(nonnum, 0), ParseError);
    fs::remove(nonnum);
}

TEST_CASE("csv write-then-read round trip") {
    LabeledSet set;
    set.n_classes = 2;
    set.features.resize(4, 3);
    set.features << 0.125, -1.5, 2.75,
                    3.0, 4.5, -0.0625,
                    1e-7, 2e8, 0.333251953125,
                    -9.0, 0.0, 1.0;
    set.labels = {0, 1, 1, 0};
    const auto path = tmp_file("eod_csv_roundtrip.csv");
    save_csv(path, set, 0);
    const auto back = load_csv(path, 0);
    CHECK(back.labels == set.labels);
    CHECK((back.features - set.features).cwiseAbs().maxCoeff() == 0.0);
    fs::remove(path);
}

TEST_CASE("idx fixture parses to known values") {
    const auto img = tmp_file("eod_idx_images");
    const auto lbl = tmp_file("eod_idx_labels");
    write_idx_fixture(img, lbl);
    const auto set = load_idx(img, lbl);
    CHECK(set.size() == 2);
    CHECK(set.features.cols() == 4);
    CHECK(set.features(0, 0) == 0.0);
    CHECK(set.features(0, 1) == doctest::Approx(51.0 / 255.0));
    CHECK(set.features(1, 1) == 1.0);
    CHECK(set.labels == std::vector<int>{1, 0});
    fs::remove(img);
    fs::remove(lbl);
}

TEST_CASE("idx rejects wrong magic, truncation and count mismatch") {
    const auto img = tmp_file("eod_idx_bad_images");
    const auto lbl = tmp_file("eod_idx_bad_labels");

    write_idx_fixture(img, lbl, 0x00000802u);
    CHECK_THROWS_WITH_AS(load_idx(img, lbl), doctest::Contains("magic"), ParseError);

    write_idx_fixture(img, lbl, 0x00000803u, 2, /*truncate_payload=*/true);
    CHECK_THROWS_WITH_AS(load_idx(img, lbl), doctest::Contains("truncated"), ParseError);

    write_idx_fixture(img, lbl, 0x00000803u, /*label_count=*/3);
    CHECK_THROWS_WITH_AS(load_idx(img, lbl), doctest::Contains("mismatch"), ParseError);

    fs::remove(img);
    fs::remove(lbl);
}

TEST_CASE("stratified split is exact, deterministic and a partition") {
    const auto set = gen_gaussian_classes(5, 3, 100, 2, 4.0, 0.5);
    auto [train, test] = split(set, 0.8, 9);
    CHECK(train.size() == 240);
    CHECK(test.size() == 60);
    for (int c = 0; c < 3; ++c) {
        CHECK(std::count(train.labels.begin(), train.labels.end(), c) == 80);
        CHECK(std::count(test.labels.begin(), test.labels.end(), c) == 20);
    }
    auto [train2, test2] = split(set, 0.8, 9);
    CHECK(train.features == train2.features);

    // Union of splits equals the original multiset of rows.
    std::vector<std::vector<double>> all;
    auto collect = [&](const LabeledSet& s) {
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            std::vector<double> row(s.features.row(i).begin(), s.features.row(i).end());
            all.push_back(std::move(row));
        }
    };
    collect(train);
    collect(test);
    std::vector<std::vector<double>> orig;
    for (Eigen::Index i = 0; i < set.size(); ++i) {
        orig.emplace_back(set.features.row(i).begin(), set.features.row(i).end());
    }
    std::sort(all.begin(), all.end());
    std::sort(orig.begin(), orig.end());
    CHECK(all == orig);

    LabeledSet tiny;
    tiny.n_classes = 2;
    tiny.features = Matrix::Zero(3, 2);
    tiny.labels = {0, 0, 1};
    CHECK_THROWS_AS(split(tiny, 0.5, 1), ContractError);
}

TEST_CASE("ood pair rejects bit-identical leaks") {
    auto in = gen_gaussian_classes(1, 2, 10, 2, 4.0, 0.5);
    auto [train, test] = split(in, 0.8, 1);
    Matrix out = gen_ring_ood(2, 5, 2, 7.0, 9.0);
    out.row(3) = train.features.row(0);
    CHECK_THROWS_WITH_AS(OodPair::make(train, test, out), doctest::Contains("leak"),
                         ContractError);
}

TEST_CASE("default geometry keeps in and out supports apart") {
    const auto in = gen_gaussian_classes(3, 4, 250, 2, 4.0, 0.5);
    auto [train, test] = split(in, 0.8, 3);
    const Matrix out = gen_ring_ood(4, 500, 2, 7.0, 9.0);
    const auto pair = OodPair::make(train, test, out);
    double min_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < pair.out_test.rows(); ++i) {
        for (Eigen::Index j = 0; j < pair.in_train.features.rows(); ++j) {
            min_dist = std::min(min_dist,
                                (pair.out_test.row(i) - pair.in_train.features.row(j)).norm());
        }
    }
    CHECK(min_dist > 1.0);
}

TEST_CASE("standardizer normalizes train statistics") {
    const auto set = gen_gaussian_classes(8, 4, 200, 2, 4.0, 0.5);
    const auto std_ = Standardizer::fit(set.features);
    const Matrix z = std_.apply(set.features);
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        CHECK(std::abs(z.col(j).mean()) < 1e-9);
        const double var = (z.col(j).array() - z.col(j).mean()).square().mean();
        CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(std_.apply(Matrix::Zero(2, 5)), DimensionError);
}
