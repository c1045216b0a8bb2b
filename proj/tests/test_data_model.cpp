#include "asmfs/data_model.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace asmfs;
using namespace asmfs_test;

namespace {

MultiModalDataset one_feature(std::vector<double> values) {
    MultiModalDataset d;
    Matrix x(1, static_cast<Index>(values.size()));
    for (std::size_t j = 0; j < values.size(); ++j) x(0, static_cast<Index>(j)) = values[j];
    d.modalities.push_back(x);
    d.labels = Vector::Ones(static_cast<Index>(values.size()));
    return d;
}

}  // namespace

TEST(LoadDataset, ReadsTwoModalities) {
    const auto dir = temp_dir("load_ok");
    write_file(dir / "a.csv", "f0,f1\n1,2\n3,4\n5,6\n");
    write_file(dir / "b.csv", "f0,f1\n-1,0.5\n2e3,7\n0,0\n");
    write_file(dir / "y.csv", "label\n1\n1\n-1\n");
    const auto data = load_dataset({(dir / "a.csv").string(), (dir / "b.csv").string()}, (dir / "y.csv").string());
    EXPECT_EQ(data.num_modalities(), 2);
    EXPECT_EQ(data.num_features(), 2);
    EXPECT_EQ(data.num_subjects(), 3);
    EXPECT_EQ(data.modalities[0](1, 2), 6.0);
    EXPECT_EQ(data.modalities[1](0, 1), 2000.0);
    EXPECT_EQ(data.modality_names[0], "a");
    EXPECT_EQ(data.labels(2), -1.0);
}

TEST(LoadDataset, ShapeMismatchNamesBothFiles) {
    const auto dir = temp_dir("load_shape");
    write_file(dir / "a.csv", "f0,f1\n1,2\n3,4\n5,6\n");
    write_file(dir / "b.csv", "f0,f1\n1,2\n3,4\n5,6\n7,8\n");
    write_file(dir / "y.csv", "label\n1\n1\n-1\n");
    try {
        load_dataset({(dir / "a.csv").string(), (dir / "b.csv").string()}, (dir / "y.csv").string());
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("a.csv"), std::string::npos);
        EXPECT_NE(msg.find("b.csv"), std::string::npos);
    }
}

TEST(LoadDataset, RejectsLabelOutsideDomain) {
    const auto dir = temp_dir("load_label");
    write_file(dir / "a.csv", "f0\n1\n2\n3\n");
    write_file(dir / "y.csv", "label\n1\n2\n-1\n");
    EXPECT_THROW(load_dataset({(dir / "a.csv").string()}, (dir / "y.csv").string()), ValidationError);
}

TEST(LoadDataset, RemapsZeroOneLabels) {
    const auto dir = temp_dir("load_01");
    write_file(dir / "a.csv", "f0\n1\n2\n3\n");
    write_file(dir / "y.csv", "label\n1\n0\n0\n");
    const auto data = load_dataset({(dir / "a.csv").string()}, (dir / "y.csv").string());
    EXPECT_EQ(data.labels(0), 1.0);
    EXPECT_EQ(data.labels(1), -1.0);
}

TEST(LoadDataset, NonFiniteValueReportsRowAndColumn) {
    const auto dir = temp_dir("load_nan");
    write_file(dir / "a.csv", "f0,f1\n1,2\n3,nan\n");
    write_file(dir / "y.csv", "label\n1\n-1\n");
    try {
        load_dataset({(dir / "a.csv").string()}, (dir / "y.csv").string());
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
        EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
    }
}

TEST(LoadDataset, MissingLabelsFileNamesPath) {
    const auto dir = temp_dir("load_missing");
    write_file(dir / "a.csv", "f0\n1\n2\n");
    const std::string missing = (dir / "nope.csv").string();
    try {
        load_dataset({(dir / "a.csv").string()}, missing);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find(missing), std::string::npos);
    }
}

TEST(LoadDataset, RoundTripIsBitIdentical) {
    std::mt19937_64 rng(7);
    MultiModalDataset data = random_dataset(4, 9, 2, rng);
    data.modalities[0](0, 0) = 0.1;  // not exactly representable
    data.modalities[1](2, 3) = 1e-300;
    const auto dir = temp_dir("roundtrip");
    const std::vector<std::string> paths = {(dir / "m0.csv").string(), (dir / "m1.csv").string()};
    save_dataset(data, paths, (dir / "labels.csv").string());
    const auto back = load_dataset(paths, (dir / "labels.csv").string());
    for (Index m = 0; m < 2; ++m) EXPECT_TRUE((back.modalities[m].array() == data.modalities[m].array()).all());
    EXPECT_TRUE((back.labels.array() == data.labels.array()).all());
    EXPECT_EQ(back.feature_names, data.feature_names);
    // and a second save is byte-identical
    const auto dir2 = temp_dir("roundtrip2");
    const std::vector<std::string> paths2 = {(dir2 / "m0.csv").string(), (dir2 / "m1.csv").string()};
    save_dataset(back, paths2, (dir2 / "labels.csv").string());
    EXPECT_EQ(read_file(paths[0]), read_file(paths2[0]));
    EXPECT_EQ(read_file(dir / "labels.csv"), read_file(dir2 / "labels.csv"));
}

TEST(LoadModalities, HeaderOnlyGivesEmptySubjectSet) {
    const auto dir = temp_dir("header_only");
    write_file(dir / "a.csv", "f0,f1\n");
    const auto data = load_modalities({(dir / "a.csv").string()});
    EXPECT_EQ(data.num_subjects(), 0);
    EXPECT_EQ(data.num_features(), 2);
}

TEST(Zscore, MeanAndPopulationStd) {
    const auto stats = zscore_fit(one_feature({1, 2, 3}));
    EXPECT_DOUBLE_EQ(stats.mean[0](0), 2.0);
    EXPECT_NEAR(stats.stddev[0](0), std::sqrt(2.0 / 3.0), 1e-15);
}

TEST(Zscore, ConstantFeatureGetsUnitStd) {
    const auto stats = zscore_fit(one_feature({5, 5, 5}));
    EXPECT_EQ(stats.mean[0](0), 5.0);
    EXPECT_EQ(stats.stddev[0](0), 1.0);
    const auto z = zscore_apply(one_feature({5, 5, 5}), stats);
    EXPECT_TRUE((z.modalities[0].array() == 0.0).all());
}

TEST(Zscore, StandardizedInputGivesIdentityStats) {
    const auto stats = zscore_fit(one_feature({-1, 1, -1, 1}));
    EXPECT_NEAR(stats.mean[0](0), 0.0, 1e-12);
    EXPECT_NEAR(stats.stddev[0](0), 1.0, 1e-12);
}

TEST(Zscore, ApplyKnownStats) {
    NormalizationStats stats;
    stats.mean.push_back(Vector::Constant(1, 2.0));
    stats.stddev.push_back(Vector::Constant(1, 2.0));
    EXPECT_DOUBLE_EQ(zscore_apply(one_feature({4}), stats).modalities[0](0, 0), 1.0);
}

TEST(Zscore, IdentityStatsLeaveDataUnchanged) {
    std::mt19937_64 rng(3);
    const auto data = random_dataset(5, 8, 2, rng);
    NormalizationStats stats;
    for (int m = 0; m < 2; ++m) {
        stats.mean.push_back(Vector::Zero(5));
        stats.stddev.push_back(Vector::Ones(5));
    }
    const auto z = zscore_apply(data, stats);
    for (int m = 0; m < 2; ++m) EXPECT_TRUE((z.modalities[m].array() == data.modalities[m].array()).all());
}

TEST(Zscore, SelfApplicationStandardizes) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto data = random_dataset(6, 15, 2, rng);
        data.modalities[1].row(3).setConstant(4.2);
        data.modalities[0] = (data.modalities[0].array() * 3.0 + 7.0).matrix();
        const auto z = zscore_apply(data, zscore_fit(data));
        for (const Matrix& x : z.modalities)
            for (Index i = 0; i < x.rows(); ++i) {
                const double mean = x.row(i).mean();
                const double sd = std::sqrt((x.row(i).array() - mean).square().mean());
                EXPECT_LE(std::abs(mean), 1e-10);
                if (sd != 0.0) EXPECT_NEAR(sd, 1.0, 1e-10);
            }
    }
}

TEST(Zscore, ApplyRejectsShapeMismatch) {
    std::mt19937_64 rng(1);
    const auto a = random_dataset(3, 6, 1, rng);
    const auto b = random_dataset(4, 6, 1, rng);
    EXPECT_THROW(zscore_apply(b, zscore_fit(a)), ValidationError);
}

TEST(Dataset, ValidateRejectsNonFinite) {
    std::mt19937_64 rng(2);
    auto data = random_dataset(3, 6, 2, rng);
    data.modalities[1](2, 4) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(data.validate(), ValidationError);
}

TEST(Dataset, SubsetKeepsOrder) {
    std::mt19937_64 rng(2);
    const auto data = random_dataset(3, 6, 2, rng);
    const auto s = data.subset({4, 1});
    EXPECT_EQ(s.num_subjects(), 2);
    EXPECT_TRUE(s.modalities[1].col(0) == data.modalities[1].col(4));
    EXPECT_EQ(s.labels(1), data.labels(1));
}
