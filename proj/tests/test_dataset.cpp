#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fixtures.hpp"
#include "pnd/dataset.hpp"

using namespace pnd;

TEST(Dataset, CountsAndAccess) {
    Dataset d(2);
    d.add_row(std::vector<double>{1.0, 2.0}, 0);
    d.add_row(std::vector<double>{3.0, 4.0}, 1);
    EXPECT_EQ(d.rows(), 2u);
    EXPECT_EQ(d.n_pos(), 1u);
    EXPECT_EQ(d.n_neg(), 1u);
    EXPECT_EQ(d.at(1, 0), 3.0);
    EXPECT_EQ(d.matrix().rows(), 2u);
    EXPECT_EQ(d.matrix().at(0, 1), 2.0);
}

TEST(Dataset, RejectsBadRows) {
    Dataset d(2);
    EXPECT_THROW(d.add_row(std::vector<double>{1.0}, 0), ContractError);
    EXPECT_THROW(d.add_row(std::vector<double>{1.0, 2.0}, 2), ValidationError);
    EXPECT_THROW(d.add_row(std::vector<double>{1.0, std::numeric_limits<double>::quiet_NaN()}, 0), ValidationError);
    EXPECT_THROW(d.add_row(std::vector<double>{1.0, std::numeric_limits<double>::infinity()}, 0), ValidationError);
    EXPECT_THROW(Dataset(0), ContractError);
    EXPECT_EQ(d.rows(), 0u);
}

TEST(Dataset, SubsetAndAppendKeepCounts) {
    const Dataset d = fixtures::random_dataset(1, 100, 3);
    std::vector<std::size_t> even, odd;
    for (std::size_t i = 0; i < d.rows(); ++i) (i % 2 ? odd : even).push_back(i);
    Dataset a = d.subset(even);
    const Dataset b = d.subset(odd);
    EXPECT_EQ(a.n_pos() + b.n_pos(), d.n_pos());
    a.append(b);
    EXPECT_EQ(a.rows(), d.rows());
    EXPECT_EQ(a.n_neg(), d.n_neg());
    EXPECT_EQ(a.row_hash(0), d.row_hash(0));
    EXPECT_EQ(a.row_hash(50), d.row_hash(1));
    EXPECT_THROW(a.append(Dataset(4)), ContractError);
}

TEST(Dataset, EqualityIsBytewise) {
    const Dataset d = fixtures::random_dataset(2, 20, 3);
    Dataset e = d;
    EXPECT_EQ(d, e);
    std::vector<std::size_t> idx(d.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::swap(idx[0], idx[1]);
    EXPECT_FALSE(d == d.subset(idx) && d.row_hash(0) != d.row_hash(1));
}

TEST(LoadFeatureDataset, ConcatenatesFilesAndNamesBadOnes) {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "pnd_test_dataset";
    fs::create_directories(dir);
    std::vector<FeatureRow> rows(3);
    rows[1].label = 1;
    rows[2].values[4] = 7.5;
    for (const char* name : {"a.csv", "b.csv"}) {
        std::ofstream f(dir / name);
        write_feature_csv(rows, f);
    }
    const Dataset d = load_feature_dataset({(dir / "a.csv").string(), (dir / "b.csv").string()});
    EXPECT_EQ(d.rows(), 6u);
    EXPECT_EQ(d.n_pos(), 2u);
    EXPECT_EQ(d.at(5, 4), 7.5);
    {
        std::ofstream f(dir / "bad.csv");
        f << feature_csv_header() << "\n0,1,2,3,4,5,6,7,8,x,0\n";
    }
    try {
        load_feature_dataset({(dir / "bad.csv").string()});
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("bad.csv"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    EXPECT_THROW(load_feature_dataset({(dir / "missing.csv").string()}), Error);
    fs::remove_all(dir);
}
