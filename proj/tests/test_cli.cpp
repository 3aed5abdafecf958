#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pnd_cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "pnd");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = pnd::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / "pnd_cli_test";
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        const auto r = cli({"simulate", "--streams", "3", "--events-per-stream", "2", "--days", "1", "--seed", "11",
                            "--out", (dir_ / "bench").string()});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    static void TearDownTestSuite() { fs::remove_all(dir_); }

    static std::string manifest() { return (dir_ / "bench" / "manifest.json").string(); }
    static fs::path dir_;
};

fs::path CliTest::dir_;

}  // namespace

TEST(Cli, NoArgumentsIsUsageError) {
    const auto r = cli({});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("simulate"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) {
    const auto r = cli({"train", "--bogus"});
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(cli({"--help"}).code, 0); }

TEST_F(CliTest, SimulateWritesManifest) {
    const auto j = nlohmann::json::parse(slurp(manifest()));
    EXPECT_EQ(j["streams"].size(), 3u);
    EXPECT_EQ(j["seed"], 11);
}

TEST_F(CliTest, MissingInputIsUsageErrorBeforeWork) {
    const auto r = cli({"train", "--data", (dir_ / "nope.csv").string(), "--out", (dir_ / "m.json").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(fs::exists(dir_ / "m.json"));
}

TEST_F(CliTest, BadDataIsDataError) {
    const auto bad = dir_ / "bad.csv";
    std::ofstream(bad) << "not,a,feature,file\n";
    const auto r = cli({"train", "--data", bad.string(), "--seed", "1", "--out", (dir_ / "m.json").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("bad.csv"), std::string::npos);
}

TEST_F(CliTest, TrainTwiceGivesIdenticalModels) {
    const auto a = dir_ / "a.json", b = dir_ / "b.json";
    for (const auto& p : {a, b}) {
        const auto r = cli({"train", "--model", "xgb", "--smote", "--seed", "7", "--n-trees", "10", "--data", manifest(),
                            "--out", p.string()});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_NE(slurp(a.string() + ".config").find("seed = 7"), std::string::npos);

    const auto r = cli({"evaluate", "--model-file", a.string(), "--data", manifest(), "--test-split", "--seed", "7"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("xgb,"), std::string::npos);
}

TEST_F(CliTest, ExperimentWritesTenRowReport) {
    const auto report = dir_ / "report.csv";
    const auto r = cli({"experiment", "--models", "all", "--n-trees", "5", "--seed", "3", "--data", manifest(), "--out",
                        report.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = slurp(report);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), pnd::kReportCsvHeader);
    EXPECT_NE(r.out.find("LightGBM"), std::string::npos);
    EXPECT_NE(r.out.find("# effective configuration"), std::string::npos);
}

TEST_F(CliTest, ExperimentWithoutSmoteHasOriginalRowsOnly) {
    const auto report = dir_ / "orig.csv";
    const auto r = cli({"experiment", "--models", "xgb,lgbm", "--no-smote", "--n-trees", "5", "--seed", "3", "--data",
                        manifest(), "--out", report.string(), "-q"});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = slurp(report);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    EXPECT_EQ(csv.find("smote"), std::string::npos);
}

TEST_F(CliTest, UnknownModelIsUsageError) {
    EXPECT_EQ(cli({"experiment", "--models", "svm", "--data", manifest(), "--seed", "1"}).code, 1);
}

TEST_F(CliTest, BenchPrintsTimingTable) {
    const auto r = cli({"bench", "--models", "lgbm,xgb", "--n-trees", "5", "--seed", "2", "--data", manifest()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("Training Time"), std::string::npos);
}

TEST_F(CliTest, MissingSeedIsChosenAndPrinted) {
    const auto r = cli({"experiment", "--models", "lgbm", "--n-trees", "3", "--data", manifest(), "-q"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("seed: "), std::string::npos);
}

TEST_F(CliTest, ConfigFileBelowFlags) {
    const auto cfg = dir_ / "run.toml";
    std::ofstream(cfg) << "[experiment]\nmodels = \"lgbm\"\nn-trees = 3\nseed = 5\n";
    const auto report = dir_ / "cfg.csv";
    auto r = cli({"--config", cfg.string(), "experiment", "--data", manifest(), "--out", report.string(), "-q"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::string csv = slurp(report);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    EXPECT_NE(slurp(report.string() + ".config").find("seed = 5"), std::string::npos);

    r = cli({"--config", cfg.string(), "experiment", "--models", "xgb", "--seed", "6", "--data", manifest(), "--out",
             report.string(), "-q"});
    ASSERT_EQ(r.code, 0) << r.err;
    csv = slurp(report);
    EXPECT_NE(csv.find("xgb"), std::string::npos);
    EXPECT_NE(csv.find(",6\n"), std::string::npos);
}

TEST_F(CliTest, FeaturizeSingleStream) {
    const auto out = dir_ / "single";
    auto r = cli({"simulate", "--single-stream", "--days", "0.5", "--seed", "4", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    r = cli({"featurize", "--trades", (out / "SYN_trades.csv").string(), "--events", (out / "SYN_events.csv").string(),
             "--out", (out / "features.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("rows: "), std::string::npos);
    EXPECT_TRUE(fs::exists(out / "features.csv"));
}
