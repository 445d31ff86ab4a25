#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "pfreg/cli.hpp"

using namespace pfreg;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "pfreg");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

Run run_config(const cli::RunConfig& c) {
  std::ostringstream out, err;
  const int code = cli::run(c, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pfreg_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(Cli, CountSquaresInF7) {
  const auto r = run_args({"count", "--formula", "E y. y*y = x", "--objects", "x", "--field", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["schema"], "pfreg.report/1");
  EXPECT_EQ(j["command"], "count");
  EXPECT_EQ(j["result"]["N"], 4);
  EXPECT_EQ(j["result"]["q"], 7);
  EXPECT_EQ(j["exact"], true);
  EXPECT_TRUE(j.contains("generated_at"));
}

TEST(Cli, CountWithParameterBinding) {
  const auto r = run_args({"count", "--formula", "E z. z*z = x - y", "--objects", "x", "--params", "y=3", "--fields", "7,11"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j["result"].size(), 2u);
  EXPECT_EQ(j["result"][0]["N"], 4);
  EXPECT_EQ(j["result"][1]["N"], 6);
  EXPECT_EQ(j["result"][1]["params"]["y"], 3);
  EXPECT_EQ(run_args({"count", "--formula", "x = y", "--objects", "x", "--params", "y=9", "--field", "7"}).code, 2);
}

TEST(Cli, CountExtensionField) {
  const auto r = run_args({"count", "--formula", "x*x = x", "--objects", "x", "--field", "2^3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["result"]["N"], 2);
}

TEST(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run_args({"count", "--formula", "x = ", "--objects", "x", "--field", "7"}).code, 2);
  EXPECT_EQ(run_args({"count", "--formula", "x = x", "--objects", "x", "--field", "6"}).code, 2);
  EXPECT_EQ(run_args({"count", "--formula", "x = y", "--objects", "x", "--field", "7"}).code, 2);
  EXPECT_EQ(run_args({"dim", "--formula", "x = x", "--objects", "x", "--fields", "5,7"}).code, 2);
  EXPECT_EQ(run_args({"dim", "--formula", "x = x", "--objects", "x", "--fields", "5,7,11", "--fields-range", "3:20"}).code, 2);
  EXPECT_EQ(run_args({"partition", "--graph", "/nonexistent.json", "--fields", "13,17,29"}).code, 2);
  EXPECT_EQ(run_args({"frobnicate"}).code, 2);
  EXPECT_EQ(run_args({}).code, 2);
}

TEST(Cli, BudgetErrorExitsThree) {
  const auto r = run_args({"count", "--formula", "x = y", "--objects", "x,y", "--field", "101", "--max-work", "1000"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("budget"), std::string::npos);
}

TEST(Cli, FormulaFromFile) {
  const auto dir = temp_dir("formula");
  std::ofstream(dir / "f.txt") << "# squares\nE y. y*y = x\n";
  const auto r = run_args({"count", "--formula", (dir / "f.txt").string(), "--objects", "x", "--field", "11"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["result"]["N"], 6);
}

TEST(Cli, MaxComplexity) {
  EXPECT_EQ(run_args({"count", "--formula", "E y. y*y = x", "--objects", "x", "--field", "7", "--max-complexity", "2"}).code, 2);
}

TEST(Cli, DimWithFieldsRange) {
  const auto r = run_args({"dim", "--formula", "E y. y*y = x", "--objects", "x", "--fields-range", "10:40:mod=4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["fields"], nlohmann::json::parse(R"(["13", "17", "29", "37"])"));
  EXPECT_EQ(j["result"]["invariant"]["dim"], 1);
  EXPECT_EQ(j["result"]["invariant"]["measure"], "1/2");
}

TEST(Cli, FieldsRangeParsing) {
  EXPECT_EQ(cli::parse_fields_range("10:30"), (std::vector<std::uint64_t>{11, 13, 17, 19, 23, 29}));
  EXPECT_EQ(cli::parse_fields_range("10:30:mod=4"), (std::vector<std::uint64_t>{13, 17, 29}));
  EXPECT_EQ(cli::parse_fields_range("10:30:mod=4/3"), (std::vector<std::uint64_t>{11, 19, 23}));
  EXPECT_THROW(cli::parse_fields_range("30:10"), InvalidArgument);
  EXPECT_THROW(cli::parse_fields_range("10"), InvalidArgument);
  EXPECT_THROW(cli::parse_fields_range("10:30:m=4"), InvalidArgument);
  EXPECT_THROW(cli::parse_fields_range("a:30"), InvalidArgument);
}

TEST(Cli, ClassifyWritesCsv) {
  const auto dir = temp_dir("classify");
  const auto r = run_args({"classify", "--formula", "E z. (z*z = x*y & !(x*y = 0))", "--objects", "x", "--params", "y",
                           "--fields", "11,13,17", "--csv", dir.string(), "-o", (dir / "r.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(dir / "r.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["result"]["classes"].size(), 2u);
  std::ifstream csv(dir / "classes.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "field,q,param_index,params,count,class,dim,measure");
  std::size_t rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  EXPECT_EQ(rows, 11u + 13u + 17u);
}

TEST(Cli, PartitionPaley) {
  const auto dir = temp_dir("partition");
  const auto r = run_args({"partition", "--graph", graph_path("paley.json"), "--fields", "13,17,29", "--csv", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const auto& p = j["result"]["partition"];
  EXPECT_EQ(p["blocks"].size(), 1u);
  EXPECT_EQ(p["block_pairs"][0]["c"], "1/4");
  EXPECT_EQ(p["block_pairs"][0]["exceptional_dimension"]["pass"], true);
  EXPECT_TRUE(std::filesystem::exists(dir / "partition.csv"));
}

TEST(Cli, VerifyTrivialPartition) {
  const auto dir = temp_dir("verify");
  const auto r = run_args({"verify", "--graph", graph_path("paley.json"), "--fields", "13,29,53,101", "--trivial-partition",
                           "--samples", "50", "--seed", "1", "--csv", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["result"]["density_consistent"], true);
  EXPECT_LE(j["result"]["alpha"].get<double>(), -0.25);
  EXPECT_FALSE(j["result"]["note"].get<std::string>().empty());
  EXPECT_TRUE(std::filesystem::exists(dir / "density.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "deviation.csv"));
}

TEST(Cli, VerifyEmptyBlockFails) {
  const auto r = run_args({"verify", "--graph", graph_path("paley.json"), "--fields", "13,17,29", "--blocks",
                           graph_path("paley_empty_block.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("clause (i) violated"), std::string::npos);
}

TEST(Cli, VerifyBlockFileFieldMismatch) {
  EXPECT_EQ(run_args({"verify", "--graph", graph_path("paley.json"), "--fields", "13,17", "--blocks",
                      graph_path("paley_empty_block.json")})
                .code,
            2);
}

TEST(Cli, AdversarialGraphExitsOne) {
  cli::RunConfig c;
  c.command = "partition";
  c.fields = {"13", "17", "29"};
  c.graph_override = adversarial_graph();
  const auto r = run_config(c);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("cross-field instability"), std::string::npos);
}

TEST(Cli, DemoPasses) {
  const auto r = run_args({"demo", "--fields", "11,13,17", "--samples", "10", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["pass"], true);
  EXPECT_EQ(j["result"]["graphs"].size(), 3u);
  EXPECT_NE(r.err.find("graph paley"), std::string::npos);
}

TEST(Cli, ConfigExcludesOutputPaths) {
  cli::RunConfig c;
  c.command = "count";
  c.output = "/tmp/x.json";
  c.csv_dir = "/tmp";
  const auto j = cli::config_json(c);
  EXPECT_EQ(j.dump().find("/tmp"), std::string::npos);
}
