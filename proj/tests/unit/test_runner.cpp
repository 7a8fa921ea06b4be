#include "degpar/error.hpp"
#include "degpar/runner.hpp"

#include <gtest/gtest.h>
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

using namespace degpar;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "parsed: " << text;
    return ErrorKind::config;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("degpar_test_" + name);
    fs::remove_all(dir);
    return dir;
}

const char* kSmall = R"({
  "dimension": 2,
  "horizon": 3.0,
  "profiles": [{"canonical": "identity"}, {"canonical": "window"}],
  "forcing": {"components": [{"variance": 1.0}]},
  "grid": {"n": 32, "halfwidth": 16.0, "cells": 16, "refine": false},
  "parameters": {"p": [2.0, 3.0], "q": [2.0], "beta_w": [0.0, 0.5]}
})";

}  // namespace

TEST(CsvNumber, Formatting) {
    EXPECT_EQ(csv_number(0.1), "0.10000000000000001");
    EXPECT_EQ(csv_number(2.0), "2");
    EXPECT_EQ(csv_number(kInfinity), "inf");
    EXPECT_EQ(csv_number(-kInfinity), "-inf");
    EXPECT_EQ(csv_number(std::nan("")), "nan");
    EXPECT_EQ(std::stod(csv_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(ParseConfig, Defaults) {
    const auto cfg = parse_config(R"({"profiles": [{"canonical": "identity"}], "forcing": {"zero": true}})");
    EXPECT_EQ(cfg.dimension, 2);
    EXPECT_EQ(cfg.horizon, 1.0);
    ASSERT_EQ(cfg.profiles.size(), 1u);
    EXPECT_EQ(cfg.ps, std::vector<double>{2.0});
    EXPECT_FALSE(cfg.mc.enabled);
}

TEST(ParseConfig, Errors) {
    EXPECT_EQ(kind_of("{"), ErrorKind::config);
    EXPECT_EQ(kind_of(R"({"profiles": [{"canonical": "identity"}], "forcing": {"zero": true}, "colour": 1})"),
              ErrorKind::config);
    EXPECT_EQ(kind_of(R"({"profiles": [{"canonical": "nope"}], "forcing": {"zero": true}})"), ErrorKind::config);
    EXPECT_EQ(kind_of(R"({"profiles": [{"canonical": "identity"}], "forcing": {"zero": true}, "grid": {"n": 48}})"),
              ErrorKind::config);
    EXPECT_EQ(kind_of(R"({"profiles": [{"canonical": "identity"}], "forcing": {"zero": true}, "grid": {"cells": 15}})"),
              ErrorKind::config);
    EXPECT_EQ(kind_of(R"({"profiles": [{"canonical": "identity"}, {"canonical": "identity"}], "forcing": {"zero": true}})"),
              ErrorKind::config);
    EXPECT_EQ(kind_of(R"({"profiles": [{"canonical": "identity"}], "forcing": {"zero": true},
                         "parameters": {"q": [2.0], "beta_w": [1.5]}})"),
              ErrorKind::admissibility);
}

TEST(ParseConfig, ShippedConfigs) {
    for (const char* name : {"canonical.json", "zero_forcing.json", "custom_1d.json"}) {
        EXPECT_NO_THROW(load_config(std::string(DEGPAR_SOURCE_DIR) + "/configs/" + name)) << name;
    }
    try {
        load_config(std::string(DEGPAR_SOURCE_DIR) + "/configs/invalid_beta.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::admissibility);
    }
}

TEST(ParseConfig, ReadmeExample) {
    const auto readme = slurp(fs::path(DEGPAR_SOURCE_DIR) / "README.md");
    const auto begin = readme.find("```json\n");
    ASSERT_NE(begin, std::string::npos);
    const auto end = readme.find("```", begin + 8);
    const auto cfg = parse_config(readme.substr(begin + 8, end - begin - 8));
    EXPECT_EQ(cfg.profiles.size(), 15u + 1u);
    EXPECT_TRUE(cfg.mc.enabled);
    EXPECT_TRUE(std::isinf(cfg.ps.back()));
}

TEST(Run, ZeroForcingWritesAllOutputs) {
    const auto cfg = load_config(std::string(DEGPAR_SOURCE_DIR) + "/configs/zero_forcing.json");
    const auto dir = scratch("zero");
    std::ostringstream log;
    EXPECT_EQ(run(cfg, Command::verify, dir.string(), log), 0) << log.str();
    for (const char* f : {"reports.json", "summary.csv", "epsilon_traces.csv", "solver_agreement.csv"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    const auto reports = nlohmann::json::parse(slurp(dir / "reports.json"));
    for (const auto& r : reports.at("reports")) {
        EXPECT_EQ(r.at("lhs").get<double>(), 0.0);
        EXPECT_TRUE(r.at("passed").get<bool>());
    }
}

TEST(Run, SummaryRowsCoverTheParameterProduct) {
    const auto cfg = parse_config(kSmall);
    const auto dir = scratch("rows");
    std::ostringstream log;
    EXPECT_EQ(run(cfg, Command::verify, dir.string(), log), 0) << log.str();
    const auto reports = nlohmann::json::parse(slurp(dir / "reports.json")).at("reports");
    EXPECT_EQ(line_count(dir / "summary.csv"), reports.size() + 1);
    // every (profile, p, beta) appears in the power-weight rows
    std::set<std::tuple<std::string, double, double>> seen;
    for (const auto& r : reports) {
        if (r.at("estimate_id") == "sup_power") {
            seen.emplace(r.at("profile").get<std::string>(), r.at("p").get<double>(), r.at("beta_w").get<double>());
        }
    }
    EXPECT_EQ(seen.size(), 2u * 2u * 2u);
}

TEST(Run, RerunIsByteIdentical) {
    const auto cfg = parse_config(kSmall);
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    std::ostringstream log;
    run(cfg, Command::verify, a.string(), log);
    run(cfg, Command::verify, b.string(), log);
    for (const char* f : {"summary.csv", "epsilon_traces.csv", "solver_agreement.csv"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
}

TEST(Run, SolveWritesFields) {
    const auto cfg = parse_config(kSmall);
    const auto dir = scratch("solve");
    std::ostringstream log;
    EXPECT_EQ(run(cfg, Command::solve, dir.string(), log), 0);
    EXPECT_TRUE(fs::exists(dir / "fields" / "manifest.json"));
    std::size_t bins = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir)) bins += e.path().extension() == ".bin";
    EXPECT_EQ(bins, 4u);
}
