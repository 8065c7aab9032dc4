#include "misprior/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace misprior;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST(Config, ParseTypes) {
  const auto c = Config::parse("# comment\nname = \"a # b\"  # trailing\nn = 42\nx = 1.5e-3\nflag = true\n");
  EXPECT_EQ(c.get_string("name"), "a # b");
  EXPECT_EQ(c.get_int("n"), 42);
  EXPECT_DOUBLE_EQ(c.get_double("x"), 1.5e-3);
  EXPECT_DOUBLE_EQ(c.get_double("n"), 42.0);
  EXPECT_TRUE(c.get_bool("flag"));
}

TEST(Config, ErrorsNameTheField) {
  try {
    Config::parse("n = 1\n").get_int("horizon");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "horizon");
    EXPECT_NE(std::string(e.what()).find("missing required field"), std::string::npos);
  }
  EXPECT_THROW(Config::parse("n = 1.5\n").get_int("n"), ConfigError);
  EXPECT_THROW(Config::parse("s = \"x\"\n").get_double("s"), ConfigError);
  EXPECT_THROW(Config::parse("n = 1\nn = 2\n"), ConfigError);
  EXPECT_THROW(Config::parse("n = abc\n"), ConfigError);
  EXPECT_THROW(Config::parse("just a line\n"), ConfigError);
  EXPECT_THROW(Config::parse("s = \"open\n"), ConfigError);
  EXPECT_THROW(Config::load("/nonexistent/file.toml"), ConfigError);
}

TEST(Config, RoundTrip) {
  Config c;
  c.set("seed", 7);
  c.set("eps", 0.1);
  c.set("label", "with \"quotes\" and \\ slash");
  c.set("whole", 3.0);
  c.set("on", false);
  const Config back = Config::parse(c.serialize());
  EXPECT_EQ(back, c);
  EXPECT_EQ(back.serialize(), c.serialize());
  EXPECT_EQ(back.get_string("label"), "with \"quotes\" and \\ slash");
  EXPECT_EQ(back.get_double("eps"), 0.1);
  EXPECT_EQ(back.get_double("whole"), 3.0);
  EXPECT_FALSE(back.get_bool("on"));
}

TEST(Csv, HeadersAreFixed) {
  EXPECT_STREQ(kLearningCurveHeader, "algorithm,config_id,episode,mean_reward,stderr,envelope_flag");
  EXPECT_STREQ(kFirstActionHeader, "algorithm,arm,frequency");
  EXPECT_STREQ(kBoundsHeader, "instance,n,H,eps,B,bound,measured_gap,gap_stderr");
  EXPECT_STREQ(kLowerBoundHeader, "eps,H,k,analytic_tv,empirical_tv,empirical_stderr,reward_gap,gap_stderr");
}

TEST(Csv, EmptyGridIsHeaderOnly) {
  const auto dir = std::filesystem::temp_directory_path() / "misprior_io_test";
  std::filesystem::create_directories(dir);
  const auto p = (dir / "lc.csv").string();
  emit_learning_curve_csv(p, {});
  EXPECT_EQ(read_file(p), std::string(kLearningCurveHeader) + "\n");
  emit_first_action_csv(p, {});
  EXPECT_EQ(read_file(p), std::string(kFirstActionHeader) + "\n");
  emit_bounds_csv(p, {});
  EXPECT_EQ(read_file(p), std::string(kBoundsHeader) + "\n");
  emit_lowerbound_csv(p, {});
  EXPECT_EQ(read_file(p), std::string(kLowerBoundHeader) + "\n");
}

TEST(Csv, RowsParseBackWithSchemaWidth) {
  const std::string lc = render_csv(kLearningCurveHeader, std::vector<LearningCurveRow>{{"MetaTS:full", "T0=1000", 3, 1.25, 0.1, true}});
  const std::string fa = render_csv(kFirstActionHeader, std::vector<FirstActionRow>{{"Oracle,KG", 4, 0.5}});
  const std::string bd = render_csv(kBoundsHeader, std::vector<BoundsRow>{{"anlb/TS", 1, 20, 0.01, 0.98, 7.8, 0.5, 0.01}});
  const std::string lb = render_csv(kLowerBoundHeader, std::vector<LowerBoundRow>{{0.01, 5, 1, 0.049, 0.05, 0.001, 0.02, 0.001}});
  for (const auto& text : {lc, fa, bd, lb}) {
    const auto ls = lines(text);
    ASSERT_EQ(ls.size(), 2u);
    EXPECT_EQ(split_csv_line(ls[0]).size(), split_csv_line(ls[1]).size());
  }
  const auto row = split_csv_line(lines(fa)[1]);
  EXPECT_EQ(row[0], "Oracle,KG");
  EXPECT_EQ(lines(lc)[1], "MetaTS:full,T0=1000,3,1.25,0.1,1");
}

TEST(Csv, NineSignificantDigits) {
  EXPECT_EQ(fmt9(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(fmt9(0.0), "0");
  EXPECT_EQ(fmt9(123456789012.0), "1.23456789e+11");
}
