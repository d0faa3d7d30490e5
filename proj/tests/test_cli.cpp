#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "rcl/cli.hpp"

using namespace rcl;
using namespace rcl::cli;

namespace {

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

RunConfig config(const std::string& experiment, std::map<std::string, std::string> kv) {
  return from_kv(experiment, kv);
}

int tool(const std::string& args) {
  const std::string cmd = std::string(RCL_TOOL) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, RoundTripsThroughKeyValuePairs) {
  for (const char* e : kExperiments) {
    RunConfig c = defaults_for(e);
    c.theta = 0.1;
    c.eps = 3.3e-13;
    const auto pairs = c.to_kv();
    std::map<std::string, std::string> kv(pairs.begin(), pairs.end());
    const RunConfig back = from_kv(e, kv);
    EXPECT_EQ(back.to_kv(), c.to_kv()) << e;
  }
}

TEST(Config, ErrorsNameTheField) {
  auto message = [](const std::map<std::string, std::string>& kv) {
    try {
      from_kv("circular", kv);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_EQ(message({{"k", "-1"}}).rfind("k:", 0), 0u);
  EXPECT_EQ(message({{"samples", "ten"}}).rfind("samples:", 0), 0u);
  EXPECT_EQ(message({{"b", "0.9"}}).rfind("b:", 0), 0u);
  EXPECT_EQ(message({{"colour", "red"}}).rfind("colour:", 0), 0u);
  EXPECT_EQ(message({{"experiment", "rect"}}).rfind("experiment:", 0), 0u);
  EXPECT_THROW(defaults_for("sphere"), ConfigError);
}

TEST(Config, KeyValueText) {
  const auto kv = parse_kv_text("# comment\n\n k = 10,20 \nN=5\r\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("k"), "10,20");
  EXPECT_EQ(kv.at("N"), "5");
  EXPECT_THROW(parse_kv_text("k 10\n"), ConfigError);
  EXPECT_EQ(config("circular", kv).k, (std::vector<double>{10.0, 20.0}));
}

TEST(Format, FiveSignificantDigits) {
  EXPECT_EQ(format_sci(1.5763e-4), "1.5763e-04");
  EXPECT_EQ(format_sci(0.0), "0.0000e+00");
  EXPECT_EQ(format_sci(123456.0), "1.2346e+05");
}

TEST(Circular, EmptySweepGivesHeaderOnly) {
  const std::string csv = cmd_circular(config("circular", {{"k", ""}})).text;
  const auto lines = data_lines(csv);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0], "k,N,M,e_u^R,e_u^I,e_v^R,e_v^I");
}

TEST(Circular, MetadataRoundTripsAndOutputIsDeterministic) {
  const RunConfig c = config("circular", {{"k", "10"}, {"N", "12,24"}, {"samples", "500"}});
  const std::string a = cmd_circular(c).text;
  const std::string b = cmd_circular(c).text;
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find(std::string("# rcl version ") + RCL_VERSION), std::string::npos);
  const auto meta = read_csv_metadata(a);
  EXPECT_EQ(from_kv("circular", meta).to_kv(), c.to_kv());
  const auto lines = data_lines(a);
  ASSERT_EQ(lines.size(), 3u);
  const auto coarse = split(lines[1]), fine = split(lines[2]);
  EXPECT_EQ(coarse[0], "10");
  EXPECT_EQ(fine[1], "24");
  for (int col = 3; col < 7; ++col) EXPECT_LT(std::stod(fine[col]), std::stod(coarse[col]));
}

TEST(Thickness, EchoesTheCompressionRate) {
  const RunConfig c = config("thickness", {{"k", "10"}, {"N1", "30"}, {"N2", "30"}, {"samples", "500"}});
  const auto lines = data_lines(cmd_thickness(c).text);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "k,d,tau0,N1,N2,M,e_u^R,e_u^I,e_v^R,e_v^I");
  const double d[] = {1.0, 0.1, 0.001};
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto cells = split(lines[i + 1]);
    EXPECT_EQ(cells[2], format_sci(std::log(1.0 / (1e-13 * 1e-13)) / d[i]));
    for (int col = 6; col < 10; ++col) {
      lo = std::min(lo, std::stod(cells[col]));
      hi = std::max(hi, std::stod(cells[col]));
    }
  }
  EXPECT_LT(hi, 1e-3);
  EXPECT_GT(lo, 0.0);
}

TEST(FarField, SchemaAndAccuracy) {
  const RunConfig c = config("farfield", {});
  const auto j = nlohmann::json::parse(cmd_farfield(c).text);
  for (const char* key : {"rho", "re_U_N", "im_U_N", "re_U_exact", "im_U_exact", "sup_error",
                          "decay_exponent", "config", "version"}) {
    ASSERT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["rho"].size(), 201u);
  EXPECT_EQ(j["re_U_N"].size(), j["rho"].size());
  EXPECT_LE(j["sup_error"].get<double>(), 1e-6);
  EXPECT_NEAR(j["decay_exponent"].get<double>(), -0.5, 0.1);
  EXPECT_EQ(j["config"]["k"], "50");
  EXPECT_THROW(cmd_farfield(config("farfield", {{"rho_min", "0.5"}})), ConfigError);
}

TEST(Rect, OrdersAreLogRatiosAndRowsCarryStatus) {
  const RunConfig c = config("rect", {{"mesh", "32,64"}});
  const std::string csv = cmd_rect(c).text;
  EXPECT_EQ(csv, cmd_rect(c).text);
  const auto lines = data_lines(csv);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "m,e_u^R,order,e_u^I,order,e_v^R,order,e_v^I,order,status");
  const auto a = split(lines[1]), b = split(lines[2]);
  ASSERT_EQ(a.size(), 10u);
  EXPECT_EQ(a[2], "");
  EXPECT_EQ(b[9], "ok");
  for (int col = 1; col < 9; col += 2) {
    const double order = std::log2(std::stod(a[col]) / std::stod(b[col]));
    EXPECT_NEAR(std::stod(b[col + 1]), order, 2e-4);  // rounded inputs
  }
}

TEST(Rect, EmptySweepAndSkippedRows) {
  EXPECT_EQ(data_lines(cmd_rect(config("rect", {{"mesh", ""}})).text).size(), 1u);
  const auto lines = data_lines(cmd_rect(config("rect", {{"mesh", "32,512"}, {"memory_mb", "50"}})).text);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(split(lines[2]).back(), "skipped: memory");
  EXPECT_EQ(split(lines[2])[1], "");
}

TEST(Rect, FieldExportCarriesTheExactField) {
  const auto out = cmd_rect(config("rect", {{"mesh", ""}, {"field_mesh", "32"}, {"N", "2"}}));
  ASSERT_TRUE(out.field.has_value());
  const auto& j = *out.field;
  const std::size_t n = j["points"].size();
  EXPECT_EQ(j["exact_re"].size(), n);
  EXPECT_EQ(j["re"].size(), n);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    worst = std::max(worst, std::abs(j["re"][i].get<double>() - j["exact_re"][i].get<double>()));
  }
  EXPECT_LT(worst, 0.2);
}

TEST(LShape, SchemaAndOuterBoundary) {
  const RunConfig c = config("lshape", {{"mesh", "32"}});
  const std::string text = cmd_lshape(c).text;
  EXPECT_EQ(text, cmd_lshape(c).text);
  const auto j = nlohmann::json::parse(text);
  for (const char* key : {"points", "re", "im", "region", "meta"}) ASSERT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["meta"]["version"], RCL_VERSION);
  EXPECT_EQ(j["meta"]["config"]["experiment"], "lshape");
  for (std::size_t i = 0; i < j["points"].size(); ++i) {
    const double x = j["points"][i][0], y = j["points"][i][1];
    if (std::abs(std::max(std::abs(x), std::abs(y)) - 1.3) < 1e-12) {
      EXPECT_EQ(j["re"][i].get<double>(), 0.0);
      EXPECT_EQ(j["im"][i].get<double>(), 0.0);
    }
  }
}

TEST(LShape, DegenerateCutMatchesTheSquareField) {
  const auto l = nlohmann::json::parse(
      cmd_lshape(config("lshape", {{"mesh", "32"}, {"cut_x", "0.4"}, {"cut_y", "0.4"}})).text);
  const auto sq = *cmd_rect(config("rect", {{"mesh", ""}, {"field_mesh", "32"}, {"N", "2"}})).field;
  ASSERT_EQ(l["re"].size(), sq["re"].size());
  for (std::size_t i = 0; i < sq["re"].size(); ++i) {
    EXPECT_NEAR(l["re"][i].get<double>(), sq["re"][i].get<double>(), 1e-10);
    EXPECT_NEAR(l["im"][i].get<double>(), sq["im"][i].get<double>(), 1e-10);
  }
}

TEST(Tool, ExitCodes) {
  EXPECT_EQ(tool("circular --k 10 --N 12 --samples 100"), 0);
  EXPECT_EQ(tool("circular --k -1"), 2);
  EXPECT_EQ(tool("circular --bogus 1"), 2);
  EXPECT_EQ(tool(""), 2);
  EXPECT_EQ(tool("lshape --mesh 8"), 2);
  EXPECT_EQ(tool("rect --mesh 32 --field_mesh 32"), 2);
  EXPECT_EQ(tool("circular --k 10 --N 20 --M 3000 --samples 10"), 3);
}

TEST(Tool, FlagsWinOverTheConfigFile) {
  const std::string dir = ::testing::TempDir();
  const std::string cfg = dir + "/rcl_test.cfg", a = dir + "/rcl_a.csv", b = dir + "/rcl_b.csv";
  std::ofstream(cfg) << "# sweep\nk=10\nN=12\nsamples=100\nout=" << a << "\n";
  ASSERT_EQ(tool("circular --config " + cfg), 0);
  ASSERT_EQ(tool("circular --config " + cfg + " --N 14 --out " + b), 0);
  auto slurp = [](const std::string& p) {
    std::stringstream s;
    s << std::ifstream(p).rdbuf();
    return s.str();
  };
  const auto meta_a = read_csv_metadata(slurp(a)), meta_b = read_csv_metadata(slurp(b));
  EXPECT_EQ(meta_a.at("N"), "12");
  EXPECT_EQ(meta_b.at("N"), "14");
  EXPECT_EQ(meta_b.at("samples"), "100");
  ASSERT_EQ(tool("circular --config " + cfg + " --out " + b), 0);
  EXPECT_EQ(slurp(a).substr(slurp(a).find("k,N")), slurp(b).substr(slurp(b).find("k,N")));
}
