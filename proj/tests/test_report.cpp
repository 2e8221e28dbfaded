#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <random>

#include "contrastgeo/report.hpp"

using namespace contrastgeo;

TEST(Report, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(-0.0), "0");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  EXPECT_EQ(format_double(1e22), "1e+22");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "null");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "null");
}

TEST(Report, DumpLayout) {
  Json j;
  j["name"] = "g";
  Mat m(2, 2);
  m << 1, 0, 0, 0.5;
  j["metric"] = to_json(m);
  j["empty"] = Json::array();
  j["ok"] = true;
  j["bad"] = std::numeric_limits<double>::infinity();
  j["n"] = 3;
  const std::string expected =
      "{\n"
      "  \"name\": \"g\",\n"
      "  \"metric\": [\n"
      "    [1, 0],\n"
      "    [0, 0.5]\n"
      "  ],\n"
      "  \"empty\": [],\n"
      "  \"ok\": true,\n"
      "  \"bad\": null,\n"
      "  \"n\": 3\n"
      "}\n";
  EXPECT_EQ(dump(j), expected);
}

TEST(Report, TensorNesting) {
  Tensor3 t(2);
  t(1, 0, 1) = -2.0;
  const Json j = to_json(t);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[1][0][1].get<double>(), -2.0);
  EXPECT_EQ(j[0][1][1].get<double>(), 0.0);
}

TEST(Report, CsvField) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
  EXPECT_EQ(csv_field(""), "");
}

// Property: every finite double survives format -> parse unchanged.
TEST(ReportProperty, DoublesRoundTrip) {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 10000) {
    const std::uint64_t b = bits(gen);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    ++checked;
    const double back = std::strtod(format_double(v).c_str(), nullptr);
    EXPECT_EQ(back, v == 0.0 ? 0.0 : v);
  }
}
