#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "contractive/builtins.hpp"
#include "contractive/io.hpp"

using namespace contractive;

TEST(Io, ParsesCsvExamples) {
  EXPECT_EQ(parse_matrix("-2,1\n2,-3"), builtins::ex1());
  EXPECT_EQ(parse_matrix("-2, 1\r\n 2 ,-3\n\n"), builtins::ex1());
  const Matrix one = parse_matrix("1");
  ASSERT_EQ(one.rows(), 1);
  EXPECT_EQ(one(0, 0), 1.0);
  EXPECT_EQ(parse_matrix("+1.5e0,2\n3,4")(0, 0), 1.5);
}

TEST(Io, RaggedRowReportsLineTwo) {
  try {
    parse_matrix("1,2\n3");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(std::string(e.in("m.csv").what()), "m.csv: line 2, column 1: " + e.message());
  }
}

TEST(Io, BadTokenReportsColumn) {
  try {
    parse_matrix("1,2\n3,x4");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 3);
  }
  EXPECT_THROW(parse_matrix("1,,2\n1,2,3\n1,2,3"), ParseError);
  EXPECT_THROW(parse_matrix("1,2"), ParseError);
  EXPECT_THROW(parse_matrix(""), ParseError);
  EXPECT_THROW(parse_matrix("1e999"), ParseError);
  EXPECT_THROW(parse_matrix("nan"), ParseError);
}

TEST(Io, JsonAndCsvAreBitIdentical) {
  const Matrix csv = parse_matrix("0.1,-2.5e-3\n3.14159265358979,1e-300");
  const Matrix json = parse_matrix(R"({"n": 2, "rows": [[0.1, -2.5e-3], [3.14159265358979, 1e-300]]})");
  ASSERT_EQ(csv.rows(), json.rows());
  EXPECT_EQ(std::memcmp(csv.data(), json.data(), sizeof(double) * 4), 0);
}

TEST(Io, JsonErrors) {
  EXPECT_THROW(parse_matrix(R"({"n": 3, "rows": [[1, 2], [3, 4]]})"), ParseError);
  EXPECT_THROW(parse_matrix(R"({"n": 2, "rows": [[1, 2], [3]]})"), ParseError);
  EXPECT_THROW(parse_matrix(R"({"n": 2, "rows": [[1, "a"], [3, 4]]})"), ParseError);
  EXPECT_THROW(parse_matrix(R"({"rows": [[1]]})"), ParseError);
  try {
    parse_matrix("{\n  \"n\": 1,\n  \"rows\": [[1]\n}");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
  }
}

TEST(Io, RoundTripIsExact) {
  std::mt19937_64 rng(70);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::uniform_int_distribution<int> ex(-300, 300);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 1 + trial % 6;
    Matrix a(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) a(i, j) = std::ldexp(u(rng), ex(rng) % 60);
    const std::string text = serialize_matrix_csv(a);
    const Matrix b = parse_matrix(text);
    EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(n * n)), 0);
    EXPECT_EQ(serialize_matrix_csv(b), text);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-3.0), "-3");
  EXPECT_EQ(std::stod(format_double(0.802344071921729)), 0.802344071921729);
}

TEST(Io, PathFiniteDifferenceMode) {
  const MatrixPath p = parse_matrix_path(R"([
    {"t": 0, "rows": [[-2, 1], [2, -3]]},
    {"t": 3.141592653589793, "rows": [[-2.0000000000000004, -1], [2, -1]]}
  ])");
  EXPECT_EQ(p.mode(), DerivativeMode::kFiniteDifference);
  EXPECT_EQ(p.size(), 2u);
  EXPECT_EQ(p.samples[0], builtins::ex1());
}

TEST(Io, PathProvidedMode) {
  const MatrixPath p = parse_matrix_path(R"([{"t": 0, "rows": [[-1]], "drows": [[0.5]]}])");
  EXPECT_EQ(p.mode(), DerivativeMode::kProvided);
  EXPECT_EQ(p.derivative(0)(0, 0), 0.5);
}

TEST(Io, PathErrors) {
  EXPECT_THROW(parse_matrix_path(R"([{"t": 0, "rows": [[-1]]}])"), ParseError);
  EXPECT_THROW(parse_matrix_path(R"([{"t": 1, "rows": [[-1]]}, {"t": 0.5, "rows": [[-1]]}])"), ParseError);
  EXPECT_THROW(parse_matrix_path(R"([{"t": 0, "rows": [[-1]]}, {"t": 1, "rows": [[-1, 0], [0, -1]]}])"), ParseError);
  EXPECT_THROW(parse_matrix_path(R"([{"t": 0, "rows": [[-1]], "drows": [[1]]}, {"t": 1, "rows": [[-1]]}])"), ParseError);
  EXPECT_THROW(parse_matrix_path(R"({"t": 0})"), ParseError);
}
