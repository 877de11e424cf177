// Copyright 2026 The lp-debias Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <functional>
#include <filesystem>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "lpdebias/error.hpp"
#include "lpdebias/io.hpp"

namespace lpdebias {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no lpdebias::Error thrown";
  return ErrorCode::kInvalidInput;
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Csv, ParsesWithAndWithoutHeader) {
  const Matrix plain = parse_csv_matrix("1,2,3\n4,5,6\n");
  EXPECT_EQ(plain, (Matrix(2, 3) << 1, 2, 3, 4, 5, 6).finished());
  const Matrix headed = parse_csv_matrix("a,b\n0.5,-1e-3\r\n2,3\n");
  EXPECT_EQ(headed, (Matrix(2, 2) << 0.5, -1e-3, 2, 3).finished());
  EXPECT_EQ(code_of([] { parse_csv_matrix("1,2\n3\n"); }), ErrorCode::kIoError);
  EXPECT_EQ(code_of([] { parse_csv_matrix("x,y\n"); }), ErrorCode::kIoError);
  EXPECT_EQ(code_of([] { parse_csv_matrix("1,2\n3,oops\n"); }), ErrorCode::kIoError);
}

TEST(Csv, WriteReadRoundTrip) {
  const Matrix m = (Matrix(2, 2) << 1.0 / 3.0, 2, -7, 1e-17).finished();
  EXPECT_EQ(parse_csv_matrix(to_csv(m, {"u", "v"})), m);
  const auto path = std::filesystem::temp_directory_path() / "lpdebias_io_test.csv";
  write_text(path.string(), to_csv(m));
  EXPECT_EQ(read_csv_matrix(path.string()), m);
  std::filesystem::remove(path);
  EXPECT_EQ(code_of([] { read_csv_matrix("/nonexistent/file.csv"); }), ErrorCode::kIoError);
}

TEST(LpCsv, Layout) {
  const StandardFormLP lp = parse_lp_matrix(parse_csv_matrix("0,1,0\n1,1,1\n"));
  EXPECT_EQ(lp.c(), (Vector(2) << 0, 1).finished());
  EXPECT_EQ(lp.A(), (Matrix(1, 2) << 1, 1).finished());
  EXPECT_EQ(lp.b(), Vector::Ones(1));
  EXPECT_EQ(code_of([] { parse_lp_matrix(Matrix::Ones(1, 3)); }), ErrorCode::kIoError);
}

TEST(Pgm, AsciiAndBinary) {
  const Image ascii = parse_pgm("P2\n# comment\n3 2\n255\n0 10 20\n30 40 255\n");
  EXPECT_EQ(ascii.width, 3);
  EXPECT_EQ(ascii.height, 2);
  EXPECT_EQ(ascii.pixels, (Matrix(2, 3) << 0, 10, 20, 30, 40, 255).finished());
  for (bool binary : {false, true}) {
    const Image back = parse_pgm(to_pgm(ascii, binary));
    EXPECT_EQ(back.pixels, ascii.pixels);
    EXPECT_EQ(back.maxval, 255);
  }
  Image deep{2, 1, 65535, (Matrix(1, 2) << 1000, 65535).finished()};
  EXPECT_EQ(parse_pgm(to_pgm(deep, true)).pixels, deep.pixels);
}

TEST(Pgm, Errors) {
  EXPECT_EQ(code_of([] { parse_pgm("P3\n1 1\n255\n0 0 0\n"); }), ErrorCode::kUnsupportedPgm);
  EXPECT_EQ(code_of([] { parse_pgm("P2\n2 1\n255\n0\n"); }), ErrorCode::kUnsupportedPgm);
  EXPECT_EQ(code_of([] { parse_pgm("P2\n1 1\n10\n11\n"); }), ErrorCode::kUnsupportedPgm);
  EXPECT_EQ(code_of([] { parse_pgm(std::string("P5\n2 2\n255\n") + "ab"); }), ErrorCode::kUnsupportedPgm);
  EXPECT_EQ(code_of([] { parse_pgm("P2\n0 1\n255\n"); }), ErrorCode::kUnsupportedPgm);
}

TEST(Pgm, NormalizesToSimplex) {
  const Image img = parse_pgm("P2\n2 2\n255\n1 0\n0 3\n");
  EXPECT_EQ(image_to_simplex(img), (Vector(4) << 0.25, 0, 0, 0.75).finished());
  Image dark{2, 2, 255, Matrix::Zero(2, 2)};
  EXPECT_EQ(code_of([&] { image_to_simplex(dark); }), ErrorCode::kInvalidInput);
}

TEST(PlanTriples, SparseEntries) {
  const Matrix plan = (Matrix(2, 2) << 0.5, 0, 1e-12, 0.5).finished();
  EXPECT_EQ(plan_triples(plan, 1e-9), "i,j,value\n0,0,0.5\n1,1,0.5\n");
}

}  // namespace
}  // namespace lpdebias
