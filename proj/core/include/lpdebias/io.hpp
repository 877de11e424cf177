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

// File formats: numeric CSV (header optional), linear programs as CSV,
// PGM images and sparse plan triples.

#ifndef LPDEBIAS_IO_HPP_
#define LPDEBIAS_IO_HPP_

#include <string>
#include <vector>

#include "lpdebias/lp.hpp"

namespace lpdebias {

// Shortest round-trip representation ("%.17g").
std::string format_double(double v);

// Parses a rectangular numeric CSV. A first line containing a non-numeric
// field is treated as a header. Throws IoError.
Matrix read_csv_matrix(const std::string& path);
Matrix parse_csv_matrix(const std::string& text);
std::string to_csv(const Matrix& m, const std::vector<std::string>& header = {});
void write_text(const std::string& path, const std::string& text);

// Row 0 holds c (a trailing extra column is ignored); rows 1..k hold [A_i | b_i].
StandardFormLP read_lp_csv(const std::string& path);
StandardFormLP parse_lp_matrix(const Matrix& m);

struct Image {
  Index width = 0;
  Index height = 0;
  int maxval = 255;
  Matrix pixels;  // height x width
};

// P2 and P5 with maxval up to 65535. Throws UnsupportedPgm or IoError.
Image read_pgm(const std::string& path);
Image parse_pgm(const std::string& bytes);
std::string to_pgm(const Image& img, bool binary);

// Pixel intensities flattened row-major and normalized to sum 1.
Vector image_to_simplex(const Image& img);

// "i,j,value" lines for entries with |value| > tol.
std::string plan_triples(const Matrix& plan, double tol = 0.0);

}  // namespace lpdebias

#endif  // LPDEBIAS_IO_HPP_
