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

#include "lpdebias/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lpdebias/error.hpp"

namespace lpdebias {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool parse_number(const std::string& field, double& out) {
  const std::string f = trim(field);
  if (f.empty()) return false;
  char* end = nullptr;
  out = std::strtod(f.c_str(), &end);
  return end == f.c_str() + f.size();
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Matrix parse_csv_matrix(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (first && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
      line = line.substr(3);
    }
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    std::vector<double> vals;
    vals.reserve(fields.size());
    bool numeric = true;
    for (const auto& f : fields) {
      double v = 0.0;
      if (!parse_number(f, v)) {
        numeric = false;
        break;
      }
      vals.push_back(v);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw Error(ErrorCode::kIoError, "non-numeric field on CSV line " + std::to_string(lineno));
    }
    first = false;
    if (!rows.empty() && vals.size() != rows.front().size()) {
      throw Error(ErrorCode::kIoError, "ragged CSV row on line " + std::to_string(lineno));
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw Error(ErrorCode::kIoError, "CSV contains no numeric rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return m;
}

Matrix read_csv_matrix(const std::string& path) { return parse_csv_matrix(read_file(path)); }

std::string to_csv(const Matrix& m, const std::vector<std::string>& header) {
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out += ',';
    out += header[j];
  }
  if (!header.empty()) out += '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

StandardFormLP parse_lp_matrix(const Matrix& m) {
  if (m.rows() < 2 || m.cols() < 2) {
    throw Error(ErrorCode::kIoError, "LP CSV needs a cost row and at least one constraint row");
  }
  const Index cols = m.cols() - 1;
  return StandardFormLP(m.bottomLeftCorner(m.rows() - 1, cols), m.col(cols).tail(m.rows() - 1),
                        m.row(0).head(cols).transpose());
}

StandardFormLP read_lp_csv(const std::string& path) {
  return parse_lp_matrix(read_csv_matrix(path));
}

Image parse_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&]() -> long {
    skip();
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw Error(ErrorCode::kUnsupportedPgm, "malformed PGM header");
    return std::strtol(bytes.substr(start, pos - start).c_str(), nullptr, 10);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw Error(ErrorCode::kUnsupportedPgm, "only P2 and P5 graymaps are supported");
  }
  const bool binary = bytes[1] == '5';
  pos = 2;
  Image img;
  img.width = token();
  img.height = token();
  const long maxval = token();
  if (img.width < 1 || img.height < 1 || maxval < 1 || maxval > 65535) {
    throw Error(ErrorCode::kUnsupportedPgm, "invalid PGM dimensions or maxval");
  }
  img.maxval = static_cast<int>(maxval);
  img.pixels.resize(img.height, img.width);
  if (binary) {
    ++pos;  // single whitespace after maxval
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    const std::size_t need = static_cast<std::size_t>(img.width * img.height) * bpp;
    if (bytes.size() < pos + need) throw Error(ErrorCode::kUnsupportedPgm, "truncated P5 raster");
    for (Index i = 0; i < img.height; ++i) {
      for (Index j = 0; j < img.width; ++j) {
        const std::size_t at = pos + static_cast<std::size_t>(i * img.width + j) * bpp;
        unsigned v = static_cast<unsigned char>(bytes[at]);
        if (bpp == 2) v = (v << 8) | static_cast<unsigned char>(bytes[at + 1]);
        img.pixels(i, j) = static_cast<double>(v);
      }
    }
  } else {
    for (Index i = 0; i < img.height; ++i) {
      for (Index j = 0; j < img.width; ++j) {
        const long v = token();
        if (v > maxval) throw Error(ErrorCode::kUnsupportedPgm, "pixel exceeds maxval");
        img.pixels(i, j) = static_cast<double>(v);
      }
    }
  }
  return img;
}

Image read_pgm(const std::string& path) { return parse_pgm(read_file(path)); }

std::string to_pgm(const Image& img, bool binary) {
  std::ostringstream os;
  os << (binary ? "P5" : "P2") << '\n' << img.width << ' ' << img.height << '\n' << img.maxval << '\n';
  std::string out = os.str();
  for (Index i = 0; i < img.height; ++i) {
    for (Index j = 0; j < img.width; ++j) {
      const auto v = static_cast<unsigned>(std::lround(img.pixels(i, j)));
      if (binary) {
        if (img.maxval >= 256) out.push_back(static_cast<char>((v >> 8) & 0xFF));
        out.push_back(static_cast<char>(v & 0xFF));
      } else {
        out += std::to_string(v);
        out += (j + 1 == img.width) ? '\n' : ' ';
      }
    }
  }
  return out;
}

Vector image_to_simplex(const Image& img) {
  Vector v(img.width * img.height);
  for (Index i = 0; i < img.height; ++i) {
    for (Index j = 0; j < img.width; ++j) v(i * img.width + j) = img.pixels(i, j);
  }
  const double total = v.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::kInvalidInput, "image has no intensity");
  return v / total;
}

std::string plan_triples(const Matrix& plan, double tol) {
  std::string out = "i,j,value\n";
  for (Index i = 0; i < plan.rows(); ++i) {
    for (Index j = 0; j < plan.cols(); ++j) {
      if (std::abs(plan(i, j)) > tol) {
        out += std::to_string(i) + ',' + std::to_string(j) + ',' + format_double(plan(i, j)) + '\n';
      }
    }
  }
  return out;
}

}  // namespace lpdebias
