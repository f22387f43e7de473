#include "collabrep/matrix_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "collabrep/errors.hpp"

namespace collabrep {
namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8))
    fail(ErrorCode::MalformedMatrix, "truncated matrix header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes[i]} << (8 * i);
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    fail(ErrorCode::MissingPath, "no such file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

// PGM header tokens may be separated by whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  out.write(kMatrixMagic.data(), kMatrixMagic.size());
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      put_u64(out, std::bit_cast<std::uint64_t>(m(i, j)));
    }
  }
  if (!out) fail(ErrorCode::Io, "failed writing matrix");
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMatrixMagic)
    fail(ErrorCode::MalformedMatrix, "bad matrix magic");
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols)
    fail(ErrorCode::MalformedMatrix, "matrix dimensions too large");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows),
                    static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = std::bit_cast<double>(get_u64(in));
    }
  }
  if (in.peek() != std::char_traits<char>::eof())
    fail(ErrorCode::MalformedMatrix, "trailing bytes after matrix payload");
  return m;
}

void save_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  write_matrix(out, m);
}

Eigen::MatrixXd load_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_matrix(in);
}

Eigen::MatrixXd parse_csv_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c); }))
      continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos)
          throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        fail(ErrorCode::MalformedMatrix, "bad CSV cell '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorCode::MalformedMatrix, "ragged CSV rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Eigen::MatrixXd load_csv_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv_matrix(buf.str());
}

Eigen::MatrixXd load_any_matrix(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return load_csv_matrix(path);
  return load_matrix(path);
}

Eigen::MatrixXd read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (pgm_token(in) != "P5")
    fail(ErrorCode::MalformedMatrix, path.string() + ": not a binary PGM (P5)");
  long width = 0, height = 0, maxval = 0;
  try {
    width = std::stol(pgm_token(in));
    height = std::stol(pgm_token(in));
    maxval = std::stol(pgm_token(in));
  } catch (const std::exception&) {
    fail(ErrorCode::MalformedMatrix, path.string() + ": bad PGM header");
  }
  if (width <= 0 || height <= 0)
    fail(ErrorCode::EmptyImage, path.string() + ": empty image");
  if (maxval <= 0 || maxval > 255)
    fail(ErrorCode::MalformedMatrix, path.string() + ": only 8-bit PGM supported");
  std::vector<unsigned char> pixels(static_cast<std::size_t>(width * height));
  if (!in.read(reinterpret_cast<char*>(pixels.data()),
               static_cast<std::streamsize>(pixels.size())))
    fail(ErrorCode::MalformedMatrix, path.string() + ": truncated pixel data");
  Eigen::MatrixXd image(height, width);
  for (long r = 0; r < height; ++r)
    for (long c = 0; c < width; ++c) image(r, c) = pixels[r * width + c];
  return image;
}

void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& image) {
  if (image.size() == 0) fail(ErrorCode::EmptyImage, "cannot write empty image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const double v = std::clamp(std::round(image(r, c)), 0.0, 255.0);
      out.put(static_cast<char>(static_cast<unsigned char>(v)));
    }
  }
}

}  // namespace collabrep
