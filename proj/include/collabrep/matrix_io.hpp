#pragma once

// Harness matrix format:
//
//   offset 0   8 bytes  magic "CRCMTX01"
//   offset 8   u64 LE   rows
//   offset 16  u64 LE   cols
//   offset 24  rows*cols IEEE-754 binary64 LE, row-major
//
// The same byte layout is produced on every host.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

namespace collabrep {

inline constexpr std::array<char, 8> kMatrixMagic = {'C', 'R', 'C', 'M',
                                                     'T', 'X', '0', '1'};

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(std::istream& in);

void save_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix(const std::filesystem::path& path);

// Comma-separated rows, one matrix row per line. Blank lines are skipped.
Eigen::MatrixXd parse_csv_matrix(const std::string& text);
Eigen::MatrixXd load_csv_matrix(const std::filesystem::path& path);

// Loads by extension: ".csv" through the CSV reader, anything else as the
// binary format.
Eigen::MatrixXd load_any_matrix(const std::filesystem::path& path);

// 8-bit grayscale image, rows x cols, values 0..255 stored as doubles.
Eigen::MatrixXd read_pgm(const std::filesystem::path& path);
// Values are rounded and clamped to 0..255.
void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& image);

}  // namespace collabrep
