#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace miwt {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_text_file(const std::filesystem::path& path);

/// Splits one CSV line on commas, trimming surrounding whitespace.
/// Quoting is not supported.
std::vector<std::string> split_csv_line(std::string_view line);

/// Parses a finite or infinite double; throws InputError naming `what`.
double parse_double(std::string_view text, std::string_view what);
std::size_t parse_index(std::string_view text, std::string_view what);

/// Signal matrix with one row per observation and one column per product
/// grid point.
struct SignalTable {
    std::vector<std::string> point_ids;
    Eigen::MatrixXd values;
};

/// CSV: header row of grid-point IDs, then one row per observation.
SignalTable read_signals_csv(const std::filesystem::path& path);
void write_signals_csv(const std::filesystem::path& path, const SignalTable& table);

/// Binary: little-endian uint64 N, uint64 m, then N*m little-endian
/// float64 values in row-major order.
Eigen::MatrixXd read_signals_binary(const std::filesystem::path& path);
void write_signals_binary(const std::filesystem::path& path, const Eigen::MatrixXd& values);

}  // namespace miwt
