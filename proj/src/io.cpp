#include "miwt/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <fstream>
#include <sstream>
#include <system_error>

#include "miwt/error.hpp"

namespace miwt {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::uint64_t little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int k = 0; k < 8; ++k) r |= ((v >> (8 * k)) & 0xffULL) << (8 * (7 - k));
        return r;
    }
    return v;
}

void append_word(std::string& out, std::uint64_t word) {
    word = little_endian(word);
    char buf[8];
    std::memcpy(buf, &word, 8);
    out.append(buf, 8);
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + path.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw InputError("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw InputError("cannot move output into place at " + path.string());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        fields.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

double parse_double(std::string_view text, std::string_view what) {
    text = trim(text);
    if (text == "inf" || text == "+inf" || text == "Inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf" || text == "-Inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = text.data();
    if (!text.empty() && text.front() == '+') ++first;
    auto res = std::from_chars(first, text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || std::isnan(v)) {
        throw InputError("invalid number '" + std::string(text) + "' in " + std::string(what));
    }
    return v;
}

std::size_t parse_index(std::string_view text, std::string_view what) {
    text = trim(text);
    std::size_t v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw InputError("invalid index '" + std::string(text) + "' in " + std::string(what));
    }
    return v;
}

SignalTable read_signals_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open signal file " + path.string());
    std::string line;
    SignalTable table;
    if (!std::getline(in, line)) throw InputError("signal file " + path.string() + " is empty");
    table.point_ids = split_csv_line(line);
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != table.point_ids.size()) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(table.point_ids.size()) + " fields, found " +
                             std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        const std::string where = path.string() + ":" + std::to_string(line_no);
        for (const auto& f : fields) {
            const double v = parse_double(f, where);
            if (!std::isfinite(v)) throw InputError("non-finite signal value at " + where);
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.point_ids.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return table;
}

void write_signals_csv(const std::filesystem::path& path, const SignalTable& table) {
    std::string out;
    for (std::size_t j = 0; j < table.point_ids.size(); ++j) {
        if (j) out += ',';
        out += table.point_ids[j];
    }
    out += '\n';
    for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
            if (j) out += ',';
            out += format_double(table.values(i, j));
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

Eigen::MatrixXd read_signals_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open signal file " + path.string());
    auto get = [&]() {
        std::uint64_t w = 0;
        if (!in.read(reinterpret_cast<char*>(&w), 8)) throw InputError("truncated signal file " + path.string());
        return little_endian(w);
    };
    const std::uint64_t rows = get(), cols = get();
    if (rows == 0 || cols == 0 || rows > (1ULL << 24) || cols > (1ULL << 32) || rows * cols > (1ULL << 33)) {
        throw InputError("implausible dimensions in signal file " + path.string());
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = std::bit_cast<double>(get());
            if (!std::isfinite(v)) throw InputError("non-finite signal value in " + path.string());
            m(i, j) = v;
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) throw InputError("trailing bytes in signal file " + path.string());
    return m;
}

void write_signals_binary(const std::filesystem::path& path, const Eigen::MatrixXd& values) {
    std::string out;
    out.reserve(16 + 8 * static_cast<std::size_t>(values.size()));
    append_word(out, static_cast<std::uint64_t>(values.rows()));
    append_word(out, static_cast<std::uint64_t>(values.cols()));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) append_word(out, std::bit_cast<std::uint64_t>(values(i, j)));
    }
    write_file_atomic(path, out);
}

}  // namespace miwt
