#include "zsl/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "zsl/error.hpp"

namespace zsl {

namespace {

constexpr char kMagic[4] = {'Z', 'S', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;

void write_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError(path + ": truncated payload");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64_le(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64_le(std::istream& in, const std::string& path) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw IoError(path + ": truncated payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open file");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

double parse_field(const std::string& field, const std::string& path, std::size_t line_no) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    while (last > first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw IoError(path + ": non-numeric field \"" + field + "\" at line " +
                      std::to_string(line_no));
    if (!std::isfinite(v))
        throw IoError(path + ": non-finite value at line " + std::to_string(line_no));
    return v;
}

}  // namespace

Matrix load_matrix_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open file");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError(path.string() + ": bad magic");
    const std::uint32_t version = read_u32_le(in, path.string());
    if (version != kVersion)
        throw IoError(path.string() + ": unsupported version " + std::to_string(version));
    const std::uint32_t rows = read_u32_le(in, path.string());
    const std::uint32_t cols = read_u32_le(in, path.string());
    if (rows == 0 || cols == 0) throw IoError(path.string() + ": zero dimension");
    const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
    if (count > (std::uint64_t{1} << 32))
        throw IoError(path.string() + ": dimension overflow");
    Matrix m(rows, cols);
    for (std::uint64_t i = 0; i < count; ++i) m.data()[i] = read_f64_le(in, path.string());
    // must be exactly at EOF now
    char extra;
    if (in.read(&extra, 1))
        throw IoError(path.string() + ": trailing bytes after payload");
    if (!m.all_finite()) throw IoError(path.string() + ": non-finite values in payload");
    return m;
}

void save_matrix_binary(const Matrix& m, const std::filesystem::path& path) {
    if (m.empty()) throw ShapeError("save_matrix_binary: empty matrix");
    if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
        m.cols() > std::numeric_limits<std::uint32_t>::max())
        throw ShapeError("save_matrix_binary: dimension overflow");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open file for writing");
    out.write(kMagic, 4);
    write_u32_le(out, kVersion);
    write_u32_le(out, static_cast<std::uint32_t>(m.rows()));
    write_u32_le(out, static_cast<std::uint32_t>(m.cols()));
    for (std::size_t i = 0; i < m.size(); ++i) write_f64_le(out, m.data()[i]);
    if (!out) throw IoError(path.string() + ": write failed");
}

Matrix load_matrix_csv(const std::filesystem::path& path, bool has_header) {
    auto lines = read_lines(path);
    // drop trailing blank line from a final LF
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    std::size_t first_line = has_header ? 1 : 0;
    if (lines.size() <= first_line) throw IoError(path.string() + ": no data rows");

    std::vector<std::vector<double>> rows;
    std::size_t ncols = 0;
    for (std::size_t li = first_line; li < lines.size(); ++li) {
        const std::string& line = lines[li];
        std::vector<double> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string field =
                line.substr(start, comma == std::string::npos ? comma : comma - start);
            fields.push_back(parse_field(field, path.string(), li + 1));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (ncols == 0)
            ncols = fields.size();
        else if (fields.size() != ncols)
            throw IoError(path.string() + ": ragged row at line " + std::to_string(li + 1));
        rows.push_back(std::move(fields));
    }

    Matrix m(rows.size(), ncols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < ncols; ++j) m(i, j) = rows[i][j];
    return m;
}

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void save_matrix_csv(const Matrix& m, const std::filesystem::path& path,
                     const std::string& header) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open file for writing");
    if (!header.empty()) out << header << "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ",";
            out << format_double(m(i, j));
        }
        out << "\n";
    }
    if (!out) throw IoError(path.string() + ": write failed");
}

std::vector<int> load_labels_csv(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    std::vector<int> labels;
    labels.reserve(lines.size());
    for (std::size_t li = 0; li < lines.size(); ++li) {
        int v = 0;
        const auto& line = lines[li];
        auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
        if (ec != std::errc() || ptr != line.data() + line.size())
            throw IoError(path.string() + ": non-integer label at line " + std::to_string(li + 1));
        labels.push_back(v);
    }
    if (labels.empty()) throw IoError(path.string() + ": no labels");
    return labels;
}

void save_labels_csv(const std::vector<int>& labels, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open file for writing");
    for (int v : labels) out << v << "\n";
    if (!out) throw IoError(path.string() + ": write failed");
}

std::vector<std::pair<std::string, std::string>> load_manifest(
    const std::filesystem::path& path) {
    auto lines = read_lines(path);
    std::vector<std::pair<std::string, std::string>> entries;
    for (const auto& line : lines) {
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw IoError(path.string() + ": malformed manifest line \"" + line + "\"");
        entries.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    return entries;
}

void save_manifest(const std::vector<std::pair<std::string, std::string>>& entries,
                   const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open file for writing");
    for (const auto& [k, v] : entries) out << k << "=" << v << "\n";
    if (!out) throw IoError(path.string() + ": write failed");
}

std::string manifest_get(const std::vector<std::pair<std::string, std::string>>& entries,
                         const std::string& key) {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    throw IoError("manifest: missing key \"" + key + "\"");
}

}  // namespace zsl
