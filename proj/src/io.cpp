#include "romdot/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace romdot {

std::string format_sci(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.5e", value);
    return buf;
}

void write_pgm(const std::string& path, const Mat& image, double lo, double hi) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    const auto rows = image.rows();
    const auto cols = image.cols();
    out << "P2\n" << cols << " " << rows << "\n255\n";
    const double span = hi > lo ? hi - lo : 1.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double t = std::clamp((image(r, c) - lo) / span, 0.0, 1.0);
            out << static_cast<int>(std::lround(255.0 * t));
            out << (c + 1 < cols ? ' ' : '\n');
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (std::size_t c = 0; c < header.size(); ++c)
        out << header[c] << (c + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out << format_sci(row[c]) << (c + 1 < row.size() ? "," : "\n");
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_csv_rows(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (std::size_t c = 0; c < header.size(); ++c)
        out << header[c] << (c + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out << row[c] << (c + 1 < row.size() ? "," : "\n");
    }
    if (!out) throw IoError("write failed: " + path);
}

namespace {

template <typename T>
void write_le(std::ofstream& out, T value) {
    // Host is little-endian on all supported targets.
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
}

}  // namespace

void write_basis(const std::string& path, const Mat& V, const std::vector<std::uint8_t>& markers) {
    if (static_cast<std::size_t>(V.cols()) != markers.size())
        throw IoError("basis file: marker count must equal column count");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("ROMB", 4);
    write_le<std::uint32_t>(out, 1);
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(V.rows()));
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(V.cols()));
    out.write(reinterpret_cast<const char*>(V.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(V.size())));
    out.write(reinterpret_cast<const char*>(markers.data()),
              static_cast<std::streamsize>(markers.size()));
    if (!out) throw IoError("write failed: " + path);
}

std::pair<Mat, std::vector<std::uint8_t>> read_basis(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "ROMB", 4) != 0) throw IoError(path + ": not a basis file");
    const auto version = read_le<std::uint32_t>(in);
    if (version != 1) throw IoError(path + ": unsupported basis file version");
    const auto n = read_le<std::uint64_t>(in);
    const auto r = read_le<std::uint64_t>(in);
    Mat V(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r));
    in.read(reinterpret_cast<char*>(V.data()),
            static_cast<std::streamsize>(sizeof(double) * n * r));
    std::vector<std::uint8_t> markers(r);
    in.read(reinterpret_cast<char*>(markers.data()), static_cast<std::streamsize>(r));
    if (!in) throw IoError(path + ": truncated basis file");
    return {std::move(V), std::move(markers)};
}

void write_manifest(const std::string& path, const std::map<std::string, std::string>& entries) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const auto& [key, value] : entries) out << key << "=" << value << "\n";
    if (!out) throw IoError("write failed: " + path);
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::map<std::string, std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError(path + ": malformed manifest line: " + line);
        entries[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return entries;
}

}  // namespace romdot
