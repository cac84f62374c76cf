#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "romdot/types.hpp"

namespace romdot {

/// Scientific formatting with six significant digits, used for all CSV output.
std::string format_sci(double value);

/// ASCII PGM (P2) of an interior-node image, row-major with ny-2 rows of nx
/// pixels, grayscale normalized to [lo, hi].
void write_pgm(const std::string& path, const Mat& image, double lo, double hi);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Same, with preformatted cells (for mixed integer/float tables).
void write_csv_rows(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows);

/// Basis file: magic "ROMB", version u32, n u64, r u64, column-major f64
/// payload, then r provenance marker bytes. Little-endian throughout.
void write_basis(const std::string& path, const Mat& V, const std::vector<std::uint8_t>& markers);
std::pair<Mat, std::vector<std::uint8_t>> read_basis(const std::string& path);

/// Flat key=value manifest used to validate cached offline artifacts.
void write_manifest(const std::string& path, const std::map<std::string, std::string>& entries);
std::map<std::string, std::string> read_manifest(const std::string& path);

}  // namespace romdot
