#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "optstab/data.hpp"
#include "optstab/models.hpp"

namespace optstab {

/// Shortest round-trip decimal rendering (std::to_chars); '.' separator,
/// locale-free, "nan"/"inf" for non-finite values.
std::string format_double(double v);

/// strtod-based parse of the format_double output; exact round-trip.
double parse_double(const std::string& s);

/// Flat text dataset format: header "N d M sigma seed", then one line per
/// sample: d feature values followed by the true label. Targets are rebuilt
/// from (label, M, sigma) on import, so the round-trip is exact.
std::string export_dataset(const Dataset& ds);
Dataset import_dataset(const std::string& text);

void write_dataset_file(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset_file(const std::filesystem::path& path);

/// Parameter snapshot: one header line "arch d hidden M init_seed", then the
/// flattened values, one per line. Exact decimal round-trip.
std::string export_params(const ModelSpec& spec, const ParamVector& theta);
std::pair<ModelSpec, ParamVector> import_params(const std::string& text);

void write_params_file(const ModelSpec& spec, const ParamVector& theta,
                       const std::filesystem::path& path);
std::pair<ModelSpec, ParamVector> read_params_file(
    const std::filesystem::path& path);

/// Writes to "<path>.tmp" then renames, so readers never see partial files.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text);

std::string read_text_file(const std::filesystem::path& path);

/// Minimal CSV builder: '.' decimals, '\n' line endings, one header row.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// FNV-1a 64-bit hash; used by regression tests to pin generated data.
std::uint64_t fnv1a64(const std::string& text);

}  // namespace optstab
