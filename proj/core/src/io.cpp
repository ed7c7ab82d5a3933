#include "optstab/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace optstab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw std::invalid_argument("parse_double: bad number '" + s + "'");
  }
  return v;
}

std::string export_dataset(const Dataset& ds) {
  std::string out;
  out += std::to_string(ds.size()) + " " + std::to_string(ds.feature_dim) +
         " " + std::to_string(ds.num_classes) + " " +
         format_double(ds.sigma) + " " + std::to_string(ds.seed) + "\n";
  for (const Sample& s : ds.samples) {
    for (double v : s.x) {
      out += format_double(v);
      out += " ";
    }
    out += std::to_string(s.true_label);
    out += "\n";
  }
  return out;
}

Dataset import_dataset(const std::string& text) {
  std::istringstream in(text);
  Dataset ds;
  long n = 0;
  std::string sigma_str;
  if (!(in >> n >> ds.feature_dim >> ds.num_classes >> sigma_str >> ds.seed)) {
    throw std::invalid_argument("import_dataset: bad header");
  }
  ds.sigma = parse_double(sigma_str);
  if (n < 2 || ds.feature_dim < 1 || ds.num_classes < 1) {
    throw std::invalid_argument("import_dataset: invalid header values");
  }
  ds.samples.reserve(n);
  for (long i = 0; i < n; ++i) {
    Sample s;
    s.x.resize(ds.feature_dim);
    std::string tok;
    for (int j = 0; j < ds.feature_dim; ++j) {
      if (!(in >> tok)) {
        throw std::invalid_argument("import_dataset: truncated sample line");
      }
      s.x[j] = parse_double(tok);
    }
    if (!(in >> s.true_label) || s.true_label < 1 ||
        s.true_label > ds.num_classes) {
      throw std::invalid_argument("import_dataset: bad label");
    }
    s.y = make_label_distribution(s.true_label, ds.num_classes, ds.sigma);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void write_dataset_file(const Dataset& ds,
                        const std::filesystem::path& path) {
  write_text_atomic(path, export_dataset(ds));
}

Dataset read_dataset_file(const std::filesystem::path& path) {
  return import_dataset(read_text_file(path));
}

std::string export_params(const ModelSpec& spec, const ParamVector& theta) {
  if (static_cast<int>(theta.size()) != spec.param_count()) {
    throw std::invalid_argument("export_params: length mismatch");
  }
  std::string out;
  out += std::string(spec.arch_name()) + " " +
         std::to_string(spec.feature_dim) + " " + std::to_string(spec.hidden) +
         " " + std::to_string(spec.num_classes) + " " +
         std::to_string(spec.init_seed) + "\n";
  for (double v : theta) {
    out += format_double(v);
    out += "\n";
  }
  return out;
}

std::pair<ModelSpec, ParamVector> import_params(const std::string& text) {
  std::istringstream in(text);
  std::string arch;
  ModelSpec spec;
  if (!(in >> arch >> spec.feature_dim >> spec.hidden >> spec.num_classes >>
        spec.init_seed)) {
    throw std::invalid_argument("import_params: bad header");
  }
  if (arch == "linear") {
    spec.arch = ModelSpec::Arch::LinearSoftmax;
  } else if (arch == "mlp") {
    spec.arch = ModelSpec::Arch::Mlp;
  } else {
    throw std::invalid_argument("import_params: unknown arch '" + arch + "'");
  }
  spec.validate();
  ParamVector theta(spec.param_count());
  std::string tok;
  for (double& v : theta) {
    if (!(in >> tok)) {
      throw std::invalid_argument("import_params: truncated values");
    }
    v = parse_double(tok);
  }
  return {spec, std::move(theta)};
}

void write_params_file(const ModelSpec& spec, const ParamVector& theta,
                       const std::filesystem::path& path) {
  write_text_atomic(path, export_params(spec, theta));
}

std::pair<ModelSpec, ParamVector> read_params_file(
    const std::filesystem::path& path) {
  return import_params(read_text_file(path));
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open for writing: " + tmp.string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
      throw std::runtime_error("short write: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvWriter::CsvWriter(std::vector<std::string> header)
    : header_(std::move(header)) {}

void CsvWriter::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    throw std::invalid_argument("CsvWriter: cell count mismatch");
  }
  rows_.push_back(std::move(cells));
}

std::string CsvWriter::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ",";
    out += header_[i];
  }
  out += "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      out += row[i];
    }
    out += "\n";
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace optstab
