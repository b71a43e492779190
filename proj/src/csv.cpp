#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "collabrep/atomic_file.hpp"
#include "collabrep/dataset.hpp"

namespace collabrep {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Comma-separated fields; double quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_fields(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          current.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"' && trim(current).empty()) {
      quoted = true;
      was_quoted = true;
      current.clear();
    } else if (ch == ',') {
      fields.emplace_back(was_quoted ? current : std::string(trim(current)));
      current.clear();
      was_quoted = false;
    } else {
      current.push_back(ch);
    }
  }
  if (quoted) throw DataError("csv line " + std::to_string(line_no) + ": unterminated quote");
  fields.emplace_back(was_quoted ? current : std::string(trim(current)));
  return fields;
}

std::string quote_if_needed(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos && trim(text) == text) return text;
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

}  // namespace

LabeledDataset load_csv(const std::filesystem::path& path, std::string_view label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_fields(line, line_no);
      break;
    }
  }
  if (header.empty()) throw DataError("csv: '" + path.string() + "' has no header row");

  std::size_t label_pos = header.size();
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == label_column) label_pos = k;
  }
  if (label_pos == header.size()) {
    throw DataError("csv: label column '" + std::string(label_column) + "' not found in header");
  }
  const std::size_t dim = header.size() - 1;
  if (dim == 0) throw DataError("csv: no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::string> names;
  std::map<std::string, int> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, line_no);
    if (fields.size() != header.size()) {
      throw DataError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k == label_pos) {
        if (fields[k].empty()) throw DataError("csv line " + std::to_string(line_no) + ": empty label");
        auto [it, inserted] = ids.try_emplace(fields[k], static_cast<int>(names.size()) + 1);
        if (inserted) names.push_back(fields[k]);
        labels.push_back(it->second);
        continue;
      }
      std::string_view text = fields[k];
      if (!text.empty() && text.front() == '+') text.remove_prefix(1);
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      const std::string where = "csv line " + std::to_string(line_no) + ", column '" + header[k] + "'";
      if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw DataError(where + ": non-numeric value '" + fields[k] + "'");
      }
      if (!std::isfinite(value)) throw DataError(where + ": non-finite value '" + fields[k] + "'");
      values.push_back(value);
    }
  }
  if (labels.empty()) throw DataError("csv: '" + path.string() + "' has no data rows");

  const auto n = static_cast<Index>(labels.size());
  Eigen::MatrixXd features = Eigen::Map<const Eigen::MatrixXd>(values.data(), static_cast<Index>(dim), n);
  return LabeledDataset(std::move(features), std::move(labels), std::move(names));
}

void save_csv(const LabeledDataset& dataset, const std::filesystem::path& path, std::string_view label_column) {
  if (dataset.dim() < 1) throw InvalidArgument("csv: feature dimension must be >= 1");
  write_atomically(path, [&](std::ostream& out) {
    out << quote_if_needed(std::string(label_column));
    for (Index r = 0; r < dataset.dim(); ++r) out << ",f" << (r + 1);
    out << '\n';
    for (Index j = 0; j < dataset.size(); ++j) {
      const int label = dataset.labels()[static_cast<std::size_t>(j)];
      out << quote_if_needed(dataset.class_names()[static_cast<std::size_t>(label - 1)]);
      for (Index r = 0; r < dataset.dim(); ++r) out << ',' << format_double(dataset.features()(r, j));
      out << '\n';
    }
  });
}

void write_atomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer,
                      bool binary) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, binary ? std::ios::out | std::ios::binary | std::ios::trunc
                                  : std::ios::out | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
    writer(out);
    out.flush();
    if (!out) throw DataError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move output into place at '" + path.string() + "'");
  }
}

}  // namespace collabrep
