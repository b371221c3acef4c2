#pragma once

// Class-per-directory image datasets and the CSV feature table.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "leafscan/error.hpp"
#include "leafscan/features.hpp"
#include "leafscan/image_io.hpp"
#include "leafscan/raster.hpp"

namespace leafscan {

struct ClassLabel {
  int index = 0;
  std::string name;
  friend bool operator==(const ClassLabel&, const ClassLabel&) = default;
};

struct LabeledSample {
  FeatureVector features;
  ClassLabel label;
  std::string source_id;
};

/// Rows derived from a rotated copy of an image carry "#rot<deg>" after the
/// source id of the original.
inline std::string augmented_source_id(const std::string& source_id, int quarter_turns) {
  return source_id + "#rot" + std::to_string(90 * quarter_turns);
}

inline bool is_augmented(std::string_view source_id) {
  return source_id.find("#rot") != std::string_view::npos;
}

inline std::string base_source_id(std::string_view source_id) {
  return std::string(source_id.substr(0, source_id.find("#rot")));
}

struct DatasetEntry {
  std::filesystem::path path;
  std::string source_id;  // "<class>/<file>"
  ClassLabel label;
};

struct DatasetIndex {
  std::vector<std::string> class_names;  // index order
  std::vector<DatasetEntry> entries;     // sorted by class, then file name
  std::vector<std::string> warnings;
};

struct DatasetImage {
  RgbImage image;
  ClassLabel label;
  std::string source_id;
};

struct Dataset {
  std::vector<std::string> class_names;
  std::vector<DatasetImage> images;
  std::vector<std::string> warnings;
};

inline bool has_image_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

/// Each immediate subdirectory of `root` is one class; classes are indexed in
/// lexicographic order of their directory names.
inline DatasetIndex index_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw InputError("cannot read dataset root " + root.string());
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  if (ec) throw InputError("cannot read dataset root " + root.string() + ": " + ec.message());
  std::sort(class_dirs.begin(), class_dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  DatasetIndex index;
  if (class_dirs.empty()) {
    index.warnings.push_back("no classes found");
    return index;
  }
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    const std::string name = class_dirs[c].filename().string();
    index.class_names.push_back(name);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dirs[c], ec)) {
      if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    for (auto& f : files) {
      index.entries.push_back({f, name + "/" + f.filename().string(), ClassLabel{static_cast<int>(c), name}});
    }
  }
  return index;
}

/// Decodes every image of the dataset. Undecodable files are skipped with a
/// warning; they never abort the load.
inline Dataset load_dataset(const std::filesystem::path& root) {
  DatasetIndex index = index_dataset(root);
  Dataset out{std::move(index.class_names), {}, std::move(index.warnings)};
  for (const DatasetEntry& e : index.entries) {
    try {
      out.images.push_back({read_image(e.path), e.label, e.source_id});
    } catch (const InputError& err) {
      out.warnings.push_back(std::string("skipped ") + e.source_id + ": " + err.what());
    }
  }
  return out;
}

namespace csv {

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

/// Splits one record. Quoted fields may contain commas and doubled quotes.
inline std::vector<std::string> split_record(std::string_view line, std::size_t row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"' && cur.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (quoted) throw InputError("row " + std::to_string(row) + ": unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw InputError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                     ": not a finite number: '" + text + "'");
  }
  return v;
}

}  // namespace csv

inline std::string feature_table_header() {
  std::string h;
  for (std::size_t i = 1; i <= kFeatureCount; ++i) h += "F" + std::to_string(i) + ",";
  return h + "label,source_id";
}

/// CSV with header F1..F13,label,source_id. Numbers carry 17 significant
/// digits, so reading the file back reproduces every value exactly. The label
/// column holds the class name.
inline void write_feature_table(const std::vector<LabeledSample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << feature_table_header() << '\n';
  for (const LabeledSample& s : samples) {
    if (!s.features.finite()) throw InputError("feature table: non-finite feature in " + s.source_id);
    for (double v : s.features.values) out << csv::format_double(v) << ',';
    out << csv::quote(s.label.name) << ',' << csv::quote(s.source_id) << '\n';
  }
  out.flush();
  if (!out) throw InputError("cannot write " + path.string());
}

/// Reads a table written by write_feature_table. Class indices follow the
/// lexicographic order of the label names present. Errors name the 1-based
/// row (the header is row 1) and column.
inline std::vector<LabeledSample> read_feature_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError("row 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != feature_table_header()) {
    throw InputError("row 1: header must be exactly '" + feature_table_header() + "'");
  }
  struct Row {
    FeatureVector f;
    std::string label, source;
  };
  std::vector<Row> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = csv::split_record(line, row_no);
    if (fields.size() != kFeatureCount + 2) {
      throw InputError("row " + std::to_string(row_no) + ": expected " + std::to_string(kFeatureCount + 2) +
                       " columns, found " + std::to_string(fields.size()));
    }
    Row r;
    for (std::size_t i = 0; i < kFeatureCount; ++i) r.f[i] = csv::parse_double(fields[i], row_no, i + 1);
    r.label = fields[kFeatureCount];
    r.source = fields[kFeatureCount + 1];
    if (r.label.empty()) {
      throw InputError("row " + std::to_string(row_no) + ", column " + std::to_string(kFeatureCount + 1) +
                       ": empty label");
    }
    rows.push_back(std::move(r));
  }
  std::set<std::string> names;
  for (const Row& r : rows) names.insert(r.label);
  std::map<std::string, int> index;
  for (const auto& n : names) index.emplace(n, static_cast<int>(index.size()));
  std::vector<LabeledSample> out;
  out.reserve(rows.size());
  for (Row& r : rows) {
    const int idx = index.at(r.label);
    out.push_back({r.f, ClassLabel{idx, std::move(r.label)}, std::move(r.source)});
  }
  return out;
}

/// Class names in index order.
inline std::vector<std::string> class_names_of(const std::vector<LabeledSample>& samples) {
  std::map<int, std::string> names;
  for (const auto& s : samples) names.emplace(s.label.index, s.label.name);
  std::vector<std::string> out;
  const int count = names.empty() ? 0 : names.rbegin()->first + 1;
  for (int i = 0; i < count; ++i) {
    auto it = names.find(i);
    out.push_back(it == names.end() ? std::string() : it->second);
  }
  return out;
}

}  // namespace leafscan
