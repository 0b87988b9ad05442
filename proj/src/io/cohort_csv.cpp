#include "tempo/io/cohort_csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "tempo/errors.hpp"

namespace tempo::io {

namespace {

// RFC 4180 style split: quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv(const std::string& line, const std::string& where) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw FormatError(where + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool is_missing(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  return u.empty() || u == "NA" || u == "NAN" || u == "NULL";
}

}  // namespace

CohortTable parse_cohort_csv(std::istream& in, const CohortCsvOptions& opts,
                             const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(source + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv(line, source + " row 1");
  for (auto& h : header) h = trim(h);
  if (header.size() < 2 || header[0] != "id") {
    throw FormatError(source + " row 1, column 1: expected 'id', found '" +
                      (header.empty() ? "" : header[0]) + "'");
  }
  if (header[1] != "dx") {
    throw FormatError(source + " row 1, column 2: expected 'dx', found '" + header[1] + "'");
  }
  CohortTable t;
  for (std::size_t c = 2; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name.empty() || name == "id" || name == "dx" ||
        std::find(t.biomarkers.begin(), t.biomarkers.end(), name) != t.biomarkers.end()) {
      throw FormatError(source + " row 1, column " + std::to_string(c + 1) +
                        ": unknown or repeated column '" + name + "'");
    }
    t.biomarkers.push_back(name);
  }
  const std::size_t B = t.biomarkers.size();
  if (opts.expected_biomarkers && *opts.expected_biomarkers != B) {
    throw DimensionError(source + ": cohort has " + std::to_string(B) +
                         " biomarker columns, model expects " +
                         std::to_string(*opts.expected_biomarkers));
  }
  if (B < 2) throw FormatError(source + ": need at least 2 biomarker columns");

  std::vector<double> raw;
  std::vector<int> dx;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::string where = source + " row " + std::to_string(row);
    const std::vector<std::string> f = split_csv(line, where);
    if (f.size() != header.size()) {
      throw FormatError(where + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(f.size()));
    }
    t.ids.push_back(trim(f[0]));
    const std::string label = trim(f[1]);
    if (is_missing(label)) throw FormatError(where + ", column 'dx': missing value");
    t.dx_labels.push_back(label);
    if (opts.control_label) {
      dx.push_back(label == *opts.control_label ? 0 : 1);
    } else if (label == "0" || label == "1") {
      dx.push_back(label == "1" ? 1 : 0);
    } else {
      throw FormatError(where + ", column 'dx': '" + label +
                        "' is not 0 or 1 (declare the control label to use diagnosis strings)");
    }
    for (std::size_t b = 0; b < B; ++b) {
      const std::string cell = trim(f[b + 2]);
      const std::string col = where + ", column '" + t.biomarkers[b] + "'";
      if (is_missing(cell)) throw FormatError(col + ": missing value");
      double v = 0.0;
      const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size() || !std::isfinite(v)) {
        throw FormatError(col + ": non-numeric value '" + cell + "'");
      }
      raw.push_back(v);
    }
  }
  if (dx.empty()) throw FormatError(source + ": no participant rows");
  if (std::all_of(dx.begin(), dx.end(), [](int d) { return d == 0; })) {
    t.warnings.push_back("no diseased participants (all dx are control)");
  }
  const std::size_t J = dx.size();
  t.cohort = sim::make_cohort(J, B, std::move(raw), std::move(dx));
  return t;
}

CohortTable read_cohort_csv(const std::filesystem::path& path, const CohortCsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_cohort_csv(in, opts, path.string());
}

}  // namespace tempo::io
