#include "tempo/io/bundle.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "tempo/errors.hpp"
#include "tempo/io/files.hpp"

namespace tempo::io {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string data_csv(const sim::Dataset& ds) {
  const sim::Cohort& c = ds.cohort;
  std::string out = "id,dx";
  for (std::size_t b = 0; b < c.n_biomarkers; ++b) out += fmt::format(",b_{:03}", b + 1);
  out += '\n';
  for (std::size_t j = 0; j < c.n_participants; ++j) {
    out += fmt::format("{},{}", j + 1, c.dx[j]);
    for (std::size_t b = 0; b < c.n_biomarkers; ++b) out += fmt::format(",{:.9g}", c.raw_at(j, b));
    out += '\n';
  }
  return out;
}

std::string truth_json(const sim::Dataset& ds) {
  const sim::GroundTruth& t = ds.truth;
  ordered_json j;
  j["format_version"] = kBundleFormatVersion;
  j["experiment_id"] = ds.experiment_id;
  j["seed"] = ds.seed;
  j["xi"] = t.xi;
  j["k"] = t.k;
  j["y_star"] = t.y_star;
  j["delta"] = t.delta ? ordered_json(*t.delta) : ordered_json(nullptr);
  j["family"] = t.family ? ordered_json(*t.family) : ordered_json(nullptr);
  j["params"] = {{"phi_mu", t.params.phi_mu},
                 {"phi_sigma", t.params.phi_sigma},
                 {"theta_mu", t.params.theta_mu},
                 {"theta_sigma", t.params.theta_sigma}};
  j["standardization"] = {{"mean", ds.cohort.standardization.mean},
                          {"std", ds.cohort.standardization.std}};
  return j.dump() + "\n";
}

std::string bundle_name(std::size_t index) { return fmt::format("ds_{:04}", index); }

void write_bundle(const fs::path& dir, const sim::Dataset& ds) {
  if (fs::exists(dir)) throw std::runtime_error("bundle " + dir.string() + " already exists");
  fs::path tmp = dir;
  tmp += ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  write_file_atomic(tmp / "data.csv", data_csv(ds));
  write_file_atomic(tmp / "truth.json", truth_json(ds));
  fs::rename(tmp, dir);
}

namespace {

double parse_double(std::string_view s, std::size_t line, const std::string& file) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw FormatError(file + " line " + std::to_string(line) + ": bad number '" +
                      std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
std::vector<T> vec(const ordered_json& j, const char* key) {
  return j.at(key).get<std::vector<T>>();
}

}  // namespace

sim::Dataset read_bundle(const fs::path& dir) {
  const std::string data_name = (dir / "data.csv").string();
  const std::string text = read_file(dir / "data.csv");
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(data_name + ": empty file");
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "dx") {
    throw FormatError(data_name + ": header must start with id,dx and name biomarkers");
  }
  const std::size_t B = header.size() - 2;
  std::vector<double> raw;
  std::vector<int> dx;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != B + 2) {
      throw FormatError(data_name + " line " + std::to_string(lineno) + ": expected " +
                        std::to_string(B + 2) + " fields, got " + std::to_string(f.size()));
    }
    const double d = parse_double(f[1], lineno, data_name);
    if (d != 0.0 && d != 1.0) {
      throw FormatError(data_name + " line " + std::to_string(lineno) + ": dx must be 0 or 1");
    }
    dx.push_back(static_cast<int>(d));
    for (std::size_t b = 0; b < B; ++b) raw.push_back(parse_double(f[b + 2], lineno, data_name));
  }
  const std::size_t J = dx.size();

  sim::Dataset ds;
  ds.cohort = sim::make_cohort(J, B, std::move(raw), std::move(dx));

  const fs::path truth_path = dir / "truth.json";
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(truth_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(truth_path.string() + ": " + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kBundleFormatVersion) {
      throw FormatError(truth_path.string() + ": unsupported format_version " +
                        std::to_string(version));
    }
    ds.experiment_id = j.at("experiment_id").get<int>();
    ds.seed = j.at("seed").get<std::uint64_t>();
    sim::GroundTruth& t = ds.truth;
    t.xi = vec<double>(j, "xi");
    t.k = vec<double>(j, "k");
    t.y_star = vec<int>(j, "y_star");
    if (!j.at("delta").is_null()) t.delta = vec<int>(j, "delta");
    if (!j.at("family").is_null()) t.family = vec<int>(j, "family");
    const ordered_json& p = j.at("params");
    t.params = {vec<double>(p, "phi_mu"), vec<double>(p, "phi_sigma"),
                vec<double>(p, "theta_mu"), vec<double>(p, "theta_sigma")};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(truth_path.string() + ": " + e.what());
  }
  if (ds.truth.xi.size() != B || ds.truth.y_star.size() != J || ds.truth.k.size() != J) {
    throw FormatError(dir.string() + ": truth.json does not match data.csv dimensions");
  }
  return ds;
}

std::vector<fs::path> list_bundles(const fs::path& root) {
  if (!fs::is_directory(root)) throw std::runtime_error(root.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root)) {
    const std::string name = e.path().filename().string();
    if (e.is_directory() && name.rfind("ds_", 0) == 0 && name.find('.') == std::string::npos) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace tempo::io
