#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tempo/sim/cohort.hpp"

namespace tempo::io {

inline constexpr int kBundleFormatVersion = 1;

// data.csv: header `id,dx,b_001,...,b_B`, raw measurements with 9
// significant digits.
std::string data_csv(const sim::Dataset& ds);
// truth.json: experiment_id, seed, xi, k, y_star, delta, family, params,
// standardization, format_version.
std::string truth_json(const sim::Dataset& ds);

std::string bundle_name(std::size_t index);  // ds_0000, ds_0001, ...

// Writes data.csv and truth.json into `dir`, which must not exist yet; the
// bundle appears under its final name only once both files are complete.
void write_bundle(const std::filesystem::path& dir, const sim::Dataset& ds);

// Re-standardizes the measurements with the cohort's own statistics.
sim::Dataset read_bundle(const std::filesystem::path& dir);

// Sorted subdirectories of `root` whose names start with "ds_".
std::vector<std::filesystem::path> list_bundles(const std::filesystem::path& root);

}  // namespace tempo::io
