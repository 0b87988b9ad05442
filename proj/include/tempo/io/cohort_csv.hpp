#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tempo/sim/cohort.hpp"

namespace tempo::io {

struct CohortCsvOptions {
  // dx values equal to this label map to 0 and every other label to 1.
  // Without it, dx must be 0 or 1.
  std::optional<std::string> control_label;
  std::optional<std::size_t> expected_biomarkers;
};

struct CohortTable {
  std::vector<std::string> ids;
  std::vector<std::string> dx_labels;  // as written in the file
  std::vector<std::string> biomarkers;
  sim::Cohort cohort;                  // z-scored with its own statistics
  std::vector<std::string> warnings;
};

// Columns `id,dx` followed by one column per biomarker. Empty, NA or
// non-numeric cells are rejected with the offending row and column.
CohortTable parse_cohort_csv(std::istream& in, const CohortCsvOptions& opts,
                             const std::string& source = "cohort");
CohortTable read_cohort_csv(const std::filesystem::path& path, const CohortCsvOptions& opts);

}  // namespace tempo::io
