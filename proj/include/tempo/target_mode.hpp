#pragma once

#include <string>

#include "tempo/errors.hpp"
#include "tempo/sim/cohort.hpp"

namespace tempo {

// How sequencing targets are normalized. kRank: (r - 1) / (B - 1).
// kTime: event times min-max scaled over the dataset's biomarkers.
enum class TargetMode { kRank, kTime };

inline TargetMode target_mode_for(int experiment_id) {
  return sim::experiment_spec(experiment_id).events == sim::EventTimeKind::kContinuous
             ? TargetMode::kTime
             : TargetMode::kRank;
}

inline std::string to_string(TargetMode mode) {
  return mode == TargetMode::kRank ? "rank" : "time";
}

inline TargetMode parse_target_mode(const std::string& s) {
  if (s == "rank") return TargetMode::kRank;
  if (s == "time") return TargetMode::kTime;
  throw FormatError("unknown target mode '" + s + "'");
}

}  // namespace tempo
