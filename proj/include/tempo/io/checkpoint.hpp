#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tempo/model/tempo_model.hpp"
#include "tempo/target_mode.hpp"

namespace tempo::io {

inline constexpr int kCheckpointFormatVersion = 1;

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws FormatError on characters outside the standard alphabet or bad padding.
std::vector<std::uint8_t> base64_decode(std::string_view text);

struct Checkpoint {
  model::TempoModel model;
  int experiment_id = 0;
  TargetMode target_mode = TargetMode::kRank;
};

// JSON text with format_version, model_config, experiment_id, target_mode and
// params: name -> {shape, data}, data being base64 of little-endian float32.
std::string checkpoint_to_string(const model::TempoModel& model, int experiment_id,
                                 TargetMode mode);
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const model::TempoModel& model,
                     int experiment_id, TargetMode mode);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tempo::io
