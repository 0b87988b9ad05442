#include "tempo/io/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tempo/errors.hpp"
#include "tempo/io/files.hpp"

namespace tempo::io {

using nlohmann::ordered_json;

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw FormatError("base64: length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    int pad = 0;
    std::array<int, 4> q{};
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && last && k >= 2) {
        ++pad;
        q[k] = 0;
        continue;
      }
      if (pad > 0) throw FormatError("base64: data after padding");
      q[k] = decode_char(c);
      if (q[k] < 0) throw FormatError(std::string("base64: invalid character '") + c + "'");
    }
    const std::uint32_t v = (q[0] << 18) | (q[1] << 12) | (q[2] << 6) | q[3];
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

namespace {

std::vector<std::uint8_t> floats_le(const ad::Tensor& t) {
  std::vector<std::uint8_t> bytes(t.numel() * 4);
  for (std::size_t i = 0; i < t.numel(); ++i) {
    const std::uint32_t u = std::bit_cast<std::uint32_t>(static_cast<float>(t[i]));
    for (int k = 0; k < 4; ++k) bytes[i * 4 + k] = static_cast<std::uint8_t>(u >> (8 * k));
  }
  return bytes;
}

ordered_json config_json(const model::ModelConfig& c) {
  ordered_json j;
  j["n_biomarkers"] = c.n_biomarkers;
  j["d_model"] = c.d_model;
  j["n_heads"] = c.n_heads;
  j["seq_layers"] = c.seq_layers;
  j["stage_layers"] = c.stage_layers;
  j["ffn_mult"] = c.ffn_mult;
  j["detector_hidden"] = c.detector_hidden;
  j["layer_norm_eps"] = c.layer_norm_eps;
  return j;
}

model::ModelConfig config_from_json(const ordered_json& j) {
  model::ModelConfig c;
  c.n_biomarkers = j.at("n_biomarkers").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.seq_layers = j.at("seq_layers").get<std::size_t>();
  c.stage_layers = j.at("stage_layers").get<std::size_t>();
  c.ffn_mult = j.at("ffn_mult").get<std::size_t>();
  c.detector_hidden = j.at("detector_hidden").get<std::size_t>();
  c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  return c;
}

}  // namespace

std::string checkpoint_to_string(const model::TempoModel& model, int experiment_id,
                                 TargetMode mode) {
  ordered_json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["model_config"] = config_json(model.config());
  j["experiment_id"] = experiment_id;
  j["target_mode"] = to_string(mode);
  ordered_json params = ordered_json::object();
  for (const ad::Parameter& p : model.parameters()) {
    params[p.name] = {{"shape", p.value.shape()}, {"data", base64_encode(floats_le(p.value))}};
  }
  j["params"] = std::move(params);
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw FormatError("unsupported checkpoint format_version " + std::to_string(version));
    }
    Checkpoint ck;
    ck.experiment_id = j.at("experiment_id").get<int>();
    ck.target_mode = parse_target_mode(j.at("target_mode").get<std::string>());
    ck.model = model::TempoModel(config_from_json(j.at("model_config")), 0);
    const ordered_json& params = j.at("params");
    if (params.size() != ck.model.parameters().size()) {
      throw FormatError("checkpoint has " + std::to_string(params.size()) +
                        " parameters, configuration expects " +
                        std::to_string(ck.model.parameters().size()));
    }
    for (ad::Parameter& p : ck.model.parameters()) {
      if (!params.contains(p.name)) throw FormatError("checkpoint lacks parameter " + p.name);
      const ordered_json& entry = params.at(p.name);
      const auto shape = entry.at("shape").get<ad::Shape>();
      if (shape != p.value.shape()) {
        throw FormatError("parameter " + p.name + " has shape " + ad::shape_string(shape) +
                          ", expected " + ad::shape_string(p.value.shape()));
      }
      const std::vector<std::uint8_t> bytes = base64_decode(entry.at("data").get<std::string>());
      if (bytes.size() != p.value.numel() * 4) {
        throw FormatError("parameter " + p.name + " has the wrong data length");
      }
      for (std::size_t i = 0; i < p.value.numel(); ++i) {
        std::uint32_t u = 0;
        for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(bytes[i * 4 + k]) << (8 * k);
        p.value[i] = std::bit_cast<float>(u);
      }
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const model::TempoModel& model,
                     int experiment_id, TargetMode mode) {
  write_file_atomic(path, checkpoint_to_string(model, experiment_id, mode));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_string(read_file(path));
}

}  // namespace tempo::io
