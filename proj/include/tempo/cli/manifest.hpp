#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace tempo::cli {

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& path);

// Reproduction record of one command: tool version, resolved configuration,
// master seed, inputs and content hashes of every output file. Output paths
// are stored relative to `base`.
struct Manifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::filesystem::path> outputs;
};

std::string manifest_json(const Manifest& m, const std::filesystem::path& base);
void write_manifest(const std::filesystem::path& path, const Manifest& m,
                    const std::filesystem::path& base);

}  // namespace tempo::cli
