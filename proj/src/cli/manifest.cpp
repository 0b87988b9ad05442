#include "tempo/cli/manifest.hpp"

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

#include <fmt/format.h>

#include "tempo/io/files.hpp"

#ifndef TEMPO_VERSION
#define TEMPO_VERSION "0.0.0"
#endif

namespace tempo::cli {

std::string sha256_hex(const std::string& data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(io::read_file(path));
}

std::string manifest_json(const Manifest& m, const std::filesystem::path& base) {
  nlohmann::ordered_json j;
  j["tool"] = "tempo";
  j["version"] = TEMPO_VERSION;
  j["command"] = m.command;
  j["config"] = m.config;
  j["seed"] = m.seed;
  j["inputs"] = m.inputs;
  nlohmann::ordered_json outs = nlohmann::ordered_json::array();
  for (const auto& p : m.outputs) {
    outs.push_back({{"path", p.lexically_relative(base).generic_string()},
                    {"sha256", sha256_file(p)}});
  }
  j["outputs"] = std::move(outs);
  return j.dump(1) + "\n";
}

void write_manifest(const std::filesystem::path& path, const Manifest& m,
                    const std::filesystem::path& base) {
  io::write_file_atomic(path, manifest_json(m, base));
}

}  // namespace tempo::cli
