#include "rtphase/manifest.hpp"

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "rtphase/errors.hpp"

namespace rtphase {

auto sha256_file(const std::filesystem::path& path) -> std::string {
  auto in = std::ifstream{path, std::ios::binary};
  if (!in) {
    throw Parse_error{fmt::format("cannot open {} to hash it", path.string()), 0};
  }
  auto ctx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>{EVP_MD_CTX_new(),
                                                                      &EVP_MD_CTX_free};
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error{"SHA-256 initialisation failed"};
  }
  auto buffer = std::array<char, 1 << 16>{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) {
      EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
    }
  }
  auto digest = std::array<unsigned char, EVP_MAX_MD_SIZE>{};
  auto length = 0u;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  auto hex = std::string{};
  for (auto i = 0u; i < length; ++i) {
    hex += fmt::format("{:02x}", digest[i]);
  }
  return hex;
}

auto utc_timestamp() -> std::string {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  auto tm = std::tm{};
  gmtime_r(&now, &tm);
  auto text = std::array<char, 32>{};
  std::strftime(text.data(), text.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return text.data();
}

auto manifest_to_json(const Run_manifest& m) -> Json {
  auto digests = Json::object();
  for (const auto& [path, digest] : m.input_digests) {
    digests[path] = digest;
  }
  return Json{{"command", m.command},
              {"arguments", m.arguments},
              {"resolved_config", m.resolved_config},
              {"seeds", m.seeds},
              {"input_digests", digests},
              {"artifacts", m.artifacts},
              {"started_utc", m.started_utc},
              {"wall_seconds", m.wall_seconds},
              {"version", m.version}};
}

auto manifest_from_json(const Json& j) -> Run_manifest {
  try {
    auto m = Run_manifest{};
    m.command = j.at("command").get<std::string>();
    m.arguments = j.at("arguments").get<std::vector<std::string>>();
    m.resolved_config = j.value("resolved_config", Json{});
    m.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    auto digests = j.value("input_digests", Json::object());
    for (const auto& [path, digest] : digests.items()) {
      m.input_digests[path] = digest.get<std::string>();
    }
    m.artifacts = j.value("artifacts", std::vector<std::string>{});
    m.started_utc = j.value("started_utc", "");
    m.wall_seconds = j.value("wall_seconds", 0.0);
    m.version = j.value("version", "");
    return m;
  } catch (const Json::exception& e) {
    throw Schema_error{fmt::format("malformed manifest: {}", e.what())};
  }
}

auto write_manifest(const std::filesystem::path& dir, const Run_manifest& manifest) -> void {
  std::filesystem::create_directories(dir);
  write_text_atomic(dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
}

auto read_manifest(const std::filesystem::path& path) -> Run_manifest {
  return manifest_from_json(read_json(path));
}

}  // namespace rtphase
