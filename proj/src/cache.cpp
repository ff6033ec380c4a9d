#include "facetda/cache.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include <json.hpp>

#include "facetda/error.hpp"

namespace facetda {

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

std::string content_key(std::initializer_list<std::string_view> parts) {
  std::string framed;
  for (auto p : parts) {
    framed += std::to_string(p.size());
    framed += ':';
    framed += p;
  }
  return sha256_hex(framed);
}

void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
  static std::atomic<unsigned> counter{0};
  std::filesystem::create_directories(path.parent_path());
  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
           << '.' << counter++;
  const auto tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ContentStore::ContentStore(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path ContentStore::payload_path(const std::string& key) const {
  return root_ / "objects" / key.substr(0, 2) / (key + ".json");
}

bool ContentStore::contains(const std::string& key) const { return std::filesystem::exists(payload_path(key)); }

std::optional<std::string> ContentStore::read(const std::string& key) const {
  const auto path = payload_path(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  return read_text(path);
}

void ContentStore::write(const std::string& key, std::string_view payload, std::string_view stage) const {
  const auto path = payload_path(key);
  atomic_write(path, payload);
  const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  nlohmann::json meta = {{"key", key}, {"stage", std::string(stage)}, {"created_at", now}};
  auto meta_path = path;
  meta_path.replace_extension(".meta.json");
  atomic_write(meta_path, meta.dump());
}

}  // namespace facetda
