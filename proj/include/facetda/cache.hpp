#pragma once

#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

namespace facetda {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// Digest of a length-prefixed concatenation, so ("ab", "c") and ("a", "bc")
/// never collide.
std::string content_key(std::initializer_list<std::string_view> parts);

/// Writes `bytes` to a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

std::string read_text(const std::filesystem::path& path);

/// Content-addressed payload store:
///   <root>/objects/<k0k1>/<key>.json       payload
///   <root>/objects/<k0k1>/<key>.meta.json  {"key", "stage", "created_at"}
/// Payloads never carry timestamps, so recomputation reproduces them exactly.
class ContentStore {
 public:
  explicit ContentStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path payload_path(const std::string& key) const;

  bool contains(const std::string& key) const;
  std::optional<std::string> read(const std::string& key) const;
  void write(const std::string& key, std::string_view payload, std::string_view stage) const;

 private:
  std::filesystem::path root_;
};

}  // namespace facetda
