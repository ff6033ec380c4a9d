#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "facetda/cache.hpp"

namespace httplib {
class Server;
}

namespace facetda {

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
};

using QueryParams = std::map<std::string, std::string>;

/// Read-only view of a populated cache. The index files are scanned once at
/// construction; payloads are content-addressed and therefore immutable.
///
/// Frames are addressed by position in the sequence (0-based), the same
/// numbering as matrix rows. Responses echo the stored frame id.
class ApiService {
 public:
  explicit ApiService(std::filesystem::path cache_dir);

  ApiResponse handle(const std::string& path, const QueryParams& query) const;

  ApiResponse catalog() const;
  ApiResponse diagram(const QueryParams& q) const;
  ApiResponse matrix(const QueryParams& q) const;
  ApiResponse relative(const QueryParams& q) const;
  ApiResponse embedding(const QueryParams& q) const;
  ApiResponse landmarks(const QueryParams& q) const;
  ApiResponse au(const QueryParams& q) const;

  std::uint64_t memo_hits() const { return memo_hits_.load(); }
  std::size_t memo_size() const;

 private:
  const nlohmann::json& entry(const QueryParams& q) const;
  std::string payload(const std::string& key) const;
  nlohmann::json load_matrix(const QueryParams& q) const;

  ContentStore store_;
  std::map<std::pair<std::string, std::string>, nlohmann::json> index_;
  std::string catalog_body_;

  mutable std::mutex memo_mutex_;
  mutable std::map<std::string, std::shared_ptr<const std::string>> memo_;
  mutable std::atomic<std::uint64_t> memo_hits_{0};
};

/// httplib front end. GET endpoints under "/", static files under "/ui/".
class ApiServer {
 public:
  ApiServer(const ApiService& service, std::filesystem::path static_dir = {});
  ~ApiServer();

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void run();
  void stop();

 private:
  const ApiService& service_;
  std::unique_ptr<httplib::Server> http_;
};

}  // namespace facetda
