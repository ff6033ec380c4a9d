#include "facetda/server.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>

#include "facetda/embedding.hpp"
#include "facetda/error.hpp"
#include "facetda/landmarks.hpp"
#include "facetda/persistence.hpp"
#include "facetda/serialization.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that collides with Eigen internals.
#include <httplib.h>

namespace facetda {

using nlohmann::json;

namespace {

struct HttpError {
  int status;
  std::string message;
  json detail;
};

json echo(const QueryParams& q) {
  json out = json::object();
  for (const auto& [k, v] : q) out[k] = v;
  return out;
}

const std::string& require(const QueryParams& q, const std::string& name) {
  auto it = q.find(name);
  if (it == q.end() || it->second.empty())
    throw HttpError{400, "missing query parameter '" + name + "'", echo(q)};
  return it->second;
}

std::optional<std::string> optional_param(const QueryParams& q, const std::string& name) {
  auto it = q.find(name);
  if (it == q.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

long long parse_integer(const QueryParams& q, const std::string& name, const std::string& text) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw HttpError{400, "query parameter '" + name + "' is not an integer", echo(q)};
  return v;
}

double parse_real(const QueryParams& q, const std::string& name, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v))
    throw HttpError{400, "query parameter '" + name + "' is not a number", echo(q)};
  return v;
}

ApiResponse json_response(int status, const json& body) { return ApiResponse{status, body.dump(), "application/json", {}}; }

ApiResponse error_response(int status, const std::string& message, json detail) {
  return json_response(status, json{{"error", message}, {"detail", std::move(detail)}});
}

// Normalized (mode, subset[, kind]) labels of a query; malformed labels are 400.
std::string mode_label(const QueryParams& q) { return std::string(to_string(filtration_mode_from_string(require(q, "mode")))); }
std::string subset_label(const QueryParams& q) { return FeatureSubset::parse(require(q, "subset")).name(); }
std::string kind_label(const QueryParams& q) { return std::string(to_string(distance_kind_from_string(require(q, "kind")))); }

}  // namespace

ApiService::ApiService(std::filesystem::path cache_dir) : store_(cache_dir) {
  const auto index_root = cache_dir / "index";
  if (std::filesystem::is_directory(index_root)) {
    for (const auto& file : std::filesystem::recursive_directory_iterator(index_root)) {
      if (!file.is_regular_file() || file.path().extension() != ".json") continue;
      auto doc = json::parse(read_text(file.path()));
      std::pair key{doc.at("subject").get<std::string>(), doc.at("emotion").get<std::string>()};
      index_[std::move(key)] = std::move(doc);
    }
  }

  json subjects = json::array();
  std::string current;
  for (const auto& [id, doc] : index_) {
    if (subjects.empty() || current != id.first) {
      json subject = json::object();
      subject["id"] = id.first;
      subject["emotions"] = json::array();
      subjects.push_back(std::move(subject));
      current = id.first;
    }
    std::set<std::string> modes, subsets, kinds;
    for (const auto& [slot, key] : doc.at("diagrams").items()) {
      const auto cut = slot.find('/');
      modes.insert(slot.substr(0, cut));
      subsets.insert(slot.substr(cut + 1));
    }
    for (const auto& [slot, key] : doc.at("matrices").items()) kinds.insert(slot.substr(slot.rfind('/') + 1));
    json item = json::object();
    item["emotion"] = id.second;
    item["frames"] = doc.at("frames");
    item["au"] = !doc.at("au").is_null();
    item["modes"] = modes;
    item["subsets"] = subsets;
    item["kinds"] = kinds;
    subjects.back()["emotions"].push_back(std::move(item));
  }
  catalog_body_ = json{{"subjects", std::move(subjects)}}.dump();
}

std::size_t ApiService::memo_size() const {
  std::lock_guard lock(memo_mutex_);
  return memo_.size();
}

const json& ApiService::entry(const QueryParams& q) const {
  const auto& subject = require(q, "subject");
  const auto& emotion = require(q, "emotion");
  auto it = index_.find({subject, emotion});
  if (it == index_.end()) throw HttpError{404, "unknown subject/emotion", echo(q)};
  return it->second;
}

std::string ApiService::payload(const std::string& key) const {
  auto text = store_.read(key);
  if (!text) throw NotFoundError("cache object " + key + " is missing");
  return *text;
}

json ApiService::load_matrix(const QueryParams& q) const {
  const auto& doc = entry(q);
  const auto slot = mode_label(q) + "/" + subset_label(q) + "/" + kind_label(q);
  const auto& matrices = doc.at("matrices");
  if (!matrices.contains(slot)) throw HttpError{404, "no matrix for " + slot, echo(q)};
  return json::parse(payload(matrices.at(slot).get<std::string>()));
}

ApiResponse ApiService::catalog() const { return ApiResponse{200, catalog_body_, "application/json", {}}; }

ApiResponse ApiService::diagram(const QueryParams& q) const {
  const auto& doc = entry(q);
  const auto slot = mode_label(q) + "/" + subset_label(q);
  const auto frame = parse_integer(q, "frame", require(q, "frame"));
  const auto& diagrams = doc.at("diagrams");
  if (!diagrams.contains(slot)) throw HttpError{404, "no diagrams for " + slot, echo(q)};
  if (frame < 0 || frame >= doc.at("frames").get<long long>()) throw HttpError{404, "unknown frame", echo(q)};
  const auto set = json::parse(payload(diagrams.at(slot).get<std::string>()));
  const auto& item = set.at("frames").at(static_cast<std::size_t>(frame));
  ApiResponse r = json_response(200, item.at("diagram"));
  r.headers["X-Frame-Id"] = std::to_string(item.at("frame").get<int>());
  return r;
}

ApiResponse ApiService::matrix(const QueryParams& q) const { return json_response(200, load_matrix(q)); }

ApiResponse ApiService::relative(const QueryParams& q) const {
  const auto m = matrix_from_json(load_matrix(q));
  const auto keyframe = parse_integer(q, "keyframe", optional_param(q, "keyframe").value_or("0"));
  if (keyframe < 0 || keyframe >= m.values.rows()) throw HttpError{400, "keyframe out of range", echo(q)};
  const Eigen::VectorXd row = relative_distance(m.values, static_cast<int>(keyframe));
  return json_response(200, json{{"keyframe", keyframe},
                                 {"ids", m.frame_ids},
                                 {"values", std::vector<double>(row.data(), row.data() + row.size())}});
}

ApiResponse ApiService::embedding(const QueryParams& q) const {
  const auto method = embedding_method_from_string(optional_param(q, "method").value_or("relative"));
  // Resolve every parameter to its effective value so equivalent queries share a memo slot.
  json params = {{"subject", require(q, "subject")}, {"emotion", require(q, "emotion")},
                 {"mode", mode_label(q)},            {"subset", subset_label(q)},
                 {"kind", kind_label(q)},            {"method", std::string(to_string(method))}};
  TsneParams tp;
  int keyframe = 0, dim = 2;
  switch (method) {
    case EmbeddingMethod::relative:
      keyframe = static_cast<int>(parse_integer(q, "keyframe", optional_param(q, "keyframe").value_or("0")));
      params["keyframe"] = keyframe;
      break;
    case EmbeddingMethod::mds:
      dim = static_cast<int>(parse_integer(q, "dim", optional_param(q, "dim").value_or("2")));
      params["dim"] = dim;
      break;
    case EmbeddingMethod::tsne:
      if (auto p = optional_param(q, "perplexity")) tp.perplexity = parse_real(q, "perplexity", *p);
      if (auto s = optional_param(q, "seed")) {
        const auto seed = parse_integer(q, "seed", *s);
        if (seed < 0) throw HttpError{400, "seed must be non-negative", echo(q)};
        tp.seed = static_cast<std::uint64_t>(seed);
      }
      if (auto it = optional_param(q, "iterations"))
        tp.iterations = static_cast<int>(parse_integer(q, "iterations", *it));
      params["perplexity"] = tp.perplexity;
      params["seed"] = tp.seed;
      params["iterations"] = tp.iterations;
      break;
  }
  const auto memo_key = params.dump();

  std::shared_ptr<const std::string> body;
  {
    std::lock_guard lock(memo_mutex_);
    if (auto it = memo_.find(memo_key); it != memo_.end()) body = it->second;
  }
  const bool hit = body != nullptr;
  if (hit) {
    ++memo_hits_;
  } else {
    const auto m = matrix_from_json(load_matrix(q));
    Embedding e;
    switch (method) {
      case EmbeddingMethod::relative: e = relative_embedding(m.values, keyframe); break;
      case EmbeddingMethod::mds: e = classical_mds(m.values, dim); break;
      case EmbeddingMethod::tsne: e = tsne(m.values, tp); break;
    }
    auto doc = embedding_to_json(e);
    doc["ids"] = m.frame_ids;
    auto fresh = std::make_shared<const std::string>(doc.dump());
    std::lock_guard lock(memo_mutex_);
    body = memo_.try_emplace(memo_key, std::move(fresh)).first->second;
  }
  ApiResponse r{200, *body, "application/json", {}};
  r.headers["X-Memo"] = hit ? "hit" : "miss";
  r.headers["X-Memo-Hits"] = std::to_string(memo_hits_.load());
  return r;
}

ApiResponse ApiService::landmarks(const QueryParams& q) const {
  const auto& doc = entry(q);
  const auto frame = parse_integer(q, "frame", require(q, "frame"));
  if (frame < 0 || frame >= doc.at("frames").get<long long>()) throw HttpError{404, "unknown frame", echo(q)};
  const auto seq = parse_sequence_json(payload(doc.at("sequence").get<std::string>()));
  const auto conn = parse_connectivity_json(payload(doc.at("connectivity").get<std::string>()));
  const auto& pose = seq.frames.at(static_cast<std::size_t>(frame));
  json points = json::array();
  for (Eigen::Index i = 0; i < pose.points.rows(); ++i)
    points.push_back({pose.points(i, 0), pose.points(i, 1), pose.points(i, 2)});
  json regions = json::array();
  for (Region r : conn.region_of) regions.push_back(std::string(to_string(r)));
  return json_response(200, json{{"frame", frame},
                                 {"frame_id", pose.frame_index},
                                 {"points", std::move(points)},
                                 {"regions", std::move(regions)},
                                 {"edges", conn.edges}});
}

ApiResponse ApiService::au(const QueryParams& q) const {
  const auto& doc = entry(q);
  if (doc.at("au").is_null()) throw HttpError{404, "no action-unit data for this sequence", echo(q)};
  return ApiResponse{200, payload(doc.at("au").get<std::string>()), "application/json", {}};
}

ApiResponse ApiService::handle(const std::string& path, const QueryParams& query) const {
  try {
    if (path == "/catalog") return catalog();
    if (path == "/diagram") return diagram(query);
    if (path == "/matrix") return matrix(query);
    if (path == "/relative") return relative(query);
    if (path == "/embedding") return embedding(query);
    if (path == "/landmarks") return landmarks(query);
    if (path == "/au") return au(query);
    return error_response(404, "unknown endpoint", json{{"path", path}});
  } catch (const HttpError& e) {
    return error_response(e.status, e.message, e.detail);
  } catch (const ParameterError& e) {
    return error_response(400, e.what(), echo(query));
  } catch (const NotFoundError& e) {
    return error_response(404, e.what(), echo(query));
  } catch (const std::exception& e) {
    return error_response(500, e.what(), echo(query));
  }
}

// ---------------------------------------------------------------------------

ApiServer::ApiServer(const ApiService& service, std::filesystem::path static_dir)
    : service_(service), http_(std::make_unique<httplib::Server>()) {
  http_->set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  http_->Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "*");
    res.status = 204;
  });
  for (const char* endpoint : {"/catalog", "/diagram", "/matrix", "/relative", "/embedding", "/landmarks", "/au"}) {
    http_->Get(endpoint, [this](const httplib::Request& req, httplib::Response& res) {
      QueryParams q;
      for (const auto& [k, v] : req.params) q.emplace(k, v);
      auto r = service_.handle(req.path, q);
      res.status = r.status;
      for (const auto& [k, v] : r.headers) res.set_header(k, v);
      res.set_content(r.body, r.content_type + "; charset=utf-8");
    });
  }
  if (!static_dir.empty() && std::filesystem::is_directory(static_dir))
    http_->set_mount_point("/ui", static_dir.string());
}

ApiServer::~ApiServer() = default;

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return http_->bind_to_any_port(host);
  if (!http_->bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ApiServer::run() { http_->listen_after_bind(); }

void ApiServer::stop() { http_->stop(); }

}  // namespace facetda
