// facetda: command-line front end for the pipeline, benchmarks and server.
//
// Every option can also come from a key=value config file (--config) or a
// FACETDA_<OPTION> environment variable. A flag beats the config file, which
// beats the environment.

#include <algorithm>
#include <cctype>
#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "facetda/error.hpp"
#include "facetda/landmarks.hpp"
#include "facetda/pipeline.hpp"
#include "facetda/serialization.hpp"
#include "facetda/server.hpp"

namespace {

using nlohmann::json;
using namespace facetda;

constexpr int kExitUsage = 2;
constexpr int kExitBatchErrors = 3;

std::string env_name(const std::string& flag) {
  std::string out = "FACETDA_";
  for (char c : flag.substr(2)) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

template <typename T>
CLI::Option* opt(CLI::App* app, const std::string& flag, T& value, const std::string& help) {
  return app->add_option(flag, value, help)->envname(env_name(flag))->capture_default_str();
}

void fail_json(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text << "\n";
}

struct Selection {
  std::string cache_dir = "facetda-cache";
  std::string subject;
  std::string emotion;
  std::string mode = "nonmetric";
  std::string subset = "full";
  std::string kind = "bottleneck";
};

void add_selection(CLI::App* app, Selection& s) {
  opt(app, "--cache-dir", s.cache_dir, "Cache directory");
  opt(app, "--subject", s.subject, "Subject id")->required();
  opt(app, "--emotion", s.emotion, "Emotion label")->required();
  opt(app, "--mode", s.mode, "metric | nonmetric");
  opt(app, "--subset", s.subset, "Subset preset or '+'-joined regions");
  opt(app, "--kind", s.kind, "bottleneck | wasserstein1");
}

QueryParams query_of(const Selection& s) {
  return {{"subject", s.subject}, {"emotion", s.emotion}, {"mode", s.mode}, {"subset", s.subset}, {"kind", s.kind}};
}

// Runs an API handler in-process; a non-200 answer becomes an error.
std::string call_api(const Selection& s, const std::string& path, QueryParams q) {
  if (!std::filesystem::is_directory(s.cache_dir)) throw ParameterError("cache_dir '" + s.cache_dir + "' does not exist");
  ApiService service(s.cache_dir);
  const auto r = service.handle(path, q);
  if (r.status != 200) {
    const auto body = json::parse(r.body);
    const std::string message = body.value("error", "request failed");
    if (r.status == 404) throw NotFoundError(message);
    throw ParameterError(message);
  }
  return r.body;
}

LandmarkConnectivity connectivity_from(const std::string& path) {
  return path.empty() ? default_connectivity() : load_connectivity(path);
}

struct SynthOptions {
  std::string motion = "mouth_open_close";
  int frames = 50;
  double noise = 0.5;
  std::uint64_t seed = 0;
  std::string subject = "SYN";
  std::string emotion = "happiness";
};

void add_synth(CLI::App* app, SynthOptions& s) {
  opt(app, "--motion", s.motion, "static | mouth_open_close | eye_blink");
  opt(app, "--frames", s.frames, "Frame count")->check(CLI::PositiveNumber);
  opt(app, "--noise", s.noise, "Per-coordinate Gaussian noise sd (mm)")->check(CLI::NonNegativeNumber);
  opt(app, "--seed", s.seed, "Noise seed");
}

LandmarkSequence synthesize(const SynthOptions& s) {
  SyntheticSpec spec;
  spec.n_frames = s.frames;
  spec.motion = motion_from_string(s.motion);
  spec.noise_sd = s.noise;
  spec.seed = s.seed;
  spec.subject_id = s.subject;
  spec.emotion = emotion_from_string(s.emotion);
  return generate_synthetic(spec);
}

// AU26 (jaw drop) from the inner lip opening, AU45 (blink) from eye height,
// each scaled so the sequence maximum maps to intensity 5.
std::string synthetic_au_csv(const LandmarkSequence& seq) {
  const auto ring = default_inner_mouth_ring();
  const auto eye = default_connectivity().landmarks_in(Region::leftEye);
  std::vector<double> mouth, openness;
  for (const auto& f : seq.frames) {
    mouth.push_back(std::abs(ring_area_xy(f.points, ring)));
    double lo = f.points(eye.front(), 1), hi = lo;
    for (int i : eye) {
      lo = std::min(lo, f.points(i, 1));
      hi = std::max(hi, f.points(i, 1));
    }
    openness.push_back(hi - lo);
  }
  const double mouth_max = *std::max_element(mouth.begin(), mouth.end());
  const double eye_max = *std::max_element(openness.begin(), openness.end());
  std::ostringstream out;
  out << "frame,AU26_r,AU45_r\n";
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const double au26 = mouth_max > 0 ? 5.0 * mouth[k] / mouth_max : 0.0;
    const double au45 = eye_max > 0 ? std::clamp(5.0 * (1.0 - openness[k] / eye_max), 0.0, 5.0) : 0.0;
    out << seq.frames[k].frame_index << ',' << au26 << ',' << au45 << '\n';
  }
  return out.str();
}

ApiServer* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topological analysis of facial landmark sequences"};
  app.set_config("--config", "", "key=value configuration file");
  app.require_subcommand(1);
  app.fallthrough();

  // compute
  auto* compute = app.add_subcommand("compute", "Populate the cache for every sequence under the data root");
  std::string data_root, connectivity, cache_dir = "facetda-cache";
  std::vector<std::string> modes = {"metric", "nonmetric"};
  std::vector<std::string> subsets = {"full", "eyes+nose", "mouth+nose", "eyebrows+nose"};
  std::vector<std::string> kinds = {"bottleneck", "wasserstein1"};
  int workers = 1;
  opt(compute, "--data-root", data_root, "Directory of sequence files")->required();
  opt(compute, "--cache-dir", cache_dir, "Cache directory");
  opt(compute, "--modes", modes, "Filtration modes")->delimiter(',');
  opt(compute, "--subsets", subsets, "Feature subsets")->delimiter(',');
  opt(compute, "--kinds", kinds, "Distance kinds")->delimiter(',');
  opt(compute, "--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  // bench
  auto* bench = app.add_subcommand("bench", "Time both filtration modes on one sequence");
  std::string input, subset = "full";
  bool as_json = false;
  SynthOptions synth_opts;
  opt(bench, "--input", input, "Sequence file (default: synthetic sequence)");
  opt(bench, "--subset", subset, "Feature subset");
  opt(bench, "--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_flag("--json", as_json, "Emit JSON instead of a table");
  add_synth(bench, synth_opts);

  // supersample-compare
  auto* ssc = app.add_subcommand("supersample-compare", "Compare supersampled metric complexes with the edge complex");
  int frame = 0;
  std::vector<double> epsilons = {8, 4, 2, 1};
  opt(ssc, "--input", input, "Sequence file (default: synthetic face)");
  opt(ssc, "--frame", frame, "Frame position");
  opt(ssc, "--subset", subset, "Feature subset");
  opt(ssc, "--epsilons", epsilons, "Descending sample spacings (mm)")->delimiter(',');

  // embed
  auto* embed = app.add_subcommand("embed", "Embed a cached dissimilarity matrix");
  Selection sel;
  std::string method = "relative", output;
  int keyframe = 0, dim = 2;
  double perplexity = 30.0;
  std::uint64_t seed = 0;
  add_selection(embed, sel);
  opt(embed, "--method", method, "relative | mds | tsne");
  opt(embed, "--keyframe", keyframe, "Keyframe position (relative)");
  opt(embed, "--dim", dim, "Output dimension (mds)");
  opt(embed, "--perplexity", perplexity, "Perplexity (tsne)");
  opt(embed, "--seed", seed, "Seed (tsne)");
  opt(embed, "--output", output, "Output file (default: stdout)");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the cache over HTTP");
  int port = 8080;
  std::string host = "127.0.0.1", static_dir;
  opt(serve, "--cache-dir", cache_dir, "Cache directory");
  opt(serve, "--port", port, "TCP port")->check(CLI::Range(0, 65535));
  opt(serve, "--host", host, "Bind address");
  opt(serve, "--static-dir", static_dir, "Frontend assets served under /ui/");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic landmark sequence");
  bool with_au = false;
  add_synth(synth, synth_opts);
  opt(synth, "--subject", synth_opts.subject, "Subject id");
  opt(synth, "--emotion", synth_opts.emotion, "Emotion label");
  opt(synth, "--output", output, "Output file (.json or .csv)")->required();
  synth->add_flag("--with-au", with_au, "Also write a <stem>.au.csv sidecar");

  // export
  auto* exp = app.add_subcommand("export", "Print a cached artifact");
  std::string what;
  Selection exp_sel;
  add_selection(exp, exp_sel);
  opt(exp, "--what", what, "diagram | matrix | embedding")
      ->required()
      ->check(CLI::IsMember({"diagram", "matrix", "embedding"}));
  opt(exp, "--frame", frame, "Frame position (diagram)");
  opt(exp, "--method", method, "Embedding method");
  opt(exp, "--keyframe", keyframe, "Keyframe position (relative)");
  opt(exp, "--perplexity", perplexity, "Perplexity (tsne)");
  opt(exp, "--seed", seed, "Seed (tsne)");
  opt(exp, "--output", output, "Output file (default: stdout)");

  for (auto* sub : {compute, bench, ssc, serve}) opt(sub, "--connectivity", connectivity, "Connectivity JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail_json("usage", e.what());
    return kExitUsage;
  }

  try {
    if (compute->parsed()) {
      PipelineConfig config;
      config.data_root = data_root;
      config.connectivity = connectivity;
      config.cache_dir = cache_dir;
      config.workers = workers;
      config.modes.clear();
      for (const auto& m : modes) config.modes.push_back(filtration_mode_from_string(m));
      config.subsets.clear();
      for (const auto& s : subsets) config.subsets.push_back(FeatureSubset::parse(s));
      config.kinds.clear();
      for (const auto& k : kinds) config.kinds.push_back(distance_kind_from_string(k));
      const auto report = run_pipeline(config);
      std::cout << report.to_json().dump(2) << "\n";
      if (!report.errors.empty()) {
        fail_json("batch", std::to_string(report.errors.size()) + " sequence(s) failed; see report");
        return kExitBatchErrors;
      }
    } else if (bench->parsed()) {
      const auto seq = input.empty() ? synthesize(synth_opts) : load_sequence(input);
      const auto rows = benchmark(seq, connectivity_from(connectivity), FeatureSubset::parse(subset), workers);
      if (as_json)
        std::cout << bench_to_json(rows).dump(2) << "\n";
      else
        std::cout << bench_table(rows);
    } else if (ssc->parsed()) {
      SynthOptions face;
      face.motion = "static";
      face.frames = 1;
      face.noise = 0.0;
      const auto seq = input.empty() ? synthesize(face) : load_sequence(input);
      if (frame < 0 || frame >= static_cast<int>(seq.frames.size()))
        throw ParameterError("frame " + std::to_string(frame) + " out of range");
      const auto report = compare_supersampling(seq.frames[static_cast<std::size_t>(frame)],
                                                connectivity_from(connectivity), FeatureSubset::parse(subset), epsilons);
      std::cout << report.to_json().dump(2) << "\n";
    } else if (embed->parsed()) {
      auto q = query_of(sel);
      q["method"] = method;
      q["keyframe"] = std::to_string(keyframe);
      q["dim"] = std::to_string(dim);
      q["perplexity"] = json(perplexity).dump();
      q["seed"] = std::to_string(seed);
      write_output(output, call_api(sel, "/embedding", q));
    } else if (serve->parsed()) {
      if (!std::filesystem::is_directory(cache_dir)) throw ParameterError("cache_dir '" + cache_dir + "' does not exist");
      ApiService service(cache_dir);
      ApiServer server(service, static_dir);
      const int bound = server.bind(host, port);
      std::cerr << json{{"listening", host + ":" + std::to_string(bound)}}.dump() << std::endl;
      g_server = &server;
      std::signal(SIGINT, [](int) { g_server->stop(); });
      std::signal(SIGTERM, [](int) { g_server->stop(); });
      server.run();
    } else if (synth->parsed()) {
      const auto seq = synthesize(synth_opts);
      const std::filesystem::path path = output;
      const auto format = path.extension() == ".csv" ? SequenceFormat::csv : SequenceFormat::json;
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      save_sequence(seq, path, format);
      if (with_au) {
        auto au_path = path;
        au_path.replace_extension(".au.csv");
        write_output(au_path.string(), synthetic_au_csv(seq));
      }
    } else if (exp->parsed()) {
      auto q = query_of(exp_sel);
      std::string path = "/" + what;
      if (what == "diagram") {
        q["frame"] = std::to_string(frame);
      } else if (what == "embedding") {
        q["method"] = method;
        q["keyframe"] = std::to_string(keyframe);
        q["perplexity"] = json(perplexity).dump();
        q["seed"] = std::to_string(seed);
      }
      write_output(output, call_api(exp_sel, path, q));
    }
  } catch (const facetda::Error& e) {
    fail_json(e.kind(), e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fail_json("internal", e.what());
    return 1;
  }
  return 0;
}
