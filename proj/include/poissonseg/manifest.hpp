#pragma once

// Episode manifests are JSON documents. Paths are resolved relative to the
// manifest's directory.
//
//   {
//     "support":   {"features": "support.t", "mask": "support_mask.t"},
//     "auxiliary": ["aux_0.t", "aux_1.t"],
//     "query":     {"features": "query.t", "mask": "query_mask.t"},
//     "config": {
//       "window": [4, 4], "neighbors": 10, "symmetrization": "mean",
//       "tolerance": 1e-6, "max_iterations": 1000,
//       "label_threshold": 0.5, "prediction_threshold": 0.5,
//       "mode": "calibrated",
//       "similarity_params":  {"weight": "w.t", "bias": "b.t"},
//       "calibration_params": {"hidden_weight": "...", "hidden_bias": "...",
//                              "output_weight": "...", "output_bias": "..."}
//     }
//   }
//
// "auxiliary", "query.mask", "config" and every config key are optional.

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poissonseg/episode.hpp"
#include "poissonseg/io.hpp"

namespace poissonseg {

struct ParamFiles {
  std::string weight;
  std::string bias;
};

struct MlpFiles {
  std::string hidden_weight, hidden_bias, output_weight, output_bias;
};

/// Parsed manifest; paths are as written in the document.
struct EpisodeManifest {
  std::string support_features;
  std::string support_mask;
  std::vector<std::string> auxiliary;
  std::string query_features;
  std::optional<std::string> query_mask;
  EpisodeConfig config;
  std::optional<ParamFiles> similarity_params;
  std::optional<MlpFiles> calibration_params;
};

namespace detail {

[[noreturn]] inline void manifest_fail(const std::string& key, const std::string& why) {
  fail(ErrorKind::ManifestError, "manifest key '" + key + "': " + why);
}

inline void only_keys(const nlohmann::json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) manifest_fail(where, "expected an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) manifest_fail(where.empty() ? k : where + "." + k, "unknown key");
}

inline const nlohmann::json& need(const nlohmann::json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) manifest_fail(path, "missing");
  return obj.at(key);
}

inline std::string need_string(const nlohmann::json& obj, const std::string& key, const std::string& path) {
  const auto& v = need(obj, key, path);
  if (!v.is_string()) manifest_fail(path, "expected a string");
  return v.get<std::string>();
}

inline double need_number(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number()) manifest_fail(path, "expected a number");
  return v.get<double>();
}

inline std::size_t need_count(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) manifest_fail(path, "expected a positive integer");
  return v.get<std::size_t>();
}

}  // namespace detail

inline EpisodeConfig parse_config(const nlohmann::json& cfg, EpisodeManifest* files = nullptr) {
  using detail::manifest_fail;
  detail::only_keys(cfg, "config",
                    {"window", "neighbors", "symmetrization", "tolerance", "max_iterations", "label_threshold",
                     "prediction_threshold", "mode", "similarity_params", "calibration_params"});
  EpisodeConfig out;
  if (cfg.contains("window")) {
    const auto& w = cfg["window"];
    if (!w.is_array() || w.size() != 2) manifest_fail("config.window", "expected [rows, cols]");
    out.window = {detail::need_count(w[0], "config.window"), detail::need_count(w[1], "config.window")};
  }
  if (cfg.contains("neighbors")) out.neighbors = detail::need_count(cfg["neighbors"], "config.neighbors");
  if (cfg.contains("symmetrization")) {
    const auto s = detail::need_string(cfg, "symmetrization", "config.symmetrization");
    if (s == "mean") out.symmetrization = Symmetrization::Mean;
    else if (s == "max") out.symmetrization = Symmetrization::Max;
    else manifest_fail("config.symmetrization", "expected \"mean\" or \"max\"");
  }
  if (cfg.contains("tolerance")) {
    out.solver.tolerance = detail::need_number(cfg["tolerance"], "config.tolerance");
    if (!(out.solver.tolerance >= 0)) manifest_fail("config.tolerance", "must be >= 0");
  }
  if (cfg.contains("max_iterations"))
    out.solver.max_iterations = detail::need_count(cfg["max_iterations"], "config.max_iterations");
  if (cfg.contains("label_threshold")) {
    out.label_threshold = detail::need_number(cfg["label_threshold"], "config.label_threshold");
    if (!(out.label_threshold > 0 && out.label_threshold < 1)) manifest_fail("config.label_threshold", "must lie in (0,1)");
  }
  if (cfg.contains("prediction_threshold")) {
    out.prediction_threshold = detail::need_number(cfg["prediction_threshold"], "config.prediction_threshold");
    if (!(out.prediction_threshold > 0 && out.prediction_threshold < 1))
      manifest_fail("config.prediction_threshold", "must lie in (0,1)");
  }
  if (cfg.contains("mode")) {
    const auto m = detail::need_string(cfg, "mode", "config.mode");
    if (m == "poisson") out.mode = PredictionMode::PoissonOnly;
    else if (m == "calibrated") out.mode = PredictionMode::Calibrated;
    else manifest_fail("config.mode", "expected \"poisson\" or \"calibrated\"");
  }
  if (cfg.contains("similarity_params")) {
    const auto& p = cfg["similarity_params"];
    detail::only_keys(p, "config.similarity_params", {"weight", "bias"});
    ParamFiles f{detail::need_string(p, "weight", "config.similarity_params.weight"),
                 detail::need_string(p, "bias", "config.similarity_params.bias")};
    if (files) files->similarity_params = f;
  }
  if (cfg.contains("calibration_params")) {
    const auto& p = cfg["calibration_params"];
    const std::string base = "config.calibration_params";
    detail::only_keys(p, base, {"hidden_weight", "hidden_bias", "output_weight", "output_bias"});
    MlpFiles f{detail::need_string(p, "hidden_weight", base + ".hidden_weight"),
               detail::need_string(p, "hidden_bias", base + ".hidden_bias"),
               detail::need_string(p, "output_weight", base + ".output_weight"),
               detail::need_string(p, "output_bias", base + ".output_bias")};
    if (files) files->calibration_params = f;
  }
  return out;
}

inline EpisodeManifest parse_manifest(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    detail::fail(ErrorKind::ManifestError, std::string("manifest is not valid JSON: ") + e.what());
  }
  detail::only_keys(doc, "", {"support", "auxiliary", "query", "config"});
  EpisodeManifest m;
  const auto& s = detail::need(doc, "support", "support");
  detail::only_keys(s, "support", {"features", "mask"});
  m.support_features = detail::need_string(s, "features", "support.features");
  m.support_mask = detail::need_string(s, "mask", "support.mask");
  if (doc.contains("auxiliary")) {
    const auto& a = doc["auxiliary"];
    if (!a.is_array()) detail::manifest_fail("auxiliary", "expected an array of paths");
    for (const auto& p : a) {
      if (!p.is_string()) detail::manifest_fail("auxiliary", "expected an array of paths");
      m.auxiliary.push_back(p.get<std::string>());
    }
  }
  const auto& q = detail::need(doc, "query", "query");
  detail::only_keys(q, "query", {"features", "mask"});
  m.query_features = detail::need_string(q, "features", "query.features");
  if (q.contains("mask")) m.query_mask = detail::need_string(q, "mask", "query.mask");
  if (doc.contains("config")) m.config = parse_config(doc["config"], &m);
  return m;
}

inline nlohmann::json manifest_to_json(const EpisodeManifest& m) {
  nlohmann::json doc;
  doc["support"] = {{"features", m.support_features}, {"mask", m.support_mask}};
  doc["auxiliary"] = m.auxiliary;
  doc["query"] = {{"features", m.query_features}};
  if (m.query_mask) doc["query"]["mask"] = *m.query_mask;
  const auto& c = m.config;
  doc["config"] = {
      {"window", {c.window.rows, c.window.cols}},
      {"neighbors", c.neighbors},
      {"symmetrization", c.symmetrization == Symmetrization::Mean ? "mean" : "max"},
      {"tolerance", c.solver.tolerance},
      {"max_iterations", c.solver.max_iterations},
      {"label_threshold", c.label_threshold},
      {"prediction_threshold", c.prediction_threshold},
      {"mode", prediction_mode_name(c.mode)},
  };
  return doc;
}

namespace detail {

inline std::vector<double> load_vector(const std::filesystem::path& p) {
  const Tensor t = load_tensor(p);
  require(t.rank() == 1, ErrorKind::ShapeMismatch, p.string() + ": bias must be rank 1");
  return {t.data().begin(), t.data().end()};
}

inline AffineLayer load_affine(const std::filesystem::path& w, const std::filesystem::path& b) {
  AffineLayer layer{tensor_to_matrix(load_tensor(w)), load_vector(b)};
  layer.validate();
  return layer;
}

}  // namespace detail

/// Loads every file a manifest names and checks C, H, W agree.
inline Episode load_episode(const std::filesystem::path& manifest_path) {
  const EpisodeManifest m = parse_manifest(read_file(manifest_path));
  const auto base = manifest_path.parent_path();
  auto resolve = [&](const std::string& p) { return base / p; };

  Episode ep;
  ep.support = FeatureMap::from_tensor(load_tensor(resolve(m.support_features)));
  ep.support_mask = SoftMask::from_tensor(load_tensor(resolve(m.support_mask)));
  for (const auto& a : m.auxiliary) ep.auxiliary.push_back(FeatureMap::from_tensor(load_tensor(resolve(a))));
  ep.query = FeatureMap::from_tensor(load_tensor(resolve(m.query_features)));
  if (m.query_mask) ep.query_mask = SoftMask::from_tensor(load_tensor(resolve(*m.query_mask)));
  ep.config = m.config;
  if (m.similarity_params)
    ep.config.similarity_params =
        detail::load_affine(resolve(m.similarity_params->weight), resolve(m.similarity_params->bias));
  if (m.calibration_params) {
    const auto& f = *m.calibration_params;
    TwoLayerMlp mlp{detail::load_affine(resolve(f.hidden_weight), resolve(f.hidden_bias)),
                    detail::load_affine(resolve(f.output_weight), resolve(f.output_bias))};
    mlp.validate();
    ep.config.calibration_params = std::move(mlp);
  }
  validate_episode(ep);
  return ep;
}

}  // namespace poissonseg
