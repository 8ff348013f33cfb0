#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poissonseg/episode.hpp"
#include "poissonseg/io.hpp"
#include "poissonseg/manifest.hpp"

namespace poissonseg {

enum class SynthShape { Rectangle, Disk };

/// Two-blob generator: every pixel is its class mean plus isotropic
/// Gaussian noise. Geometry is in continuous pixel coordinates, pixel
/// (y, x) being centred at (y + 0.5, x + 0.5).
struct SynthSpec {
  std::size_t channels = 8;
  std::size_t height = 16;
  std::size_t width = 16;
  std::vector<double> foreground_mean;
  std::vector<double> background_mean;
  double noise = 1.0;
  SynthShape shape = SynthShape::Disk;
  double center_row = 8.0;
  double center_col = 8.0;
  double size_rows = 8.0;  // rectangle extent; disk uses size_rows as the radius
  double size_cols = 8.0;
  double query_shift_rows = 0.0;
  double query_shift_cols = 0.0;
  std::size_t auxiliary = 2;
  std::uint64_t seed = 0;
  EpisodeConfig config{};
};

struct SynthEpisode {
  Episode episode;      // query_mask holds the generator's query geometry
  SoftMask support_truth;
  SoftMask query_truth;
};

inline SoftMask synth_geometry(const SynthSpec& s, double shift_rows = 0.0, double shift_cols = 0.0) {
  SoftMask m(s.height, s.width);
  const double cy = s.center_row + shift_rows, cx = s.center_col + shift_cols;
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      const double dy = static_cast<double>(y) + 0.5 - cy;
      const double dx = static_cast<double>(x) + 0.5 - cx;
      const bool inside = s.shape == SynthShape::Disk
                              ? dy * dy + dx * dx <= s.size_rows * s.size_rows
                              : std::abs(dy) <= s.size_rows / 2 && std::abs(dx) <= s.size_cols / 2;
      m.set(y, x, inside ? 1.0 : 0.0);
    }
  }
  return m;
}

inline void validate_synth(const SynthSpec& s) {
  detail::require(s.channels >= 1 && s.height >= 1 && s.width >= 1, ErrorKind::InvalidArgument,
                  "synth extents must be positive");
  detail::require(s.foreground_mean.size() == s.channels && s.background_mean.size() == s.channels,
                  ErrorKind::LengthMismatch, "synth means must have length C");
  detail::require(s.noise >= 0.0 && std::isfinite(s.noise), ErrorKind::InvalidArgument,
                  "synth noise must be finite and >= 0");
  detail::require(s.size_rows > 0 && s.size_cols > 0, ErrorKind::InvalidArgument, "synth shape size must be positive");
}

/// Draws support, auxiliary and query maps (in that order) from one
/// mt19937_64 stream seeded with spec.seed.
inline SynthEpisode synth_episode(const SynthSpec& spec) {
  validate_synth(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto draw = [&](const SoftMask& geometry) {
    FeatureMap f(spec.channels, spec.height, spec.width);
    for (std::size_t c = 0; c < spec.channels; ++c)
      for (std::size_t y = 0; y < spec.height; ++y)
        for (std::size_t x = 0; x < spec.width; ++x) {
          const double mu = geometry(y, x) >= 0.5 ? spec.foreground_mean[c] : spec.background_mean[c];
          const double eps = gauss(rng);
          f.at(c, y, x) = mu + spec.noise * eps;
        }
    return f;
  };

  SynthEpisode out;
  out.support_truth = synth_geometry(spec);
  out.query_truth = synth_geometry(spec, spec.query_shift_rows, spec.query_shift_cols);
  out.episode.support = draw(out.support_truth);
  out.episode.support_mask = out.support_truth;
  for (std::size_t a = 0; a < spec.auxiliary; ++a) out.episode.auxiliary.push_back(draw(out.support_truth));
  out.episode.query = draw(out.query_truth);
  out.episode.query_mask = out.query_truth;
  out.episode.config = spec.config;
  return out;
}

/// A spec whose class means sit at +separation/2 and -separation/2 along
/// the all-ones direction (so their distance is exactly `separation`).
inline SynthSpec two_blob_spec(std::size_t channels, std::size_t side, double separation, double noise,
                               std::uint64_t seed) {
  SynthSpec s;
  s.channels = channels;
  s.height = s.width = side;
  const double per_channel = separation / (2.0 * std::sqrt(static_cast<double>(channels)));
  s.foreground_mean.assign(channels, per_channel);
  s.background_mean.assign(channels, -per_channel);
  s.noise = noise;
  s.seed = seed;
  return s;
}

inline SynthSpec parse_synth_spec(const std::string& text) {
  using detail::manifest_fail;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    detail::fail(ErrorKind::ManifestError, std::string("synth spec is not valid JSON: ") + e.what());
  }
  detail::only_keys(doc, "", {"channels", "height", "width", "foreground_mean", "background_mean", "noise", "shape",
                              "center", "size", "radius", "query_shift", "auxiliary", "seed", "config"});
  SynthSpec s;
  s.channels = detail::need_count(detail::need(doc, "channels", "channels"), "channels");
  s.height = detail::need_count(detail::need(doc, "height", "height"), "height");
  s.width = detail::need_count(detail::need(doc, "width", "width"), "width");
  auto vec = [&](const char* key) {
    const auto& v = detail::need(doc, key, key);
    if (!v.is_array()) manifest_fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(detail::need_number(x, key));
    return out;
  };
  s.foreground_mean = vec("foreground_mean");
  s.background_mean = vec("background_mean");
  s.noise = detail::need_number(detail::need(doc, "noise", "noise"), "noise");
  auto pair = [&](const char* key) {
    const auto& v = doc[key];
    if (!v.is_array() || v.size() != 2) manifest_fail(key, "expected [rows, cols]");
    return std::pair{detail::need_number(v[0], key), detail::need_number(v[1], key)};
  };
  const std::string shape = doc.contains("shape") ? detail::need_string(doc, "shape", "shape") : "disk";
  if (shape == "disk") {
    s.shape = SynthShape::Disk;
    s.size_rows = s.size_cols = detail::need_number(detail::need(doc, "radius", "radius"), "radius");
    if (doc.contains("size")) manifest_fail("size", "not used by shape \"disk\"; use radius");
  } else if (shape == "rect") {
    s.shape = SynthShape::Rectangle;
    detail::need(doc, "size", "size");
    std::tie(s.size_rows, s.size_cols) = pair("size");
    if (doc.contains("radius")) manifest_fail("radius", "not used by shape \"rect\"; use size");
  } else {
    manifest_fail("shape", "expected \"disk\" or \"rect\"");
  }
  if (doc.contains("center")) {
    std::tie(s.center_row, s.center_col) = pair("center");
  } else {
    s.center_row = static_cast<double>(s.height) / 2;
    s.center_col = static_cast<double>(s.width) / 2;
  }
  if (doc.contains("query_shift")) std::tie(s.query_shift_rows, s.query_shift_cols) = pair("query_shift");
  if (doc.contains("auxiliary")) {
    const auto& a = doc["auxiliary"];
    if (!a.is_number_unsigned()) manifest_fail("auxiliary", "expected a nonnegative integer");
    s.auxiliary = a.get<std::size_t>();
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) manifest_fail("seed", "expected a nonnegative integer");
    s.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("config")) s.config = parse_config(doc["config"]);
  validate_synth(s);
  return s;
}

/// Writes the episode tensors plus a manifest.json referencing them.
inline void write_synth_episode(const SynthEpisode& se, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  EpisodeManifest m;
  m.support_features = "support.t";
  m.support_mask = "support_mask.t";
  m.query_features = "query.t";
  m.query_mask = "query_mask.t";
  m.config = se.episode.config;
  save_tensor(dir / m.support_features, se.episode.support.to_tensor());
  save_tensor(dir / m.support_mask, se.episode.support_mask.to_tensor());
  for (std::size_t a = 0; a < se.episode.auxiliary.size(); ++a) {
    m.auxiliary.push_back("aux_" + std::to_string(a) + ".t");
    save_tensor(dir / m.auxiliary.back(), se.episode.auxiliary[a].to_tensor());
  }
  save_tensor(dir / m.query_features, se.episode.query.to_tensor());
  save_tensor(dir / *m.query_mask, se.query_truth.to_tensor());
  write_file(dir / "manifest.json", manifest_to_json(m).dump(2) + "\n");
}

}  // namespace poissonseg
