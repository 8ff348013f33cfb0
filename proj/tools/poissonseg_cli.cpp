// Command-line front end: graph, propagate, episode, dice, synth.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "poissonseg/poissonseg.hpp"

namespace fs = std::filesystem;
using namespace poissonseg;

namespace {

constexpr int kModuleError = 2;

std::string number(double v) { return nlohmann::json(v).dump(); }

Matrix load_points(const fs::path& path) {
  const Tensor t = load_tensor(path);
  if (t.rank() == 2) return tensor_to_matrix(t);
  if (t.rank() == 3) return FeatureMap::from_tensor(t).pixel_matrix();
  detail::fail(ErrorKind::ShapeMismatch, path.string() + ": features must be (n,C) points or a (C,H,W) map");
}

std::vector<std::size_t> load_labels(const fs::path& path, std::size_t classes) {
  const Tensor t = load_tensor(path);
  detail::require(t.rank() == 1, ErrorKind::ShapeMismatch, path.string() + ": labels must be a rank-1 tensor");
  std::vector<std::size_t> labels;
  for (double v : t.data()) {
    detail::require(v >= 0 && v == std::floor(v) && v < static_cast<double>(classes), ErrorKind::InvalidArgument,
                    path.string() + ": labels must be class indices below --k-classes");
    labels.push_back(static_cast<std::size_t>(v));
  }
  return labels;
}

void warn_all(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_graph(const fs::path& features, std::size_t k, const std::string& sym, const fs::path& out) {
  const Matrix points = load_points(features);
  const auto graph = build_weight_graph(points, k, sym == "max" ? Symmetrization::Max : Symmetrization::Mean);
  save_tensor(out, graph_to_tensor(graph));
  std::cout << "vertices=" << graph.size() << " edges=" << graph.edge_count()
            << " connected=" << (graph.is_connected() ? "true" : "false") << "\n";
  return 0;
}

int cmd_propagate(const fs::path& graph_path, const fs::path& labels_path, std::size_t classes, double tol,
                  std::size_t tmax, std::size_t vertices, const fs::path& out) {
  const WeightedGraph graph = graph_from_tensor(load_tensor(graph_path), vertices);
  const LabelSource source = build_source(load_labels(labels_path, classes), graph.size(), classes);
  const auto result = poisson_solve_iterative(graph, source, {tmax, tol});
  warn_all(result.warnings);
  save_tensor(out, matrix_to_tensor(result.solution));
  std::cout << "iterations=" << result.iterations << " final_step=" << number(result.final_step)
            << " stop=" << stop_reason_name(result.stop) << "\n";
  return 0;
}

nlohmann::json diagnostics(const EpisodeResult& r, const EpisodeConfig& cfg) {
  nlohmann::json d;
  d["vertices"] = {{"support", r.vertices.support_count},
                   {"auxiliary", r.vertices.auxiliary_count},
                   {"query", r.vertices.query_count}};
  std::size_t fg = 0;
  for (auto l : r.vertices.labels) fg += l == kForegroundClass;
  d["support_labels"] = {{"foreground", fg}, {"background", r.vertices.labels.size() - fg}};
  d["graph"] = {{"edges", r.graph.edge_count()}, {"neighbors", cfg.neighbors}};
  d["solver"] = {{"iterations", r.propagation.iterations},
                 {"final_step", r.propagation.final_step},
                 {"stop", stop_reason_name(r.propagation.stop)},
                 {"tolerance", cfg.solver.tolerance},
                 {"max_iterations", cfg.solver.max_iterations}};
  d["mode"] = prediction_mode_name(cfg.mode);
  d["prediction_threshold"] = cfg.prediction_threshold;
  d["foreground_pixels"] = {{"poisson", r.poisson_mask.count()}, {"calibrated", r.calibrated_mask.count()}};
  d["warnings"] = r.warnings;
  d["dsc_convention"] = kDscConvention;
  if (r.dsc) d["dsc"] = {{"selected", *r.dsc}, {"poisson", *r.dsc_poisson}, {"calibrated", *r.dsc_calibrated}};
  return d;
}

int cmd_episode(const fs::path& manifest, const fs::path& out_dir, const std::string& mode_override) {
  Episode ep = load_episode(manifest);
  if (mode_override == "poisson") ep.config.mode = PredictionMode::PoissonOnly;
  if (mode_override == "calibrated") ep.config.mode = PredictionMode::Calibrated;
  const EpisodeResult r = run_episode(ep);
  warn_all(r.warnings);

  fs::create_directories(out_dir);
  save_tensor(out_dir / "confidence.t", r.confidence.to_tensor());
  save_tensor(out_dir / "calibrated.t", r.calibrated.to_tensor());
  save_tensor(out_dir / "prediction.t", r.prediction.to_tensor(), Dtype::UInt8);
  save_tensor(out_dir / "prediction_poisson.t", r.poisson_mask.to_tensor(), Dtype::UInt8);
  save_tensor(out_dir / "prediction_calibrated.t", r.calibrated_mask.to_tensor(), Dtype::UInt8);
  const auto diag = diagnostics(r, ep.config);
  write_file(out_dir / "diagnostics.json", diag.dump(2) + "\n");

  std::cout << "iterations=" << r.propagation.iterations << " final_step=" << number(r.propagation.final_step)
            << " stop=" << stop_reason_name(r.propagation.stop) << " mode=" << prediction_mode_name(ep.config.mode);
  if (r.dsc) std::cout << " dsc=" << number(*r.dsc);
  std::cout << "\n";
  return 0;
}

int cmd_dice(const fs::path& pred, const fs::path& gt) {
  const BinaryMask a = BinaryMask::from_tensor(load_tensor(pred));
  const BinaryMask b = BinaryMask::from_tensor(load_tensor(gt));
  std::cout << "dsc=" << number(dsc(a, b)) << " convention=\"" << kDscConvention << "\"\n";
  return 0;
}

int cmd_synth(const fs::path& spec_path, const fs::path& out_dir) {
  SynthSpec spec = parse_synth_spec(read_file(spec_path));
  if (const char* env = std::getenv("POISSONPROP_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    detail::require(end != env && *end == '\0', ErrorKind::InvalidArgument,
                    "POISSONPROP_SEED must be a nonnegative integer");
    spec.seed = v;
  }
  write_synth_episode(synth_episode(spec), out_dir);
  std::cout << "seed=" << spec.seed << " out=" << out_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson-learning few-shot segmentation on precomputed feature maps"};
  app.require_subcommand(1);

  std::string features, graph_out;
  std::size_t k = kDefaultNeighbors;
  std::string sym = "mean";
  auto* graph = app.add_subcommand("graph", "Build the kNN weight graph and write it as edge triplets");
  graph->add_option("--features", features, "(n,C) points or (C,H,W) feature map")->required();
  graph->add_option("--k", k, "Nearest neighbours per vertex")->check(CLI::PositiveNumber);
  graph->add_option("--symmetrize", sym, "mean or max")->check(CLI::IsMember({"mean", "max"}));
  graph->add_option("--out", graph_out)->required();

  std::string graph_in, labels, prop_out;
  std::size_t classes = 2, tmax = 1000, vertices = 0;
  double tol = 1e-6;
  auto* prop = app.add_subcommand("propagate", "Run the Poisson iteration on a serialized graph");
  prop->add_option("--graph", graph_in)->required();
  prop->add_option("--labels", labels, "Rank-1 class indices of the first n_s vertices")->required();
  prop->add_option("--k-classes", classes)->check(CLI::PositiveNumber);
  prop->add_option("--tol", tol)->check(CLI::NonNegativeNumber);
  prop->add_option("--tmax", tmax)->check(CLI::PositiveNumber);
  prop->add_option("--vertices", vertices, "Vertex count (default: largest edge index + 1)");
  prop->add_option("--out", prop_out)->required();

  std::string manifest, ep_out, mode;
  auto* episode = app.add_subcommand("episode", "Run the full pipeline on an episode manifest");
  episode->add_option("--manifest", manifest)->required();
  episode->add_option("--out-dir", ep_out)->required();
  episode->add_option("--mode", mode, "Override the prediction mode")->check(CLI::IsMember({"poisson", "calibrated"}));

  std::string pred, gt;
  auto* dice = app.add_subcommand("dice", "Dice similarity between two binary masks");
  dice->add_option("--pred", pred)->required();
  dice->add_option("--gt", gt)->required();

  std::string spec, synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic two-blob episode");
  synth->add_option("--spec", spec)->required();
  synth->add_option("--out-dir", synth_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*graph) return cmd_graph(features, k, sym, graph_out);
    if (*prop) return cmd_propagate(graph_in, labels, classes, tol, tmax, vertices, prop_out);
    if (*episode) return cmd_episode(manifest, ep_out, mode);
    if (*dice) return cmd_dice(pred, gt);
    if (*synth) return cmd_synth(spec, synth_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.class_name();
    if (!e.stage().empty()) std::cerr << " stage=" << e.stage();
    std::cerr << ": " << e.what() << "\n";
    return kModuleError;
  } catch (const std::exception& e) {
    std::cerr << "error: IoError: " << e.what() << "\n";
    return kModuleError;
  }
  return 1;
}
