#include <gtest/gtest.h>

#include <cstdlib>

#include "poissonseg/episode.hpp"
#include "poissonseg/synth.hpp"
#include "test_support.hpp"

namespace poissonseg {
namespace {

SynthEpisode default_synth(std::uint64_t seed) { return synth_episode(two_blob_spec(8, 16, 6.0, 1.0, seed)); }

TEST(PredictMaskTest, PoissonThresholdIsInclusive) {
  const auto m = predict_poisson_mask(SoftMask(3, 3, 0.5), 0.5);
  EXPECT_EQ(m.count(), 9u);
  EXPECT_EQ(predict_poisson_mask(SoftMask(3, 3, 0.0), 0.5).count(), 0u);
}

TEST(PredictMaskTest, RaisingThresholdNeverAddsForeground) {
  std::mt19937_64 rng(61);
  const SoftMask conf = testing::random_mask(8, 8, rng);
  const FeatureMap cal = testing::random_map(2, 8, 8, rng);
  for (auto mode : {PredictionMode::PoissonOnly, PredictionMode::Calibrated}) {
    BinaryMask prev = predict_mask(conf, cal, 0.05, mode);
    for (double t = 0.1; t < 1.0; t += 0.05) {
      const BinaryMask cur = predict_mask(conf, cal, t, mode);
      for (std::size_t i = 0; i < cur.data().size(); ++i) EXPECT_LE(cur.data()[i], prev.data()[i]);
      prev = cur;
    }
  }
}

TEST(PredictMaskTest, CalibratedNormalizesRange) {
  const FeatureMap cal(1, 1, 4, std::vector<double>{-0.2, 0.01, 0.11, 0.2});
  const auto m = predict_calibrated_mask(cal, 0.5);
  EXPECT_EQ(m.data()[0], 0);
  EXPECT_EQ(m.data()[1], 1);  // (0.01 + 0.2) / 0.4 = 0.525
  EXPECT_EQ(m.data()[2], 1);
  EXPECT_EQ(m.data()[3], 1);
  // A flat map falls back to the raw value.
  EXPECT_EQ(predict_calibrated_mask(FeatureMap(1, 2, 2, 0.7), 0.5).count(), 4u);
  EXPECT_EQ(predict_calibrated_mask(FeatureMap(1, 2, 2, 0.3), 0.5).count(), 0u);
}

TEST(EpisodeTest, TwoBlobQuality) {
  for (std::uint64_t seed = 100; seed < 103; ++seed) {
    const auto se = default_synth(seed);
    const auto r = run_episode(se.episode);
    ASSERT_TRUE(r.dsc.has_value());
    EXPECT_GE(*r.dsc_poisson, 0.95);
    EXPECT_GE(*r.dsc_calibrated, 0.95);
    EXPECT_EQ(r.vertices.support_count, 16u);
    EXPECT_EQ(r.vertices.auxiliary_count, 32u);
    EXPECT_EQ(r.vertices.query_count, 256u);
  }
}

TEST(EpisodeTest, EmptyAuxiliaryRuns) {
  auto se = default_synth(7);
  se.episode.auxiliary.clear();
  const auto r = run_episode(se.episode);
  EXPECT_EQ(r.vertices.auxiliary_count, 0u);
  EXPECT_EQ(r.graph.size(), 16u + 256u);
}

TEST(EpisodeTest, EmptyAuxiliaryIgnoresWouldBeAuxiliary) {
  auto a = default_synth(8);
  a.episode.auxiliary.clear();
  auto b = default_synth(9);
  b.episode.support = a.episode.support;
  b.episode.support_mask = a.episode.support_mask;
  b.episode.query = a.episode.query;
  b.episode.query_mask = a.episode.query_mask;
  b.episode.auxiliary.clear();
  const auto ra = run_episode(a.episode), rb = run_episode(b.episode);
  EXPECT_EQ(ra.propagation.solution, rb.propagation.solution);
  EXPECT_EQ(ra.calibrated, rb.calibrated);
}

TEST(EpisodeTest, SelfSegmentation) {
  // Query equal to the support image: the confidence footprint must match
  // the support mask's pooled footprint.
  for (std::uint64_t seed = 200; seed < 203; ++seed) {
    auto se = default_synth(seed);
    se.episode.query = se.episode.support;
    se.episode.query_mask = se.episode.support_mask;
    const auto r = run_episode(se.episode);
    const BinaryMask conf_fg = BinaryMask::threshold(r.confidence, 0.5);
    const BinaryMask truth = BinaryMask::threshold(r.support_mask, 0.5);
    EXPECT_GE(iou(conf_fg, truth), 0.9) << seed;
  }
}

TEST(EpisodeTest, StagesComposeToRunEpisode) {
  const auto se = default_synth(11);
  const auto& ep = se.episode;
  const auto r = run_episode(ep);

  const SoftMask support_mask = downsample_mask(ep.support_mask, {ep.query.height(), ep.query.width()});
  const VertexSet vs = build_vertex_set(ep, support_mask);
  const auto graph = build_weight_graph(vs.points, ep.config.neighbors);
  const auto prop = poisson_solve_iterative(graph, build_source(vs.labels, graph.size(), 2), ep.config.solver);
  const auto conf = extract_confidence_map(prop, vs.query_count, ep.query.height(), ep.query.width());
  const auto proto = masked_average_pool(ep.support, support_mask);
  const auto sim = similarity_map(ep.query, proto);
  const auto fused = fuse_confidence(sim, conf);
  const auto cal = spatial_consistency_calibrate(fused);

  EXPECT_EQ(vs.points, r.vertices.points);
  EXPECT_EQ(prop.solution, r.propagation.solution);
  EXPECT_EQ(conf, r.confidence);
  EXPECT_EQ(cal, r.calibrated);
  EXPECT_EQ(predict_mask(conf, cal, 0.5, PredictionMode::Calibrated), r.prediction);
}

TEST(EpisodeTest, DeterministicAcrossThreadCounts) {
  const auto se = default_synth(12);
  ::setenv("POISSONPROP_THREADS", "1", 1);
  const auto a = run_episode(se.episode);
  ::setenv("POISSONPROP_THREADS", "4", 1);
  const auto b = run_episode(se.episode);
  ::unsetenv("POISSONPROP_THREADS");
  EXPECT_EQ(a.propagation.solution, b.propagation.solution);
  EXPECT_EQ(a.calibrated, b.calibrated);
  EXPECT_EQ(a.prediction, b.prediction);
}

TEST(EpisodeTest, SingleLabeledVertexWarnsAndReturnsZero) {
  auto se = default_synth(13);
  se.episode.config.window = {16, 16};  // one support prototype
  const auto r = run_episode(se.episode);
  EXPECT_EQ(r.vertices.support_count, 1u);
  EXPECT_EQ(r.propagation.solution.max_abs(), 0.0);
  EXPECT_FALSE(r.warnings.empty());
  for (double v : r.confidence.data()) EXPECT_EQ(v, 0.5);
}

TEST(EpisodeTest, EmptySupportMaskIsDegenerate) {
  auto se = default_synth(14);
  se.episode.support_mask = SoftMask(16, 16, 0.0);
  try {
    run_episode(se.episode);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateMask);
    EXPECT_EQ(e.stage(), "prototype");
  }
}

TEST(EpisodeTest, ShapeMismatchCarriesStage) {
  auto se = default_synth(15);
  se.episode.query = FeatureMap(8, 8, 8);
  try {
    run_episode(se.episode);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
    EXPECT_EQ(e.stage(), "validate");
  }
}

TEST(EpisodeTest, HighResolutionMasksAreDownsampled) {
  auto se = default_synth(16);
  // Nearest-neighbour upsample the masks 2x; area-averaging recovers them.
  auto up = [](const SoftMask& m) {
    SoftMask out(m.height() * 2, m.width() * 2);
    for (std::size_t y = 0; y < out.height(); ++y)
      for (std::size_t x = 0; x < out.width(); ++x) out.set(y, x, m(y / 2, x / 2));
    return out;
  };
  const auto base = run_episode(se.episode);
  se.episode.support_mask = up(se.episode.support_mask);
  se.episode.query_mask = up(*se.episode.query_mask);
  const auto r = run_episode(se.episode);
  EXPECT_EQ(r.prediction, base.prediction);
  EXPECT_EQ(*r.dsc, *base.dsc);
}

}  // namespace
}  // namespace poissonseg
