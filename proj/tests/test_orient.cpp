#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "nearnet/orient.hpp"
#include "scenes.hpp"

using namespace nearnet;
using scenes::fill_box;
using scenes::world;

namespace {

std::vector<OrientationRecord> random_records(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0, 1000);
  std::vector<OrientationRecord> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i].index = i;
    r[i].support_volume = u(rng);
    r[i].secluded_volume = r[i].support_volume * u(rng) / 1000.0;
  }
  return r;
}

std::vector<std::size_t> order_of(const std::vector<OrientationRecord>& r) {
  std::vector<std::size_t> out;
  for (const auto& x : r) out.push_back(x.index);
  return out;
}

/// Planar cup: floor and two walls, open at the top.
IndicatorGrid cup() {
  IndicatorGrid g(world({9, 7, 1}));
  fill_box(g, {0, 0, 0}, {8, 1, 0});
  fill_box(g, {0, 0, 0}, {1, 6, 0});
  fill_box(g, {7, 0, 0}, {8, 6, 0});
  return g;
}

Machine planar_machine() {
  Machine m;
  m.platform_thickness = 2;
  m.fixtures.push_back({"none", IndicatorGrid(world({1, 1, 1}))});
  m.tools.push_back(scenes::planar_block_tool(1, 1, 8, uniform_planar_rotations(8), {{0, 0, 0}}));
  return m;
}

}  // namespace

TEST(SampleDirections, CircleOfFour) {
  const auto d = sample_directions(4, SamplingMode::circle_uniform);
  const std::vector<Vec3> expect{{0, 1, 0}, {-1, 0, 0}, {0, -1, 0}, {1, 0, 0}};
  ASSERT_EQ(d.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(norm(d[i] - expect[i]), 0.0, 1e-12);
}

TEST(SampleDirections, CircleOfSeventyTwoStepsFiveDegrees) {
  const auto d = sample_directions(72, SamplingMode::circle_uniform);
  ASSERT_EQ(d.size(), 72u);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Vec3 a = d[i], b = d[(i + 1) % d.size()];
    EXPECT_NEAR(norm(a), 1.0, 1e-12);
    EXPECT_EQ(a.z, 0.0);
    EXPECT_NEAR(std::acos(std::clamp(dot(a, b), -1.0, 1.0)) * 180.0 / std::numbers::pi, 5.0, 1e-9);
  }
}

TEST(SampleDirections, FibonacciGapExceedsTenDegrees) {
  const auto d = sample_directions(100, SamplingMode::sphere_fibonacci);
  ASSERT_EQ(d.size(), 100u);
  double gap = 180.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_NEAR(norm(d[i]), 1.0, 1e-12);
    for (std::size_t j = i + 1; j < d.size(); ++j)
      gap = std::min(gap, std::acos(std::clamp(dot(d[i], d[j]), -1.0, 1.0)) * 180.0 / std::numbers::pi);
  }
  EXPECT_GT(gap, 10.0);
  EXPECT_THROW(sample_directions(0, SamplingMode::sphere_fibonacci), InvalidInput);
}

TEST(Xi, Examples) {
  EXPECT_NEAR(xi(772, 17.22, 1302.53, 47.61, 0.5), 0.477, 0.0005);
  EXPECT_NEAR(xi(772, 17.22, 1302.53, 47.61, 1.0), 17.22 / 47.61, 1e-15);
  EXPECT_NEAR(xi(772, 17.22, 1302.53, 47.61, 1.0), 0.36, 0.005);
  EXPECT_EQ(xi(0, 0, 10, 5, 0.0), 0.0);
  // Zero maxima zero their terms.
  EXPECT_EQ(xi(0, 0, 0, 0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(xi(5, 0, 10, 0, 0.5), 0.25);
}

TEST(Rank, WeightExtremesSortBySingleVolume) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const auto rec = random_records(rng, 20);
    auto by_s = rec, by_g = rec;
    std::stable_sort(by_s.begin(), by_s.end(),
                     [](const auto& a, const auto& b) { return a.support_volume < b.support_volume; });
    std::stable_sort(by_g.begin(), by_g.end(),
                     [](const auto& a, const auto& b) { return a.secluded_volume < b.secluded_volume; });
    EXPECT_EQ(order_of(rank_orientations(rec, 0.0, 20).ranked), order_of(by_s));
    EXPECT_EQ(order_of(rank_orientations(rec, 1.0, 20).ranked), order_of(by_g));
  }
}

TEST(Rank, XiBoundedAndNonDecreasing) {
  std::mt19937_64 rng(2);
  const auto r = rank_orientations(random_records(rng, 30), 0.3, 10);
  ASSERT_EQ(r.ranked.size(), 10u);
  for (std::size_t i = 0; i < r.ranked.size(); ++i) {
    EXPECT_GE(r.ranked[i].xi, 0.0);
    EXPECT_LE(r.ranked[i].xi, 1.0);
    if (i) {
      EXPECT_LE(r.ranked[i - 1].xi, r.ranked[i].xi);
    }
  }
  EXPECT_EQ(r.samples.size(), 30u);
}

TEST(Rank, InvariantUnderRescaling) {
  std::mt19937_64 rng(3);
  const auto rec = random_records(rng, 25);
  auto scaled = rec;
  for (auto& r : scaled) {
    r.support_volume *= 3.7;
    r.secluded_volume *= 0.02;
  }
  for (double w : {0.0, 0.25, 0.5, 0.75, 1.0})
    EXPECT_EQ(order_of(rank_orientations(rec, w, 25).ranked), order_of(rank_orientations(scaled, w, 25).ranked));
}

TEST(Rank, TiesFallBackToSecludedSupportThenIndex) {
  std::vector<OrientationRecord> rec(6);
  for (std::size_t i = 0; i < rec.size(); ++i) rec[i] = {i, {0, 0, 1}, 10.0, 2.0, 0.0};
  EXPECT_EQ(order_of(rank_orientations(rec, 0.5, 3).ranked), (std::vector<std::size_t>{0, 1, 2}));
  // Same xi at w = 0, smaller secluded volume first.
  rec[4].secluded_volume = 1.0;
  EXPECT_EQ(order_of(rank_orientations(rec, 0.0, 2).ranked), (std::vector<std::size_t>{4, 0}));
}

TEST(Optimize, RotationSymmetricPartTiesEverywhere) {
  IndicatorGrid dot(world({1, 1, 1}));
  dot.set(std::size_t{0});
  Machine m;
  m.fixtures.push_back({"none", IndicatorGrid(world({1, 1, 1}))});
  m.tools.push_back(scenes::point_tool({Rotation::identity()}));
  OptimizeConfig cfg;
  cfg.mode = SamplingMode::circle_uniform;
  cfg.samples = 12;
  cfg.top = 4;
  const OptimizeResult r = optimize(dot, m, cfg);
  for (const auto& s : r.samples) EXPECT_EQ(s.xi, r.samples.front().xi);
  EXPECT_EQ(order_of(r.ranked), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Optimize, ConfigValidation) {
  OptimizeConfig c;
  c.w_acc = 1.5;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.top = 200;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.lambda = -1;
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(EvaluateOrientation, NoOverhangsNoSupport) {
  IndicatorGrid block(world({5, 4, 3}));
  fill_box(block, {0, 0, 0}, {4, 3, 2});
  Machine m;
  m.fixtures.push_back({"none", IndicatorGrid(world({1, 1, 1}))});
  m.tools.push_back(scenes::point_tool({Rotation::identity()}));
  const OrientationRecord r = evaluate_orientation(block, m, {0, 0, 1}, {}, 1);
  EXPECT_EQ(r.support_volume, 0.0);
  EXPECT_EQ(r.secluded_volume, 0.0);
}

TEST(EvaluateOrientation, ClosedCavityIsAllSecluded) {
  // Hollow box: the roof over the cavity needs support that no tool can reach.
  IndicatorGrid box(world({8, 8, 8}));
  fill_box(box, {0, 0, 0}, {7, 7, 7});
  fill_box(box, {1, 1, 1}, {6, 6, 6}, false);
  Machine m;
  m.fixtures.push_back({"none", IndicatorGrid(world({1, 1, 1}))});
  m.tools.push_back(make_cylinder_tool("long", {0.5, 1.0, 0.5, 10.0, false}, 1.0, multiaxis18_rotations(), {3, {}}));
  OptimizeConfig cfg;
  cfg.overhang_deg = 90.0;
  const OrientationRecord r = evaluate_orientation(box, m, {0, 0, 1}, cfg, 1);
  EXPECT_DOUBLE_EQ(r.support_volume, 216.0);
  EXPECT_DOUBLE_EQ(r.secluded_volume, r.support_volume);

  // Explicit placement agrees the cavity is out of reach.
  const NearNetShape nn = assemble_near_net(box, {0, 0, 1}, 90.0);
  const Workspace ws = stage(nn, m);
  const auto cells = ws.support.set_cells();
  std::vector<Index3> q;
  for (std::size_t i = 0; i < cells.size(); i += 7) q.push_back(ws.support.lattice().cell(cells[i]));
  for (double v : imf_oracle(setup_obstacles(ws.part, ws.setup)[0], ws.setup.tools[0], q)) EXPECT_GT(v, cfg.lambda);
}

TEST(Optimize, FullyMachinableDirectionWinsAtUnitWeight) {
  OptimizeConfig cfg;
  cfg.mode = SamplingMode::circle_uniform;
  cfg.samples = 4;
  cfg.top = 4;
  cfg.w_acc = 1.0;
  cfg.overhang_deg = 90.0;
  const OptimizeResult r = optimize(cup(), planar_machine(), cfg);
  // Upright needs no support; upside down traps the cavity against the platform.
  EXPECT_EQ(r.samples[0].support_volume, 0.0);
  EXPECT_EQ(r.samples[2].support_volume, 25.0);
  EXPECT_EQ(r.samples[2].secluded_volume, 25.0);
  EXPECT_EQ(r.ranked.front().index, 0u);
  EXPECT_EQ(r.ranked.back().index, 2u);
  EXPECT_EQ(r.secluded_max, 25.0);
}

TEST(Optimize, CsvIsDeterministic) {
  OptimizeConfig cfg;
  cfg.mode = SamplingMode::circle_uniform;
  cfg.samples = 8;
  cfg.top = 3;
  std::ostringstream a, b;
  write_ranking_csv(a, optimize(cup(), planar_machine(), cfg));
  cfg.workers = 3;
  write_ranking_csv(b, optimize(cup(), planar_machine(), cfg));
  const std::string csv = a.str();
  EXPECT_EQ(csv, b.str());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "bx,by,bz,V_S_mm3,V_Gamma_mm3,xi");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
}
