#include <gtest/gtest.h>

#include <array>
#include <map>
#include <random>

#include "nearnet/correlate.hpp"
#include "scenes.hpp"

using namespace nearnet;
using scenes::world;

namespace {

/// Overlap of `probe` with `obstacle` when the probe lattice is shifted by
/// whole cells `t`, counted with four nested loops.
std::int64_t overlap_at(const IndicatorGrid& obstacle, const IndicatorGrid& probe, Index3 t) {
  std::int64_t n = 0;
  const Lattice& pl = probe.lattice();
  const Index3 off = registration_offset(pl, obstacle.lattice());
  for (std::int64_t z = 0; z < pl.dims[2]; ++z)
    for (std::int64_t y = 0; y < pl.dims[1]; ++y)
      for (std::int64_t x = 0; x < pl.dims[0]; ++x)
        if (probe.get({x, y, z}) && obstacle.get_or_empty(Index3{x, y, z} + off + t)) ++n;
  return n;
}

}  // namespace

TEST(Correlate, SingleCellProbeReproducesObstacle) {
  std::mt19937_64 rng(1);
  const auto o = scenes::random_grid(world({6, 5, 4}, 0.5), 0.4, rng);
  IndicatorGrid probe(Lattice({1, 1, 1}, 0.5));
  probe.set(std::size_t{0});
  const ScalarField c = correlate(o, probe);
  // The correlation value at world point t is the overlap with the probe
  // origin at t, i.e. the obstacle cell centered at t.
  for (std::size_t i = 0; i < o.size(); ++i) {
    const Vec3 p = o.lattice().center(o.lattice().cell(i));
    EXPECT_DOUBLE_EQ(value_at_translation(c, p), o.get(i) ? 0.125 : 0.0);
  }
}

TEST(Correlate, DisjointPlacementIsZero) {
  const auto o = scenes::box_grid(world({4, 4, 1}), {0, 0, 0}, {1, 1, 0});
  const auto p = scenes::box_grid(Lattice({2, 2, 1}, 1.0), {0, 0, 0}, {1, 1, 0});
  const ScalarField c = correlate(o, p);
  // Probe origin at the cell (3, 3) center: covers cells (3..4, 3..4), disjoint.
  EXPECT_EQ(value_at_translation(c, {3.5, 3.5, 0.5}), 0.0);
}

TEST(Correlate, LShapeWithSquareProbeMatchesNestedLoops) {
  IndicatorGrid o(world({4, 4, 1}));
  scenes::fill_box(o, {0, 0, 0}, {0, 3, 0});
  scenes::fill_box(o, {0, 0, 0}, {3, 0, 0});
  const auto p = scenes::box_grid(Lattice({2, 2, 1}, 1.0, {0.5, 0.5, 0.5}), {0, 0, 0}, {1, 1, 0});
  const CountField c = correlate_counts(o, p);
  const Lattice& cl = c.lattice();
  EXPECT_EQ(cl.dims, (Index3{5, 5, 1}));
  for (std::size_t i = 0; i < cl.size(); ++i) {
    const Index3 m = cl.cell(i);
    const Index3 t{m[0] - 1, m[1] - 1, 0};
    EXPECT_EQ(c[i], overlap_at(o, p, t)) << "offset " << t[0] << "," << t[1];
  }
}

TEST(Correlate, AgreesWithDirectSummation) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> d(1, 16);
  for (int trial = 0; trial < 10; ++trial) {
    const auto o = scenes::random_grid(world({d(rng), d(rng), d(rng)}), 0.3, rng);
    const auto p = scenes::random_grid(Lattice({d(rng) / 2 + 1, d(rng) / 2 + 1, d(rng) / 2 + 1}, 1.0), 0.5, rng);
    if (p.empty()) continue;
    EXPECT_EQ(correlate(o, p), correlate_direct(o, p));
    Correlator k(o, p.lattice().dims);
    const ScalarField raw = k.raw_counts(p);
    const CountField direct = correlate_counts_direct(o, p);
    for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_LT(std::abs(raw[i] - static_cast<double>(direct[i])), 1e-6);
  }
}

TEST(Correlate, SharedCellAndAutocorrelationPeak) {
  IndicatorGrid a(Lattice({1, 1, 1}, 2.0));
  a.set(std::size_t{0});
  EXPECT_DOUBLE_EQ(correlate_direct(a, a)[0], 8.0);

  std::mt19937_64 rng(8);
  const auto g = scenes::random_grid(Lattice({5, 4, 3}, 1.0), 0.5, rng);
  // Translated copy: same cells, lattice moved by (2, -1, 3).
  IndicatorGrid moved(Lattice(g.lattice().dims, 1.0, {2, -1, 3}));
  moved.words() = g.words();
  const ScalarField c = correlate(moved, g);
  double best = 0;
  for (double v : c.values()) best = std::max(best, v);
  EXPECT_DOUBLE_EQ(best, volume(g));
  EXPECT_DOUBLE_EQ(value_at_translation(c, {2, -1, 3}), volume(g));
}

TEST(Correlate, BoundsAndSymmetry) {
  std::mt19937_64 rng(13);
  const auto a = scenes::random_grid(Lattice({6, 5, 4}, 1.0), 0.4, rng);
  const auto b = scenes::random_grid(Lattice({3, 4, 2}, 1.0, {1, 2, -1}), 0.6, rng);
  const ScalarField ab = correlate(a, b);
  const ScalarField ba = correlate(b, a);
  const double cap = std::min(volume(a), volume(b));
  for (std::size_t i = 0; i < ab.size(); ++i) {
    EXPECT_GE(ab[i], 0.0);
    EXPECT_LE(ab[i], cap);
    const Vec3 t = ab.lattice().center(ab.lattice().cell(i));
    EXPECT_DOUBLE_EQ(ab[i], value_at_translation(ba, -t));
  }
}

TEST(Correlate, ConvolutionIsCorrelationWithReflectedKernel) {
  std::mt19937_64 rng(17);
  const auto a = scenes::random_grid(Lattice({5, 5, 5}, 1.0), 0.4, rng);
  const auto k = scenes::random_grid(Lattice({3, 2, 2}, 1.0), 0.7, rng);
  const ScalarField c = convolve(a, k);
  // (a * k)(t) = number of pairs (x in a, y in k) with x + y = t.
  std::map<std::array<long, 3>, double> pairs;
  a.for_each_set([&](std::size_t i) {
    k.for_each_set([&](std::size_t j) {
      const Vec3 s = a.lattice().center(a.lattice().cell(i)) + k.lattice().center(k.lattice().cell(j));
      pairs[{std::lround(s.x), std::lround(s.y), std::lround(s.z)}] += 1.0;
    });
  });
  double total = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3 t = c.lattice().center(c.lattice().cell(i));
    const auto it = pairs.find({std::lround(t.x), std::lround(t.y), std::lround(t.z)});
    EXPECT_DOUBLE_EQ(c[i], it == pairs.end() ? 0.0 : it->second);
    total += c[i];
  }
  EXPECT_DOUBLE_EQ(total, static_cast<double>(a.count() * k.count()));
}

TEST(Correlate, Errors) {
  const IndicatorGrid o(world({3, 3, 3}));
  EXPECT_THROW(correlate(o, IndicatorGrid(Lattice({2, 2, 2}, 1.0))), InvalidInput);
  IndicatorGrid p(Lattice({1, 1, 1}, 2.0));
  p.set(std::size_t{0});
  EXPECT_THROW(correlate(o, p), LatticeMismatch);
  // Empty obstacle correlates to zero.
  IndicatorGrid q(Lattice({2, 2, 2}, 1.0));
  q.set(std::size_t{0});
  const ScalarField zero = correlate(o, q);
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);
}
