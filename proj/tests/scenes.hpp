#pragma once

// Small hand-built geometries and brute-force reference computations shared by
// the unit and acceptance tests.

#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "nearnet/imf.hpp"
#include "nearnet/machine.hpp"
#include "nearnet/support.hpp"
#include "nearnet/workspace.hpp"

namespace scenes {

using namespace nearnet;

/// Lattice with cell centers at (i + 1/2) * h, the world convention.
inline Lattice world(Index3 dims, double h = 1.0) { return Lattice(dims, h, {0.5 * h, 0.5 * h, 0.5 * h}); }

inline void fill_box(IndicatorGrid& g, Index3 lo, Index3 hi, bool v = true) {
  for (auto z = lo[2]; z <= hi[2]; ++z)
    for (auto y = lo[1]; y <= hi[1]; ++y)
      for (auto x = lo[0]; x <= hi[0]; ++x) g.set({x, y, z}, v);
}

inline IndicatorGrid box_grid(const Lattice& l, Index3 lo, Index3 hi) {
  IndicatorGrid g(l);
  fill_box(g, lo, hi);
  return g;
}

inline IndicatorGrid random_grid(const Lattice& l, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(density);
  IndicatorGrid g(l);
  for (std::size_t i = 0; i < l.size(); ++i)
    if (coin(rng)) g.set(i);
  return g;
}

/// Naive popcount over cell accessors.
inline std::size_t naive_count(const IndicatorGrid& g) {
  std::size_t n = 0;
  for (std::int64_t z = 0; z < g.lattice().dims[2]; ++z)
    for (std::int64_t y = 0; y < g.lattice().dims[1]; ++y)
      for (std::int64_t x = 0; x < g.lattice().dims[0]; ++x) n += g.get({x, y, z}) ? 1 : 0;
  return n;
}

/// Tool whose cutter is one cell and whose holder is empty.
inline ToolAssembly point_tool(std::vector<Rotation> rotations) {
  const Lattice l({1, 1, 1}, 1.0);
  IndicatorGrid cutter(l);
  cutter.set(std::size_t{0});
  return make_tool("point", IndicatorGrid(l), cutter, std::move(rotations), {1, {}});
}

/// Planar rectangular tool: cutter of w x c cells at the bottom, holder of
/// w x hh cells above. Sharp points are the given cutter cells.
inline ToolAssembly planar_block_tool(std::int64_t w, std::int64_t c, std::int64_t hh, std::vector<Rotation> rotations,
                                      std::vector<Index3> sharp, double h = 1.0) {
  const Lattice l({w, c + hh, 1}, h);
  IndicatorGrid cutter(l), holder(l);
  fill_box(cutter, {0, 0, 0}, {w - 1, c - 1, 0});
  if (hh > 0) fill_box(holder, {0, c, 0}, {w - 1, c + hh - 1, 0});
  return make_tool("block", holder, cutter, std::move(rotations), {sharp.size(), sharp});
}

/// Random 3D tool with a solid cutter core plus random holder cells above.
inline ToolAssembly random_tool(std::mt19937_64& rng, std::size_t n_rot, std::size_t n_sharp) {
  std::uniform_int_distribution<int> side(2, 5);
  const std::int64_t w = side(rng), c = side(rng), hh = side(rng);
  const Lattice l({w, c + hh, w}, 1.0);
  IndicatorGrid cutter(l), holder(l);
  fill_box(cutter, {0, 0, 0}, {w - 1, c - 1, w - 1});
  std::bernoulli_distribution coin(0.6);
  for (std::int64_t z = 0; z < w; ++z)
    for (std::int64_t y = c; y < c + hh; ++y)
      for (std::int64_t x = 0; x < w; ++x)
        if (coin(rng)) holder.set({x, y, z});
  std::uniform_real_distribution<double> u(-1.0, 1.0), ang(0.0, 6.283185307179586);
  std::vector<Rotation> rots{Rotation::identity()};
  while (rots.size() < n_rot) {
    Vec3 a{u(rng), u(rng), u(rng)};
    if (norm(a) < 0.1) continue;
    rots.push_back(Rotation::axis_angle(a, ang(rng)));
  }
  return make_tool("random", holder, cutter, rots, {n_sharp, {}});
}

/// Reference field by exhaustive placement, written independently of the
/// library oracle: place every rotated body cell relative to every sharp
/// point and count obstacle hits.
inline double brute_field(const IndicatorGrid& obstacle, const ToolAssembly& tool, Index3 q) {
  double best = 1e300;
  for (const Rotation& r : tool.rotations) {
    const OrientedTool ot = orient_tool(tool, r);
    const Lattice& bl = ot.body.lattice();
    const Lattice& ol = obstacle.lattice();
    // Body lattice index -> tool-frame cell offset (tool lattices sit on whole cells).
    const Index3 body_shift{std::llround(bl.origin.x / bl.spacing), std::llround(bl.origin.y / bl.spacing),
                            std::llround(bl.origin.z / bl.spacing)};
    for (const Index3& s : ot.sharp_offsets) {
      std::int64_t hits = 0;
      for (std::int64_t z = 0; z < bl.dims[2]; ++z)
        for (std::int64_t y = 0; y < bl.dims[1]; ++y)
          for (std::int64_t x = 0; x < bl.dims[0]; ++x) {
            if (!ot.body.get({x, y, z})) continue;
            const Index3 c{q[0] + x + body_shift[0] - s[0], q[1] + y + body_shift[1] - s[1],
                           q[2] + z + body_shift[2] - s[2]};
            if (ol.contains(c) && obstacle.get(c)) ++hits;
          }
      best = std::min(best, static_cast<double>(hits) / static_cast<double>(ot.cells));
    }
  }
  return best;
}

/// T-shaped cantilever on an nx x ny planar lattice: a stem of width `stem`
/// rising from the floor and a bar of `bar_h` rows across the top.
struct TCantilever {
  IndicatorGrid part;
  std::size_t expected_support_cells = 0;
};

inline TCantilever t_cantilever(std::int64_t nx, std::int64_t ny, std::int64_t stem_lo, std::int64_t stem_hi,
                                std::int64_t bar_h) {
  TCantilever t{IndicatorGrid(world({nx, ny, 1})), 0};
  fill_box(t.part, {stem_lo, 0, 0}, {stem_hi, ny - 1, 0});
  fill_box(t.part, {0, ny - bar_h, 0}, {nx - 1, ny - 1, 0});
  // Hand count: arm footprint times the height under the arms.
  const std::int64_t arm_cells = nx - (stem_hi - stem_lo + 1);
  t.expected_support_cells = static_cast<std::size_t>(arm_cells * (ny - bar_h));
  return t;
}

/// Two support pockets on a planar domain: 60 cells in a pit open from above
/// and 40 cells in a tunnel open to the left. A 13-cell-long stick tool that
/// points down or sideways reaches exactly one pocket per rotation.
inline Workspace pockets_60_40() {
  const Lattice d = world({30, 16, 1});
  Workspace ws{IndicatorGrid(d), IndicatorGrid(d), {}};
  fill_box(ws.part, {1, 1, 0}, {12, 1, 0});
  fill_box(ws.part, {1, 1, 0}, {1, 8, 0});
  fill_box(ws.part, {12, 1, 0}, {12, 8, 0});
  fill_box(ws.support, {2, 2, 0}, {11, 7, 0});
  fill_box(ws.part, {16, 9, 0}, {24, 9, 0});
  fill_box(ws.part, {16, 15, 0}, {24, 15, 0});
  fill_box(ws.part, {24, 9, 0}, {24, 15, 0});
  fill_box(ws.support, {16, 10, 0}, {23, 14, 0});
  ws.setup.platform = box_grid(d, {0, 0, 0}, {29, 0, 0});
  ws.setup.fixtures.push_back({"table", IndicatorGrid(d)});
  ws.setup.tools.push_back(
      scenes::planar_block_tool(1, 1, 12, {Rotation::identity(), Rotation::about_z(std::numbers::pi / 2)}, {{0, 0, 0}}));
  ws.setup.tools.back().name = "stick";
  return ws;
}

}  // namespace scenes
