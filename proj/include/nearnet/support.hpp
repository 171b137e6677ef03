#pragma once

// Sacrificial support generation and near-net assembly.

#include <cmath>
#include <numbers>

#include "nearnet/grid.hpp"

namespace nearnet {

/// Build axis of a lattice: +z for volumes, +y for planar (nz = 1) grids.
inline int vertical_axis(const Lattice& l) { return l.is_2d() ? 1 : 2; }

inline Vec3 vertical_direction(const Lattice& l) { return l.is_2d() ? Vec3{0, 1, 0} : Vec3{0, 0, 1}; }

/// Horizontal self-support radius in cells for overhang angle `alpha_deg`:
/// floor(tan(90 deg - alpha)), so 90 gives 0 and 45 gives 1.
inline int self_support_radius(double alpha_deg) {
  if (!(alpha_deg > 0.0) || alpha_deg > 90.0) throw InvalidInput("overhang angle must be in (0, 90] degrees");
  const double t = std::tan((90.0 - alpha_deg) * std::numbers::pi / 180.0);
  return static_cast<int>(std::floor(t + 1e-9));
}

/// Columnar supports under every unsupported part cell. Layers are swept from
/// the top down; a part cell is supported when the layer below holds material
/// (part or support placed so far) within the self-support radius. Layer 0
/// rests on the platform. Columns run straight down through void until they
/// meet part material or layer 0.
inline IndicatorGrid generate_support(const IndicatorGrid& part, double alpha_deg) {
  const int r = self_support_radius(alpha_deg);
  const Lattice& l = part.lattice();
  const int v = vertical_axis(l);
  const int u = 0;
  const int w = v == 2 ? 1 : 2;

  IndicatorGrid support(l);
  IndicatorGrid material = part;
  std::vector<Index3> seeds;

  for (std::int64_t z = l.dims[v] - 1; z >= 1; --z) {
    seeds.clear();
    for (std::int64_t b = 0; b < l.dims[w]; ++b) {
      for (std::int64_t a = 0; a < l.dims[u]; ++a) {
        Index3 c{};
        c[u] = a;
        c[w] = b;
        c[v] = z;
        if (!part.get(c)) continue;
        bool supported = false;
        for (std::int64_t db = -r; db <= r && !supported; ++db) {
          for (std::int64_t da = -r; da <= r && !supported; ++da) {
            Index3 n = c;
            n[u] += da;
            n[w] += db;
            n[v] -= 1;
            supported = material.get_or_empty(n);
          }
        }
        if (!supported) seeds.push_back(c);
      }
    }
    for (Index3 c : seeds) {
      for (Index3 d = c; d[v] >= 1;) {
        --d[v];
        if (part.get(d)) break;
        support.set(d);
        material.set(d);
      }
    }
  }
  return support;
}

struct NearNetShape {
  IndicatorGrid part;     // rotated so the build direction is vertical
  IndicatorGrid support;  // same lattice as part, disjoint from it
  Vec3 build_direction;
  Rotation rotation;      // applied to the input part

  IndicatorGrid body() const { return unite(part, support); }
};

/// Minimal-angle rotation taking `b` onto the build axis (+z, or +y for planar
/// parts); antipodal directions turn about +x (about +z when planar).
inline Rotation build_alignment(Vec3 b, bool planar) {
  if (planar) {
    if (std::abs(b.z) > 1e-9) throw InvalidInput("planar build directions must lie in the xy plane");
    return Rotation::aligning(b, {0, 1, 0}, {0, 0, 1});
  }
  return Rotation::aligning(b, {0, 0, 1}, {1, 0, 0});
}

/// Place a grid on the world lattice: bottom face at height 0, bounding box
/// centered on the vertical axis, cell centers at (i + 1/2) * spacing.
inline Lattice world_anchor(const Lattice& l) {
  const int v = vertical_axis(l);
  Vec3 origin;
  for (int a = 0; a < 3; ++a) {
    const double first = (a == v || (l.is_2d() && a == 2)) ? 0.0 : -std::floor(static_cast<double>(l.dims[a]) / 2.0);
    origin[a] = (first + 0.5) * l.spacing;
  }
  return Lattice(l.dims, l.spacing, origin);
}

inline IndicatorGrid reanchor(const IndicatorGrid& g, const Lattice& target) {
  IndicatorGrid out(target);
  out.words() = g.words();
  return out;
}

/// Rotate the part so `b` becomes the build axis, generate supports and anchor
/// the result on the world lattice. `roll` spins the part about the build axis
/// after alignment (radians).
inline NearNetShape assemble_near_net(const IndicatorGrid& part, Vec3 b, double alpha_deg, double roll = 0.0) {
  if (std::abs(norm(b) - 1.0) > 1e-6) throw InvalidInput("build direction must be a unit vector");
  const bool planar = part.lattice().is_2d();
  Rotation r = build_alignment(b, planar);
  if (roll != 0.0) r = Rotation::axis_angle(vertical_direction(part.lattice()), roll) * r;

  const IndicatorGrid rotated = crop(rotate(part, r));
  const Lattice anchored = world_anchor(rotated.lattice());
  IndicatorGrid placed = reanchor(rotated, anchored);
  IndicatorGrid support = generate_support(placed, alpha_deg);
  return {std::move(placed), std::move(support), b, r};
}

}  // namespace nearnet
