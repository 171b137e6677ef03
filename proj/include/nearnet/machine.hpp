#pragma once

// Machining setup: tool assemblies (holder + cutter), their sharp points and
// allowed orientations, fixturing configurations and the build platform.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "nearnet/grid.hpp"

namespace nearnet {

/// A cutter and its holder expressed in the tool frame. The lattice is
/// registered so that the first sharp point's cell center is the tool-frame
/// origin; rotations act about that origin.
struct ToolAssembly {
  std::string name;
  IndicatorGrid holder;
  IndicatorGrid cutter;
  /// Lattice indices of cutter cells that may touch a query point.
  std::vector<Index3> sharp_points;
  std::vector<Rotation> rotations;
  /// Spindle axis in the tool frame, pointing from the cutter tip toward the holder.
  Vec3 axis{0, 1, 0};

  IndicatorGrid body() const { return unite(holder, cutter); }
  double volume() const { return nearnet::volume(body()); }

  /// Tool-frame offset of a sharp point, in cells.
  Index3 sharp_offset(std::size_t k) const {
    const Vec3 p = cutter.lattice().center(sharp_points.at(k));
    const double h = cutter.lattice().spacing;
    return {std::llround(p.x / h), std::llround(p.y / h), std::llround(p.z / h)};
  }

  void validate() const {
    if (!(holder.lattice() == cutter.lattice())) throw LatticeMismatch("tool '" + name + "': holder and cutter lattices differ");
    if (!intersect(holder, cutter).empty()) throw InvalidInput("tool '" + name + "': holder and cutter overlap");
    if (cutter.empty()) throw InvalidInput("tool '" + name + "': cutter is empty");
    if (sharp_points.empty()) throw InvalidInput("tool '" + name + "': no sharp points");
    if (rotations.empty()) throw InvalidInput("tool '" + name + "': no rotations");
    for (const auto& k : sharp_points)
      if (!cutter.get_or_empty(k)) throw InvalidInput("tool '" + name + "': sharp point outside the cutter");
    for (const auto& r : rotations)
      if (!r.is_valid()) throw InvalidInput("tool '" + name + "': invalid rotation matrix");
  }
};

struct FixtureConfig {
  std::string name;
  IndicatorGrid body;
};

/// Stationary machining obstacles registered on one domain lattice, plus tools.
struct MachineSetup {
  IndicatorGrid platform;
  std::vector<FixtureConfig> fixtures;
  std::vector<ToolAssembly> tools;

  const Lattice& domain() const { return platform.lattice(); }

  void validate() const {
    if (fixtures.empty()) throw InvalidInput("machine setup needs at least one fixture configuration");
    if (tools.empty()) throw InvalidInput("machine setup needs at least one tool");
    if (platform.empty()) throw InvalidInput("platform is empty");
    for (const auto& f : fixtures)
      if (!(f.body.lattice() == platform.lattice()))
        throw LatticeMismatch("fixture '" + f.name + "' is not on the platform lattice");
    for (const auto& t : tools) {
      t.validate();
      if (std::abs(t.cutter.lattice().spacing - platform.lattice().spacing) > 1e-12 * platform.lattice().spacing)
        throw LatticeMismatch("tool '" + t.name + "' spacing differs from the domain");
    }
  }
};

/// Orientation-independent description of the machine. Fixture bodies live on
/// the world lattice (cell centers at (i + 1/2) * spacing) with the near-net
/// shape standing on the platform at height 0, centered on the vertical axis.
struct Machine {
  int platform_thickness = 2;  // cells
  std::vector<FixtureConfig> fixtures;
  std::vector<ToolAssembly> tools;
};

// ---------------------------------------------------------------------------
// Sharp points

namespace detail {

inline bool is_exposed_cutter_cell(const ToolAssembly& t, Index3 c) {
  const Lattice& l = t.cutter.lattice();
  for (int a = 0; a < 3; ++a) {
    if (l.dims[a] == 1 && a == 2) continue;  // planar tools have no z faces
    for (int s : {-1, 1}) {
      Index3 n = c;
      n[a] += s;
      if (!t.cutter.get_or_empty(n) && !t.holder.get_or_empty(n)) return true;
    }
  }
  return false;
}

inline Vec3 centroid_of(const IndicatorGrid& g) {
  Vec3 sum{};
  std::size_t n = 0;
  g.for_each_set([&](std::size_t lin) {
    sum = sum + g.lattice().center(g.lattice().cell(lin));
    ++n;
  });
  return n ? (1.0 / static_cast<double>(n)) * sum : sum;
}

}  // namespace detail

/// Up to `count` exposed cutter cells, farthest from the holder centroid
/// toward the tip (along -axis) first, then nearest the spindle axis, then by
/// lexicographic (i, j, k).
inline std::vector<Index3> default_sharp_points(const ToolAssembly& t, std::size_t count) {
  if (count < 1) throw InvalidInput("sharp point count must be >= 1");
  const Lattice& l = t.cutter.lattice();
  const Vec3 ref = t.holder.empty() ? detail::centroid_of(t.cutter) : detail::centroid_of(t.holder);
  const Vec3 tip_dir = -normalized(t.axis);

  // Keys are quantized so that float noise cannot reorder geometric ties.
  std::vector<std::tuple<std::int64_t, std::int64_t, Index3>> candidates;
  t.cutter.for_each_set([&](std::size_t lin) {
    const Index3 c = l.cell(lin);
    if (!detail::is_exposed_cutter_cell(t, c)) return;
    const Vec3 d = l.center(c) - ref;
    const double along = dot(d, tip_dir);
    const double radial = norm(d - along * tip_dir);
    candidates.emplace_back(-std::llround(along / l.spacing * 1e6), std::llround(radial / l.spacing * 1e6), c);
  });
  std::sort(candidates.begin(), candidates.end());
  std::vector<Index3> out;
  for (std::size_t i = 0; i < candidates.size() && i < count; ++i) out.push_back(std::get<2>(candidates[i]));
  return out;
}

/// Re-origin the tool lattice so the first sharp point sits at the tool-frame origin.
inline void register_at_first_sharp_point(ToolAssembly& t) {
  if (t.sharp_points.empty()) throw InvalidInput("tool '" + t.name + "': no sharp points");
  const Lattice& l = t.cutter.lattice();
  const Index3 k = t.sharp_points.front();
  const Lattice moved(l.dims, l.spacing,
                      -l.spacing * Vec3{static_cast<double>(k[0]), static_cast<double>(k[1]), static_cast<double>(k[2])});
  IndicatorGrid holder(moved), cutter(moved);
  holder.words() = t.holder.words();
  cutter.words() = t.cutter.words();
  t.holder = std::move(holder);
  t.cutter = std::move(cutter);
}

/// Either an explicit list of cutter cells or a count for default_sharp_points.
struct SharpPointSpec {
  std::size_t count = 10;
  std::vector<Index3> explicit_cells;
};

inline ToolAssembly make_tool(std::string name, IndicatorGrid holder, IndicatorGrid cutter, std::vector<Rotation> rotations,
                              const SharpPointSpec& sharp, Vec3 axis = {0, 1, 0}) {
  ToolAssembly t{std::move(name), std::move(holder), std::move(cutter), {}, std::move(rotations), normalized(axis)};
  if (!(t.holder.lattice() == t.cutter.lattice()))
    throw LatticeMismatch("tool '" + t.name + "': holder and cutter lattices differ");
  t.sharp_points = sharp.explicit_cells.empty() ? default_sharp_points(t, sharp.count) : sharp.explicit_cells;
  register_at_first_sharp_point(t);
  t.validate();
  return t;
}

/// Flat-ended cylindrical end mill along +y: cutter from y = 0 up to
/// cutter_length, holder above it. Dimensions in mm. `planar` builds the
/// 2D cross-section (a single z layer).
struct CylinderToolSpec {
  double cutter_radius = 1.0;
  double cutter_length = 4.0;
  double holder_radius = 2.0;
  double holder_length = 4.0;
  bool planar = false;
};

inline std::pair<IndicatorGrid, IndicatorGrid> cylinder_tool_grids(const CylinderToolSpec& s, double spacing) {
  if (!(s.cutter_radius > 0) || !(s.cutter_length > 0) || s.holder_radius < 0 || s.holder_length < 0)
    throw InvalidInput("cylinder tool dimensions must be positive");
  const double rmax = std::max(s.cutter_radius, s.holder_radius);
  const auto half = static_cast<std::int64_t>(std::ceil(rmax / spacing - 0.5));
  const auto n_cut = std::max<std::int64_t>(1, std::llround(s.cutter_length / spacing));
  const auto n_hold = std::llround(s.holder_length / spacing);
  const std::int64_t w = 2 * half + 1;
  const Lattice l({w, n_cut + n_hold, s.planar ? 1 : w}, spacing);
  IndicatorGrid holder(l), cutter(l);
  for (std::int64_t k = 0; k < l.dims[2]; ++k)
    for (std::int64_t j = 0; j < l.dims[1]; ++j)
      for (std::int64_t i = 0; i < l.dims[0]; ++i) {
        const double dx = static_cast<double>(i - half) * spacing;
        const double dz = s.planar ? 0.0 : static_cast<double>(k - half) * spacing;
        const double r = std::sqrt(dx * dx + dz * dz);
        const bool in_cutter = j < n_cut;
        const double radius = in_cutter ? s.cutter_radius : s.holder_radius;
        if (r <= radius + 1e-9) (in_cutter ? cutter : holder).set({i, j, k});
      }
  return {std::move(holder), std::move(cutter)};
}

inline ToolAssembly make_cylinder_tool(std::string name, const CylinderToolSpec& s, double spacing,
                                       std::vector<Rotation> rotations, const SharpPointSpec& sharp = {}) {
  auto [holder, cutter] = cylinder_tool_grids(s, spacing);
  return make_tool(std::move(name), std::move(holder), std::move(cutter), std::move(rotations), sharp, {0, 1, 0});
}

// ---------------------------------------------------------------------------
// Orientation sets

struct AxisAngle {
  Vec3 axis;
  double angle = 0.0;  // radians
};

inline std::vector<Rotation> orientation_set(std::span<const AxisAngle> list) {
  std::vector<Rotation> out;
  out.reserve(list.size());
  for (const auto& aa : list) {
    if (!(norm(aa.axis) > 0.0)) throw InvalidInput("orientation set: zero rotation axis");
    out.push_back(Rotation::axis_angle(aa.axis, aa.angle));
  }
  return out;
}

/// Planar rotations R(2*pi*i/n) about +z, i = 0..n-1.
inline std::vector<Rotation> uniform_planar_rotations(std::size_t n) {
  if (n < 1) throw InvalidInput("rotation count must be >= 1");
  std::vector<Rotation> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(Rotation::about_z(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
  return out;
}

/// Eighteen approach orientations for a tool initially along +y: eight about
/// x in 45 degree steps, six about z, and two each about (1,0,1) and (1,0,-1).
inline std::vector<AxisAngle> multiaxis18_axis_angles() {
  constexpr double pi = std::numbers::pi;
  const Vec3 x{1, 0, 0}, z{0, 0, 1}, xz{1, 0, 1}, xmz{1, 0, -1};
  return {{x, 0.0},          {x, pi},          {x, pi / 2},      {x, 3 * pi / 2},  {x, pi / 4},
          {x, 3 * pi / 4},   {x, 5 * pi / 4},  {x, 7 * pi / 4},  {z, pi / 2},      {z, 3 * pi / 2},
          {z, pi / 4},       {z, 3 * pi / 4},  {z, 5 * pi / 4},  {z, 7 * pi / 4},  {xz, pi / 2},
          {xz, 3 * pi / 2},  {xmz, pi / 2},    {xmz, 3 * pi / 2}};
}

inline std::vector<Rotation> multiaxis18_rotations() {
  const auto list = multiaxis18_axis_angles();
  return orientation_set(list);
}

}  // namespace nearnet
