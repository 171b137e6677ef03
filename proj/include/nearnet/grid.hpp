#pragma once

// Dense voxel lattices, indicator grids, scalar fields and rigid rotations.
//
// Every grid carries a Lattice: integer dimensions, a uniform spacing and the
// world position of the center of cell (0,0,0). Grids whose origins differ by
// an integer number of cells are "co-registered" and can be combined by index
// shifts alone.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nearnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two grids that must share a lattice (or a lattice phase) do not.
class LatticeMismatch : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-range user input.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double& operator[](int a) { return a == 0 ? x : (a == 1 ? y : z); }
  constexpr double operator[](int a) const { return a == 0 ? x : (a == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return s * a; }
  friend constexpr bool operator==(Vec3, Vec3) = default;
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) {
  const double n = norm(a);
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInput("cannot normalize a zero or non-finite vector");
  return (1.0 / n) * a;
}

using Index3 = std::array<std::int64_t, 3>;

inline Index3 operator+(Index3 a, Index3 b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Index3 operator-(Index3 a, Index3 b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

struct Lattice {
  Index3 dims{1, 1, 1};
  double spacing = 1.0;
  Vec3 origin{};

  Lattice() = default;
  Lattice(Index3 d, double h, Vec3 o = {}) : dims(d), spacing(h), origin(o) {
    if (d[0] < 1 || d[1] < 1 || d[2] < 1) throw InvalidInput("lattice dims must be >= 1 on every axis");
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidInput("lattice spacing must be positive and finite");
  }

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  bool is_2d() const { return dims[2] == 1; }
  double cell_volume() const { return spacing * spacing * spacing; }

  bool contains(Index3 c) const {
    return c[0] >= 0 && c[1] >= 0 && c[2] >= 0 && c[0] < dims[0] && c[1] < dims[1] && c[2] < dims[2];
  }
  std::size_t linear(Index3 c) const {
    return static_cast<std::size_t>(c[0] + dims[0] * (c[1] + dims[1] * c[2]));
  }
  Index3 cell(std::size_t lin) const {
    const auto l = static_cast<std::int64_t>(lin);
    return {l % dims[0], (l / dims[0]) % dims[1], l / (dims[0] * dims[1])};
  }
  Vec3 center(Index3 c) const {
    return {origin.x + spacing * static_cast<double>(c[0]), origin.y + spacing * static_cast<double>(c[1]),
            origin.z + spacing * static_cast<double>(c[2])};
  }
  /// World-frame centroid of the cell-center bounding box.
  Vec3 centroid() const {
    return center({0, 0, 0}) + 0.5 * spacing *
                                   Vec3{static_cast<double>(dims[0] - 1), static_cast<double>(dims[1] - 1),
                                        static_cast<double>(dims[2] - 1)};
  }

  friend bool operator==(const Lattice&, const Lattice&) = default;
};

/// Fractional part of origin/spacing per axis, in [0, 1).
inline Vec3 lattice_phase(const Lattice& l) {
  Vec3 p;
  for (int a = 0; a < 3; ++a) {
    const double f = l.origin[a] / l.spacing;
    double frac = f - std::floor(f);
    if (frac > 1.0 - 1e-9) frac = 0.0;
    p[a] = frac;
  }
  return p;
}

/// Integer cell offset taking lattice `from` indices to lattice `to` indices,
/// or LatticeMismatch when the two are not co-registered.
inline Index3 registration_offset(const Lattice& from, const Lattice& to) {
  if (std::abs(from.spacing - to.spacing) > 1e-12 * std::max(from.spacing, to.spacing))
    throw LatticeMismatch("lattice spacing mismatch");
  Index3 off{};
  for (int a = 0; a < 3; ++a) {
    const double d = (from.origin[a] - to.origin[a]) / to.spacing;
    const double r = std::round(d);
    if (std::abs(d - r) > 1e-6) throw LatticeMismatch("lattices are not co-registered (origin offset is not a whole number of cells)");
    off[a] = static_cast<std::int64_t>(r);
  }
  return off;
}

template <typename T>
class DenseField {
 public:
  using value_type = T;

  DenseField() = default;
  explicit DenseField(Lattice l, T fill = T{}) : lattice_(l), values_(l.size(), fill) {}

  const Lattice& lattice() const { return lattice_; }
  std::size_t size() const { return values_.size(); }

  T& operator[](std::size_t lin) { return values_[lin]; }
  const T& operator[](std::size_t lin) const { return values_[lin]; }
  T& at(Index3 c) { return values_[lattice_.linear(c)]; }
  const T& at(Index3 c) const { return values_[lattice_.linear(c)]; }

  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }

  friend bool operator==(const DenseField&, const DenseField&) = default;

 private:
  Lattice lattice_;
  std::vector<T> values_;
};

using ScalarField = DenseField<double>;

/// Binary voxel field stored as a packed bit array (x fastest, then y, then z).
class IndicatorGrid {
 public:
  IndicatorGrid() = default;
  explicit IndicatorGrid(Lattice l) : lattice_(l), words_((l.size() + 63) / 64, 0) {}

  const Lattice& lattice() const { return lattice_; }
  std::size_t size() const { return lattice_.size(); }

  bool get(std::size_t lin) const { return (words_[lin >> 6] >> (lin & 63)) & 1u; }
  bool get(Index3 c) const { return get(lattice_.linear(c)); }
  /// Out-of-lattice cells read as empty.
  bool get_or_empty(Index3 c) const { return lattice_.contains(c) && get(c); }

  void set(std::size_t lin, bool v = true) {
    const std::uint64_t bit = std::uint64_t{1} << (lin & 63);
    if (v)
      words_[lin >> 6] |= bit;
    else
      words_[lin >> 6] &= ~bit;
  }
  void set(Index3 c, bool v = true) { set(lattice_.linear(c), v); }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }
  bool empty() const {
    return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
  }

  template <typename Fn>
  void for_each_set(Fn&& fn) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits) {
        const int b = std::countr_zero(bits);
        fn(w * 64 + static_cast<std::size_t>(b));
        bits &= bits - 1;
      }
    }
  }

  std::vector<std::size_t> set_cells() const {
    std::vector<std::size_t> out;
    out.reserve(count());
    for_each_set([&](std::size_t lin) { out.push_back(lin); });
    return out;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }
  std::vector<std::uint64_t>& words() { return words_; }

  friend bool operator==(const IndicatorGrid&, const IndicatorGrid&) = default;

 private:
  Lattice lattice_;
  std::vector<std::uint64_t> words_;
};

/// Proper rotation matrix, row-major.
struct Rotation {
  std::array<std::array<double, 3>, 3> m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

  static Rotation identity() { return {}; }

  /// Right-handed rotation by `angle` radians about `axis` (Rodrigues).
  static Rotation axis_angle(Vec3 axis, double angle) {
    const double n = norm(axis);
    if (!(n > 0.0)) throw InvalidInput("rotation axis must be non-zero");
    const Vec3 u = (1.0 / n) * axis;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double t = 1.0 - c;
    Rotation r;
    r.m = {{{t * u.x * u.x + c, t * u.x * u.y - s * u.z, t * u.x * u.z + s * u.y},
            {t * u.x * u.y + s * u.z, t * u.y * u.y + c, t * u.y * u.z - s * u.x},
            {t * u.x * u.z - s * u.y, t * u.y * u.z + s * u.x, t * u.z * u.z + c}}};
    return r;
  }

  static Rotation about_z(double angle) { return axis_angle({0, 0, 1}, angle); }

  /// Minimal-angle rotation taking unit vector `from` onto unit vector `to`.
  /// The antipodal case rotates by pi about `antipodal_axis`.
  static Rotation aligning(Vec3 from, Vec3 to, Vec3 antipodal_axis) {
    from = normalized(from);
    to = normalized(to);
    const Vec3 c = cross(from, to);
    const double s = norm(c);
    const double d = dot(from, to);
    if (s < 1e-12) {
      if (d > 0.0) return identity();
      return axis_angle(antipodal_axis, std::acos(-1.0));
    }
    return axis_angle(c, std::atan2(s, d));
  }

  Vec3 apply(Vec3 v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }

  Rotation transposed() const {
    Rotation r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
    return r;
  }

  friend Rotation operator*(const Rotation& a, const Rotation& b) {
    Rotation r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += a.m[i][k] * b.m[k][j];
        r.m[i][j] = s;
      }
    return r;
  }

  double determinant() const {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }

  /// RᵀR = I and det R = +1 within `tol`.
  bool is_valid(double tol = 1e-9) const {
    const Rotation p = transposed() * *this;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (std::abs(p.m[i][j] - (i == j ? 1.0 : 0.0)) > tol) return false;
    return std::abs(determinant() - 1.0) <= tol;
  }
};

// ---------------------------------------------------------------------------
// Operations

inline double volume(const IndicatorGrid& g) {
  return static_cast<double>(g.count()) * g.lattice().cell_volume();
}

/// Nearest-neighbour resampling of `g` under rotation `r` about world point
/// `pivot`. The output lattice keeps the input's cell phase and is enlarged to
/// bound the rotated cell-region box.
inline IndicatorGrid rotate_about(const IndicatorGrid& g, const Rotation& r, Vec3 pivot) {
  if (!r.is_valid(1e-6)) throw InvalidInput("rotate: matrix is not a proper rotation");
  const Lattice& in = g.lattice();
  const double h = in.spacing;

  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi = -lo;
  for (int corner = 0; corner < 8; ++corner) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) {
      const bool upper = (corner >> a) & 1;
      p[a] = in.origin[a] + (upper ? h * (static_cast<double>(in.dims[a]) - 0.5) : -0.5 * h);
    }
    const Vec3 q = r.apply(p - pivot) + pivot;
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], q[a]);
      hi[a] = std::max(hi[a], q[a]);
    }
  }
  Index3 first{};
  Index3 dims{};
  for (int a = 0; a < 3; ++a) {
    const auto i0 = static_cast<std::int64_t>(std::ceil((lo[a] - in.origin[a]) / h - 1e-9));
    const auto i1 = static_cast<std::int64_t>(std::floor((hi[a] - in.origin[a]) / h + 1e-9));
    first[a] = i0;
    dims[a] = std::max<std::int64_t>(1, i1 - i0 + 1);
  }
  const Lattice out_lattice(dims, h, in.center(first));
  IndicatorGrid out(out_lattice);
  if (g.empty()) return out;

  const Rotation inv = r.transposed();
  // Back-mapped position in input index units: q = inv*(p - pivot) + pivot.
  const Vec3 step_x = (1.0 / h) * inv.apply({h, 0, 0});
  for (std::int64_t k = 0; k < dims[2]; ++k) {
    for (std::int64_t j = 0; j < dims[1]; ++j) {
      const Vec3 p0 = out_lattice.center({0, j, k});
      Vec3 q = (1.0 / h) * (inv.apply(p0 - pivot) + pivot - in.origin);
      for (std::int64_t i = 0; i < dims[0]; ++i, q = q + step_x) {
        const Index3 c{static_cast<std::int64_t>(std::floor(q.x + 0.5)), static_cast<std::int64_t>(std::floor(q.y + 0.5)),
                       static_cast<std::int64_t>(std::floor(q.z + 0.5))};
        if (in.contains(c) && g.get(c)) out.set(out_lattice.linear({i, j, k}));
      }
    }
  }
  return out;
}

/// Rotation about the centroid of the grid's bounding box.
inline IndicatorGrid rotate(const IndicatorGrid& g, const Rotation& r) {
  return rotate_about(g, r, g.lattice().centroid());
}

/// Point reflection through the world origin (the registration origin of
/// tool-frame grids): the cell at world offset v is set iff -v was set.
inline IndicatorGrid reflect(const IndicatorGrid& g) {
  const Lattice& in = g.lattice();
  const Index3 last{in.dims[0] - 1, in.dims[1] - 1, in.dims[2] - 1};
  const Lattice out_lattice(in.dims, in.spacing, -in.center(last));
  IndicatorGrid out(out_lattice);
  g.for_each_set([&](std::size_t lin) { out.set(out_lattice.linear(last - in.cell(lin))); });
  return out;
}

enum class BoolOp { unite, intersect, subtract };

inline IndicatorGrid boolean(const IndicatorGrid& a, const IndicatorGrid& b, BoolOp op) {
  if (!(a.lattice() == b.lattice()))
    throw LatticeMismatch("boolean: operands must share a lattice; resample onto a common lattice first");
  IndicatorGrid out = a;
  auto& w = out.words();
  const auto& v = b.words();
  for (std::size_t i = 0; i < w.size(); ++i) {
    switch (op) {
      case BoolOp::unite: w[i] |= v[i]; break;
      case BoolOp::intersect: w[i] &= v[i]; break;
      case BoolOp::subtract: w[i] &= ~v[i]; break;
    }
  }
  return out;
}

inline IndicatorGrid unite(const IndicatorGrid& a, const IndicatorGrid& b) { return boolean(a, b, BoolOp::unite); }
inline IndicatorGrid intersect(const IndicatorGrid& a, const IndicatorGrid& b) {
  return boolean(a, b, BoolOp::intersect);
}
inline IndicatorGrid subtract(const IndicatorGrid& a, const IndicatorGrid& b) {
  return boolean(a, b, BoolOp::subtract);
}

enum class ThresholdMode { greater, leq };

inline IndicatorGrid threshold(const ScalarField& f, double lambda, ThresholdMode mode) {
  if (!(lambda >= 0.0)) throw InvalidInput("threshold: lambda must be >= 0");
  IndicatorGrid out(f.lattice());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const bool above = f[i] > lambda;
    if (above == (mode == ThresholdMode::greater)) out.set(i);
  }
  return out;
}

/// Inclusive index range of set cells, or nullopt for an empty grid.
inline std::optional<std::pair<Index3, Index3>> bounding_box(const IndicatorGrid& g) {
  if (g.empty()) return std::nullopt;
  const auto big = std::numeric_limits<std::int64_t>::max();
  Index3 lo{big, big, big};
  Index3 hi{-1, -1, -1};
  g.for_each_set([&](std::size_t lin) {
    const Index3 c = g.lattice().cell(lin);
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  });
  return std::make_pair(lo, hi);
}

/// Copy `g` onto a co-registered `target` lattice; cells outside it are dropped.
inline IndicatorGrid embed(const IndicatorGrid& g, const Lattice& target) {
  const Index3 off = registration_offset(g.lattice(), target);
  IndicatorGrid out(target);
  g.for_each_set([&](std::size_t lin) {
    const Index3 c = g.lattice().cell(lin) + off;
    if (target.contains(c)) out.set(c);
  });
  return out;
}

/// Sub-lattice [lo, hi] (inclusive) of `l`.
inline Lattice sub_lattice(const Lattice& l, Index3 lo, Index3 hi) {
  return Lattice({hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1}, l.spacing, l.center(lo));
}

/// Shrink to the tight bounding box of set cells (a single empty cell when empty).
inline IndicatorGrid crop(const IndicatorGrid& g) {
  const auto bb = bounding_box(g);
  if (!bb) return IndicatorGrid(Lattice({1, 1, 1}, g.lattice().spacing, g.lattice().origin));
  return embed(g, sub_lattice(g.lattice(), bb->first, bb->second));
}

/// Smallest lattice with the phase and spacing of `a` that covers both.
inline Lattice bounding_lattice(const Lattice& a, const Lattice& b) {
  const Index3 off = registration_offset(b, a);
  Index3 lo{};
  Index3 hi{};
  for (int ax = 0; ax < 3; ++ax) {
    lo[ax] = std::min<std::int64_t>(0, off[ax]);
    hi[ax] = std::max<std::int64_t>(a.dims[ax] - 1, off[ax] + b.dims[ax] - 1);
  }
  return sub_lattice(a, lo, hi);
}

}  // namespace nearnet
