#pragma once

// STL ingestion, center-sampled voxelization and volume serialization.

#include <algorithm>
#include <array>
#include <cctype>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nearnet/grid.hpp"
#include "nearnet/parallel.hpp"

namespace nearnet {

/// Malformed file contents; `offset` is the byte position of the problem.
class ParseError : public InvalidInput {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : InvalidInput(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct Triangle {
  std::array<Vec3, 3> v;
};

struct Mesh {
  std::vector<Triangle> triangles;

  std::pair<Vec3, Vec3> bounds() const {
    Vec3 lo{HUGE_VAL, HUGE_VAL, HUGE_VAL}, hi{-HUGE_VAL, -HUGE_VAL, -HUGE_VAL};
    for (const auto& t : triangles)
      for (const auto& p : t.v)
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], p[a]);
          hi[a] = std::max(hi[a], p[a]);
        }
    return {lo, hi};
  }
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidInput("write failed for '" + path + "'");
}

template <typename T>
T load_le(const char* p) {
  std::array<unsigned char, sizeof(T)> b;
  std::memcpy(b.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

template <typename T>
void store_le(std::string& out, T v) {
  std::array<char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  out.append(b.data(), b.size());
}

class Tokenizer {
 public:
  explicit Tokenizer(const std::string& s) : s_(s) {}

  bool next(std::string& tok, std::size_t& at) {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ >= s_.size()) return false;
    at = pos_;
    const std::size_t b = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    tok.assign(s_, b, pos_ - b);
    return true;
  }
  void skip_line() {
    while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

inline double parse_number(const std::string& tok, std::size_t at) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || end != tok.c_str() + tok.size()) throw ParseError("expected a number, got '" + tok + "'", at);
  return v;
}

inline Mesh parse_ascii_stl(const std::string& s) {
  Tokenizer tz(s);
  std::string tok;
  std::size_t at = 0;
  auto expect = [&](const char* word) {
    if (!tz.next(tok, at)) throw ParseError(std::string("unexpected end of file, expected '") + word + "'", s.size());
    if (tok != word) throw ParseError(std::string("expected '") + word + "', got '" + tok + "'", at);
  };
  auto number = [&] {
    if (!tz.next(tok, at)) throw ParseError("unexpected end of file, expected a number", s.size());
    return parse_number(tok, at);
  };

  expect("solid");
  tz.skip_line();
  Mesh m;
  for (;;) {
    if (!tz.next(tok, at)) throw ParseError("unexpected end of file, expected 'facet' or 'endsolid'", s.size());
    if (tok == "endsolid") break;
    if (tok != "facet") throw ParseError("expected 'facet', got '" + tok + "'", at);
    expect("normal");
    for (int i = 0; i < 3; ++i) (void)number();
    expect("outer");
    expect("loop");
    Triangle t;
    for (auto& p : t.v) {
      expect("vertex");
      p = {number(), number(), number()};
    }
    expect("endloop");
    expect("endfacet");
    m.triangles.push_back(t);
  }
  return m;
}

inline Mesh parse_binary_stl(const std::string& s) {
  const auto n = load_le<std::uint32_t>(s.data() + 80);
  Mesh m;
  m.triangles.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const char* rec = s.data() + 84 + 50 * static_cast<std::size_t>(i);
    Triangle t;
    for (int v = 0; v < 3; ++v)
      for (int a = 0; a < 3; ++a) t.v[v][a] = load_le<float>(rec + 12 + 12 * v + 4 * a);
    m.triangles.push_back(t);
  }
  return m;
}

}  // namespace detail

/// Binary STL is recognized by its exact size (84 + 50 * triangle count);
/// anything else must be ASCII starting with "solid".
inline Mesh parse_stl(const std::string& bytes) {
  Mesh m;
  bool binary = false;
  if (bytes.size() >= 84) {
    const auto n = detail::load_le<std::uint32_t>(bytes.data() + 80);
    binary = bytes.size() == 84 + 50 * static_cast<std::uint64_t>(n);
  }
  if (binary) {
    m = detail::parse_binary_stl(bytes);
  } else {
    if (bytes.size() >= 84 && bytes.compare(0, 5, "solid") != 0)
      throw ParseError("binary STL size does not match its triangle count", 80);
    m = detail::parse_ascii_stl(bytes);
  }
  if (m.triangles.empty()) throw InvalidInput("STL contains no triangles");
  return m;
}

inline Mesh load_mesh(const std::string& path) {
  try {
    return parse_stl(detail::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError("'" + path + "': " + e.what(), e.offset());
  }
}

inline void write_stl_ascii(std::ostream& os, const Mesh& m) {
  char buf[128];
  os << "solid nearnet\n";
  for (const auto& t : m.triangles) {
    Vec3 n = cross(t.v[1] - t.v[0], t.v[2] - t.v[0]);
    if (norm(n) > 0) n = normalized(n);
    std::snprintf(buf, sizeof buf, "facet normal %.9g %.9g %.9g\n  outer loop\n", n.x, n.y, n.z);
    os << buf;
    for (const auto& p : t.v) {
      std::snprintf(buf, sizeof buf, "    vertex %.9g %.9g %.9g\n", p.x, p.y, p.z);
      os << buf;
    }
    os << "  endloop\nendfacet\n";
  }
  os << "endsolid nearnet\n";
}

inline std::string stl_binary_bytes(const Mesh& m) {
  std::string out(80, '\0');
  detail::store_le(out, static_cast<std::uint32_t>(m.triangles.size()));
  for (const auto& t : m.triangles) {
    const Vec3 n = cross(t.v[1] - t.v[0], t.v[2] - t.v[0]);
    const double l = norm(n);
    for (int a = 0; a < 3; ++a) detail::store_le(out, static_cast<float>(l > 0 ? n[a] / l : 0.0));
    for (const auto& p : t.v)
      for (int a = 0; a < 3; ++a) detail::store_le(out, static_cast<float>(p[a]));
    detail::store_le(out, std::uint16_t{0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Voxelization

namespace detail {

/// Every undirected edge used by an even number of triangles.
inline bool is_closed(const Mesh& m) {
  using Key = std::array<double, 3>;
  std::map<std::pair<Key, Key>, int> edges;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      Key a{t.v[e].x, t.v[e].y, t.v[e].z};
      Key b{t.v[(e + 1) % 3].x, t.v[(e + 1) % 3].y, t.v[(e + 1) % 3].z};
      if (b < a) std::swap(a, b);
      ++edges[{a, b}];
    }
  return std::all_of(edges.begin(), edges.end(), [](const auto& e) { return e.second % 2 == 0; });
}

/// x coordinates where the +x ray through (y, z) crosses the triangles.
/// Returns false when the ray grazes an edge or vertex.
inline bool ray_hits(const Mesh& m, const std::vector<std::uint32_t>& candidates, double y, double z,
                     std::vector<double>& xs) {
  constexpr double eps = 1e-12;
  xs.clear();
  for (auto ti : candidates) {
    const auto& t = m.triangles[ti];
    const double y0 = t.v[0].y, z0 = t.v[0].z, y1 = t.v[1].y, z1 = t.v[1].z, y2 = t.v[2].y, z2 = t.v[2].z;
    const double area = (y1 - y0) * (z2 - z0) - (y2 - y0) * (z1 - z0);
    if (area == 0.0) continue;  // parallel to the ray
    const double w0 = ((y1 - y) * (z2 - z) - (y2 - y) * (z1 - z)) / area;
    const double w1 = ((y2 - y) * (z0 - z) - (y0 - y) * (z2 - z)) / area;
    const double w2 = 1.0 - w0 - w1;
    const double lo = std::min({w0, w1, w2});
    if (lo < -eps) continue;
    if (lo <= eps) return false;
    xs.push_back(w0 * t.v[0].x + w1 * t.v[1].x + w2 * t.v[2].x);
  }
  std::sort(xs.begin(), xs.end());
  return true;
}

}  // namespace detail

/// Cells whose centers lie inside the mesh, by +x ray parity. Cell centers sit
/// at (i + 1/2) * spacing in world coordinates. Rays that graze a triangle edge
/// are nudged by a small deterministic offset and recast.
inline IndicatorGrid voxelize(const Mesh& mesh, double spacing, std::vector<std::string>* warnings = nullptr,
                              unsigned workers = 0) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InvalidInput("spacing must be positive");
  if (mesh.triangles.empty()) throw InvalidInput("mesh has no triangles");
  for (const auto& t : mesh.triangles)
    for (const auto& p : t.v)
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
        throw InvalidInput("mesh has non-finite vertex coordinates");
  if (warnings && !detail::is_closed(mesh))
    warnings->push_back("mesh is not watertight; inside/outside classification is undefined near open edges");

  const auto [lo, hi] = mesh.bounds();
  Index3 first{}, dims{};
  for (int a = 0; a < 3; ++a) {
    first[a] = static_cast<std::int64_t>(std::ceil(lo[a] / spacing - 0.5));
    const auto last = static_cast<std::int64_t>(std::floor(hi[a] / spacing - 0.5));
    dims[a] = std::max<std::int64_t>(1, last - first[a] + 1);
  }
  const Vec3 origin{(static_cast<double>(first[0]) + 0.5) * spacing, (static_cast<double>(first[1]) + 0.5) * spacing,
                    (static_cast<double>(first[2]) + 0.5) * spacing};
  const Lattice l(dims, spacing, origin);

  // Bin triangles by the (y, z) rows their projection can touch.
  const std::size_t rows = static_cast<std::size_t>(dims[1] * dims[2]);
  std::vector<std::vector<std::uint32_t>> bins(rows);
  for (std::uint32_t ti = 0; ti < mesh.triangles.size(); ++ti) {
    const auto& t = mesh.triangles[ti];
    double ylo = HUGE_VAL, yhi = -HUGE_VAL, zlo = HUGE_VAL, zhi = -HUGE_VAL;
    for (const auto& p : t.v) {
      ylo = std::min(ylo, p.y), yhi = std::max(yhi, p.y);
      zlo = std::min(zlo, p.z), zhi = std::max(zhi, p.z);
    }
    const auto j0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((ylo - origin.y) / spacing)) - 1);
    const auto j1 = std::min<std::int64_t>(dims[1] - 1, static_cast<std::int64_t>(std::ceil((yhi - origin.y) / spacing)) + 1);
    const auto k0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((zlo - origin.z) / spacing)) - 1);
    const auto k1 = std::min<std::int64_t>(dims[2] - 1, static_cast<std::int64_t>(std::ceil((zhi - origin.z) / spacing)) + 1);
    for (auto k = k0; k <= k1; ++k)
      for (auto j = j0; j <= j1; ++j) bins[static_cast<std::size_t>(j + dims[1] * k)].push_back(ti);
  }

  std::vector<std::vector<std::uint8_t>> slabs(static_cast<std::size_t>(dims[2]));
  parallel_for(slabs.size(), resolve_workers(workers), [&](unsigned, std::size_t k) {
    auto& slab = slabs[k];
    slab.assign(static_cast<std::size_t>(dims[0] * dims[1]), 0);
    std::vector<double> xs;
    for (std::int64_t j = 0; j < dims[1]; ++j) {
      const auto& cand = bins[static_cast<std::size_t>(j + dims[1] * static_cast<std::int64_t>(k))];
      if (cand.empty()) continue;
      const double y = origin.y + spacing * static_cast<double>(j);
      const double z = origin.z + spacing * static_cast<double>(k);
      bool ok = detail::ray_hits(mesh, cand, y, z, xs);
      for (int attempt = 1; !ok && attempt <= 16; ++attempt) {
        const double d = spacing * 1e-6 * attempt;
        ok = detail::ray_hits(mesh, cand, y + 0.7548776662 * d, z + 0.5698402910 * d, xs);
      }
      // Parity over crossings strictly left of each cell center.
      std::size_t crossed = 0;
      for (std::int64_t i = 0; i < dims[0]; ++i) {
        const double x = origin.x + spacing * static_cast<double>(i);
        while (crossed < xs.size() && xs[crossed] < x) ++crossed;
        if (crossed % 2 == 1) slab[static_cast<std::size_t>(i + dims[0] * j)] = 1;
      }
    }
  });

  IndicatorGrid g(l);
  for (std::size_t k = 0; k < slabs.size(); ++k)
    for (std::size_t r = 0; r < slabs[k].size(); ++r)
      if (slabs[k][r]) g.set(r + k * slabs[k].size());
  return g;
}

// ---------------------------------------------------------------------------
// Volume files
//
//   nearnet-volume 1
//   dims <nx> <ny> <nz>
//   spacing <h>
//   origin <ox> <oy> <oz>
//   dtype bit|f64
//   end
//
// followed by the little-endian payload, x fastest: one bit per cell packed
// LSB first, or one IEEE double per cell.

struct VolumeHeader {
  Lattice lattice;
  std::string dtype;
  std::size_t payload_offset = 0;

  std::size_t payload_size() const { return dtype == "bit" ? (lattice.size() + 7) / 8 : lattice.size() * 8; }
};

namespace detail {

inline std::string volume_header(const Lattice& l, const char* dtype) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "nearnet-volume 1\ndims %lld %lld %lld\nspacing %.17g\norigin %.17g %.17g %.17g\ndtype %s\nend\n",
                static_cast<long long>(l.dims[0]), static_cast<long long>(l.dims[1]), static_cast<long long>(l.dims[2]),
                l.spacing, l.origin.x, l.origin.y, l.origin.z, dtype);
  return buf;
}

}  // namespace detail

inline VolumeHeader parse_volume_header(const std::string& bytes) {
  VolumeHeader h;
  std::size_t pos = 0;
  auto line = [&](std::size_t& at) {
    at = pos;
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos || nl - pos > 1024) throw ParseError("truncated volume header", pos);
    std::string s = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return s;
  };
  std::size_t at = 0;
  if (line(at) != "nearnet-volume 1") throw ParseError("not a nearnet volume file", at);
  bool have_dims = false, have_spacing = false, have_origin = false;
  Index3 dims{};
  double spacing = 0;
  Vec3 origin;
  for (;;) {
    const std::string s = line(at);
    if (s == "end") break;
    std::istringstream ls(s);
    ls.imbue(std::locale::classic());
    std::string key;
    ls >> key;
    bool good = true;
    if (key == "dims") {
      ls >> dims[0] >> dims[1] >> dims[2];
      have_dims = true;
    } else if (key == "spacing") {
      std::string t;
      ls >> t;
      spacing = detail::parse_number(t, at);
      have_spacing = true;
    } else if (key == "origin") {
      for (int a = 0; a < 3; ++a) {
        std::string t;
        ls >> t;
        origin[a] = detail::parse_number(t, at);
      }
      have_origin = true;
    } else if (key == "dtype") {
      ls >> h.dtype;
      if (h.dtype != "bit" && h.dtype != "f64") throw ParseError("unknown dtype '" + h.dtype + "'", at);
    } else {
      throw ParseError("unknown header key '" + key + "'", at);
    }
    good = !ls.fail();
    std::string extra;
    if (!good || (ls >> extra)) throw ParseError("malformed header line '" + s + "'", at);
  }
  if (!have_dims || !have_spacing || !have_origin || h.dtype.empty())
    throw ParseError("volume header is missing dims, spacing, origin or dtype", pos);
  try {
    h.lattice = Lattice(dims, spacing, origin);
  } catch (const InvalidInput& e) {
    throw ParseError(e.what(), 0);
  }
  h.payload_offset = pos;
  const std::size_t have = bytes.size() - pos;
  if (have != h.payload_size())
    throw ParseError("payload is " + std::to_string(have) + " bytes, header implies " + std::to_string(h.payload_size()),
                     pos);
  return h;
}

inline std::string volume_bytes(const IndicatorGrid& g) {
  std::string out = detail::volume_header(g.lattice(), "bit");
  const std::size_t n = (g.size() + 7) / 8;
  for (std::size_t b = 0; b < n; ++b) out.push_back(static_cast<char>((g.words()[b / 8] >> (8 * (b % 8))) & 0xffu));
  return out;
}

inline std::string volume_bytes(const ScalarField& f) {
  std::string out = detail::volume_header(f.lattice(), "f64");
  out.reserve(out.size() + 8 * f.size());
  for (double v : f.values()) detail::store_le(out, v);
  return out;
}

inline IndicatorGrid parse_indicator_volume(const std::string& bytes) {
  const VolumeHeader h = parse_volume_header(bytes);
  if (h.dtype != "bit") throw InvalidInput("expected a bit volume, found dtype " + h.dtype);
  IndicatorGrid g(h.lattice);
  const std::size_t n = h.payload_size();
  for (std::size_t b = 0; b < n; ++b)
    g.words()[b / 8] |= std::uint64_t{static_cast<unsigned char>(bytes[h.payload_offset + b])} << (8 * (b % 8));
  const std::size_t tail = g.size() % 64;
  if (tail && (g.words().back() >> tail) != 0) throw ParseError("padding bits past the last cell are set", bytes.size() - 1);
  return g;
}

inline ScalarField parse_field_volume(const std::string& bytes) {
  const VolumeHeader h = parse_volume_header(bytes);
  if (h.dtype != "f64") throw InvalidInput("expected an f64 volume, found dtype " + h.dtype);
  ScalarField f(h.lattice);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = detail::load_le<double>(bytes.data() + h.payload_offset + 8 * i);
  return f;
}

inline void write_volume(const std::string& path, const IndicatorGrid& g) { detail::write_file(path, volume_bytes(g)); }
inline void write_volume(const std::string& path, const ScalarField& f) { detail::write_file(path, volume_bytes(f)); }

inline IndicatorGrid read_indicator(const std::string& path) {
  try {
    return parse_indicator_volume(detail::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError("'" + path + "': " + e.what(), e.offset());
  }
}

inline ScalarField read_field(const std::string& path) {
  try {
    return parse_field_volume(detail::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError("'" + path + "': " + e.what(), e.offset());
  }
}

// ---------------------------------------------------------------------------
// Legacy VTK structured points (ASCII)

namespace detail {

inline void vtk_header(std::ostream& os, const Lattice& l, const char* type) {
  char buf[256];
  os << "# vtk DataFile Version 3.0\nnearnet volume\nASCII\nDATASET STRUCTURED_POINTS\n";
  std::snprintf(buf, sizeof buf, "DIMENSIONS %lld %lld %lld\nORIGIN %.17g %.17g %.17g\nSPACING %.17g %.17g %.17g\n",
                static_cast<long long>(l.dims[0]), static_cast<long long>(l.dims[1]), static_cast<long long>(l.dims[2]),
                l.origin.x, l.origin.y, l.origin.z, l.spacing, l.spacing, l.spacing);
  os << buf << "POINT_DATA " << l.size() << "\nSCALARS value " << type << " 1\nLOOKUP_TABLE default\n";
}

}  // namespace detail

inline void write_vtk(std::ostream& os, const IndicatorGrid& g) {
  detail::vtk_header(os, g.lattice(), "unsigned_char");
  for (std::size_t i = 0; i < g.size(); ++i) os << (g.get(i) ? '1' : '0') << ((i + 1) % 32 == 0 ? '\n' : ' ');
  os << '\n';
}

inline void write_vtk(std::ostream& os, const ScalarField& f) {
  detail::vtk_header(os, f.lattice(), "double");
  char buf[32];
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", f[i]);
    os << buf << ((i + 1) % 8 == 0 ? '\n' : ' ');
  }
  os << '\n';
}

template <typename G>
void write_vtk(const std::string& path, const G& g) {
  std::ostringstream os;
  write_vtk(os, g);
  detail::write_file(path, os.str());
}

}  // namespace nearnet
