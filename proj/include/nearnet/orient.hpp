#pragma once

// Build-direction sampling and weighted Pareto ranking.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "nearnet/imf.hpp"
#include "nearnet/workspace.hpp"

namespace nearnet {

enum class SamplingMode { sphere_fibonacci, circle_uniform };

/// `sphere_fibonacci`: n near-uniform unit vectors on the sphere (golden-angle
/// spiral with midpoint heights). `circle_uniform`: R(2*pi*i/n) applied to
/// (0, 1, 0), for planar parts.
inline std::vector<Vec3> sample_directions(std::size_t n, SamplingMode mode) {
  if (n < 1) throw InvalidInput("direction sample count must be >= 1");
  std::vector<Vec3> out;
  out.reserve(n);
  if (mode == SamplingMode::circle_uniform) {
    for (std::size_t i = 0; i < n; ++i) {
      const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
      out.push_back({-std::sin(th), std::cos(th), 0.0});
    }
    return out;
  }
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    out.push_back(normalized({r * std::cos(phi), r * std::sin(phi), z}));
  }
  return out;
}

struct OrientationRecord {
  std::size_t index = 0;  // position in the sample set
  Vec3 direction;
  double support_volume = 0.0;   // mm^3
  double secluded_volume = 0.0;  // mm^3
  double xi = 0.0;
};

struct OptimizeConfig {
  double w_acc = 0.5;
  std::size_t samples = 100;
  std::size_t top = 5;
  double lambda = 0.001;
  double overhang_deg = 45.0;
  SamplingMode mode = SamplingMode::sphere_fibonacci;
  double roll_deg = 0.0;
  /// Fixed normalizers; the in-sample maxima are used when unset.
  std::optional<double> support_max;
  std::optional<double> secluded_max;
  unsigned workers = 0;

  void validate() const {
    if (!(w_acc >= 0.0 && w_acc <= 1.0)) throw InvalidInput("w_acc must be in [0, 1]");
    if (samples < 1) throw InvalidInput("sample count must be >= 1");
    if (top < 1 || top > samples) throw InvalidInput("top count must be in [1, samples]");
    if (!(lambda >= 0.0)) throw InvalidInput("lambda must be >= 0");
    (void)self_support_radius(overhang_deg);
  }
};

/// Weighted value (1 - w) * V_S / V_Smax + w * V_G / V_Gmax. A zero maximum
/// zeroes its term.
inline double xi(double support_volume, double secluded_volume, double support_max, double secluded_max, double w_acc) {
  const double s = support_max > 0.0 ? support_volume / support_max : 0.0;
  const double g = secluded_max > 0.0 ? secluded_volume / secluded_max : 0.0;
  return (1.0 - w_acc) * s + w_acc * g;
}

/// Support and secluded-support volumes at one build direction (xi unset).
inline OrientationRecord evaluate_orientation(const IndicatorGrid& part, const Machine& machine, Vec3 b,
                                              const OptimizeConfig& cfg, unsigned workers) {
  const NearNetShape nn = assemble_near_net(part, b, cfg.overhang_deg, cfg.roll_deg * std::numbers::pi / 180.0);
  OrientationRecord rec;
  rec.direction = b;
  rec.support_volume = volume(nn.support);
  if (nn.support.empty()) return rec;
  const Workspace ws = stage(nn, machine);
  const ImfResult imf = imf_setup(ws.part, ws.setup, {false, false, workers});
  rec.secluded_volume = volume(split_support(ws.support, imf.field, cfg.lambda).secluded);
  return rec;
}

/// Orders records by xi, then secluded volume, then support volume, then index.
inline bool ranks_before(const OrientationRecord& a, const OrientationRecord& b) {
  if (a.xi != b.xi) return a.xi < b.xi;
  if (a.secluded_volume != b.secluded_volume) return a.secluded_volume < b.secluded_volume;
  if (a.support_volume != b.support_volume) return a.support_volume < b.support_volume;
  return a.index < b.index;
}

struct OptimizeResult {
  std::vector<OrientationRecord> samples;  // sample order, xi filled in
  std::vector<OrientationRecord> ranked;   // best `top`
  double support_max = 0.0;
  double secluded_max = 0.0;
};

/// Fill xi on `records` and rank them.
inline OptimizeResult rank_orientations(std::vector<OrientationRecord> records, double w_acc, std::size_t top,
                                        std::optional<double> support_max = {}, std::optional<double> secluded_max = {}) {
  OptimizeResult out;
  for (const auto& r : records) {
    out.support_max = std::max(out.support_max, r.support_volume);
    out.secluded_max = std::max(out.secluded_max, r.secluded_volume);
  }
  if (support_max) out.support_max = *support_max;
  if (secluded_max) out.secluded_max = *secluded_max;
  for (auto& r : records) r.xi = xi(r.support_volume, r.secluded_volume, out.support_max, out.secluded_max, w_acc);
  out.samples = records;
  std::sort(records.begin(), records.end(), ranks_before);
  records.resize(std::min(top, records.size()));
  out.ranked = std::move(records);
  return out;
}

/// Evaluate every sampled direction, then rank by xi.
inline OptimizeResult optimize(const IndicatorGrid& part, const Machine& machine, const OptimizeConfig& cfg) {
  cfg.validate();
  const auto dirs = sample_directions(cfg.samples, cfg.mode);
  std::vector<OrientationRecord> records(dirs.size());
  const unsigned workers = resolve_workers(cfg.workers);
  // Directions are independent; each evaluation runs single-threaded inside.
  parallel_for(dirs.size(), workers, [&](unsigned, std::size_t m) {
    records[m] = evaluate_orientation(part, machine, dirs[m], cfg, 1);
    records[m].index = m;
  });
  return rank_orientations(std::move(records), cfg.w_acc, cfg.top, cfg.support_max, cfg.secluded_max);
}

/// CSV over all samples in sample order: bx,by,bz,V_S_mm3,V_Gamma_mm3,xi
inline void write_ranking_csv(std::ostream& os, const OptimizeResult& r) {
  const auto old = os.precision(12);
  os << "bx,by,bz,V_S_mm3,V_Gamma_mm3,xi\n";
  for (const auto& s : r.samples)
    os << s.direction.x << ',' << s.direction.y << ',' << s.direction.z << ',' << s.support_volume << ','
       << s.secluded_volume << ',' << s.xi << '\n';
  os.precision(old);
}

}  // namespace nearnet
