#pragma once

// Linear cross-correlation of indicator grids.
//
// correlate(obstacle, probe)(t) is the overlap volume between the obstacle and
// the probe translated by world vector t. The output lattice enumerates every
// translation at which the two cell sets can overlap, so values off the
// lattice are exactly zero.

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>

#include "nearnet/grid.hpp"

namespace nearnet {

using CountField = DenseField<std::int64_t>;

/// Translation lattice of the full linear correlation: index m corresponds to
/// the probe cell b landing on obstacle cell a = b + m - (probe_dims - 1).
inline Lattice correlation_lattice(const Lattice& obstacle, const Lattice& probe) {
  if (std::abs(obstacle.spacing - probe.spacing) > 1e-12 * obstacle.spacing)
    throw LatticeMismatch("correlate: obstacle and probe spacing differ");
  Index3 dims{};
  for (int a = 0; a < 3; ++a) dims[a] = obstacle.dims[a] + probe.dims[a] - 1;
  const double h = obstacle.spacing;
  const Vec3 origin = obstacle.origin - probe.origin -
                      h * Vec3{static_cast<double>(probe.dims[0] - 1), static_cast<double>(probe.dims[1] - 1),
                               static_cast<double>(probe.dims[2] - 1)};
  return Lattice(dims, h, origin);
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline RealBuffer alloc_real(std::size_t n) { return RealBuffer(fftw_alloc_real(n)); }
inline ComplexBuffer alloc_complex(std::size_t n) { return ComplexBuffer(fftw_alloc_complex(n)); }

/// Smallest n' >= n whose prime factors are all in {2, 3, 5, 7}.
inline std::int64_t fft_size(std::int64_t n) {
  for (std::int64_t m = std::max<std::int64_t>(n, 1);; ++m) {
    std::int64_t r = m;
    for (std::int64_t p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

}  // namespace detail

/// Holds the spectrum of one obstacle so it can be correlated against many
/// probes. counts() is safe to call concurrently.
class Correlator {
 public:
  /// `max_probe_dims` bounds every probe later passed to counts().
  Correlator(IndicatorGrid obstacle, Index3 max_probe_dims) : obstacle_(std::move(obstacle)), max_probe_(max_probe_dims) {
    const Lattice& l = obstacle_.lattice();
    for (int a = 0; a < 3; ++a) padded_[a] = detail::fft_size(l.dims[a] + max_probe_dims[a] - 1);
    real_size_ = static_cast<std::size_t>(padded_[0] * padded_[1] * padded_[2]);
    complex_size_ = static_cast<std::size_t>((padded_[0] / 2 + 1) * padded_[1] * padded_[2]);

    auto real = detail::alloc_real(real_size_);
    spectrum_ = detail::alloc_complex(complex_size_);
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      forward_ = fftw_plan_dft_r2c_3d(static_cast<int>(padded_[2]), static_cast<int>(padded_[1]),
                                      static_cast<int>(padded_[0]), real.get(), spectrum_.get(), FFTW_ESTIMATE);
      inverse_ = fftw_plan_dft_c2r_3d(static_cast<int>(padded_[2]), static_cast<int>(padded_[1]),
                                      static_cast<int>(padded_[0]), spectrum_.get(), real.get(), FFTW_ESTIMATE);
    }
    if (!forward_ || !inverse_) throw Error("FFTW planning failed");
    scatter(obstacle_, real.get());
    fftw_execute_dft_r2c(forward_, real.get(), spectrum_.get());
  }

  Correlator(const Correlator&) = delete;
  Correlator& operator=(const Correlator&) = delete;

  ~Correlator() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (inverse_) fftw_destroy_plan(inverse_);
  }

  const IndicatorGrid& obstacle() const { return obstacle_; }

  /// Unrounded FFT overlap counts over correlation_lattice(obstacle, probe).
  ScalarField raw_counts(const IndicatorGrid& probe) const {
    const Lattice& pl = probe.lattice();
    if (probe.empty()) throw InvalidInput("correlate: probe is empty");
    for (int a = 0; a < 3; ++a)
      if (pl.dims[a] > max_probe_[a]) throw InvalidInput("correlate: probe exceeds the planned padding");
    ScalarField out(correlation_lattice(obstacle_.lattice(), pl));
    if (obstacle_.empty()) return out;

    auto real = detail::alloc_real(real_size_);
    auto spec = detail::alloc_complex(complex_size_);
    scatter(probe, real.get());
    fftw_execute_dft_r2c(forward_, real.get(), spec.get());
    for (std::size_t i = 0; i < complex_size_; ++i) {
      const double ar = spectrum_[i][0], ai = spectrum_[i][1];
      const double br = spec[i][0], bi = -spec[i][1];
      spec[i][0] = ar * br - ai * bi;
      spec[i][1] = ar * bi + ai * br;
    }
    fftw_execute_dft_c2r(inverse_, spec.get(), real.get());

    const double scale = 1.0 / static_cast<double>(real_size_);
    const Lattice& ol = out.lattice();
    for (std::int64_t k = 0; k < ol.dims[2]; ++k) {
      const std::int64_t dk = wrap(k - (pl.dims[2] - 1), padded_[2]);
      for (std::int64_t j = 0; j < ol.dims[1]; ++j) {
        const std::int64_t dj = wrap(j - (pl.dims[1] - 1), padded_[1]);
        for (std::int64_t i = 0; i < ol.dims[0]; ++i) {
          const std::int64_t di = wrap(i - (pl.dims[0] - 1), padded_[0]);
          out.at({i, j, k}) = real[static_cast<std::size_t>(di + padded_[0] * (dj + padded_[1] * dk))] * scale;
        }
      }
    }
    return out;
  }

  /// Integer overlap counts over correlation_lattice(obstacle, probe).
  CountField counts(const IndicatorGrid& probe) const {
    const ScalarField raw = raw_counts(probe);
    CountField out(raw.lattice());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<std::int64_t>(std::llround(raw[i]));
    return out;
  }

 private:
  static std::int64_t wrap(std::int64_t d, std::int64_t n) { return ((d % n) + n) % n; }

  void scatter(const IndicatorGrid& g, double* buf) const {
    std::fill(buf, buf + real_size_, 0.0);
    const Lattice& l = g.lattice();
    g.for_each_set([&](std::size_t lin) {
      const Index3 c = l.cell(lin);
      buf[static_cast<std::size_t>(c[0] + padded_[0] * (c[1] + padded_[1] * c[2]))] = 1.0;
    });
  }

  IndicatorGrid obstacle_;
  Index3 max_probe_;
  Index3 padded_{};
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  detail::ComplexBuffer spectrum_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

inline CountField correlate_counts(const IndicatorGrid& obstacle, const IndicatorGrid& probe) {
  if (probe.empty()) throw InvalidInput("correlate: probe is empty");
  (void)correlation_lattice(obstacle.lattice(), probe.lattice());
  return Correlator(obstacle, probe.lattice().dims).counts(probe);
}

/// Direct-summation reference for correlate_counts.
inline CountField correlate_counts_direct(const IndicatorGrid& obstacle, const IndicatorGrid& probe) {
  if (probe.empty()) throw InvalidInput("correlate: probe is empty");
  CountField out(correlation_lattice(obstacle.lattice(), probe.lattice()));
  const Lattice& ol = obstacle.lattice();
  const Lattice& pl = probe.lattice();
  const Lattice& cl = out.lattice();
  const Index3 bias{pl.dims[0] - 1, pl.dims[1] - 1, pl.dims[2] - 1};
  const auto obstacle_cells = obstacle.set_cells();
  probe.for_each_set([&](std::size_t plin) {
    const Index3 b = pl.cell(plin);
    for (std::size_t olin : obstacle_cells) {
      const Index3 m = ol.cell(olin) - b + bias;
      out[cl.linear(m)] += 1;
    }
  });
  return out;
}

inline ScalarField to_volume_field(const CountField& c) {
  ScalarField f(c.lattice());
  const double v = c.lattice().cell_volume();
  for (std::size_t i = 0; i < c.size(); ++i) f[i] = static_cast<double>(c[i]) * v;
  return f;
}

/// FFT cross-correlation: overlap volume of obstacle and probe translated by t.
inline ScalarField correlate(const IndicatorGrid& obstacle, const IndicatorGrid& probe) {
  return to_volume_field(correlate_counts(obstacle, probe));
}

inline ScalarField correlate_direct(const IndicatorGrid& obstacle, const IndicatorGrid& probe) {
  return to_volume_field(correlate_counts_direct(obstacle, probe));
}

/// Convolution with `kernel`, i.e. correlation with its point reflection.
inline ScalarField convolve(const IndicatorGrid& obstacle, const IndicatorGrid& kernel) {
  return correlate(obstacle, reflect(kernel));
}

/// Value of a correlation field at world translation t; zero off-lattice.
inline double value_at_translation(const ScalarField& c, Vec3 t) {
  const Lattice& l = c.lattice();
  Index3 m{};
  for (int a = 0; a < 3; ++a) m[a] = static_cast<std::int64_t>(std::llround((t[a] - l.origin[a]) / l.spacing));
  return l.contains(m) ? c.at(m) : 0.0;
}

}  // namespace nearnet
