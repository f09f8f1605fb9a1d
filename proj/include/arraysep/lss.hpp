#pragma once

// Linear source separation: unit-modulus steering matrices from far-field
// geometry, per-bin pseudo-inverse, and application to spectral frames.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "arraysep/linalg.hpp"
#include "arraysep/stft.hpp"

namespace arraysep {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

struct ArrayScene {
  std::vector<Vec3> mic_positions;       // meters
  std::vector<Vec3> source_directions;   // unit vectors, array -> source
  double speed_of_sound = 343.0;         // m/s
  double sample_rate = 16000.0;          // Hz

  std::size_t num_mics() const { return mic_positions.size(); }
  std::size_t num_sources() const { return source_directions.size(); }

  void validate() const {
    if (mic_positions.empty()) throw std::invalid_argument("ArrayScene: no microphones");
    if (source_directions.empty()) throw std::invalid_argument("ArrayScene: no sources");
    if (num_sources() > num_mics())
      throw std::invalid_argument("ArrayScene: more sources than microphones");
    for (const auto& u : source_directions)
      if (std::abs(norm(u) - 1.0) > 1e-9)
        throw std::invalid_argument("ArrayScene: source direction is not a unit vector");
    if (!(speed_of_sound > 0.0) || !(sample_rate > 0.0))
      throw std::invalid_argument("ArrayScene: speed of sound and sample rate must be positive");
  }

  Vec3 centroid() const {
    Vec3 c{0.0, 0.0, 0.0};
    for (const auto& p : mic_positions)
      for (int i = 0; i < 3; ++i) c[i] += p[i] / double(mic_positions.size());
    return c;
  }

  // Far-field plane-wave arrival delay of source m at mic n, relative to the
  // array centroid. Mics closer to the source have negative delay.
  double delay(std::size_t n, std::size_t m) const {
    const Vec3 c = centroid();
    const Vec3& p = mic_positions[n];
    const Vec3& u = source_directions[m];
    const Vec3 rel{p[0] - c[0], p[1] - c[1], p[2] - c[2]};
    return -dot(rel, u) / speed_of_sound;
  }
};

// N x M matrix of unit-modulus phase factors exp(-j 2 pi f tau_nm).
inline CMat steering_matrix(const ArrayScene& scene, double freq_hz) {
  scene.validate();
  if (!(freq_hz >= 0.0) || freq_hz > scene.sample_rate / 2.0)
    throw std::invalid_argument("steering_matrix: frequency outside [0, sample_rate/2]");
  CMat a(scene.num_mics(), scene.num_sources());
  for (std::size_t n = 0; n < scene.num_mics(); ++n)
    for (std::size_t m = 0; m < scene.num_sources(); ++m)
      a(n, m) = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz * scene.delay(n, m));
  return a;
}

struct PinvResult {
  CMat w;            // M x N
  bool regularized = false;
  double cond = 0.0;  // condition number of A^H A
};

// Moore-Penrose pseudo-inverse via normal equations, W = (A^H A)^-1 A^H.
// When cond(A^H A) exceeds 1e12 the solve falls back to
// (A^H A + delta I)^-1 A^H with delta = 1e-9 trace/M and flags the bin.
inline PinvResult pseudo_inverse(const CMat& a) {
  CMat ah = hermitian(a);
  CMat b = matmul(ah, a);
  const std::size_t m = b.rows;
  double trace = 0.0;
  for (std::size_t i = 0; i < m; ++i) trace += b(i, i).real();
  if (trace <= 0.0) {
    // zero matrix: pseudo-inverse is the zero M x N matrix
    return {CMat(a.cols, a.rows), true,
            std::numeric_limits<double>::infinity()};
  }
  const auto eig = hermitian_eigenvalues(b);
  const double lmax = eig.back();
  const double lmin = eig.front();
  const double cond = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  const bool regularize = !(cond <= 1e12);
  if (regularize) {
    const double delta = 1e-9 * trace / double(m);
    for (std::size_t i = 0; i < m; ++i) b(i, i) += delta;
  }
  return {cholesky_solve(b, ah), regularize, cond};
}

// Per-bin separation matrices W(k) = A+(k) for one scene and frame config.
struct SeparationBank {
  std::vector<CMat> mixing;      // A(k), N x M
  std::vector<CMat> separation;  // W(k), M x N
  std::vector<bool> regularized;
  std::size_t num_bins() const { return separation.size(); }
};

inline SeparationBank build_separation_bank(const ArrayScene& scene,
                                            const FrameConfig& cfg) {
  cfg.validate();
  SeparationBank bank;
  bank.mixing.reserve(cfg.bins());
  bank.separation.reserve(cfg.bins());
  for (std::size_t k = 0; k < cfg.bins(); ++k) {
    CMat a = steering_matrix(scene, cfg.bin_freq(k));
    PinvResult p = pseudo_inverse(a);
    bank.mixing.push_back(std::move(a));
    bank.separation.push_back(std::move(p.w));
    bank.regularized.push_back(p.regularized);
  }
  return bank;
}

// Y(k) = W(k) Z(k) for every bin: N mic channels in, M source channels out.
inline SpectralFrame separate(const SpectralFrame& z, const SeparationBank& bank) {
  if (z.num_bins() != bank.num_bins())
    throw std::invalid_argument("separate: bin count does not match separation bank");
  const std::size_t n = bank.separation[0].cols;
  const std::size_t m = bank.separation[0].rows;
  if (z.num_channels() != n)
    throw std::invalid_argument("separate: channel count does not match separation bank");
  SpectralFrame y;
  y.frame_index = z.frame_index;
  y.channels.assign(m, std::vector<cplx>(z.num_bins()));
  for (std::size_t k = 0; k < z.num_bins(); ++k) {
    const CMat& w = bank.separation[k];
    for (std::size_t i = 0; i < m; ++i) {
      cplx acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += w(i, j) * z.channels[j][k];
      y.channels[i][k] = acc;
    }
  }
  return y;
}

}  // namespace arraysep
