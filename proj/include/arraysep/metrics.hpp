#pragma once

// Evaluation metrics: log spectral distortion on spectral frames and
// segmental SNR on time-domain samples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arraysep/stft.hpp"

namespace arraysep {

// Default guard for the log ratio: 1e-6 of the reference peak magnitude.
inline double default_lsd_epsilon(std::span<const SpectralFrame> reference,
                                  std::size_t channel = 0) {
  double peak = 0.0;
  for (const auto& f : reference)
    for (const auto& v : f.channels[channel]) peak = std::max(peak, std::abs(v));
  return 1e-6 * peak;
}

// LSD = (1/L) sum_l [ (1/K) sum_k (20 log10((|X|+eps)/(|Xhat|+eps)))^2 ]^(1/2)
inline double lsd(std::span<const SpectralFrame> reference,
                  std::span<const SpectralFrame> estimate, double epsilon,
                  std::size_t channel = 0) {
  if (reference.size() != estimate.size())
    throw std::invalid_argument("lsd: frame counts differ");
  if (reference.empty()) throw std::invalid_argument("lsd: no frames");
  double acc = 0.0;
  for (std::size_t l = 0; l < reference.size(); ++l) {
    const auto& x = reference[l].channels[channel];
    const auto& xh = estimate[l].channels[channel];
    if (x.size() != xh.size()) throw std::invalid_argument("lsd: bin counts differ");
    double frame_acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double r =
          20.0 * std::log10((std::abs(x[k]) + epsilon) / (std::abs(xh[k]) + epsilon));
      frame_acc += r * r;
    }
    acc += std::sqrt(frame_acc / double(x.size()));
  }
  return acc / double(reference.size());
}

struct SegSnrOptions {
  std::size_t frame_len = 256;   // 16 ms at 16 kHz
  double clamp_lo_db = -10.0;
  double clamp_hi_db = 35.0;
  double silence_rel = 1e-10;    // of the mean frame energy
};

// Mean over non-silent frames of 10 log10(sum x^2 / sum (x - xhat)^2),
// clamped per frame to [lo, hi].
inline double segsnr(std::span<const double> reference, std::span<const double> estimate,
                     const SegSnrOptions& opt = {}) {
  if (reference.size() != estimate.size())
    throw std::invalid_argument("segsnr: signal lengths differ");
  const std::size_t n = opt.frame_len;
  const std::size_t frames = reference.size() / n;
  if (frames == 0) throw std::invalid_argument("segsnr: signal shorter than one frame");
  std::vector<double> energy(frames, 0.0);
  double mean_energy = 0.0;
  for (std::size_t l = 0; l < frames; ++l) {
    for (std::size_t i = 0; i < n; ++i) energy[l] += reference[l * n + i] * reference[l * n + i];
    mean_energy += energy[l] / double(frames);
  }
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t l = 0; l < frames; ++l) {
    if (energy[l] < opt.silence_rel * mean_energy) continue;  // silence excluded
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = reference[l * n + i] - estimate[l * n + i];
      err += d * d;
    }
    const double ratio_db =
        err == 0.0 ? opt.clamp_hi_db : 10.0 * std::log10(energy[l] / err);
    acc += std::clamp(ratio_db, opt.clamp_lo_db, opt.clamp_hi_db);
    ++used;
  }
  if (used == 0) throw std::invalid_argument("segsnr: no frames above the silence gate");
  return acc / double(used);
}

struct SourceMetrics {
  double lsd_db = 0.0;
  double segsnr_db = 0.0;
};

struct StageMetrics {
  std::string name;
  std::vector<SourceMetrics> per_source;
};

}  // namespace arraysep
