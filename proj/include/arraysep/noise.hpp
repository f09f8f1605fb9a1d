#pragma once

// Per-source noise variance estimation: minima-controlled recursive averaging
// for the stationary floor plus a leakage term fed by the other sources'
// smoothed spectra. The total is always the elementwise sum of the two.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace arraysep {

// First-order recursive smoothing of the power spectrum,
// S(k,l) = alpha_s S(k,l-1) + (1-alpha_s) |Y(k,l)|^2, seeded with the first frame.
struct SmoothedSpectrum {
  std::vector<double> s;
  bool initialized = false;

  void update(std::span<const double> power, double alpha_s) {
    if (!initialized) {
      s.assign(power.begin(), power.end());
      initialized = true;
      return;
    }
    if (power.size() != s.size())
      throw std::invalid_argument("SmoothedSpectrum: bin count changed");
    for (std::size_t k = 0; k < s.size(); ++k)
      s[k] = alpha_s * s[k] + (1.0 - alpha_s) * power[k];
  }
};

// Pure form of the same recursion, for callers that keep their own state.
inline std::vector<double> smooth_spectrum_update(std::span<const double> prev,
                                                  std::span<const double> power,
                                                  double alpha_s) {
  if (prev.size() != power.size())
    throw std::invalid_argument("smooth_spectrum_update: size mismatch");
  std::vector<double> out(prev.size());
  for (std::size_t k = 0; k < prev.size(); ++k)
    out[k] = alpha_s * prev[k] + (1.0 - alpha_s) * power[k];
  return out;
}

struct McraConfig {
  double alpha_power = 0.8;        // smoothing of the tracked power P
  double alpha_noise = 0.95;       // noise update memory alpha_d
  std::size_t min_window = 125;    // frames per minimum-tracking window
  double speech_ratio = 5.0;       // P/Pmin above this flags speech
  double alpha_indicator = 0.2;    // smoothing of the speech-presence indicator
  std::size_t warmup_frames = 10;  // frames averaged into the initial floor
};

// Minima-controlled recursive averaging. P tracks smoothed power, Pmin/Ptmp
// implement the two-register sliding-window minimum, and lambda_stat is only
// pulled toward the input where the minimum statistic says speech is absent.
struct McraState {
  McraConfig cfg;
  std::vector<double> p;
  std::vector<double> p_min;
  std::vector<double> p_tmp;
  std::vector<double> indicator;    // smoothed speech-presence indicator p'
  std::vector<double> lambda_stat;
  std::size_t frame = 0;

  void update(std::span<const double> power) {
    const std::size_t bins = power.size();
    if (frame == 0) {
      p.assign(power.begin(), power.end());
      p_min = p;
      p_tmp = p;
      indicator.assign(bins, 0.0);
      lambda_stat.assign(power.begin(), power.end());
      frame = 1;
      return;
    }
    if (bins != p.size()) throw std::invalid_argument("McraState: bin count changed");
    const bool window_edge = cfg.min_window > 0 && frame % cfg.min_window == 0;
    for (std::size_t k = 0; k < bins; ++k) {
      p[k] = cfg.alpha_power * p[k] + (1.0 - cfg.alpha_power) * power[k];
      if (window_edge) {
        p_min[k] = std::min(p_tmp[k], p[k]);
        p_tmp[k] = p[k];
      } else {
        p_min[k] = std::min(p_min[k], p[k]);
        p_tmp[k] = std::min(p_tmp[k], p[k]);
      }
    }
    if (frame < cfg.warmup_frames) {
      // seed the floor with the running mean of the first frames
      for (std::size_t k = 0; k < bins; ++k)
        lambda_stat[k] = (double(frame) * lambda_stat[k] + power[k]) / double(frame + 1);
    } else {
      for (std::size_t k = 0; k < bins; ++k) {
        const bool speech = p[k] > cfg.speech_ratio * p_min[k];
        indicator[k] = cfg.alpha_indicator * indicator[k] +
                       (1.0 - cfg.alpha_indicator) * (speech ? 1.0 : 0.0);
        const double ad = cfg.alpha_noise + (1.0 - cfg.alpha_noise) * indicator[k];
        lambda_stat[k] = ad * lambda_stat[k] + (1.0 - ad) * power[k];
      }
    }
    ++frame;
  }
};

// Leakage floor for source m: eta times the sum of the other sources'
// smoothed spectra (empty sum when M = 1).
inline std::vector<double> leakage_estimate(
    std::span<const SmoothedSpectrum> all_sources, std::size_t m, double eta) {
  if (m >= all_sources.size())
    throw std::invalid_argument("leakage_estimate: source index out of range");
  if (!(eta >= 0.0) || eta >= 1.0)
    throw std::invalid_argument("leakage_estimate: eta must be in [0, 1)");
  const std::size_t bins = all_sources[m].s.size();
  std::vector<double> leak(bins, 0.0);
  for (std::size_t i = 0; i < all_sources.size(); ++i) {
    if (i == m) continue;
    if (all_sources[i].s.size() != bins)
      throw std::invalid_argument("leakage_estimate: bin counts differ");
    for (std::size_t k = 0; k < bins; ++k) leak[k] += eta * all_sources[i].s[k];
  }
  return leak;
}

struct NoiseEstimate {
  std::vector<double> total;
  std::vector<double> stat;
  std::vector<double> leak;
};

inline NoiseEstimate total_noise(std::span<const double> lambda_stat,
                                 std::span<const double> lambda_leak) {
  if (lambda_stat.size() != lambda_leak.size())
    throw std::invalid_argument("total_noise: size mismatch");
  NoiseEstimate est;
  est.stat.assign(lambda_stat.begin(), lambda_stat.end());
  est.leak.assign(lambda_leak.begin(), lambda_leak.end());
  est.total.resize(lambda_stat.size());
  for (std::size_t k = 0; k < est.total.size(); ++k)
    est.total[k] = est.stat[k] + est.leak[k];
  return est;
}

}  // namespace arraysep
