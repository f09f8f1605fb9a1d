#pragma once

// Frame-based analysis/synthesis: windowing, forward/inverse DFT and
// weighted overlap-add reconstruction. Forward transform is unscaled,
// the inverse carries the 1/N factor.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "arraysep/errors.hpp"

namespace arraysep {

using cplx = std::complex<double>;

enum class Window { SqrtHann, Hann, Rect };

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::vector<double> make_window(Window kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    // periodic Hann
    const double h = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(i) / double(n)));
    switch (kind) {
      case Window::SqrtHann: w[i] = std::sqrt(h); break;
      case Window::Hann: w[i] = h; break;
      case Window::Rect: w[i] = 1.0; break;
    }
  }
  return w;
}

struct FrameConfig {
  std::size_t frame_len = 1024;
  std::size_t hop = 512;
  Window window = Window::SqrtHann;
  double sample_rate = 16000.0;

  std::size_t bins() const { return frame_len / 2 + 1; }
  double bin_freq(std::size_t k) const {
    return double(k) * sample_rate / double(frame_len);
  }
  void validate() const;
};

// Overlap-add weight per position within one hop period. The same window is
// used for analysis and synthesis, so the weight is the tiled sum of w^2.
inline std::vector<double> overlap_weights(const FrameConfig& cfg) {
  const auto w = make_window(cfg.window, cfg.frame_len);
  std::vector<double> d(cfg.hop, 0.0);
  for (std::size_t r = 0; r < cfg.hop; ++r)
    for (std::size_t j = r; j < cfg.frame_len; j += cfg.hop) d[r] += w[j] * w[j];
  return d;
}

// Constant-overlap-add level; relative ripple must be below 1e-10.
inline double cola_constant(const FrameConfig& cfg) {
  const auto d = overlap_weights(cfg);
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= double(d.size());
  return mean;
}

inline double cola_ripple(const FrameConfig& cfg) {
  const auto d = overlap_weights(cfg);
  double mean = 0.0, dev = 0.0;
  for (double v : d) mean += v;
  mean /= double(d.size());
  for (double v : d) dev = std::max(dev, std::abs(v - mean));
  return dev / mean;
}

inline void FrameConfig::validate() const {
  if (!is_power_of_two(frame_len))
    throw std::invalid_argument("FrameConfig: frame_len must be a power of two");
  if (hop == 0 || frame_len % hop != 0)
    throw std::invalid_argument("FrameConfig: hop must divide frame_len");
  if (frame_len < 2 * hop)
    throw std::invalid_argument("FrameConfig: frame_len must be at least 2*hop");
  if (!(sample_rate > 0.0))
    throw std::invalid_argument("FrameConfig: sample_rate must be positive");
  if (cola_ripple(*this) > 1e-10)
    throw std::invalid_argument("FrameConfig: window does not satisfy COLA at this hop");
}

// One analysis frame: complex half-spectrum per channel (frame_len/2+1 bins).
// Bin 0 and the Nyquist bin are real.
struct SpectralFrame {
  std::size_t frame_index = 0;
  std::vector<std::vector<cplx>> channels;

  std::size_t num_channels() const { return channels.size(); }
  std::size_t num_bins() const { return channels.empty() ? 0 : channels[0].size(); }
};

namespace detail {

inline const std::vector<cplx>& fft_twiddles(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::vector<cplx>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<cplx> w(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k)
    w[k] = std::polar(1.0, -2.0 * std::numbers::pi * double(k) / double(n));
  return cache.emplace(n, std::move(w)).first->second;
}

// Iterative radix-2 FFT, unscaled in both directions.
inline void fft_inplace(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if (!is_power_of_two(n)) throw std::invalid_argument("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const auto& tw = fft_twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t step = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        cplx w = tw[k * step];
        if (inverse) w = std::conj(w);
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

}  // namespace detail

// Forward real DFT: n real samples -> n/2+1 bins, unscaled.
inline std::vector<cplx> rfft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<cplx> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = cplx(x[i], 0.0);
  detail::fft_inplace(buf, false);
  std::vector<cplx> half(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) half[k] = buf[k];
  half[0] = cplx(half[0].real(), 0.0);
  half[n / 2] = cplx(half[n / 2].real(), 0.0);
  return half;
}

// Inverse of rfft: n/2+1 bins -> n real samples, scaled by 1/n.
inline std::vector<double> irfft(std::span<const cplx> spec, std::size_t n) {
  if (spec.size() != n / 2 + 1)
    throw std::invalid_argument("irfft: spectrum size does not match frame length");
  std::vector<cplx> buf(n);
  buf[0] = cplx(spec[0].real(), 0.0);
  buf[n / 2] = cplx(spec[n / 2].real(), 0.0);
  for (std::size_t k = 1; k < n / 2; ++k) {
    buf[k] = spec[k];
    buf[n - k] = std::conj(spec[k]);
  }
  detail::fft_inplace(buf, true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real() / double(n);
  return out;
}

// Split a signal into windowed frames; frame l covers samples
// [l*hop, l*hop + frame_len).
inline std::vector<SpectralFrame> analyze(std::span<const double> signal,
                                          const FrameConfig& cfg) {
  cfg.validate();
  if (signal.size() < cfg.frame_len)
    throw std::invalid_argument("analyze: signal shorter than one frame");
  const auto w = make_window(cfg.window, cfg.frame_len);
  const std::size_t num_frames = (signal.size() - cfg.frame_len) / cfg.hop + 1;
  std::vector<SpectralFrame> frames(num_frames);
  std::vector<double> seg(cfg.frame_len);
  for (std::size_t l = 0; l < num_frames; ++l) {
    for (std::size_t i = 0; i < cfg.frame_len; ++i)
      seg[i] = signal[l * cfg.hop + i] * w[i];
    frames[l].frame_index = l;
    frames[l].channels.push_back(rfft(seg));
  }
  return frames;
}

// Multichannel analysis; all signals must have equal length.
inline std::vector<SpectralFrame> analyze_multichannel(
    std::span<const std::vector<double>> signals, const FrameConfig& cfg) {
  if (signals.empty()) throw std::invalid_argument("analyze: no channels");
  for (const auto& s : signals)
    if (s.size() != signals[0].size())
      throw std::invalid_argument("analyze: channel lengths differ");
  std::vector<SpectralFrame> frames;
  for (std::size_t ch = 0; ch < signals.size(); ++ch) {
    auto mono = analyze(signals[ch], cfg);
    if (ch == 0) {
      frames = std::move(mono);
    } else {
      for (std::size_t l = 0; l < frames.size(); ++l)
        frames[l].channels.push_back(std::move(mono[l].channels[0]));
    }
  }
  return frames;
}

// Weighted overlap-add of one channel. Output length is
// (num_frames-1)*hop + frame_len; empty input gives an empty signal.
inline std::vector<double> synthesize(std::span<const SpectralFrame> frames,
                                      const FrameConfig& cfg,
                                      std::size_t channel = 0) {
  cfg.validate();
  if (frames.empty()) return {};
  const auto w = make_window(cfg.window, cfg.frame_len);
  const double cola = cola_constant(cfg);
  std::vector<double> out((frames.size() - 1) * cfg.hop + cfg.frame_len, 0.0);
  for (std::size_t l = 0; l < frames.size(); ++l) {
    if (channel >= frames[l].num_channels() || frames[l].num_bins() != cfg.bins())
      throw std::invalid_argument("synthesize: frame shape does not match config");
    const auto seg = irfft(frames[l].channels[channel], cfg.frame_len);
    for (std::size_t i = 0; i < cfg.frame_len; ++i)
      out[l * cfg.hop + i] += seg[i] * w[i] / cola;
  }
  return out;
}

}  // namespace arraysep
