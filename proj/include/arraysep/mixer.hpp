#pragma once

// Synthetic-scene generator: spatializes clean sources through the far-field
// delay model, adds stationary background noise, and keeps the clean
// references for metric computation. Deterministic for a fixed seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "arraysep/errors.hpp"
#include "arraysep/lss.hpp"
#include "arraysep/metrics.hpp"
#include "arraysep/stft.hpp"
#include "arraysep/wav.hpp"

namespace arraysep {

enum class NoiseKind { White, Pink, Wav };

struct SurrogateSpec {
  double f0_hz = 160.0;
  std::uint64_t seed = 1;
  double lead_in_s = 0.6;  // silence before the first burst
};

struct SourceSpec {
  std::string wav_path;  // empty: generate a surrogate voice
  Vec3 direction{1.0, 0.0, 0.0};
  double gain_db = 0.0;
  SurrogateSpec surrogate;
};

struct NoiseSpec {
  NoiseKind kind = NoiseKind::White;
  double level_db = -20.0;  // relative to mixed speech RMS; absolute if silent
  std::string wav_path;
};

struct SceneSpec {
  std::vector<Vec3> mic_positions;
  std::vector<SourceSpec> sources;
  NoiseSpec noise;
  double sample_rate = 16000.0;
  double speed_of_sound = 343.0;
  std::uint64_t seed = 1;
  double duration_s = 6.0;  // used when every source is a surrogate
  // model mismatch between the rendered scene and the declared geometry
  double direction_jitter_deg = 0.0;
  double mic_gain_spread_db = 0.0;
  std::optional<double> target_input_segsnr_db;

  ArrayScene geometry() const {
    ArrayScene scene;
    scene.mic_positions = mic_positions;
    for (const auto& s : sources) scene.source_directions.push_back(s.direction);
    scene.speed_of_sound = speed_of_sound;
    scene.sample_rate = sample_rate;
    return scene;
  }

  void validate() const {
    geometry().validate();
    if (sources.empty()) throw std::invalid_argument("SceneSpec: needs at least one source");
    if (!(duration_s > 0.0)) throw std::invalid_argument("SceneSpec: duration must be positive");
    if (!std::isfinite(noise.level_db))
      throw std::invalid_argument("SceneSpec: noise level must be finite");
  }
};

namespace detail {

inline std::uint64_t substream(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 step keeps the per-purpose streams decorrelated
  std::uint64_t z = seed + salt * 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline double signal_rms(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : std::sqrt(acc / double(x.size()));
}

// Rotate a unit vector by a fixed angle around a seeded perpendicular axis.
inline Vec3 jitter_direction(const Vec3& u, double degrees, std::mt19937_64& rng) {
  if (degrees == 0.0) return u;
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 r{normal(rng), normal(rng), normal(rng)};
  const double proj = dot(r, u);
  Vec3 v{r[0] - proj * u[0], r[1] - proj * u[1], r[2] - proj * u[2]};
  const double vn = norm(v);
  if (vn < 1e-12) return u;
  for (auto& c : v) c /= vn;
  const double th = degrees * std::numbers::pi / 180.0;
  Vec3 out{std::cos(th) * u[0] + std::sin(th) * v[0],
           std::cos(th) * u[1] + std::sin(th) * v[1],
           std::cos(th) * u[2] + std::sin(th) * v[2]};
  const double on = norm(out);
  for (auto& c : out) c /= on;
  return out;
}

}  // namespace detail

// Deterministic speech surrogate: harmonic bursts with pitch wobble, short
// noise bursts in between, and a silent lead-in so noise estimators can seed.
inline std::vector<double> make_voice_surrogate(const SurrogateSpec& spec,
                                                double duration_s, double sample_rate) {
  const std::size_t len = std::size_t(duration_s * sample_rate);
  std::vector<double> out(len, 0.0);
  std::mt19937_64 rng(detail::substream(spec.seed, 0x766f6963ull));
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  const std::size_t max_harm =
      std::max<std::size_t>(1, std::size_t(3400.0 / spec.f0_hz));
  std::vector<double> harm_gain(max_harm), harm_phase(max_harm);
  for (std::size_t h = 0; h < max_harm; ++h) {
    harm_gain[h] = (0.7 + 0.3 * uni(rng)) / std::pow(double(h + 1), 0.8);
    harm_phase[h] = 2.0 * std::numbers::pi * uni(rng);
  }

  std::size_t pos = std::size_t(spec.lead_in_s * sample_rate);
  int burst_index = 0;
  while (pos < len) {
    const bool consonant = burst_index % 3 == 2;
    const double seg_s = consonant ? 0.04 + 0.05 * uni(rng) : 0.15 + 0.2 * uni(rng);
    const std::size_t seg = std::min(len - pos, std::size_t(seg_s * sample_rate));
    const std::size_t ramp = std::min<std::size_t>(seg / 2, std::size_t(0.02 * sample_rate));
    if (consonant) {
      std::normal_distribution<double> normal(0.0, 1.0);
      double prev = 0.0;
      for (std::size_t i = 0; i < seg; ++i) {
        const double w = normal(rng);
        double env = 1.0;
        if (i < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * double(i) / double(ramp));
        if (seg - i <= ramp)
          env = 0.5 - 0.5 * std::cos(std::numbers::pi * double(seg - i) / double(ramp));
        out[pos + i] = 0.25 * env * (w - prev);  // first difference tilts the burst high
        prev = w;
      }
    } else {
      const double f0 = spec.f0_hz * (0.9 + 0.2 * uni(rng));
      const double vib_phase = 2.0 * std::numbers::pi * uni(rng);
      double phase = 0.0;
      for (std::size_t i = 0; i < seg; ++i) {
        const double t = double(i) / sample_rate;
        const double f = f0 * (1.0 + 0.04 * std::sin(2.0 * std::numbers::pi * 4.0 * t + vib_phase));
        phase += 2.0 * std::numbers::pi * f / sample_rate;
        double env = 1.0;
        if (i < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * double(i) / double(ramp));
        if (seg - i <= ramp)
          env = 0.5 - 0.5 * std::cos(std::numbers::pi * double(seg - i) / double(ramp));
        double v = 0.0;
        for (std::size_t h = 0; h < max_harm; ++h)
          v += harm_gain[h] * std::sin(double(h + 1) * phase + harm_phase[h]);
        out[pos + i] = env * v;
      }
    }
    pos += seg;
    const double gap_s = consonant ? 0.02 + 0.03 * uni(rng) : 0.08 + 0.12 * uni(rng);
    pos += std::size_t(gap_s * sample_rate);
    ++burst_index;
  }

  const double rms = detail::signal_rms(out);
  if (rms > 0.0)
    for (auto& v : out) v *= 0.1 / rms;
  return out;
}

inline std::vector<double> make_white_noise(std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(len);
  for (auto& v : out) v = normal(rng);
  return out;
}

// Pink noise: white noise through a ladder of pole-zero shelving sections,
// two pairs per decade from 15 Hz, approximating -3 dB/octave.
inline std::vector<double> make_pink_noise(std::size_t len, std::uint64_t seed,
                                           double sample_rate) {
  std::vector<double> x = make_white_noise(len, seed);
  const double pairs_per_decade = 2.0;
  const double f_lo = 15.0;
  const double f_hi = 0.4 * sample_rate;
  const double k2 = 2.0 * sample_rate;
  double f_pole = f_lo;
  while (f_pole < f_hi) {
    const double f_zero = f_pole * std::pow(10.0, 0.5 / pairs_per_decade);
    const double wp = k2 * std::tan(std::numbers::pi * f_pole / sample_rate);
    const double wz = k2 * std::tan(std::numbers::pi * std::min(f_zero, 0.49 * sample_rate) / sample_rate);
    const double b0 = (wp / wz) * (wz + k2) / (wp + k2);
    const double b1 = (wp / wz) * (wz - k2) / (wp + k2);
    const double a1 = (wp - k2) / (wp + k2);
    double x1 = 0.0, y1 = 0.0;
    for (auto& v : x) {
      const double y = b0 * v + b1 * x1 - a1 * y1;
      x1 = v;
      y1 = y;
      v = y;
    }
    f_pole *= std::pow(10.0, 1.0 / pairs_per_decade);
  }
  return x;
}

// Render one source at every microphone: frequency-domain fractional delay
// (phase ramp) with unit gain, relative to the array centroid.
inline std::vector<std::vector<double>> spatialize(std::span<const double> source,
                                                   const Vec3& direction,
                                                   const ArrayScene& scene) {
  if (std::abs(norm(direction) - 1.0) > 1e-9)
    throw std::invalid_argument("spatialize: direction must be a unit vector");
  const std::size_t len = source.size();
  std::size_t padded = 1;
  while (padded < len + 256) padded <<= 1;
  std::vector<double> buf(padded, 0.0);
  std::copy(source.begin(), source.end(), buf.begin());
  const auto spec = rfft(buf);

  ArrayScene probe = scene;
  probe.source_directions = {direction};
  std::vector<std::vector<double>> out(scene.num_mics());
  std::vector<cplx> shifted(spec.size());
  for (std::size_t n = 0; n < scene.num_mics(); ++n) {
    const double tau = probe.delay(n, 0);
    for (std::size_t k = 0; k < spec.size(); ++k) {
      const double f = double(k) * scene.sample_rate / double(padded);
      shifted[k] = spec[k] * std::polar(1.0, -2.0 * std::numbers::pi * f * tau);
    }
    auto time = irfft(shifted, padded);
    time.resize(len);
    out[n] = std::move(time);
  }
  return out;
}

struct MixOutput {
  std::vector<std::vector<double>> mixture;    // N channels
  std::vector<std::vector<double>> references; // M clean signals
  double sample_rate = 16000.0;
  nlohmann::json metadata;
};

inline MixOutput mix(const SceneSpec& spec,
                     const std::filesystem::path& base_dir = ".") {
  spec.validate();
  const ArrayScene declared = spec.geometry();
  const std::size_t num_mics = declared.num_mics();
  const std::size_t num_sources = spec.sources.size();

  // clean sources
  std::vector<std::vector<double>> clean(num_sources);
  std::size_t len = 0;
  for (std::size_t m = 0; m < num_sources; ++m) {
    const auto& src = spec.sources[m];
    if (!src.wav_path.empty()) {
      const auto path = std::filesystem::path(src.wav_path).is_absolute()
                            ? std::filesystem::path(src.wav_path)
                            : base_dir / src.wav_path;
      WavData wav = read_wav(path);
      if (wav.sample_rate != spec.sample_rate)
        throw io_error("source sample rate mismatch: " + path.string());
      clean[m] = wav.channels[0];
    } else {
      SurrogateSpec sspec = src.surrogate;
      sspec.seed = detail::substream(spec.seed, 0x73726300ull + m) ^ sspec.seed;
      clean[m] = make_voice_surrogate(sspec, spec.duration_s, spec.sample_rate);
    }
    const double g = std::pow(10.0, src.gain_db / 20.0);
    for (auto& v : clean[m]) v *= g;
    len = std::max(len, clean[m].size());
  }
  for (auto& c : clean) c.resize(len, 0.0);

  // physical rendering may deviate from the declared geometry
  std::mt19937_64 rng(detail::substream(spec.seed, 0x6d697863ull));
  std::vector<double> mic_gain(num_mics, 1.0);
  if (spec.mic_gain_spread_db > 0.0) {
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    for (auto& g : mic_gain) g = std::pow(10.0, spec.mic_gain_spread_db * uni(rng) / 20.0);
  }
  std::vector<Vec3> physical_dirs(num_sources);
  for (std::size_t m = 0; m < num_sources; ++m)
    physical_dirs[m] =
        detail::jitter_direction(spec.sources[m].direction, spec.direction_jitter_deg, rng);

  std::vector<std::vector<double>> speech(num_mics, std::vector<double>(len, 0.0));
  std::vector<std::vector<double>> self_at_mic0(num_sources);
  for (std::size_t m = 0; m < num_sources; ++m) {
    auto rendered = spatialize(clean[m], physical_dirs[m], declared);
    for (std::size_t n = 0; n < num_mics; ++n)
      for (std::size_t i = 0; i < len; ++i) speech[n][i] += mic_gain[n] * rendered[n][i];
    for (auto& v : rendered[0]) v *= mic_gain[0];
    self_at_mic0[m] = std::move(rendered[0]);
  }

  // background noise, independent per channel, normalized to exact RMS
  double speech_rms = 0.0;
  for (const auto& ch : speech) {
    const double r = detail::signal_rms(ch);
    speech_rms += r * r / double(num_mics);
  }
  speech_rms = std::sqrt(speech_rms);
  std::vector<std::vector<double>> noise(num_mics);
  for (std::size_t n = 0; n < num_mics; ++n) {
    const std::uint64_t ns = detail::substream(spec.seed, 0x6e6f6900ull + n);
    switch (spec.noise.kind) {
      case NoiseKind::White: noise[n] = make_white_noise(len, ns); break;
      case NoiseKind::Pink: noise[n] = make_pink_noise(len, ns, spec.sample_rate); break;
      case NoiseKind::Wav: {
        const auto path = std::filesystem::path(spec.noise.wav_path).is_absolute()
                              ? std::filesystem::path(spec.noise.wav_path)
                              : base_dir / spec.noise.wav_path;
        WavData wav = read_wav(path);
        if (wav.sample_rate != spec.sample_rate)
          throw io_error("noise sample rate mismatch: " + path.string());
        const auto& ch = wav.channels[n % wav.num_channels()];
        if (ch.size() < len) throw io_error("noise recording shorter than the scene: " + path.string());
        noise[n].assign(ch.begin(), ch.begin() + std::ptrdiff_t(len));
        break;
      }
    }
    const double r = detail::signal_rms(noise[n]);
    if (r > 0.0)
      for (auto& v : noise[n]) v /= r;
  }

  const double base_rms = speech_rms > 0.0 ? speech_rms : 1.0;
  double noise_rms = base_rms * std::pow(10.0, spec.noise.level_db / 20.0);

  SegSnrOptions seg_opt;
  auto mean_input_segsnr = [&](double nr) {
    std::vector<double> mic0(len);
    for (std::size_t i = 0; i < len; ++i) mic0[i] = speech[0][i] + nr * noise[0][i];
    double acc = 0.0;
    for (std::size_t m = 0; m < num_sources; ++m)
      acc += segsnr(self_at_mic0[m], mic0, seg_opt) / double(num_sources);
    return acc;
  };

  if (spec.target_input_segsnr_db && speech_rms > 0.0) {
    double lo = base_rms * 1e-5, hi = base_rms * 1e3;
    for (int it = 0; it < 60; ++it) {
      const double mid = std::sqrt(lo * hi);
      if (mean_input_segsnr(mid) > *spec.target_input_segsnr_db) lo = mid; else hi = mid;
    }
    noise_rms = std::sqrt(lo * hi);
  }

  MixOutput out;
  out.sample_rate = spec.sample_rate;
  out.mixture.assign(num_mics, std::vector<double>(len));
  for (std::size_t n = 0; n < num_mics; ++n)
    for (std::size_t i = 0; i < len; ++i)
      out.mixture[n][i] = speech[n][i] + noise_rms * noise[n][i];
  out.references = std::move(clean);

  nlohmann::json meta;
  meta["seed"] = spec.seed;
  meta["num_mics"] = num_mics;
  meta["num_sources"] = num_sources;
  meta["sample_rate"] = spec.sample_rate;
  meta["noise_rms"] = noise_rms;
  meta["noise_level_db_applied"] =
      speech_rms > 0.0 ? 20.0 * std::log10(noise_rms / speech_rms)
                       : 20.0 * std::log10(noise_rms);
  meta["mic_gains"] = mic_gain;
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& d : physical_dirs) dirs.push_back(std::vector<double>{d[0], d[1], d[2]});
  meta["physical_directions"] = dirs;
  if (speech_rms > 0.0) {
    nlohmann::json snrs = nlohmann::json::array();
    std::vector<double> mic0(len);
    for (std::size_t i = 0; i < len; ++i)
      mic0[i] = speech[0][i] + noise_rms * noise[0][i];
    for (std::size_t m = 0; m < num_sources; ++m)
      snrs.push_back(segsnr(self_at_mic0[m], mic0, seg_opt));
    meta["input_segsnr_db"] = snrs;
  }
  out.metadata = std::move(meta);
  return out;
}

}  // namespace arraysep
