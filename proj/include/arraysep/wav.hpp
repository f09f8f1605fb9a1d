#pragma once

// Minimal RIFF/WAV reader and writer: 16-bit PCM and 32-bit IEEE float,
// any channel count, no resampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "arraysep/errors.hpp"

namespace arraysep {

struct WavData {
  double sample_rate = 16000.0;
  std::vector<std::vector<double>> channels;

  std::size_t num_frames() const { return channels.empty() ? 0 : channels[0].size(); }
  std::size_t num_channels() const { return channels.size(); }
};

enum class WavFormat { Pcm16, Float32 };

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return std::uint16_t(p[0] | p[1] << 8);
}

inline void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(char(v & 0xff));
  s.push_back(char((v >> 8) & 0xff));
  s.push_back(char((v >> 16) & 0xff));
  s.push_back(char((v >> 24) & 0xff));
}

inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(char(v & 0xff));
  s.push_back(char((v >> 8) & 0xff));
}

}  // namespace detail

inline WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open WAV file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw io_error("not a RIFF/WAVE file: " + path.string());

  std::uint16_t format = 0, num_channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t len = detail::read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) throw io_error("truncated WAV chunk: " + path.string());
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw io_error("malformed fmt chunk: " + path.string());
      format = detail::read_u16(bytes.data() + body);
      num_channels = detail::read_u16(bytes.data() + body + 2);
      sample_rate = detail::read_u32(bytes.data() + body + 4);
      bits = detail::read_u16(bytes.data() + body + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }
  if (num_channels == 0 || data == nullptr)
    throw io_error("WAV file missing fmt or data chunk: " + path.string());

  WavData wav;
  wav.sample_rate = double(sample_rate);
  wav.channels.assign(num_channels, {});
  if (format == 1 && bits == 16) {
    const std::size_t frames = data_len / (2 * num_channels);
    for (auto& ch : wav.channels) ch.resize(frames);
    for (std::size_t i = 0; i < frames; ++i)
      for (std::size_t c = 0; c < num_channels; ++c) {
        const unsigned char* p = data + 2 * (i * num_channels + c);
        const std::int16_t v = std::int16_t(p[0] | p[1] << 8);
        wav.channels[c][i] = double(v) / 32768.0;
      }
  } else if (format == 3 && bits == 32) {
    const std::size_t frames = data_len / (4 * num_channels);
    for (auto& ch : wav.channels) ch.resize(frames);
    for (std::size_t i = 0; i < frames; ++i)
      for (std::size_t c = 0; c < num_channels; ++c) {
        std::uint32_t u = detail::read_u32(data + 4 * (i * num_channels + c));
        float f;
        std::memcpy(&f, &u, 4);
        wav.channels[c][i] = double(f);
      }
  } else {
    throw io_error("unsupported WAV encoding (want 16-bit PCM or 32-bit float): " +
                   path.string());
  }
  return wav;
}

inline void write_wav(const std::filesystem::path& path, const WavData& wav,
                      WavFormat fmt = WavFormat::Float32) {
  if (wav.channels.empty()) throw io_error("write_wav: no channels: " + path.string());
  const std::size_t frames = wav.num_frames();
  for (const auto& ch : wav.channels)
    if (ch.size() != frames) throw io_error("write_wav: channel lengths differ");
  const std::uint16_t nch = std::uint16_t(wav.num_channels());
  const std::uint16_t bytes_per = fmt == WavFormat::Pcm16 ? 2 : 4;
  const std::uint32_t data_len = std::uint32_t(frames * nch * bytes_per);

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  detail::put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, fmt == WavFormat::Pcm16 ? 1 : 3);
  detail::put_u16(out, nch);
  detail::put_u32(out, std::uint32_t(std::lround(wav.sample_rate)));
  detail::put_u32(out, std::uint32_t(std::lround(wav.sample_rate)) * nch * bytes_per);
  detail::put_u16(out, std::uint16_t(nch * bytes_per));
  detail::put_u16(out, std::uint16_t(8 * bytes_per));
  out += "data";
  detail::put_u32(out, data_len);
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t c = 0; c < nch; ++c) {
      const double v = wav.channels[c][i];
      if (fmt == WavFormat::Pcm16) {
        const double scaled = std::clamp(v, -1.0, 32767.0 / 32768.0) * 32768.0;
        detail::put_u16(out, std::uint16_t(std::int16_t(std::lround(scaled))));
      } else {
        const float f = float(v);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        detail::put_u32(out, u);
      }
    }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw io_error("cannot create WAV file: " + path.string());
  os.write(out.data(), std::streamsize(out.size()));
  if (!os) throw io_error("failed writing WAV file: " + path.string());
}

}  // namespace arraysep
