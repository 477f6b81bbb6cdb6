// cguard/wav_io.hpp
//
// Copyright 2026  cguard authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cguard/waveform.hpp"

namespace cguard {

// RIFF/WAVE I/O, deliberately narrow: 16-bit signed PCM, mono, little
// endian. Anything else is rejected with a descriptive error; no
// resampling, no format conversion. Integer samples map to amplitude as
// s / 32768.

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(static_cast<std::uint32_t>(p[0]) |
                                    (static_cast<std::uint32_t>(p[1]) << 8));
}

inline void append_u32le(std::vector<unsigned char>& b, std::uint32_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xff));
  b.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  b.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  b.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

inline void append_u16le(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xff));
  b.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace detail

inline Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("wav: cannot open " + path.string());
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const auto fail = [&](const std::string& why) -> std::runtime_error {
    return std::runtime_error("wav: " + path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t chunk_len = detail::read_u32le(chunk + 4);
    if (pos + 8 + chunk_len > bytes.size()) {
      throw fail("truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw fail("fmt chunk too short");
      format = detail::read_u16le(chunk + 8);
      channels = detail::read_u16le(chunk + 10);
      rate = detail::read_u32le(chunk + 12);
      bits = detail::read_u16le(chunk + 22);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) throw fail("missing fmt or data chunk");
  if (format != 1) {
    throw fail("unsupported encoding (format tag " + std::to_string(format) +
               "); only 16-bit PCM is supported");
  }
  if (channels != 1) {
    throw fail("unsupported channel count " + std::to_string(channels) +
               "; only mono is supported");
  }
  if (bits != 16) {
    throw fail("unsupported sample width " + std::to_string(bits) +
               " bits; only 16-bit PCM is supported");
  }
  if (rate == 0) throw fail("zero sample rate");
  if (data_len % 2 != 0) throw fail("odd data chunk size");

  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  w.samples.resize(data_len / 2);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const std::int16_t s =
        static_cast<std::int16_t>(detail::read_u16le(data + 2 * i));
    w.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return w;
}

inline void write_wav(const std::filesystem::path& path, const Waveform& w) {
  if (w.sample_rate_hz <= 0) {
    throw std::invalid_argument("wav: sample rate must be positive");
  }
  const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
  const std::uint32_t data_len = 2 * n;

  std::vector<unsigned char> bytes;
  bytes.reserve(44 + data_len);
  const auto tag = [&](const char* t) {
    bytes.insert(bytes.end(), t, t + 4);
  };
  tag("RIFF");
  detail::append_u32le(bytes, 36 + data_len);
  tag("WAVE");
  tag("fmt ");
  detail::append_u32le(bytes, 16);
  detail::append_u16le(bytes, 1);  // PCM
  detail::append_u16le(bytes, 1);  // mono
  detail::append_u32le(bytes, static_cast<std::uint32_t>(w.sample_rate_hz));
  detail::append_u32le(bytes,
                       static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  detail::append_u16le(bytes, 2);   // block align
  detail::append_u16le(bytes, 16);  // bits per sample
  tag("data");
  detail::append_u32le(bytes, data_len);
  for (double x : w.samples) {
    const double scaled = std::lround(std::clamp(x, -1.0, 1.0) * 32768.0);
    const auto s = static_cast<std::int16_t>(
        std::clamp(scaled, -32768.0, 32767.0));
    detail::append_u16le(bytes, static_cast<std::uint16_t>(s));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("wav: cannot open " + path.string() +
                             " for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("wav: short write to " + path.string());
  }
}

}  // namespace cguard
