// core/src/wav.cc

// Copyright 2026 The phonepool Authors
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

#include "phonepool/wav.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "phonepool/error.h"

namespace phonepool {

namespace {

std::uint32_t ReadU32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw ValidationError("wav: truncated header");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t ReadU16(std::istream& is) {
  std::array<unsigned char, 2> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 2)) throw ValidationError("wav: truncated header");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::string ReadTag(std::istream& is) {
  char tag[4];
  if (!is.read(tag, 4)) throw ValidationError("wav: truncated header");
  return std::string(tag, 4);
}

void PutU32(std::ostream& os, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

void PutU16(std::ostream& os, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  os.write(b, 2);
}

}  // namespace

Waveform ReadWav(std::istream& is) {
  if (ReadTag(is) != "RIFF") throw ValidationError("wav: missing RIFF tag");
  ReadU32(is);
  if (ReadTag(is) != "WAVE") throw ValidationError("wav: missing WAVE tag");

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  while (true) {
    std::string tag = ReadTag(is);
    std::uint32_t size = ReadU32(is);
    if (tag == "fmt ") {
      std::uint16_t format = ReadU16(is);
      channels = ReadU16(is);
      rate = ReadU32(is);
      ReadU32(is);  // byte rate
      ReadU16(is);  // block align
      bits = ReadU16(is);
      if (size > 16) is.ignore(size - 16 + (size & 1));
      if (format != 1) throw ValidationError("wav: only PCM format is supported");
      if (channels != 1) throw ValidationError("wav: only mono audio is supported");
      if (bits != 16) throw ValidationError("wav: only 16-bit samples are supported");
      have_fmt = true;
    } else if (tag == "data") {
      if (!have_fmt) throw ValidationError("wav: data chunk before fmt chunk");
      std::size_t n = size / 2;
      std::vector<std::int16_t> raw(n);
      if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 2))) {
        throw ValidationError("wav: truncated data chunk");
      }
      Waveform wave;
      wave.sample_rate = static_cast<int>(rate);
      wave.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto u = static_cast<std::uint16_t>(raw[i]);
        // Stored little-endian; this build assumes a little-endian host.
        std::int16_t s;
        std::memcpy(&s, &u, 2);
        wave.samples[i] = s / 32768.0;
      }
      return wave;
    } else {
      is.ignore(size + (size & 1));
      if (!is) throw ValidationError("wav: truncated chunk '" + tag + "'");
    }
  }
}

Waveform ReadWavFile(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open wav file '" + path + "'");
  Waveform wave = ReadWav(is);
  return wave;
}

void WriteWav(std::ostream& os, const Waveform& wave) {
  std::uint32_t data_bytes = static_cast<std::uint32_t>(wave.samples.size() * 2);
  os.write("RIFF", 4);
  PutU32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  PutU32(os, 16);
  PutU16(os, 1);
  PutU16(os, 1);
  PutU32(os, static_cast<std::uint32_t>(wave.sample_rate));
  PutU32(os, static_cast<std::uint32_t>(wave.sample_rate * 2));
  PutU16(os, 2);
  PutU16(os, 16);
  os.write("data", 4);
  PutU32(os, data_bytes);
  for (double x : wave.samples) {
    double scaled = std::round(std::clamp(x, -1.0, 1.0) * 32768.0);
    auto s = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    PutU16(os, static_cast<std::uint16_t>(s));
  }
}

void WriteWavFile(const std::string& path, const Waveform& wave) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write wav file '" + path + "'");
  WriteWav(os, wave);
  if (!os) throw IoError("write failed for '" + path + "'");
}

}  // namespace phonepool
