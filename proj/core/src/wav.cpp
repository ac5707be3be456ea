// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/wav.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace adlb {

void MultichannelWaveform::validate() const {
  ADLB_CHECK(sample_rate > 0, "waveform: sample_rate must be positive");
  for (const auto& ch : channels)
    ADLB_CHECK(static_cast<int64_t>(ch.size()) == num_samples(),
               "waveform: channels must have equal length");
}

namespace {

struct Reader {
  const uint8_t* p;
  size_t n;
  size_t pos = 0;

  void need(size_t k, const char* what) {
    ADLB_CHECK(pos + k <= n, "wav: truncated file while reading " << what);
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = static_cast<uint32_t>(p[pos]) | (static_cast<uint32_t>(p[pos + 1]) << 8) |
                 (static_cast<uint32_t>(p[pos + 2]) << 16) |
                 (static_cast<uint32_t>(p[pos + 3]) << 24);
    pos += 4;
    return v;
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = static_cast<uint16_t>(p[pos] | (p[pos + 1] << 8));
    pos += 2;
    return v;
  }
  void tag(char out[4]) {
    need(4, "chunk tag");
    std::memcpy(out, p + pos, 4);
    pos += 4;
  }
};

}  // namespace

MultichannelWaveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  ADLB_CHECK(in.good(), "wav: cannot open " << path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  Reader r{bytes.data(), bytes.size()};

  char tag[4];
  r.tag(tag);
  ADLB_CHECK(std::memcmp(tag, "RIFF", 4) == 0, "wav: missing RIFF header in " << path);
  r.u32("riff size");
  r.tag(tag);
  ADLB_CHECK(std::memcmp(tag, "WAVE", 4) == 0, "wav: not a WAVE file: " << path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;
  const uint8_t* data_ptr = nullptr;
  uint32_t data_len = 0;

  while (r.pos + 8 <= r.n) {
    r.tag(tag);
    uint32_t len = r.u32("chunk size");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      ADLB_CHECK(len >= 16, "wav: fmt chunk too short");
      size_t end = r.pos + len;
      format = r.u16("format");
      channels = r.u16("channels");
      sample_rate = r.u32("sample rate");
      r.u32("byte rate");
      r.u16("block align");
      bits = r.u16("bits per sample");
      if (format == 0xFFFE && len >= 40) {  // WAVE_FORMAT_EXTENSIBLE
        r.u16("cbSize");
        r.u16("valid bits");
        r.u32("channel mask");
        format = r.u16("subformat guid");
      }
      r.pos = end + (len & 1);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      r.need(len, "data chunk");
      data_ptr = r.p + r.pos;
      data_len = len;
      r.pos += len + (len & 1);
    } else {
      r.need(len, "chunk body");
      r.pos += len + (len & 1);
    }
  }
  ADLB_CHECK(have_fmt, "wav: missing fmt chunk in " << path);
  ADLB_CHECK(data_ptr != nullptr, "wav: missing data chunk in " << path);
  ADLB_CHECK(channels > 0, "wav: zero channels in " << path);
  ADLB_CHECK(sample_rate > 0, "wav: zero sample rate in " << path);

  MultichannelWaveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  w.channels.resize(channels);

  if (format == 1) {
    ADLB_CHECK(bits == 16, "wav: unsupported PCM bit depth " << bits << " in " << path
                                                             << " (PCM16 only)");
    uint32_t frames = data_len / (2u * channels);
    for (auto& ch : w.channels) ch.resize(frames);
    for (uint32_t i = 0; i < frames; ++i)
      for (uint16_t c = 0; c < channels; ++c) {
        const uint8_t* q = data_ptr + (static_cast<size_t>(i) * channels + c) * 2;
        int16_t s = static_cast<int16_t>(q[0] | (q[1] << 8));
        w.channels[c][i] = static_cast<double>(s) / 32768.0;
      }
  } else if (format == 3) {
    ADLB_CHECK(bits == 32, "wav: unsupported float bit depth " << bits << " in " << path);
    uint32_t frames = data_len / (4u * channels);
    for (auto& ch : w.channels) ch.resize(frames);
    for (uint32_t i = 0; i < frames; ++i)
      for (uint16_t c = 0; c < channels; ++c) {
        float f;
        std::memcpy(&f, data_ptr + (static_cast<size_t>(i) * channels + c) * 4, 4);
        w.channels[c][i] = static_cast<double>(f);
      }
  } else {
    ADLB_CHECK(false, "wav: unsupported codec tag " << format << " in " << path
                                                    << " (PCM16 or IEEE float32)");
  }
  return w;
}

void write_wav(const MultichannelWaveform& w, const std::string& path, WavCodec codec) {
  w.validate();
  ADLB_CHECK(w.num_channels() > 0, "wav: nothing to write");
  const uint16_t channels = static_cast<uint16_t>(w.num_channels());
  const uint32_t frames = static_cast<uint32_t>(w.num_samples());
  const uint16_t bytes_per = codec == WavCodec::kFloat32 ? 4 : 2;
  const uint32_t data_len = frames * channels * bytes_per;

  std::ofstream out(path, std::ios::binary);
  ADLB_CHECK(out.good(), "wav: cannot write " << path);

  auto put_u32 = [&](uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
  };
  auto put_u16 = [&](uint16_t v) {
    uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
    out.write(reinterpret_cast<char*>(b), 2);
  };

  out.write("RIFF", 4);
  put_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(codec == WavCodec::kFloat32 ? 3 : 1);
  put_u16(channels);
  put_u32(static_cast<uint32_t>(w.sample_rate));
  put_u32(static_cast<uint32_t>(w.sample_rate) * channels * bytes_per);
  put_u16(static_cast<uint16_t>(channels * bytes_per));
  put_u16(static_cast<uint16_t>(bytes_per * 8));
  out.write("data", 4);
  put_u32(data_len);

  if (codec == WavCodec::kFloat32) {
    std::vector<float> buf(static_cast<size_t>(frames) * channels);
    for (uint32_t i = 0; i < frames; ++i)
      for (uint16_t c = 0; c < channels; ++c)
        buf[static_cast<size_t>(i) * channels + c] =
            static_cast<float>(w.channels[c][i]);
    out.write(reinterpret_cast<const char*>(buf.data()), data_len);
  } else {
    std::vector<int16_t> buf(static_cast<size_t>(frames) * channels);
    for (uint32_t i = 0; i < frames; ++i)
      for (uint16_t c = 0; c < channels; ++c) {
        double v = std::clamp(w.channels[c][i], -1.0, 32767.0 / 32768.0);
        buf[static_cast<size_t>(i) * channels + c] =
            static_cast<int16_t>(std::lround(v * 32768.0));
      }
    out.write(reinterpret_cast<const char*>(buf.data()), data_len);
  }
  ADLB_CHECK(out.good(), "wav: short write " << path);
}

}  // namespace adlb
