#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ancsim/errors.hpp"

namespace ancsim {

// ---------------------------------------------------------------------------
// impulse response import: plain text (one coefficient per line) and raw
// 32-bit little-endian float
// ---------------------------------------------------------------------------

inline std::vector<double> load_taps_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  std::vector<double> taps;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip whitespace and skip blank lines / '#' comments
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t\r");
    std::string tok = line.substr(b, e - b + 1);
    if (tok[0] == '#') continue;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw IoError(path, "line " + std::to_string(lineno) + ": not a number: '" + tok + "'");
    if (!std::isfinite(v))
      throw IoError(path, "line " + std::to_string(lineno) + ": non-finite coefficient");
    taps.push_back(v);
  }
  if (taps.empty()) throw IoError(path, "no coefficients found");
  return taps;
}

inline std::vector<double> load_taps_f32le(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty()) throw IoError(path, "empty file");
  if (bytes.size() % 4 != 0)
    throw IoError(path, "size " + std::to_string(bytes.size()) + " is not a multiple of 4 bytes");
  std::vector<double> taps(bytes.size() / 4);
  for (std::size_t i = 0; i < taps.size(); ++i) {
    float f;
    std::memcpy(&f, bytes.data() + 4 * i, 4);
    if (!std::isfinite(f))
      throw IoError(path, "non-finite coefficient at offset " + std::to_string(4 * i));
    taps[i] = static_cast<double>(f);
  }
  return taps;
}

// Format by extension: .txt -> text, .f32/.bin/.raw -> float32 LE.
inline std::vector<double> load_impulse_response(const std::string& path,
                                                 const std::string& format = "auto") {
  std::string fmt = format;
  if (fmt == "auto") {
    const std::string ext = std::filesystem::path(path).extension().string();
    if (ext == ".txt" || ext == ".dat") fmt = "text";
    else if (ext == ".f32" || ext == ".bin" || ext == ".raw") fmt = "f32le";
    else throw IoError(path, "cannot infer impulse response format from extension '" + ext + "'");
  }
  if (fmt == "text") return load_taps_text(path);
  if (fmt == "f32le") return load_taps_f32le(path);
  throw IoError(path, "unknown impulse response format '" + fmt + "'");
}

inline void save_taps_text(const std::string& path, const std::vector<double>& taps) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  char buf[64];
  for (double t : taps) {
    std::snprintf(buf, sizeof buf, "%.17g\n", t);
    out << buf;
  }
  if (!out) throw IoError(path, "write failed");
}

inline void save_taps_f32le(const std::string& path, const std::vector<double>& taps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  for (double t : taps) {
    const float f = static_cast<float>(t);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
  if (!out) throw IoError(path, "write failed");
}

// ---------------------------------------------------------------------------
// mono WAV (PCM16 / float32) for recorded noise
// ---------------------------------------------------------------------------

struct WavData {
  double fs_hz = 0.0;
  std::vector<double> samples;
};

namespace detail {

inline std::uint32_t rd_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace detail

inline WavData load_wav_mono(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open");
  std::vector<unsigned char> b((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
  if (b.size() < 44 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
      std::memcmp(b.data() + 8, "WAVE", 4) != 0)
    throw IoError(path, "not a RIFF/WAVE file");

  std::uint16_t audio_format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  std::size_t data_off = 0, data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::uint32_t chunk_len = detail::rd_u32(b.data() + pos + 4);
    if (std::memcmp(b.data() + pos, "fmt ", 4) == 0) {
      if (pos + 8 + 16 > b.size()) throw IoError(path, "truncated fmt chunk");
      audio_format = detail::rd_u16(b.data() + pos + 8);
      channels = detail::rd_u16(b.data() + pos + 10);
      sample_rate = detail::rd_u32(b.data() + pos + 12);
      bits = detail::rd_u16(b.data() + pos + 22);
    } else if (std::memcmp(b.data() + pos, "data", 4) == 0) {
      data_off = pos + 8;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }
  if (sample_rate == 0) throw IoError(path, "missing fmt chunk");
  if (data_off == 0) throw IoError(path, "missing data chunk");
  if (data_off + data_len > b.size()) throw IoError(path, "data chunk extends past end of file");
  if (channels != 1) throw IoError(path, "expected mono, got " + std::to_string(channels) + " channels");

  WavData wav;
  wav.fs_hz = static_cast<double>(sample_rate);
  if (audio_format == 1 && bits == 16) {
    wav.samples.resize(data_len / 2);
    for (std::size_t i = 0; i < wav.samples.size(); ++i) {
      std::int16_t s;
      std::memcpy(&s, b.data() + data_off + 2 * i, 2);
      wav.samples[i] = static_cast<double>(s) / 32768.0;
    }
  } else if (audio_format == 3 && bits == 32) {
    wav.samples.resize(data_len / 4);
    for (std::size_t i = 0; i < wav.samples.size(); ++i) {
      float f;
      std::memcpy(&f, b.data() + data_off + 4 * i, 4);
      wav.samples[i] = static_cast<double>(f);
    }
  } else {
    throw IoError(path, "unsupported encoding (format " + std::to_string(audio_format) + ", " +
                            std::to_string(bits) + " bit); need PCM16 or float32");
  }
  return wav;
}

inline void save_wav_float32(const std::string& path, const std::vector<double>& samples,
                             double fs_hz) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 4);
  auto w_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto w_u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
  const std::uint32_t rate = static_cast<std::uint32_t>(fs_hz);
  out.write("RIFF", 4);
  w_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  w_u32(16);
  w_u16(3);  // IEEE float
  w_u16(1);  // mono
  w_u32(rate);
  w_u32(rate * 4);
  w_u16(4);
  w_u16(32);
  out.write("data", 4);
  w_u32(data_len);
  for (double s : samples) {
    const float f = static_cast<float>(s);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
  if (!out) throw IoError(path, "write failed");
}

// ---------------------------------------------------------------------------
// CSV with round-trip decimal formatting
// ---------------------------------------------------------------------------

// Shortest decimal form that parses back to the identical double.
inline std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    // try shorter representations for readability
    for (int prec = 1; prec < 17; ++prec) {
      char t[64];
      std::snprintf(t, sizeof t, "%.*g", prec, v);
      std::sscanf(t, "%lf", &back);
      if (back == v) return t;
    }
  }
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : path_(path), out_(path) {
    if (!out_) throw IoError(path, "cannot open for writing");
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format_full(values[i]);
    }
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (out_.fail()) throw IoError(path_, "write failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace ancsim
