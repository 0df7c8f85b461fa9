#include "wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace intona {

namespace {

void put_u32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t get_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Status::Io, "cannot open wav file: " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  require(data.size() >= 44 && std::memcmp(p, "RIFF", 4) == 0 &&
              std::memcmp(p + 8, "WAVE", 4) == 0,
          Status::Format, "not a RIFF/WAVE file: " + path);

  size_t pos = 12;
  int sample_rate = 0;
  bool have_fmt = false;
  Waveform w;
  while (pos + 8 <= data.size()) {
    const char* id = data.data() + pos;
    const uint32_t size = get_u32(p + pos + 4);
    pos += 8;
    if (pos + size > data.size())
      fail(Status::Format, "truncated chunk in wav file: " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      require(size >= 16, Status::Format, "short fmt chunk: " + path);
      const uint16_t format = get_u16(p + pos);
      const uint16_t channels = get_u16(p + pos + 2);
      sample_rate = static_cast<int>(get_u32(p + pos + 4));
      const uint16_t bits = get_u16(p + pos + 14);
      require(format == 1 && channels == 1 && bits == 16, Status::Format,
              "wav must be PCM16 mono: " + path);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      require(have_fmt, Status::Format, "data chunk before fmt: " + path);
      const size_t n = size / 2;
      w.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        const int16_t v =
            static_cast<int16_t>(get_u16(p + pos + 2 * i));
        w.samples[i] = static_cast<double>(v) / 32768.0;
      }
      w.sample_rate = sample_rate;
      return w;
    }
    pos += size + (size & 1);
  }
  fail(Status::Format, "wav file has no data chunk: " + path);
}

void write_wav(const std::string& path, const Waveform& w) {
  require(w.sample_rate > 0, Status::InvalidArgument,
          "write_wav: sample rate must be positive");
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  std::string out;
  out.reserve(44 + 2 * n);
  out.append("RIFF");
  put_u32(out, 36 + 2 * n);
  out.append("WAVE");
  out.append("fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(w.sample_rate));
  put_u32(out, static_cast<uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.append("data");
  put_u32(out, 2 * n);
  for (double s : w.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    const auto v = static_cast<int16_t>(std::lrint(c * 32767.0));
    put_u16(out, static_cast<uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), Status::Io, "cannot write wav file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  require(f.good(), Status::Io, "short write on wav file: " + path);
}

}  // namespace intona
