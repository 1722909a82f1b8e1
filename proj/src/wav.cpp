#include "ttk/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ttk/error.hpp"

namespace ttk::wav {

namespace {

template <typename V>
void put(std::ofstream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V get(std::ifstream& is, const char* what) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw RuntimeFailure(std::string("wav: truncated while reading ") + what);
  return v;
}

}  // namespace

void write_wav(const Waveform& w, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw RuntimeFailure("cannot open " + path + " for writing");
  uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * 2);
  uint32_t rate = static_cast<uint32_t>(std::llround(w.sample_rate_hz));
  os.write("RIFF", 4);
  put<uint32_t>(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put<uint32_t>(os, 16);
  put<uint16_t>(os, 1);  // PCM
  put<uint16_t>(os, 1);  // mono
  put<uint32_t>(os, rate);
  put<uint32_t>(os, rate * 2);
  put<uint16_t>(os, 2);
  put<uint16_t>(os, 16);
  os.write("data", 4);
  put<uint32_t>(os, data_bytes);
  for (double s : w.samples) {
    double clamped = std::clamp(s, -1.0, 1.0);
    put<int16_t>(os, static_cast<int16_t>(std::lrint(clamped * 32767.0)));
  }
  if (!os) throw RuntimeFailure("write failed for " + path);
}

Waveform read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeFailure("cannot open wav file " + path);
  char tag[4];
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "RIFF", 4) != 0) throw ValidationError("wav file " + path + ": not RIFF");
  get<uint32_t>(is, "riff size");
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "WAVE", 4) != 0) throw ValidationError("wav file " + path + ": not WAVE");

  Waveform w;
  uint16_t channels = 0, bits = 0;
  bool got_fmt = false;
  while (is.read(tag, 4)) {
    uint32_t size = get<uint32_t>(is, "chunk size");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      uint16_t format = get<uint16_t>(is, "format");
      channels = get<uint16_t>(is, "channels");
      w.sample_rate_hz = get<uint32_t>(is, "rate");
      get<uint32_t>(is, "byte rate");
      get<uint16_t>(is, "block align");
      bits = get<uint16_t>(is, "bits");
      if (format != 1 || channels != 1 || bits != 16)
        throw ValidationError("wav file " + path + ": only mono 16-bit PCM is supported");
      if (size > 16) is.seekg(size - 16, std::ios::cur);
      got_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!got_fmt) throw ValidationError("wav file " + path + ": data chunk before fmt");
      size_t n = size / 2;
      w.samples.resize(n);
      for (size_t i = 0; i < n; ++i) w.samples[i] = static_cast<double>(get<int16_t>(is, "sample")) / 32767.0;
      return w;
    } else {
      is.seekg(size + (size & 1), std::ios::cur);
    }
  }
  throw ValidationError("wav file " + path + ": no data chunk");
}

}  // namespace ttk::wav
