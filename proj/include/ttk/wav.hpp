#pragma once

#include <string>
#include <vector>

namespace ttk::wav {

struct Waveform {
  double sample_rate_hz = 0.0;
  std::vector<double> samples;  // mono, [-1, 1]
};

// Mono 16-bit PCM only.
Waveform read_wav(const std::string& path);
void write_wav(const Waveform& w, const std::string& path);

}  // namespace ttk::wav
