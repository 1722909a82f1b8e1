#include "ttk/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>

#include "ttk/error.hpp"

namespace ttk::feat {

// ---------------------------------------------------------------------------
// Hashed text embedding
// ---------------------------------------------------------------------------

namespace {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

uint64_t remix(uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

void hash_into(const std::string& term, std::vector<double>& acc) {
  uint64_t h = fnv1a(term);
  size_t bucket = h % acc.size();
  double sign = (remix(h) >> 63) ? -1.0 : 1.0;
  acc[bucket] += sign;
}

}  // namespace

FeatureVector embed_text_hashed(const std::vector<std::string>& tokens, int dim) {
  if (dim < 1) throw ValidationError("embed_text_hashed: dim must be >= 1");
  FeatureVector out;
  out.provider_id = "hashed-v1";
  out.values.assign(static_cast<size_t>(dim), 0.0);
  if (tokens.empty()) {
    out.empty_input = true;
    return out;
  }
  for (const auto& t : tokens) hash_into(t, out.values);
  for (size_t i = 0; i + 1 < tokens.size(); ++i) hash_into(tokens[i] + "\x1f" + tokens[i + 1], out.values);
  double norm = 0;
  for (double v : out.values) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0)
    for (double& v : out.values) v /= norm;
  return out;
}

// ---------------------------------------------------------------------------
// Spectral audio features
// ---------------------------------------------------------------------------

namespace {

void fft_radix2(std::vector<std::complex<double>>& a) {
  size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * 3.14159265358979323846 / static_cast<double>(len);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        auto u = a[i + k];
        auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// B+2 mel-spaced edge frequencies from 0 to Nyquist.
std::vector<double> mel_points(double sample_rate_hz, int bands) {
  double hi = hz_to_mel(sample_rate_hz / 2.0);
  std::vector<double> pts(static_cast<size_t>(bands) + 2);
  for (int i = 0; i < bands + 2; ++i) pts[static_cast<size_t>(i)] = mel_to_hz(hi * i / (bands + 1));
  return pts;
}

}  // namespace

std::vector<double> filterbank_centers_hz(double sample_rate_hz, const AudioConfig& config) {
  auto pts = mel_points(sample_rate_hz, config.bands);
  return std::vector<double>(pts.begin() + 1, pts.end() - 1);
}

FeatureVector audio_spectral_features(const std::vector<double>& samples, double sample_rate_hz,
                                      const AudioConfig& config) {
  if (sample_rate_hz <= 0) throw ValidationError("audio_spectral_features: sample rate must be positive");
  if (config.bands < 1) throw ValidationError("audio_spectral_features: bands must be >= 1");
  int bands = config.bands;
  FeatureVector out;
  out.provider_id = "spectral-v1";
  out.values.assign(static_cast<size_t>(2 * bands), 0.0);
  if (samples.empty()) {
    out.empty_input = true;
    return out;
  }

  auto frame_len = static_cast<size_t>(std::max<long long>(1, std::llround(config.window_s * sample_rate_hz)));
  auto hop = static_cast<size_t>(std::max<long long>(1, std::llround(config.hop_s * sample_rate_hz)));
  size_t num_frames = samples.size() >= frame_len ? 1 + (samples.size() - frame_len) / hop : 1;

  size_t nfft = 1;
  while (nfft < frame_len) nfft <<= 1;
  size_t nbins = nfft / 2 + 1;

  std::vector<double> window(frame_len);
  for (size_t i = 0; i < frame_len; ++i)
    window[i] = frame_len > 1 ? 0.54 - 0.46 * std::cos(2.0 * 3.14159265358979323846 * i / (frame_len - 1)) : 1.0;

  // triangular filters as (bin, weight) over FFT bins
  auto pts = mel_points(sample_rate_hz, bands);
  double bin_hz = sample_rate_hz / static_cast<double>(nfft);
  std::vector<std::vector<double>> filters(static_cast<size_t>(bands), std::vector<double>(nbins, 0.0));
  for (int b = 0; b < bands; ++b) {
    double lo = pts[b], mid = pts[b + 1], hi = pts[b + 2];
    for (size_t k = 0; k < nbins; ++k) {
      double f = k * bin_hz;
      double w = 0.0;
      if (f > lo && f < mid)
        w = (f - lo) / (mid - lo);
      else if (f == mid)
        w = 1.0;
      else if (f > mid && f < hi)
        w = (hi - f) / (hi - mid);
      filters[b][k] = w;
    }
  }

  std::vector<double> sum(static_cast<size_t>(bands), 0.0), sumsq(static_cast<size_t>(bands), 0.0);
  std::vector<std::complex<double>> buf(nfft);
  std::vector<double> power(nbins);
  for (size_t fr = 0; fr < num_frames; ++fr) {
    size_t start = fr * hop;
    for (size_t i = 0; i < nfft; ++i) {
      double s = (i < frame_len && start + i < samples.size()) ? samples[start + i] * window[i] : 0.0;
      buf[i] = {s, 0.0};
    }
    fft_radix2(buf);
    for (size_t k = 0; k < nbins; ++k) power[k] = std::norm(buf[k]);
    for (int b = 0; b < bands; ++b) {
      double e = 0;
      for (size_t k = 0; k < nbins; ++k) e += filters[b][k] * power[k];
      double loge = std::log(std::max(e, config.log_floor));
      sum[b] += loge;
      sumsq[b] += loge * loge;
    }
  }
  for (int b = 0; b < bands; ++b) {
    double mean = sum[b] / static_cast<double>(num_frames);
    double var = std::max(0.0, sumsq[b] / static_cast<double>(num_frames) - mean * mean);
    out.values[static_cast<size_t>(b)] = mean;
    out.values[static_cast<size_t>(bands + b)] = std::sqrt(var);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Precomputed embeddings
// ---------------------------------------------------------------------------

std::optional<FeatureVector> load_precomputed(const corpus::SpeakerTrack& track, double onset, double offset) {
  auto it = track.embeddings.find(corpus::span_key(onset, offset));
  if (it == track.embeddings.end()) return std::nullopt;
  FeatureVector out;
  out.provider_id = "precomputed";
  out.values = it->second;
  return out;
}

// ---------------------------------------------------------------------------
// Motion windows
// ---------------------------------------------------------------------------

MotionWindow empty_motion_window(int frame_count, int joint_count, double frame_rate_hz) {
  MotionWindow w;
  w.frame_count = frame_count;
  w.joint_count = joint_count;
  w.frame_rate_hz = frame_rate_hz;
  w.frames.assign(static_cast<size_t>(frame_count) * joint_count * 3, 0.0f);
  w.mask.assign(static_cast<size_t>(frame_count), 0);
  return w;
}

MotionWindow extract_motion_window(const corpus::MotionSequence& motion, double onset, double offset,
                                   double max_seconds, const std::vector<std::string>& upper_body_joints) {
  if (motion.frame_rate_hz <= 0) throw ValidationError("extract_motion_window: frame rate must be positive");
  std::vector<std::string> joints = upper_body_joints.empty() ? motion.joint_names : upper_body_joints;
  std::vector<int> joint_idx;
  int pelvis_local = -1;
  for (const auto& name : joints) {
    auto it = std::find(motion.joint_names.begin(), motion.joint_names.end(), name);
    if (it == motion.joint_names.end())
      throw ValidationError("extract_motion_window: joint '" + name + "' not in motion sequence");
    if (name == "pelvis") pelvis_local = static_cast<int>(joint_idx.size());
    joint_idx.push_back(static_cast<int>(it - motion.joint_names.begin()));
  }
  if (pelvis_local < 0) throw ValidationError("extract_motion_window: joint list must include 'pelvis'");

  double rate = motion.frame_rate_hz;
  int T = static_cast<int>(std::llround(max_seconds * rate));
  int J = static_cast<int>(joint_idx.size());
  MotionWindow out = empty_motion_window(T, J, rate);

  double start = std::max(onset, offset - max_seconds);
  // frames with start <= f/rate < offset
  auto begin = static_cast<int64_t>(std::ceil(start * rate - 1e-9));
  auto end = static_cast<int64_t>(std::ceil(offset * rate - 1e-9));
  begin = std::max<int64_t>(begin, 0);
  end = std::min<int64_t>(end, motion.frame_count());
  if (end - begin > T) begin = end - T;
  int64_t count = std::max<int64_t>(0, end - begin);

  int pelvis_src = joint_idx[static_cast<size_t>(pelvis_local)];
  int src_J = motion.joint_count();
  for (int64_t i = 0; i < count; ++i) {
    const float* src = motion.frames.data() + (begin + i) * src_J * 3;
    const float* pelvis = src + pelvis_src * 3;
    int64_t dst_f = T - count + i;
    float* dst = out.frames.data() + dst_f * J * 3;
    for (int j = 0; j < J; ++j) {
      const float* p = src + joint_idx[static_cast<size_t>(j)] * 3;
      dst[j * 3 + 0] = p[0] - pelvis[0];
      dst[j * 3 + 1] = p[1] - pelvis[1];
      dst[j * 3 + 2] = p[2] - pelvis[2];
    }
    out.mask[static_cast<size_t>(dst_f)] = 1;
  }
  return out;
}

}  // namespace ttk::feat
