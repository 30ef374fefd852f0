#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace vibro {

// Uniformly sampled waveform (acceleration or dimensionless voltage).
// Samples are stored as doubles regardless of file precision; filter and
// basis numerics need the headroom.
struct Signal {
    std::vector<double> samples;
    double sample_rate = 0.0;
    std::string label;

    std::size_t size() const { return samples.size(); }
    double duration() const {
        return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// Deterministic noise source. mt19937_64 plus an in-house Box-Muller
// transform so that a given seed yields the same stream on every platform;
// std::normal_distribution is not pinned by the standard.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on (0, 1]; never returns 0 so log() below is safe.
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1p-53;
    }

    // Standard normal deviate.
    double gaussian();

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// i.i.d. standard-normal samples; (seed, n) fully determines the output.
Signal gaussian_noise(Rng& rng, std::size_t n, double sample_rate);

// Pearson product-moment correlation. Lengths must match and be >= 3;
// throws on zero variance.
double pearson_r(const std::vector<double>& a, const std::vector<double>& b);

// Rectangular windows of win_ms every hop_ms; the final partial window is
// discarded. Throws if the signal is shorter than one window.
std::vector<Signal> windows(const Signal& s, double win_ms, double hop_ms);

// Kaiser-windowed-sinc rate conversion (64-tap base, beta = 8.6, support
// widened by the decimation factor). target_rate == sample_rate returns the
// input bitwise unchanged.
Signal resample(const Signal& s, double target_rate);

// File ingestion. WAV (mono PCM16 or float32) by .wav extension; anything
// else is raw little-endian float32 and requires expected_rate. For WAV,
// expected_rate (when given) must match the header.
Signal load_signal(const std::string& path, std::optional<double> expected_rate = std::nullopt);

// Float32 WAV (mono) and raw float32 writers.
void save_wav(const Signal& s, const std::string& path);
void save_raw_f32(const Signal& s, const std::string& path);

}  // namespace vibro
