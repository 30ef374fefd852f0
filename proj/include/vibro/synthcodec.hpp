#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vibro/spectral_basis.hpp"

namespace vibro {

struct SynthesisConfig {
    int max_iterations = 100;
    double tolerance_db = 0.1;  // max per-band |10*log10(power/target)|
    std::uint64_t seed = 0;
    std::size_t n_samples = 0;  // 0 means one second at sample_rate
    double sample_rate = 2800.0;
};

struct ImposeResult {
    Signal signal;
    int iterations = 0;
    double final_error_db = 0.0;
    bool converged = false;
    // Best error seen up to each iteration (nonincreasing); the final entry
    // is the error of the returned signal.
    std::vector<double> error_history;
};

// Shape seeded Gaussian noise so its measured band powers match the target
// (linear domain, entries floored at 1e-10). The signal is decomposed into
// zero-phase subbands, whose measured band powers are exactly quadratic in
// the per-band gains; the gain vector is solved by damped Newton iteration,
// re-decomposing the best iterate when the current subband basis cannot
// reach the target. Every Newton step counts as one iteration. On
// non-convergence the best signal is still returned, flagged.
ImposeResult impose_band_powers(const BandPowers& target, const SynthesisConfig& cfg,
                                const FilterBank& bank);

struct EncodedVibration {
    std::string label;
    double intensity = 0.0;  // 80-200 Hz band power of the original
    std::vector<double> t;   // first k PCA scores
};

// Self-contained decoding context: bank geometry (as centers), the basis
// excerpt, and the power domain. All numeric payload is float32.
struct StreamHeader {
    double sample_rate = 2800.0;
    int n_bands = 0;
    int k = 1;
    PowerDomain domain = PowerDomain::dB;
    std::vector<float> centers;
    std::vector<float> M;
    std::vector<std::vector<float>> V;  // k rows of n_bands
};

struct CodecStream {
    StreamHeader header;
    std::vector<EncodedVibration> entries;
};

struct DecodeResult {
    Signal signal;
    int iterations = 0;
    double final_error_db = 0.0;
    bool converged = false;
};

EncodedVibration encode(const Signal& s, const SpectralBasis& basis, const FilterBank& bank, int k);

StreamHeader make_header(const FilterBank& bank, const SpectralBasis& basis, int k);

// Rebuild the analysis bank from stored centers: the geometric ratio between
// consecutive centers fixes the edges; a single-band header falls back to
// the default 0.17 width.
FilterBank bank_from_header(const StreamHeader& h);

SpectralBasis basis_from_header(const StreamHeader& h);

// reconstruct -> linear targets -> impose -> exact intensity rescale.
DecodeResult decode(const EncodedVibration& e, const StreamHeader& h, const SynthesisConfig& cfg);

struct CompressionStats {
    std::size_t shared_values = 0;     // n_bands * (1 + k): mean spectrum + components
    std::size_t score_values = 0;      // entries * k
    std::size_t total_values = 0;      // shared + scores (the headline count)
    std::size_t intensity_values = 0;  // reported separately: stimuli were pre-equalized
    std::size_t original_samples = 0;
    double ratio = 0.0;  // total_values / original_samples
    double ratio_with_intensity = 0.0;
    struct PerStimulus {
        std::string label;
        int scores = 0;
        std::size_t samples = 0;
    };
    std::vector<PerStimulus> per_stimulus;
};

CompressionStats compression_stats(const CodecStream& stream, const std::vector<Signal>& originals);

void write_vbc(const CodecStream& stream, const std::string& path);
CodecStream read_vbc(const std::string& path);

std::string compression_stats_to_json(const CompressionStats& stats);

}  // namespace vibro
