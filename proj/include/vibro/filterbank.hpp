#pragma once

#include <array>
#include <string>
#include <vector>

#include "vibro/signal.hpp"

namespace vibro {

// One normalized second-order section: y = b0*x + b1*x1 + b2*x2 - a1*y1 - a2*y2.
struct Biquad {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

// 2nd-order Butterworth bandpass (4 poles, one second-order-section pair),
// unity gain at the band center.
struct BandFilter {
    double f_low = 0.0;
    double f_high = 0.0;
    double center = 0.0;  // geometric mean of the edges
    std::array<Biquad, 2> sos{};
};

// Identity used to gate comparisons of band-power vectors, scores, bases.
struct BankId {
    int n_bands = 0;
    double f_min = 0.0;
    double f_max = 0.0;
    double jnd = 0.0;
    double sample_rate = 0.0;
    bool operator==(const BankId&) const = default;
};

struct FilterBank {
    std::vector<BandFilter> bands;
    double f_min = 0.0;
    double f_max = 0.0;
    double jnd = 0.0;
    double sample_rate = 0.0;

    std::size_t size() const { return bands.size(); }
    BankId id() const {
        return BankId{static_cast<int>(bands.size()), f_min, f_max, jnd, sample_rate};
    }
    std::vector<double> centers() const;
};

enum class PowerDomain { linear, dB };

constexpr double kLinearPowerFloor = 1e-10;
constexpr double kDbPowerFloor = -100.0;

// Per-band mean-square powers. `bank` records which analysis produced the
// values; vectors are comparable only under identical identities.
struct BandPowers {
    std::vector<double> values;
    PowerDomain domain = PowerDomain::linear;
    BankId bank;
};

// Logarithmically spaced bank: band count N = ceil(ln(f_max/f_min)/ln(1+jnd)),
// adjacent edges meeting at geometric midpoints between centers. Defaults
// (10, 1000, 0.17) give 30 bands. ceil rather than round keeps every band's
// relative width at or below the requested fraction and yields the intended
// 30-band layout at the defaults.
FilterBank design_bank(double f_min, double f_max, double jnd, double sample_rate);

// Same geometry with the band count fixed directly (used when rebuilding a
// bank from serialized centers). The stored jnd is the per-band width ratio.
FilterBank design_bank_n(double f_min, double f_max, int n_bands, double sample_rate);

// Rebuild the bank a BankId describes. Band geometry depends only on the
// edge frequencies and the count; the id's jnd is carried over as the label
// so the rebuilt bank compares equal to the original.
FilterBank design_bank_like(const BankId& id);

// Mean square of the forward-filtered signal per band. Filters are primed
// with an odd-reflection preamble of the signal so the measurement sees
// steady state rather than onset transients; the filtering itself stays
// causal. dB values are 10*log10(max(power, 1e-10)).
BandPowers band_powers(const Signal& s, const FilterBank& bank, PowerDomain domain);

// Causal zero-state per-band filtering; outputs have the input's length.
std::vector<Signal> filter_subbands(const Signal& s, const FilterBank& bank);

// Mean-square power in the 80-200 Hz band (2nd-order Butterworth bandpass,
// same warm-up as band_powers). Requires sample rate >= 450 Hz.
double intensity_band_power(const Signal& s);

// Frequency response magnitude of one band at frequency f (Hz).
double band_response_magnitude(const BandFilter& band, double f, double sample_rate);

// Causal zero-state pass through one band.
std::vector<double> causal_filter(const BandFilter& band, const std::vector<double>& x);

// Causal pass primed with the odd-reflection preamble (steady state at x[0]);
// output covers exactly the input samples.
std::vector<double> warm_filter(const BandFilter& band, const std::vector<double>& x);

// Forward-backward pass over an odd-reflection-padded extension: zero phase,
// squared magnitude response.
std::vector<double> zero_phase_filter(const BandFilter& band, const std::vector<double>& x);

// Bank description (centers, edges, coefficients) as a JSON string.
std::string bank_to_json(const FilterBank& bank);

}  // namespace vibro
