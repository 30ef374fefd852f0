#include "vibro/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "json.hpp"

namespace vibro {

std::vector<double> FilterBank::centers() const {
    std::vector<double> c;
    c.reserve(bands.size());
    for (const auto& b : bands) c.push_back(b.center);
    return c;
}

namespace {

using cd = std::complex<double>;

// Analog 2nd-order Butterworth lowpass prototype -> bandpass -> bilinear.
// Returns the two digital conjugate-pair poles of the 4-pole bandpass.
std::array<cd, 2> digital_poles(double w1, double w2, double fs2, double* gain_out) {
    const cd proto = std::polar(1.0, 3.0 * M_PI / 4.0);  // exp(j*3pi/4)
    const double w0sq = w1 * w2;
    const double bw = w2 - w1;
    const cd half = proto * (bw / 2.0);
    const cd root = std::sqrt(half * half - w0sq);
    const cd s1 = half + root;
    const cd s2 = half - root;
    // Bilinear transform z = (fs2 + s) / (fs2 - s); analog gain bw^2 with two
    // zeros at s = 0 mapping to z = 1 and two implicit zeros at z = -1.
    const cd z1 = (fs2 + s1) / (fs2 - s1);
    const cd z2 = (fs2 + s2) / (fs2 - s2);
    *gain_out = bw * bw * fs2 * fs2 / (std::norm(fs2 - s1) * std::norm(fs2 - s2));
    return {z1, z2};
}

cd biquad_response(const Biquad& q, const cd& z) {
    const cd zi = 1.0 / z;
    return (q.b0 + q.b1 * zi + q.b2 * zi * zi) / (1.0 + q.a1 * zi + q.a2 * zi * zi);
}

BandFilter design_band(double f_low, double f_high, double fs) {
    BandFilter band;
    band.f_low = f_low;
    band.f_high = f_high;
    band.center = std::sqrt(f_low * f_high);

    const double fs2 = 2.0 * fs;
    const double w1 = fs2 * std::tan(M_PI * f_low / fs);  // prewarped edges
    const double w2 = fs2 * std::tan(M_PI * f_high / fs);
    double gain = 0.0;
    const auto poles = digital_poles(w1, w2, fs2, &gain);
    for (int k = 0; k < 2; ++k) {
        if (std::abs(poles[k]) >= 1.0)
            throw std::runtime_error("filter design produced an unstable pole");
        Biquad q;
        q.b0 = k == 0 ? gain : 1.0;  // zeros at z = +1 and z = -1: (1, 0, -1)
        q.b1 = 0.0;
        q.b2 = -q.b0;
        q.a1 = -2.0 * poles[k].real();
        q.a2 = std::norm(poles[k]);
        band.sos[k] = q;
    }
    // Exact unity gain at the digital center frequency.
    const cd z = std::polar(1.0, 2.0 * M_PI * band.center / fs);
    const double mag = std::abs(biquad_response(band.sos[0], z) * biquad_response(band.sos[1], z));
    band.sos[0].b0 /= mag;
    band.sos[0].b2 /= mag;
    return band;
}

FilterBank build_bank(double f_min, double f_max, int n, double jnd_label, double sample_rate) {
    if (n < 1) throw std::invalid_argument("design_bank: band count must be >= 1");
    if (!(0.0 < f_min && f_min < f_max)) throw std::invalid_argument("design_bank: need 0 < f_min < f_max");
    if (f_max >= sample_rate / 2.0)
        throw std::invalid_argument("design_bank: f_max must lie below the Nyquist frequency");
    FilterBank bank;
    bank.f_min = f_min;
    bank.f_max = f_max;
    bank.jnd = jnd_label;
    bank.sample_rate = sample_rate;
    const double r = std::pow(f_max / f_min, 1.0 / n);
    bank.bands.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double lo = f_min * std::pow(r, i);
        const double hi = i == n - 1 ? f_max : f_min * std::pow(r, i + 1);
        bank.bands.push_back(design_band(lo, hi, sample_rate));
    }
    return bank;
}

// One causal pass of both sections with given initial state (direct form II
// transposed). Accumulates sum of squares over [measure_from, end).
double run_sos_sum_sq(const std::array<Biquad, 2>& sos, const std::vector<double>& pre,
                      const std::vector<double>& x, std::vector<double>* out) {
    double s[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    auto step = [&](double v) {
        for (int k = 0; k < 2; ++k) {
            const Biquad& q = sos[k];
            const double y = q.b0 * v + s[k][0];
            s[k][0] = q.b1 * v - q.a1 * y + s[k][1];
            s[k][1] = q.b2 * v - q.a2 * y;
            v = y;
        }
        return v;
    };
    for (double v : pre) step(v);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double y = step(x[i]);
        acc += y * y;
        if (out) (*out)[i] = y;
    }
    return acc;
}

// Odd-reflection preamble, oldest sample first: 2*x[0] - x[n-1], ..., 2*x[0] - x[1].
std::vector<double> odd_reflection_preamble(const std::vector<double>& x) {
    std::vector<double> pre;
    if (x.size() < 2) return pre;
    pre.resize(x.size() - 1);
    for (std::size_t j = 0; j < pre.size(); ++j) pre[j] = 2.0 * x[0] - x[x.size() - 1 - j];
    return pre;
}

void check_rate(const Signal& s, const FilterBank& bank) {
    if (s.sample_rate != bank.sample_rate)
        throw std::invalid_argument("signal sample rate does not match the filter bank");
}

}  // namespace

FilterBank design_bank(double f_min, double f_max, double jnd, double sample_rate) {
    if (!(jnd > 0.0 && jnd < 1.0)) throw std::invalid_argument("design_bank: jnd must be in (0, 1)");
    if (!(0.0 < f_min && f_min < f_max)) throw std::invalid_argument("design_bank: need 0 < f_min < f_max");
    const int n = static_cast<int>(std::ceil(std::log(f_max / f_min) / std::log(1.0 + jnd)));
    return build_bank(f_min, f_max, std::max(n, 1), jnd, sample_rate);
}

FilterBank design_bank_n(double f_min, double f_max, int n_bands, double sample_rate) {
    const double r = std::pow(f_max / f_min, 1.0 / std::max(n_bands, 1));
    return build_bank(f_min, f_max, n_bands, r - 1.0, sample_rate);
}

FilterBank design_bank_like(const BankId& id) {
    return build_bank(id.f_min, id.f_max, id.n_bands, id.jnd, id.sample_rate);
}

BandPowers band_powers(const Signal& s, const FilterBank& bank, PowerDomain domain) {
    check_rate(s, bank);
    if (s.samples.empty()) throw std::invalid_argument("band_powers: empty signal");
    const double min_len = 10.0 / bank.f_min * bank.sample_rate;
    if (static_cast<double>(s.samples.size()) < min_len)
        throw std::invalid_argument("band_powers: signal shorter than ten periods of the lowest band");

    const auto pre = odd_reflection_preamble(s.samples);
    BandPowers bp;
    bp.domain = domain;
    bp.bank = bank.id();
    bp.values.reserve(bank.size());
    const double n = static_cast<double>(s.samples.size());
    for (const auto& band : bank.bands) {
        const double p = run_sos_sum_sq(band.sos, pre, s.samples, nullptr) / n;
        bp.values.push_back(domain == PowerDomain::linear
                                ? p
                                : 10.0 * std::log10(std::max(p, kLinearPowerFloor)));
    }
    return bp;
}

std::vector<Signal> filter_subbands(const Signal& s, const FilterBank& bank) {
    check_rate(s, bank);
    std::vector<Signal> out;
    out.reserve(bank.size());
    const std::vector<double> no_pre;
    for (const auto& band : bank.bands) {
        Signal sub;
        sub.sample_rate = s.sample_rate;
        sub.label = s.label;
        sub.samples.resize(s.samples.size());
        run_sos_sum_sq(band.sos, no_pre, s.samples, &sub.samples);
        out.push_back(std::move(sub));
    }
    return out;
}

double intensity_band_power(const Signal& s) {
    if (s.sample_rate < 450.0)
        throw std::invalid_argument("intensity_band_power: sample rate must be >= 450 Hz");
    if (s.samples.empty()) throw std::invalid_argument("intensity_band_power: empty signal");
    const BandFilter band = design_band(80.0, 200.0, s.sample_rate);
    const auto pre = odd_reflection_preamble(s.samples);
    return run_sos_sum_sq(band.sos, pre, s.samples, nullptr) / static_cast<double>(s.samples.size());
}

double band_response_magnitude(const BandFilter& band, double f, double sample_rate) {
    const cd z = std::polar(1.0, 2.0 * M_PI * f / sample_rate);
    return std::abs(biquad_response(band.sos[0], z) * biquad_response(band.sos[1], z));
}

std::vector<double> causal_filter(const BandFilter& band, const std::vector<double>& x) {
    std::vector<double> out(x.size());
    const std::vector<double> no_pre;
    run_sos_sum_sq(band.sos, no_pre, x, &out);
    return out;
}

std::vector<double> warm_filter(const BandFilter& band, const std::vector<double>& x) {
    std::vector<double> out(x.size());
    run_sos_sum_sq(band.sos, odd_reflection_preamble(x), x, &out);
    return out;
}

std::vector<double> zero_phase_filter(const BandFilter& band, const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 2) return causal_filter(band, x);
    const std::size_t pad = n - 1;
    std::vector<double> ext(pad + n + pad);
    for (std::size_t j = 0; j < pad; ++j) ext[j] = 2.0 * x[0] - x[n - 1 - j];
    std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
    for (std::size_t j = 0; j < pad; ++j) ext[pad + n + j] = 2.0 * x[n - 1] - x[n - 2 - j];

    std::vector<double> tmp(ext.size());
    const std::vector<double> no_pre;
    run_sos_sum_sq(band.sos, no_pre, ext, &tmp);
    std::reverse(tmp.begin(), tmp.end());
    run_sos_sum_sq(band.sos, no_pre, tmp, &ext);
    std::reverse(ext.begin(), ext.end());
    return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                               ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

std::string bank_to_json(const FilterBank& bank) {
    nlohmann::ordered_json j;
    j["f_min"] = bank.f_min;
    j["f_max"] = bank.f_max;
    j["jnd"] = bank.jnd;
    j["sample_rate"] = bank.sample_rate;
    j["n_bands"] = bank.size();
    auto& bands = j["bands"] = nlohmann::ordered_json::array();
    for (const auto& b : bank.bands) {
        nlohmann::ordered_json jb;
        jb["f_low"] = b.f_low;
        jb["f_high"] = b.f_high;
        jb["center"] = b.center;
        auto& sos = jb["sos"] = nlohmann::ordered_json::array();
        for (const auto& q : b.sos) sos.push_back({q.b0, q.b1, q.b2, q.a1, q.a2});
        bands.push_back(std::move(jb));
    }
    return j.dump(2);
}

}  // namespace vibro
