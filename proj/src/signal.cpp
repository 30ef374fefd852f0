#include "vibro/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vibro {

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

Signal gaussian_noise(Rng& rng, std::size_t n, double sample_rate) {
    if (n == 0) throw std::invalid_argument("gaussian_noise: n must be positive");
    if (sample_rate <= 0.0) throw std::invalid_argument("gaussian_noise: sample_rate must be positive");
    Signal s;
    s.sample_rate = sample_rate;
    s.samples.resize(n);
    for (auto& x : s.samples) x = rng.gaussian();
    return s;
}

double pearson_r(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("pearson_r: length mismatch");
    if (a.size() < 3) throw std::invalid_argument("pearson_r: need at least 3 points");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw std::invalid_argument("pearson_r: zero-variance input");
    return sab / std::sqrt(saa * sbb);
}

std::vector<Signal> windows(const Signal& s, double win_ms, double hop_ms) {
    if (win_ms <= 0.0 || hop_ms <= 0.0) throw std::invalid_argument("windows: durations must be positive");
    const auto win = static_cast<std::size_t>(std::llround(win_ms * 1e-3 * s.sample_rate));
    const auto hop = static_cast<std::size_t>(std::llround(hop_ms * 1e-3 * s.sample_rate));
    if (win == 0 || hop == 0) throw std::invalid_argument("windows: window shorter than one sample");
    if (s.samples.size() < win) throw std::invalid_argument("windows: signal shorter than one window");
    std::vector<Signal> out;
    for (std::size_t start = 0; start + win <= s.samples.size(); start += hop) {
        Signal w;
        w.sample_rate = s.sample_rate;
        w.label = s.label;
        w.samples.assign(s.samples.begin() + static_cast<std::ptrdiff_t>(start),
                         s.samples.begin() + static_cast<std::ptrdiff_t>(start + win));
        out.push_back(std::move(w));
    }
    return out;
}

namespace {

// Zeroth-order modified Bessel function of the first kind (power series).
double bessel_i0(double x) {
    const double q = x * x / 4.0;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
}

}  // namespace

Signal resample(const Signal& s, double target_rate) {
    if (target_rate <= 0.0) throw std::invalid_argument("resample: target_rate must be positive");
    if (s.sample_rate <= 0.0) throw std::invalid_argument("resample: source rate must be positive");
    if (target_rate == s.sample_rate) return s;
    if (s.samples.empty()) throw std::invalid_argument("resample: empty signal");

    const double ratio = target_rate / s.sample_rate;
    const double cutoff = std::min(1.0, ratio);  // anti-alias when decimating
    const double half_taps = 32.0 / cutoff;
    const double beta = 8.6;
    const double i0_beta = bessel_i0(beta);
    const auto n_in = static_cast<std::ptrdiff_t>(s.samples.size());
    const auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n_in) * ratio));

    Signal out;
    out.sample_rate = target_rate;
    out.label = s.label;
    out.samples.resize(std::max<std::size_t>(n_out, 1));
    for (std::size_t m = 0; m < out.samples.size(); ++m) {
        const double center = static_cast<double>(m) / ratio;
        const auto k0 = static_cast<std::ptrdiff_t>(std::ceil(center - half_taps));
        const auto k1 = static_cast<std::ptrdiff_t>(std::floor(center + half_taps));
        double acc = 0.0, wsum = 0.0;
        for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(k0, 0); k <= std::min(k1, n_in - 1); ++k) {
            const double u = (static_cast<double>(k) - center) / half_taps;
            const double w = sinc(cutoff * (static_cast<double>(k) - center)) *
                             (bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - u * u))) / i0_beta);
            acc += w * s.samples[static_cast<std::size_t>(k)];
            wsum += w;
        }
        // Kernel-sum normalization: exact DC response, edge windows included.
        out.samples[m] = wsum != 0.0 ? acc / wsum : 0.0;
    }
    return out;
}

namespace {

void check_finite(const Signal& s, const std::string& path) {
    for (double x : s.samples)
        if (!std::isfinite(x)) throw std::runtime_error("non-finite samples in " + path);
}

std::string stem_of(const std::string& path) {
    const auto slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    const auto dot = name.find_last_of('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

bool has_wav_extension(const std::string& path) {
    if (path.size() < 4) return false;
    std::string ext = path.substr(path.size() - 4);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".wav";
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(static_cast<std::uint16_t>(b[0]) |
                                      (static_cast<std::uint16_t>(b[1]) << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(b, 2);
}

Signal load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char tag[4];
    in.read(tag, 4);
    if (!in || std::strncmp(tag, "RIFF", 4) != 0) throw std::runtime_error("not a RIFF file: " + path);
    read_u32(in);  // RIFF size
    in.read(tag, 4);
    if (!in || std::strncmp(tag, "WAVE", 4) != 0) throw std::runtime_error("not a WAVE file: " + path);

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::vector<char> data;
    bool have_fmt = false, have_data = false;
    while (in.read(tag, 4)) {
        std::uint32_t size = read_u32(in);
        if (!in) break;
        if (std::strncmp(tag, "fmt ", 4) == 0) {
            format = read_u16(in);
            channels = read_u16(in);
            rate = read_u32(in);
            read_u32(in);  // byte rate
            read_u16(in);  // block align
            bits = read_u16(in);
            if (size > 16) in.seekg(size - 16, std::ios::cur);
            have_fmt = true;
        } else if (std::strncmp(tag, "data", 4) == 0) {
            data.resize(size);
            in.read(data.data(), size);
            have_data = true;
        } else {
            in.seekg(size + (size & 1), std::ios::cur);
        }
    }
    if (!have_fmt || !have_data) throw std::runtime_error("missing fmt/data chunk in " + path);
    if (channels != 1) throw std::runtime_error("multichannel input not supported: " + path);

    Signal s;
    s.sample_rate = static_cast<double>(rate);
    s.label = stem_of(path);
    if (format == 1 && bits == 16) {
        const std::size_t n = data.size() / 2;
        s.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::int16_t v;
            std::memcpy(&v, data.data() + 2 * i, 2);
            s.samples[i] = static_cast<double>(v) / 32768.0;
        }
    } else if (format == 3 && bits == 32) {
        const std::size_t n = data.size() / 4;
        s.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            float v;
            std::memcpy(&v, data.data() + 4 * i, 4);
            s.samples[i] = static_cast<double>(v);
        }
    } else {
        throw std::runtime_error("unsupported WAV encoding (need PCM16 or float32): " + path);
    }
    if (s.samples.empty()) throw std::runtime_error("no samples in " + path);
    check_finite(s, path);
    return s;
}

Signal load_raw_f32(const std::string& path, double rate) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    if (bytes == 0) throw std::runtime_error("no samples in " + path);
    if (bytes % 4 != 0) throw std::runtime_error("raw float32 file has partial sample: " + path);
    std::vector<char> data(bytes);
    in.read(data.data(), static_cast<std::streamsize>(bytes));
    Signal s;
    s.sample_rate = rate;
    s.label = stem_of(path);
    s.samples.resize(bytes / 4);
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        float v;
        std::memcpy(&v, data.data() + 4 * i, 4);
        s.samples[i] = static_cast<double>(v);
    }
    check_finite(s, path);
    return s;
}

}  // namespace

Signal load_signal(const std::string& path, std::optional<double> expected_rate) {
    if (has_wav_extension(path)) {
        Signal s = load_wav(path);
        if (expected_rate && *expected_rate != s.sample_rate)
            throw std::runtime_error("sample-rate mismatch in " + path + ": file has " +
                                     std::to_string(s.sample_rate) + " Hz, expected " +
                                     std::to_string(*expected_rate));
        return s;
    }
    if (!expected_rate) throw std::runtime_error("raw float32 input needs a sample rate: " + path);
    return load_raw_f32(path, *expected_rate);
}

void save_wav(const Signal& s, const std::string& path) {
    if (s.samples.empty()) throw std::invalid_argument("save_wav: empty signal");
    if (s.sample_rate <= 0.0) throw std::invalid_argument("save_wav: invalid sample rate");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const auto n = static_cast<std::uint32_t>(s.samples.size());
    const auto rate = static_cast<std::uint32_t>(std::llround(s.sample_rate));
    // fmt(18 bytes, IEEE float) + fact + data, all little-endian.
    const std::uint32_t data_bytes = n * 4;
    const std::uint32_t riff_size = 4 + (8 + 18) + (8 + 4) + (8 + data_bytes);
    out.write("RIFF", 4);
    write_u32(out, riff_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32(out, 18);
    write_u16(out, 3);  // IEEE float
    write_u16(out, 1);  // mono
    write_u32(out, rate);
    write_u32(out, rate * 4);
    write_u16(out, 4);
    write_u16(out, 32);
    write_u16(out, 0);  // no extension bytes
    out.write("fact", 4);
    write_u32(out, 4);
    write_u32(out, n);
    out.write("data", 4);
    write_u32(out, data_bytes);
    for (double x : s.samples) {
        const float v = static_cast<float>(x);
        char b[4];
        std::memcpy(b, &v, 4);
        out.write(b, 4);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void save_raw_f32(const Signal& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (double x : s.samples) {
        const float v = static_cast<float>(x);
        char b[4];
        std::memcpy(b, &v, 4);
        out.write(b, 4);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace vibro
