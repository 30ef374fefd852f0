// Shared helpers for the unit tests: a small radix-2 FFT used as an
// independent spectral oracle, a scoped temp directory, and tone builders.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "vibro/signal.hpp"

namespace testutil {

inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const auto u = a[i + j];
                const auto v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// Zero-padded magnitude spectrum; nfft must be a power of two >= x.size().
inline std::vector<double> magnitude_spectrum(const std::vector<double>& x, std::size_t nfft) {
    std::vector<std::complex<double>> a(nfft);
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
    fft_radix2(a);
    std::vector<double> mag(nfft / 2 + 1);
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(a[i]);
    return mag;
}

// Frequency of the largest magnitude bin (DC excluded).
inline double dominant_frequency(const std::vector<double>& x, double rate, std::size_t nfft = 4096) {
    const auto mag = magnitude_spectrum(x, nfft);
    std::size_t best = 1;
    for (std::size_t i = 2; i < mag.size(); ++i)
        if (mag[i] > mag[best]) best = i;
    return static_cast<double>(best) * rate / static_cast<double>(nfft);
}

inline vibro::Signal sine(double freq, double rate, std::size_t n, double amp = 1.0,
                          const std::string& label = "sine") {
    vibro::Signal s;
    s.sample_rate = rate;
    s.label = label;
    s.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        s.samples[i] = amp * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / rate);
    return s;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix, descending. Kept free of
// any linear-algebra library so it can serve as an independent oracle.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    double scale = 0.0;
    for (const auto& row : a)
        for (double v : row) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return std::vector<double>(n, 0.0);
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a[p][q]));
        if (off < 1e-15 * scale) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-18 * scale) continue;
                const double theta = 0.5 * std::atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
                const double c = std::cos(theta), s = std::sin(theta);
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
    std::sort(eig.begin(), eig.end(), std::greater<double>());
    return eig;
}

// Unique scratch directory removed when the guard leaves scope.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 gen(std::random_device{}());
        const auto base = std::filesystem::temp_directory_path();
        for (int attempt = 0; attempt < 64; ++attempt) {
            auto candidate = base / (tag + "-" + std::to_string(gen()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("could not create temp directory for " + tag);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

}  // namespace testutil
