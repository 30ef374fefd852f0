#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "vibro/signal.hpp"

using namespace vibro;

TEST_CASE("seeded noise is reproducible and seed-sensitive") {
    Rng a(42), b(42), c(43);
    const auto s1 = gaussian_noise(a, 4096, 2800);
    const auto s2 = gaussian_noise(b, 4096, 2800);
    const auto s3 = gaussian_noise(c, 4096, 2800);
    CHECK(s1.samples == s2.samples);
    CHECK(s1.samples != s3.samples);
    CHECK(s1.sample_rate == 2800.0);
    CHECK(s1.size() == 4096);
}

TEST_CASE("gaussian samples have unit scale and zero center") {
    Rng rng(7);
    const std::size_t n = 200000;
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.gaussian();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sq / static_cast<double>(n) - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("uniform stays in (0, 1]") {
    Rng rng(1);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("correlation of exact linear data is one") {
    CHECK(pearson_r({1, 2, 3, 4}, {3, 5, 7, 9}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson_r({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("correlation matches hand-computed values") {
    CHECK(pearson_r({1, 2, 3}, {2, 4, 8}) == doctest::Approx(0.9819805060619659).epsilon(1e-12));
    CHECK(pearson_r({1, 2, 3}, {2, 4, 7}) == doctest::Approx(0.9933992677987828).epsilon(1e-12));
}

TEST_CASE("correlation input validation") {
    CHECK_THROWS(pearson_r({1, 2, 3}, {1, 2}));
    CHECK_THROWS(pearson_r({1, 2}, {3, 4}));
    CHECK_THROWS(pearson_r({1, 1, 1}, {1, 2, 3}));
}

TEST_CASE("windowing yields full windows only") {
    Rng rng(3);
    const auto s = gaussian_noise(rng, 2800, 2800);  // 1 s
    const auto w = windows(s, 100.0, 50.0);          // 280-sample windows, 140 hop
    CHECK(w.size() == 19);
    for (const auto& win : w) CHECK(win.size() == 280);
    // hop alignment: window i starts at i*140
    CHECK(w[1].samples[0] == s.samples[140]);
    CHECK(w[2].samples[5] == s.samples[285]);
}

TEST_CASE("windowing rejects bad geometry") {
    Rng rng(3);
    const auto s = gaussian_noise(rng, 100, 2800);
    CHECK_THROWS(windows(s, 0.0, 50.0));
    CHECK_THROWS(windows(s, 100.0, 0.0));
    CHECK_THROWS(windows(s, 1000.0, 50.0));  // window longer than the signal
}

TEST_CASE("resampling at the same rate is exact") {
    Rng rng(11);
    const auto s = gaussian_noise(rng, 1000, 2800);
    const auto r = resample(s, 2800.0);
    CHECK(r.samples == s.samples);
}

TEST_CASE("resampling preserves tone frequency") {
    const auto s = testutil::sine(100.0, 5600.0, 5600);
    const auto down = resample(s, 2800.0);
    CHECK(down.size() == 2800);
    CHECK(down.sample_rate == 2800.0);
    CHECK(testutil::dominant_frequency(down.samples, 2800.0, 8192) ==
          doctest::Approx(100.0).epsilon(0.01));

    const auto s2 = testutil::sine(220.0, 1400.0, 1400);
    const auto up = resample(s2, 2800.0);
    CHECK(up.size() == 2800);
    CHECK(testutil::dominant_frequency(up.samples, 2800.0, 8192) ==
          doctest::Approx(220.0).epsilon(0.01));
}

TEST_CASE("resampling preserves tone amplitude away from edges") {
    const auto s = testutil::sine(150.0, 5600.0, 11200);
    const auto down = resample(s, 2800.0);
    double peak = 0.0;
    for (std::size_t i = down.size() / 4; i < 3 * down.size() / 4; ++i)
        peak = std::max(peak, std::abs(down.samples[i]));
    CHECK(peak == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("float WAV round-trips exactly") {
    testutil::TempDir tmp("wavrt");
    Rng rng(5);
    auto s = gaussian_noise(rng, 2800, 2800);
    s.label = "noise5";
    const auto path = tmp.file("noise5.wav");
    save_wav(s, path);
    const auto back = load_signal(path);
    CHECK(back.sample_rate == s.sample_rate);
    CHECK(back.label == "noise5");
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(back.samples[i] == doctest::Approx(s.samples[i]).epsilon(1e-6));
}

namespace {

// Minimal PCM16 mono WAV written by hand, independent of the library writer.
void write_pcm16_wav(const std::string& path, const std::vector<std::int16_t>& samples,
                     std::uint32_t rate) {
    std::ofstream out(path, std::ios::binary);
    auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    out.write("RIFF", 4);
    u32(36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    u32(16);
    u16(1);  // PCM
    u16(1);  // mono
    u32(rate);
    u32(rate * 2);
    u16(2);
    u16(16);
    out.write("data", 4);
    u32(data_bytes);
    for (std::int16_t v : samples) out.write(reinterpret_cast<const char*>(&v), 2);
}

}  // namespace

TEST_CASE("PCM16 WAV loads with sign-preserving scaling") {
    testutil::TempDir tmp("pcm16");
    const auto path = tmp.file("tone.wav");
    write_pcm16_wav(path, {0, 16384, -16384, 32767, -32768}, 2800);
    const auto s = load_signal(path);
    REQUIRE(s.size() == 5);
    CHECK(s.sample_rate == 2800.0);
    CHECK(s.samples[0] == 0.0);
    CHECK(s.samples[1] == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(s.samples[2] == doctest::Approx(-0.5).epsilon(1e-4));
    CHECK(s.samples[3] <= 1.0);
    CHECK(s.samples[4] >= -1.0);
}

TEST_CASE("raw float32 needs a rate and round-trips") {
    testutil::TempDir tmp("rawf32");
    Rng rng(9);
    auto s = gaussian_noise(rng, 512, 2800);
    const auto path = tmp.file("sig.f32");
    save_raw_f32(s, path);
    CHECK_THROWS(load_signal(path));
    const auto back = load_signal(path, 2800.0);
    REQUIRE(back.size() == 512);
    CHECK(back.sample_rate == 2800.0);
    for (std::size_t i = 0; i < 16; ++i)
        CHECK(back.samples[i] == doctest::Approx(s.samples[i]).epsilon(1e-6));
}

TEST_CASE("WAV rate validation against an expected rate") {
    testutil::TempDir tmp("rateck");
    Rng rng(2);
    auto s = gaussian_noise(rng, 280, 2800);
    const auto path = tmp.file("x.wav");
    save_wav(s, path);
    CHECK_NOTHROW(load_signal(path, 2800.0));
    CHECK_THROWS(load_signal(path, 44100.0));
}

TEST_CASE("loader rejects garbage files") {
    testutil::TempDir tmp("badwav");
    const auto path = tmp.file("junk.wav");
    std::ofstream(path, std::ios::binary) << "this is not audio";
    CHECK_THROWS(load_signal(path));
    CHECK_THROWS(load_signal(tmp.file("missing.wav")));
}
