#include "vibro/synthcodec.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "vibro/intensity.hpp"

namespace vibro {

namespace {

constexpr double kLog10Scale = 10.0 / M_LN10;  // 10*log10(x) = kLog10Scale * ln(x)

double max_abs_db_error(const Eigen::VectorXd& p, const Eigen::VectorXd& t) {
    double worst = 0.0;
    for (Eigen::Index b = 0; b < p.size(); ++b)
        worst = std::max(worst, std::abs(kLog10Scale * std::log(p(b) / t(b))));
    return worst;
}

}  // namespace

ImposeResult impose_band_powers(const BandPowers& target, const SynthesisConfig& cfg,
                                const FilterBank& bank) {
    if (target.domain != PowerDomain::linear)
        throw std::invalid_argument("impose_band_powers: target must be in the linear domain");
    if (!(target.bank == bank.id()))
        throw std::invalid_argument("impose_band_powers: target bank identity does not match");
    if (cfg.max_iterations < 1) throw std::invalid_argument("impose_band_powers: max_iterations >= 1");
    if (!(cfg.tolerance_db > 0.0)) throw std::invalid_argument("impose_band_powers: tolerance must be positive");
    if (cfg.sample_rate != bank.sample_rate)
        throw std::invalid_argument("impose_band_powers: config sample rate does not match the bank");

    const auto n_bands = static_cast<Eigen::Index>(bank.size());
    if (static_cast<Eigen::Index>(target.values.size()) != n_bands)
        throw std::invalid_argument("impose_band_powers: target length does not match the bank");
    Eigen::VectorXd t(n_bands);
    for (Eigen::Index b = 0; b < n_bands; ++b)
        t(b) = std::max(target.values[static_cast<std::size_t>(b)], kLinearPowerFloor);

    // Default duration is 1 s, stretched if needed so the result stays long
    // enough for the band-power measurement itself.
    const auto min_measurable =
        static_cast<std::size_t>(std::ceil(10.0 / bank.f_min * cfg.sample_rate));
    const std::size_t n = cfg.n_samples > 0
                              ? cfg.n_samples
                              : std::max(static_cast<std::size_t>(std::llround(cfg.sample_rate)),
                                         min_measurable);
    Rng rng(cfg.seed);
    Signal current = gaussian_noise(rng, n, cfg.sample_rate);
    const double dn = static_cast<double>(n);

    ImposeResult res;
    res.signal = current;
    double best_err = std::numeric_limits<double>::infinity();
    int total_iters = 0;
    constexpr int kMaxRestarts = 6;

    for (int outer = 0; outer < kMaxRestarts && total_iters < cfg.max_iterations; ++outer) {
        // Zero-phase subbands of the current signal; overlapping bands add in
        // phase, so per-band gains span a usable synthesis family.
        std::vector<std::vector<double>> sb(static_cast<std::size_t>(n_bands));
        for (Eigen::Index c = 0; c < n_bands; ++c)
            sb[static_cast<std::size_t>(c)] =
                zero_phase_filter(bank.bands[static_cast<std::size_t>(c)], current.samples);

        // The odd-reflection preamble is linear in the signal, so the warm
        // measurement of a gain-weighted subband sum is exactly quadratic in
        // the gains: p_b(g) = g' Q_b g with Q_b the Gram of the per-band
        // measurement images.
        std::vector<Eigen::MatrixXd> Q(static_cast<std::size_t>(n_bands));
        {
            Eigen::MatrixXd Z(n_bands, static_cast<Eigen::Index>(n));
            for (Eigen::Index b = 0; b < n_bands; ++b) {
                for (Eigen::Index c = 0; c < n_bands; ++c) {
                    const auto z = warm_filter(bank.bands[static_cast<std::size_t>(b)],
                                               sb[static_cast<std::size_t>(c)]);
                    for (std::size_t i = 0; i < n; ++i) Z(c, static_cast<Eigen::Index>(i)) = z[i];
                }
                Q[static_cast<std::size_t>(b)] = Z * Z.transpose() / dn;
            }
        }

        Eigen::VectorXd g(n_bands);
        for (Eigen::Index c = 0; c < n_bands; ++c)
            g(c) = std::sqrt(t(c) / std::max(Q[static_cast<std::size_t>(c)](c, c), kLinearPowerFloor));

        auto powers_of = [&](const Eigen::VectorXd& gv) {
            Eigen::VectorXd p(n_bands);
            for (Eigen::Index b = 0; b < n_bands; ++b)
                p(b) = std::max(gv.dot(Q[static_cast<std::size_t>(b)] * gv), kLinearPowerFloor);
            return p;
        };

        bool stalled = false;
        while (total_iters < cfg.max_iterations && !stalled) {
            ++total_iters;
            const Eigen::VectorXd p = powers_of(g);
            const double err = max_abs_db_error(p, t);
            if (err < best_err) {
                best_err = err;
                Eigen::Map<Eigen::VectorXd> out(res.signal.samples.data(), static_cast<Eigen::Index>(n));
                out.setZero();
                for (Eigen::Index c = 0; c < n_bands; ++c)
                    out += g(c) * Eigen::Map<const Eigen::VectorXd>(sb[static_cast<std::size_t>(c)].data(),
                                                                    static_cast<Eigen::Index>(n));
            }
            res.error_history.push_back(best_err);
            if (best_err <= cfg.tolerance_db) break;

            Eigen::VectorXd f(n_bands);
            Eigen::MatrixXd J(n_bands, n_bands);
            for (Eigen::Index b = 0; b < n_bands; ++b) {
                f(b) = kLog10Scale * std::log(p(b) / t(b));
                J.row(b) = (2.0 * kLog10Scale / p(b)) * (Q[static_cast<std::size_t>(b)] * g).transpose();
            }
            Eigen::VectorXd step = J.partialPivLu().solve(-f);
            if (!step.allFinite()) step = J.colPivHouseholderQr().solve(-f);

            double a = 1.0;
            bool improved = false;
            for (int ls = 0; ls < 40; ++ls) {
                const Eigen::VectorXd g2 = g + a * step;
                if (max_abs_db_error(powers_of(g2), t) < err) {
                    g = g2;
                    improved = true;
                    break;
                }
                a *= 0.5;
            }
            stalled = !improved;
        }
        if (best_err <= cfg.tolerance_db) break;
        current = res.signal;  // re-decompose the best iterate
    }

    // Report the error actually measured on the returned signal.
    const auto measured = band_powers(res.signal, bank, PowerDomain::linear);
    Eigen::VectorXd p(n_bands);
    for (Eigen::Index b = 0; b < n_bands; ++b)
        p(b) = std::max(measured.values[static_cast<std::size_t>(b)], kLinearPowerFloor);
    res.final_error_db = max_abs_db_error(p, t);
    res.converged = res.final_error_db <= cfg.tolerance_db;
    res.iterations = total_iters;
    if (!res.error_history.empty()) res.error_history.back() = res.final_error_db;
    return res;
}

EncodedVibration encode(const Signal& s, const SpectralBasis& basis, const FilterBank& bank, int k) {
    if (k < 1 || k > basis.k()) throw std::invalid_argument("encode: k out of range for the basis");
    EncodedVibration e;
    e.label = s.label;
    e.intensity = intensity_band_power(s);
    const auto scores = project(basis, band_powers(s, bank, basis.domain));
    e.t.assign(scores.t.data(), scores.t.data() + k);
    return e;
}

StreamHeader make_header(const FilterBank& bank, const SpectralBasis& basis, int k) {
    if (k < 1 || k > basis.k()) throw std::invalid_argument("make_header: k out of range for the basis");
    if (static_cast<int>(bank.size()) != basis.n_bands())
        throw std::invalid_argument("make_header: bank and basis disagree on band count");
    StreamHeader h;
    h.sample_rate = bank.sample_rate;
    h.n_bands = static_cast<int>(bank.size());
    h.k = k;
    h.domain = basis.domain;
    for (const auto& band : bank.bands) h.centers.push_back(static_cast<float>(band.center));
    for (Eigen::Index i = 0; i < basis.mean.size(); ++i) h.M.push_back(static_cast<float>(basis.mean(i)));
    for (int r = 0; r < k; ++r) {
        std::vector<float> row;
        row.reserve(static_cast<std::size_t>(basis.n_bands()));
        for (int c = 0; c < basis.n_bands(); ++c) row.push_back(static_cast<float>(basis.components(r, c)));
        h.V.push_back(std::move(row));
    }
    return h;
}

FilterBank bank_from_header(const StreamHeader& h) {
    if (h.n_bands < 1 || static_cast<int>(h.centers.size()) != h.n_bands)
        throw std::runtime_error("stream header: invalid band centers");
    const double c0 = static_cast<double>(h.centers.front());
    const double cN = static_cast<double>(h.centers.back());
    double r;
    if (h.n_bands >= 2) {
        if (!(cN > c0 && c0 > 0.0)) throw std::runtime_error("stream header: centers must increase");
        r = std::pow(cN / c0, 1.0 / (h.n_bands - 1));
    } else {
        r = 1.17;  // single band: default relative width
    }
    return design_bank_n(c0 / std::sqrt(r), cN * std::sqrt(r), h.n_bands, h.sample_rate);
}

SpectralBasis basis_from_header(const StreamHeader& h) {
    if (static_cast<int>(h.M.size()) != h.n_bands || static_cast<int>(h.V.size()) != h.k)
        throw std::runtime_error("stream header: basis excerpt has wrong shape");
    SpectralBasis basis;
    basis.domain = h.domain;
    basis.bank = bank_from_header(h).id();
    basis.mean.resize(h.n_bands);
    for (int i = 0; i < h.n_bands; ++i) basis.mean(i) = static_cast<double>(h.M[static_cast<std::size_t>(i)]);
    basis.components.resize(h.k, h.n_bands);
    for (int r = 0; r < h.k; ++r) {
        if (static_cast<int>(h.V[static_cast<std::size_t>(r)].size()) != h.n_bands)
            throw std::runtime_error("stream header: ragged component row");
        for (int c = 0; c < h.n_bands; ++c)
            basis.components(r, c) = static_cast<double>(h.V[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
    }
    const Eigen::MatrixXd gram = basis.components * basis.components.transpose();
    if ((gram - Eigen::MatrixXd::Identity(h.k, h.k)).cwiseAbs().maxCoeff() > 1e-6)
        throw std::runtime_error("stream header: basis rows are not orthonormal");
    basis.eigenvalues.assign(static_cast<std::size_t>(h.k), 0.0);
    basis.explained_ratio.assign(static_cast<std::size_t>(h.k), 0.0);
    return basis;
}

DecodeResult decode(const EncodedVibration& e, const StreamHeader& h, const SynthesisConfig& cfg) {
    if (static_cast<int>(e.t.size()) != h.k)
        throw std::invalid_argument("decode: entry score length does not match the header");
    const FilterBank bank = bank_from_header(h);
    const SpectralBasis basis = basis_from_header(h);

    PcaScores scores;
    scores.t = Eigen::Map<const Eigen::VectorXd>(e.t.data(), static_cast<Eigen::Index>(e.t.size()));
    scores.domain = basis.domain;
    scores.bank = basis.bank;
    scores.basis_k = h.k;
    BandPowers target = reconstruct(basis, scores, h.k);
    if (target.domain == PowerDomain::dB) {
        for (auto& v : target.values) v = std::max(std::pow(10.0, v / 10.0), kLinearPowerFloor);
        target.domain = PowerDomain::linear;
    }

    SynthesisConfig synth_cfg = cfg;
    synth_cfg.sample_rate = h.sample_rate;
    auto imposed = impose_band_powers(target, synth_cfg, bank);

    const double gain = e.intensity > 0.0 ? equalization_gain(imposed.signal, e.intensity) : 0.0;
    DecodeResult out;
    out.signal = std::move(imposed.signal);
    for (auto& x : out.signal.samples) x *= gain;
    out.signal.label = e.label;
    out.iterations = imposed.iterations;
    out.final_error_db = imposed.final_error_db;
    out.converged = imposed.converged;
    return out;
}

CompressionStats compression_stats(const CodecStream& stream, const std::vector<Signal>& originals) {
    if (stream.entries.size() != originals.size())
        throw std::invalid_argument("compression_stats: stream entries and originals do not correspond");
    CompressionStats st;
    const auto nb = static_cast<std::size_t>(stream.header.n_bands);
    const auto k = static_cast<std::size_t>(stream.header.k);
    st.shared_values = nb + nb * k;
    st.score_values = stream.entries.size() * k;
    st.total_values = st.shared_values + st.score_values;
    st.intensity_values = stream.entries.size();
    for (std::size_t i = 0; i < originals.size(); ++i) {
        st.original_samples += originals[i].samples.size();
        st.per_stimulus.push_back({stream.entries[i].label, static_cast<int>(k), originals[i].samples.size()});
    }
    if (st.original_samples > 0) {
        st.ratio = static_cast<double>(st.total_values) / static_cast<double>(st.original_samples);
        st.ratio_with_intensity = static_cast<double>(st.total_values + st.intensity_values) /
                                  static_cast<double>(st.original_samples);
    }
    return st;
}

namespace {

void put_u16(std::ostream& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(b, 2);
}

void put_f32(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    const char b[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                       static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    out.write(b, 4);
}

std::uint16_t get_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(static_cast<std::uint16_t>(b[0]) |
                                      (static_cast<std::uint16_t>(b[1]) << 8));
}

float get_f32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) |
                               (static_cast<std::uint32_t>(b[3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void write_vbc(const CodecStream& stream, const std::string& path) {
    const auto& h = stream.header;
    if (static_cast<int>(h.centers.size()) != h.n_bands || static_cast<int>(h.M.size()) != h.n_bands ||
        static_cast<int>(h.V.size()) != h.k)
        throw std::invalid_argument("write_vbc: header shape is inconsistent");
    if (stream.entries.size() > 0xffff) throw std::invalid_argument("write_vbc: too many stimuli");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write("VBC1", 4);
    put_u16(out, 1);
    put_f32(out, static_cast<float>(h.sample_rate));
    put_u16(out, static_cast<std::uint16_t>(h.n_bands));
    out.put(static_cast<char>(h.k));
    out.put(static_cast<char>(h.domain == PowerDomain::dB ? 1 : 0));
    for (float c : h.centers) put_f32(out, c);
    for (float m : h.M) put_f32(out, m);
    for (const auto& row : h.V) {
        if (static_cast<int>(row.size()) != h.n_bands)
            throw std::invalid_argument("write_vbc: ragged component row");
        for (float v : row) put_f32(out, v);
    }
    put_u16(out, static_cast<std::uint16_t>(stream.entries.size()));
    for (const auto& e : stream.entries) {
        if (e.label.size() > 255) throw std::invalid_argument("write_vbc: label longer than 255 bytes");
        if (static_cast<int>(e.t.size()) != h.k)
            throw std::invalid_argument("write_vbc: entry score length does not match k");
        out.put(static_cast<char>(e.label.size()));
        out.write(e.label.data(), static_cast<std::streamsize>(e.label.size()));
        put_f32(out, static_cast<float>(e.intensity));
        for (double tv : e.t) put_f32(out, static_cast<float>(tv));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

CodecStream read_vbc(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::strncmp(magic, "VBC1", 4) != 0) throw std::runtime_error("not a .vbc stream: " + path);
    if (get_u16(in) != 1) throw std::runtime_error("unsupported .vbc version in " + path);
    CodecStream stream;
    auto& h = stream.header;
    h.sample_rate = static_cast<double>(get_f32(in));
    h.n_bands = get_u16(in);
    h.k = in.get();
    const int domain_flag = in.get();
    if (domain_flag != 0 && domain_flag != 1) throw std::runtime_error("bad domain flag in " + path);
    h.domain = domain_flag == 1 ? PowerDomain::dB : PowerDomain::linear;
    if (h.n_bands < 1 || h.k < 1) throw std::runtime_error("bad header counts in " + path);
    h.centers.resize(static_cast<std::size_t>(h.n_bands));
    for (auto& c : h.centers) c = get_f32(in);
    h.M.resize(static_cast<std::size_t>(h.n_bands));
    for (auto& m : h.M) m = get_f32(in);
    h.V.assign(static_cast<std::size_t>(h.k), std::vector<float>(static_cast<std::size_t>(h.n_bands)));
    for (auto& row : h.V)
        for (auto& v : row) v = get_f32(in);
    const int n_entries = get_u16(in);
    stream.entries.resize(static_cast<std::size_t>(n_entries));
    for (auto& e : stream.entries) {
        const int len = in.get();
        if (len < 0) throw std::runtime_error("truncated .vbc stream: " + path);
        std::string label(static_cast<std::size_t>(len), '\0');
        in.read(label.data(), len);
        e.label = std::move(label);
        e.intensity = static_cast<double>(get_f32(in));
        e.t.resize(static_cast<std::size_t>(h.k));
        for (auto& tv : e.t) tv = static_cast<double>(get_f32(in));
    }
    if (!in) throw std::runtime_error("truncated .vbc stream: " + path);
    return stream;
}

std::string compression_stats_to_json(const CompressionStats& stats) {
    nlohmann::ordered_json j;
    j["shared_values"] = stats.shared_values;
    j["score_values"] = stats.score_values;
    j["total_values"] = stats.total_values;
    j["intensity_values"] = stats.intensity_values;
    j["original_samples"] = stats.original_samples;
    j["ratio"] = stats.ratio;
    j["ratio_with_intensity"] = stats.ratio_with_intensity;
    auto& per = j["per_stimulus"] = nlohmann::ordered_json::array();
    for (const auto& p : stats.per_stimulus) {
        nlohmann::ordered_json jp;
        jp["label"] = p.label;
        jp["scores"] = p.scores;
        jp["samples"] = p.samples;
        per.push_back(std::move(jp));
    }
    return j.dump(2);
}

}  // namespace vibro
