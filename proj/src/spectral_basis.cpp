#include "vibro/spectral_basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace vibro {

namespace {

struct EigenDecomp {
    Eigen::VectorXd mean;
    Eigen::MatrixXd vectors;      // columns, descending eigenvalue order
    std::vector<double> values;   // descending, clamped at 0
    double total = 0.0;
};

EigenDecomp decompose(const std::vector<BandPowers>& corpus) {
    if (corpus.size() < 2) throw std::invalid_argument("fit_basis: corpus must hold at least 2 spectra");
    const auto& first = corpus.front();
    const auto d = static_cast<Eigen::Index>(first.values.size());
    for (const auto& p : corpus) {
        if (!(p.bank == first.bank) || p.domain != first.domain ||
            static_cast<Eigen::Index>(p.values.size()) != d)
            throw std::invalid_argument("fit_basis: corpus entries use inconsistent bank identities");
    }
    const auto n = static_cast<Eigen::Index>(corpus.size());
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            X(i, j) = corpus[static_cast<std::size_t>(i)].values[static_cast<std::size_t>(j)];

    EigenDecomp dec;
    dec.mean = X.colwise().mean();
    const Eigen::MatrixXd C = (X.rowwise() - dec.mean.transpose()).transpose() *
                              (X.rowwise() - dec.mean.transpose()) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    if (es.info() != Eigen::Success) throw std::runtime_error("fit_basis: eigendecomposition failed");

    dec.vectors.resize(d, d);
    dec.values.resize(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {  // Eigen returns ascending order
        const Eigen::Index src = d - 1 - j;
        dec.vectors.col(j) = es.eigenvectors().col(src);
        dec.values[static_cast<std::size_t>(j)] = std::max(es.eigenvalues()(src), 0.0);
        dec.total += dec.values[static_cast<std::size_t>(j)];
    }
    return dec;
}

SpectralBasis assemble(const std::vector<BandPowers>& corpus, const EigenDecomp& dec, int k) {
    const auto d = dec.vectors.rows();
    if (k < 1 || k > d) throw std::invalid_argument("fit_basis: component count out of range");
    if (dec.total <= 0.0)
        throw std::invalid_argument("fit_basis: corpus has zero variance (identical spectra)");
    SpectralBasis basis;
    basis.mean = dec.mean;
    basis.domain = corpus.front().domain;
    basis.bank = corpus.front().bank;
    basis.components.resize(k, d);
    basis.eigenvalues.assign(dec.values.begin(), dec.values.begin() + k);
    basis.explained_ratio.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd v = dec.vectors.col(j);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0.0) v = -v;  // deterministic sign
        basis.components.row(j) = v.transpose();
        basis.explained_ratio[static_cast<std::size_t>(j)] =
            dec.values[static_cast<std::size_t>(j)] / dec.total;
    }
    return basis;
}

void check_identity(const SpectralBasis& basis, const BankId& bank, PowerDomain domain) {
    if (!(basis.bank == bank) || basis.domain != domain)
        throw std::invalid_argument("basis identity does not match the band-power identity");
}

}  // namespace

SpectralBasis fit_basis(const std::vector<BandPowers>& corpus, int k) {
    return assemble(corpus, decompose(corpus), k);
}

SpectralBasis fit_basis_variance(const std::vector<BandPowers>& corpus, double variance_target) {
    if (!(variance_target > 0.0 && variance_target <= 1.0))
        throw std::invalid_argument("fit_basis: variance target must be in (0, 1]");
    const auto dec = decompose(corpus);
    if (dec.total <= 0.0)
        throw std::invalid_argument("fit_basis: corpus has zero variance (identical spectra)");
    double cum = 0.0;
    int k = static_cast<int>(dec.values.size());
    for (std::size_t j = 0; j < dec.values.size(); ++j) {
        cum += dec.values[j] / dec.total;
        if (cum >= variance_target - 1e-12) {
            k = static_cast<int>(j) + 1;
            break;
        }
    }
    return assemble(corpus, dec, k);
}

PcaScores project(const SpectralBasis& basis, const BandPowers& p) {
    check_identity(basis, p.bank, p.domain);
    if (static_cast<int>(p.values.size()) != basis.n_bands())
        throw std::invalid_argument("project: dimension mismatch");
    const Eigen::Map<const Eigen::VectorXd> v(p.values.data(),
                                              static_cast<Eigen::Index>(p.values.size()));
    PcaScores s;
    s.t = basis.components * (v - basis.mean);
    s.domain = basis.domain;
    s.bank = basis.bank;
    s.basis_k = basis.k();
    return s;
}

BandPowers reconstruct(const SpectralBasis& basis, const PcaScores& scores, int k_use) {
    check_identity(basis, scores.bank, scores.domain);
    if (k_use < 0 || k_use > basis.k() || k_use > scores.t.size())
        throw std::invalid_argument("reconstruct: k_use out of range");
    Eigen::VectorXd p = basis.mean;
    for (int j = 0; j < k_use; ++j) p += scores.t(j) * basis.components.row(j).transpose();
    BandPowers out;
    out.domain = basis.domain;
    out.bank = basis.bank;
    out.values.resize(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        double v = p(i);
        if (basis.domain == PowerDomain::linear) v = std::max(v, kLinearPowerFloor);
        out.values[static_cast<std::size_t>(i)] = v;
    }
    return out;
}

namespace {

nlohmann::ordered_json bank_id_to_json(const BankId& id) {
    nlohmann::ordered_json j;
    j["n_bands"] = id.n_bands;
    j["f_min"] = id.f_min;
    j["f_max"] = id.f_max;
    j["jnd"] = id.jnd;
    j["sample_rate"] = id.sample_rate;
    return j;
}

BankId bank_id_from_json(const nlohmann::json& j) {
    BankId id;
    id.n_bands = j.at("n_bands").get<int>();
    id.f_min = j.at("f_min").get<double>();
    id.f_max = j.at("f_max").get<double>();
    id.jnd = j.at("jnd").get<double>();
    id.sample_rate = j.at("sample_rate").get<double>();
    return id;
}

}  // namespace

std::string basis_to_json(const SpectralBasis& basis) {
    nlohmann::ordered_json j;
    j["domain"] = basis.domain == PowerDomain::dB ? "dB" : "linear";
    j["bank"] = bank_id_to_json(basis.bank);
    j["M"] = std::vector<double>(basis.mean.data(), basis.mean.data() + basis.mean.size());
    auto& V = j["V"] = nlohmann::ordered_json::array();
    for (int r = 0; r < basis.k(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(basis.n_bands()));
        for (int c = 0; c < basis.n_bands(); ++c) row[static_cast<std::size_t>(c)] = basis.components(r, c);
        V.push_back(row);
    }
    j["eigenvalues"] = basis.eigenvalues;
    j["ratios"] = basis.explained_ratio;
    return j.dump(2);
}

SpectralBasis basis_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    SpectralBasis basis;
    const std::string dom = j.at("domain").get<std::string>();
    if (dom == "dB") basis.domain = PowerDomain::dB;
    else if (dom == "linear") basis.domain = PowerDomain::linear;
    else throw std::runtime_error("basis JSON: domain must be dB or linear");
    basis.bank = bank_id_from_json(j.at("bank"));
    const auto M = j.at("M").get<std::vector<double>>();
    basis.mean = Eigen::Map<const Eigen::VectorXd>(M.data(), static_cast<Eigen::Index>(M.size()));
    const auto V = j.at("V").get<std::vector<std::vector<double>>>();
    if (V.empty()) throw std::runtime_error("basis JSON: V must hold at least one component");
    basis.components.resize(static_cast<Eigen::Index>(V.size()), static_cast<Eigen::Index>(M.size()));
    for (std::size_t r = 0; r < V.size(); ++r) {
        if (V[r].size() != M.size()) throw std::runtime_error("basis JSON: ragged V");
        for (std::size_t c = 0; c < V[r].size(); ++c)
            basis.components(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = V[r][c];
    }
    basis.eigenvalues = j.value("eigenvalues", std::vector<double>(V.size(), 0.0));
    basis.explained_ratio = j.value("ratios", std::vector<double>(V.size(), 0.0));
    return basis;
}

}  // namespace vibro
