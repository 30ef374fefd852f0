#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "vibro/filterbank.hpp"
#include "vibro/signal.hpp"
#include "vibro/spectral_basis.hpp"

using namespace vibro;

namespace {

BandPowers make_powers(const Eigen::VectorXd& v, const BankId& id, PowerDomain domain) {
    BandPowers p;
    p.values.assign(v.data(), v.data() + v.size());
    p.domain = domain;
    p.bank = id;
    return p;
}

// Orthonormal directions from seeded vectors, plus a planted low-rank corpus.
struct PlantedCorpus {
    Eigen::VectorXd mean;
    Eigen::MatrixXd directions;  // r x n, orthonormal rows
    Eigen::MatrixXd coeffs;      // samples x r
    std::vector<BandPowers> corpus;
};

PlantedCorpus plant_corpus(const BankId& id, int rank, int count, std::uint64_t seed) {
    const int n = id.n_bands;
    Rng rng(seed);
    PlantedCorpus out;
    out.mean.resize(n);
    for (int i = 0; i < n; ++i) out.mean(i) = -30.0 + 2.0 * rng.gaussian();
    out.directions.resize(rank, n);
    for (int r = 0; r < rank; ++r) {
        Eigen::VectorXd d(n);
        for (int i = 0; i < n; ++i) d(i) = rng.gaussian();
        for (int prev = 0; prev < r; ++prev) d -= out.directions.row(prev).dot(d) * out.directions.row(prev).transpose();
        out.directions.row(r) = d / d.norm();
    }
    out.coeffs.resize(count, rank);
    for (int s = 0; s < count; ++s) {
        Eigen::VectorXd x = out.mean;
        for (int r = 0; r < rank; ++r) {
            const double scale = 8.0 / (r + 1.0);  // descending variance per direction
            out.coeffs(s, r) = scale * rng.gaussian();
            x += out.coeffs(s, r) * out.directions.row(r).transpose();
        }
        out.corpus.push_back(make_powers(x, id, PowerDomain::dB));
    }
    return out;
}

}  // namespace

TEST_CASE("rank-1 corpus yields one dominant component") {
    const auto bank = design_bank(10, 1000, 0.17, 2800);
    const auto planted = plant_corpus(bank.id(), 1, 20, 101);
    const auto basis = fit_basis(planted.corpus, 1);
    CHECK(basis.explained_ratio[0] == doctest::Approx(1.0).epsilon(1e-10));
    const double align = std::abs(basis.components.row(0).dot(planted.directions.row(0)));
    CHECK(align == doctest::Approx(1.0).epsilon(1e-9));
    for (int i = 0; i < basis.mean.size(); ++i)
        CHECK(basis.mean(i) == doctest::Approx(planted.mean(i)).epsilon(0.5));
}

TEST_CASE("rank-3 corpus: subspace, ratios and round trip") {
    const auto bank = design_bank(10, 1000, 0.17, 2800);
    const auto planted = plant_corpus(bank.id(), 3, 50, 202);
    const auto basis = fit_basis(planted.corpus, 3);

    // principal angles between planted and recovered subspaces
    const Eigen::MatrixXd overlap = planted.directions * basis.components.transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(overlap);
    for (int i = 0; i < 3; ++i) {
        const double cosangle = std::min(svd.singularValues()(i), 1.0);
        CHECK(std::acos(cosangle) < 1e-8);
    }

    // ratios against an independent eigensolver on the sample covariance
    const int n = bank.id().n_bands;
    const int count = static_cast<int>(planted.corpus.size());
    Eigen::MatrixXd data(count, n);
    for (int s = 0; s < count; ++s)
        for (int i = 0; i < n; ++i) data(s, i) = planted.corpus[static_cast<std::size_t>(s)].values[static_cast<std::size_t>(i)];
    const Eigen::RowVectorXd mu = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - mu;
    const Eigen::MatrixXd cov = centered.transpose() * centered / double(count - 1);
    std::vector<std::vector<double>> cov_rows(static_cast<std::size_t>(n),
                                              std::vector<double>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cov_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cov(i, j);
    const auto oracle = testutil::jacobi_eigenvalues(cov_rows);
    const double trace = cov.trace();
    for (int i = 0; i < 3; ++i)
        CHECK(basis.explained_ratio[static_cast<std::size_t>(i)] ==
              doctest::Approx(oracle[static_cast<std::size_t>(i)] / trace).epsilon(1e-10));

    // full-rank projection round-trips each corpus member
    const auto full = fit_basis(planted.corpus, n);
    for (const auto& p : planted.corpus) {
        const auto scores = project(full, p);
        const auto back = reconstruct(full, scores, n);
        for (std::size_t i = 0; i < p.values.size(); ++i)
            CHECK(back.values[i] == doctest::Approx(p.values[i]).epsilon(1e-9));
    }
}

TEST_CASE("component signs follow the largest-coefficient convention") {
    const auto bank = design_bank(10, 1000, 0.17, 2800);
    const auto planted = plant_corpus(bank.id(), 4, 40, 303);
    const auto basis = fit_basis(planted.corpus, 4);
    for (int r = 0; r < 4; ++r) {
        Eigen::Index imax = 0;
        basis.components.row(r).cwiseAbs().maxCoeff(&imax);
        CHECK(basis.components(r, imax) > 0.0);
    }
}

TEST_CASE("truncated reconstruction error shrinks as components are added") {
    const auto bank = design_bank(10, 1000, 0.17, 2800);
    const auto planted = plant_corpus(bank.id(), 5, 60, 404);
    const auto basis = fit_basis(planted.corpus, 5);
    const auto& probe = planted.corpus[7];
    const auto scores = project(basis, probe);
    double prev = 1e300;
    for (int k_use = 1; k_use <= 5; ++k_use) {
        const auto back = reconstruct(basis, scores, k_use);
        double err = 0.0;
        for (std::size_t i = 0; i < probe.values.size(); ++i)
            err += (back.values[i] - probe.values[i]) * (back.values[i] - probe.values[i]);
        CHECK(err <= prev + 1e-12);
        prev = err;
    }
    CHECK(prev < 1e-18);  // rank-5 data is exact with all 5 components
}

TEST_CASE("variance targeting picks the smallest sufficient k") {
    const auto bank = design_bank(100, 200, 0.17, 2800);  // 5 bands
    const auto id = bank.id();
    const int n = id.n_bands;
    // two samples per direction at exactly +/- a_j: eigenvalues 2*a_j^2/(N-1)
    const std::vector<double> amp{2.0, std::sqrt(2.0), 1.0, 1.0};
    Eigen::VectorXd mean = Eigen::VectorXd::Constant(n, -25.0);
    std::vector<BandPowers> corpus;
    for (std::size_t j = 0; j < amp.size(); ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e(static_cast<Eigen::Index>(j)) = 1.0;
        corpus.push_back(make_powers(mean + amp[j] * e, id, PowerDomain::dB));
        corpus.push_back(make_powers(mean - amp[j] * e, id, PowerDomain::dB));
    }
    // ratios: 0.5, 0.25, 0.125, 0.125
    CHECK(fit_basis_variance(corpus, 0.5).k() == 1);
    CHECK(fit_basis_variance(corpus, 0.6).k() == 2);
    CHECK(fit_basis_variance(corpus, 0.75).k() == 2);
    CHECK(fit_basis_variance(corpus, 0.76).k() == 3);
    CHECK(fit_basis_variance(corpus, 0.875).k() == 3);
    CHECK(fit_basis_variance(corpus, 1.0).k() == 4);
}

TEST_CASE("identity and argument validation") {
    const auto bank = design_bank(10, 1000, 0.17, 2800);
    const auto other = design_bank(10, 900, 0.17, 2800);
    const auto planted = plant_corpus(bank.id(), 2, 10, 505);

    std::vector<BandPowers> empty;
    CHECK_THROWS(fit_basis(empty, 1));
    std::vector<BandPowers> one{planted.corpus[0]};
    CHECK_THROWS(fit_basis(one, 1));

    auto mixed = planted.corpus;
    mixed[3].bank = other.id();
    CHECK_THROWS(fit_basis(mixed, 2));

    auto mixed_domain = planted.corpus;
    mixed_domain[2].domain = PowerDomain::linear;
    CHECK_THROWS(fit_basis(mixed_domain, 2));

    CHECK_THROWS(fit_basis(planted.corpus, 0));
    CHECK_THROWS(fit_basis(planted.corpus, 31));

    const auto basis = fit_basis(planted.corpus, 2);
    auto foreign = planted.corpus[0];
    foreign.bank = other.id();
    CHECK_THROWS(project(basis, foreign));
    auto wrong_domain = planted.corpus[0];
    wrong_domain.domain = PowerDomain::linear;
    CHECK_THROWS(project(basis, wrong_domain));

    const auto scores = project(basis, planted.corpus[0]);
    CHECK_THROWS(reconstruct(basis, scores, 0));
    CHECK_THROWS(reconstruct(basis, scores, 3));
}

TEST_CASE("a constant corpus cannot define a basis") {
    const auto bank = design_bank(10, 1000, 0.17, 2800);
    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(30, -20.0);
    std::vector<BandPowers> corpus;
    for (int i = 0; i < 5; ++i) corpus.push_back(make_powers(flat, bank.id(), PowerDomain::dB));
    CHECK_THROWS(fit_basis(corpus, 1));
}

TEST_CASE("linear-domain reconstruction respects the power floor") {
    const auto bank = design_bank(100, 200, 0.17, 2800);
    const auto id = bank.id();
    std::vector<BandPowers> corpus;
    Rng rng(606);
    for (int s = 0; s < 10; ++s) {
        Eigen::VectorXd v(id.n_bands);
        for (int i = 0; i < id.n_bands; ++i) v(i) = 1e-4 * (1.0 + 0.5 * rng.uniform());
        corpus.push_back(make_powers(v, id, PowerDomain::linear));
    }
    const auto basis = fit_basis(corpus, 1);
    PcaScores scores = project(basis, corpus[0]);
    scores.t(0) = -1e6;  // drive the reconstruction far negative
    const auto back = reconstruct(basis, scores, 1);
    for (double v : back.values) CHECK(v >= kLinearPowerFloor);
}

TEST_CASE("basis serialization round-trips exactly") {
    const auto bank = design_bank(10, 1000, 0.17, 2800);
    const auto planted = plant_corpus(bank.id(), 3, 25, 707);
    const auto basis = fit_basis(planted.corpus, 3);
    const auto back = basis_from_json(basis_to_json(basis));
    CHECK(back.domain == basis.domain);
    CHECK(back.bank == basis.bank);
    CHECK(back.mean == basis.mean);
    CHECK(back.components == basis.components);
    CHECK(back.eigenvalues == basis.eigenvalues);
    CHECK(back.explained_ratio == basis.explained_ratio);

    const auto scores = project(basis, planted.corpus[0]);
    const auto scores2 = project(back, planted.corpus[0]);
    CHECK(scores.t == scores2.t);
}
