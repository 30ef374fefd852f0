#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vibro/filterbank.hpp"

namespace vibro {

// PCA over band-power vectors: mean spectrum, orthonormal components (rows),
// eigenvalues of the sample covariance, and explained-variance ratios
// against the total variance. Components carry a deterministic sign: the
// largest-magnitude entry of each row is positive.
struct SpectralBasis {
    Eigen::VectorXd mean;        // length n_bands
    Eigen::MatrixXd components;  // k x n_bands, orthonormal rows
    std::vector<double> eigenvalues;
    std::vector<double> explained_ratio;
    PowerDomain domain = PowerDomain::dB;
    BankId bank;

    int k() const { return static_cast<int>(components.rows()); }
    int n_bands() const { return static_cast<int>(components.cols()); }
};

struct PcaScores {
    Eigen::VectorXd t;
    PowerDomain domain = PowerDomain::dB;
    BankId bank;
    int basis_k = 0;
};

// Fit with a fixed component count k (1 <= k <= n_bands).
SpectralBasis fit_basis(const std::vector<BandPowers>& corpus, int k);

// Fit keeping the smallest k whose cumulative explained ratio reaches the
// target fraction (0 < target <= 1).
SpectralBasis fit_basis_variance(const std::vector<BandPowers>& corpus, double variance_target);

// t = V * (p - M). Identities must match.
PcaScores project(const SpectralBasis& basis, const BandPowers& p);

// M + sum_{j < k_use} t_j V_j; linear-domain results are floored at 1e-10.
BandPowers reconstruct(const SpectralBasis& basis, const PcaScores& scores, int k_use);

std::string basis_to_json(const SpectralBasis& basis);
SpectralBasis basis_from_json(const std::string& text);

}  // namespace vibro
