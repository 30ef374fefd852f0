#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vibro/spectral_basis.hpp"

namespace vibro {

// Weighted-L1 dissimilarity over PCA scores. The intercept models the
// nonzero floor observed for identical pairs and is never penalized.
struct DissimModel {
    Eigen::VectorXd w;
    double intercept = 0.0;
    double lambda = 0.0;
    PowerDomain domain = PowerDomain::dB;
    BankId bank;
    int basis_k = 0;
    std::vector<std::pair<double, double>> cv_report;  // (lambda, mean CV MSE)
    bool converged = true;
};

struct Rating {
    std::string stim_a;
    std::string stim_b;
    double rating = 0.0;
};
using RatingsTable = std::vector<Rating>;

struct SplitReport {
    double r2_mean = 0.0;
    double r2_sd = 0.0;
    int repeats = 0;
    int degenerate_repeats = 0;  // test splits with zero rating variance
    bool degenerate() const { return degenerate_repeats == repeats; }
};

struct AblationCurves {
    std::vector<SplitReport> solo;        // component i alone, i = 1..k
    std::vector<SplitReport> cumulative;  // components 1..i
};

// d_j = |t_x,j - t_y,j|. Score identities must match.
std::vector<double> local_distances(const PcaScores& tx, const PcaScores& ty);

// Full pipeline: band powers -> projection -> local distances -> w.d + intercept.
double predict_dissimilarity(const DissimModel& m, const SpectralBasis& basis,
                             const FilterBank& bank, const Signal& x, const Signal& y);

// Same model applied to precomputed scores.
double predict_dissimilarity(const DissimModel& m, const PcaScores& tx, const PcaScores& ty);

// Cyclic coordinate descent with soft-thresholding on standardized columns;
// lambda chosen by `folds`-fold cross-validation over the grid (50 log-spaced
// values from lambda_max down to 1e-4*lambda_max when `lambdas` is empty);
// final fit on all rows; weights reported in the original column scale.
DissimModel fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const std::vector<double>& lambdas, int folds, Rng& rng);

// Largest lambda with a nonzero solution: max_j |z_j . (y - mean(y))| / n
// over standardized columns.
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Repeated random train/test splits; fit (with internal CV) on the train
// fraction, score R^2 on the held-out rows.
SplitReport evaluate_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double train_frac, int repeats, Rng& rng);

// R^2 curves using component i alone and components 1..i cumulatively.
AblationCurves component_ablation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  int repeats, Rng& rng);

// CSV with header "stim_a,stim_b,rating"; ratings must lie in [0, 1].
RatingsTable load_ratings_csv(const std::string& path);

// Design matrix of local distances joined against per-stimulus scores.
// Rows follow the table order; self-pairs are dropped unless requested.
void build_design(const RatingsTable& table,
                  const std::vector<std::pair<std::string, PcaScores>>& scores,
                  bool include_self_pairs, Eigen::MatrixXd* X, Eigen::VectorXd* y);

std::string dissim_model_to_json(const DissimModel& m);
DissimModel dissim_model_from_json(const std::string& text);

}  // namespace vibro
