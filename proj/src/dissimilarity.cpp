#include "vibro/dissimilarity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace vibro {

std::vector<double> local_distances(const PcaScores& tx, const PcaScores& ty) {
    if (!(tx.bank == ty.bank) || tx.domain != ty.domain || tx.t.size() != ty.t.size())
        throw std::invalid_argument("local_distances: score identities do not match");
    std::vector<double> d(static_cast<std::size_t>(tx.t.size()));
    for (Eigen::Index j = 0; j < tx.t.size(); ++j)
        d[static_cast<std::size_t>(j)] = std::abs(tx.t(j) - ty.t(j));
    return d;
}

double predict_dissimilarity(const DissimModel& m, const PcaScores& tx, const PcaScores& ty) {
    if (!(m.bank == tx.bank) || m.domain != tx.domain)
        throw std::invalid_argument("predict_dissimilarity: model identity does not match scores");
    const auto d = local_distances(tx, ty);
    if (static_cast<Eigen::Index>(d.size()) < m.w.size())
        throw std::invalid_argument("predict_dissimilarity: fewer score components than weights");
    double acc = m.intercept;
    for (Eigen::Index j = 0; j < m.w.size(); ++j) acc += m.w(j) * d[static_cast<std::size_t>(j)];
    return acc;
}

double predict_dissimilarity(const DissimModel& m, const SpectralBasis& basis,
                             const FilterBank& bank, const Signal& x, const Signal& y) {
    const auto tx = project(basis, band_powers(x, bank, basis.domain));
    const auto ty = project(basis, band_powers(y, bank, basis.domain));
    return predict_dissimilarity(m, tx, ty);
}

namespace {

constexpr int kMaxSweeps = 10000;
constexpr double kCoefTol = 1e-7;

struct Standardized {
    Eigen::MatrixXd Z;        // centered, unit population variance per column
    Eigen::VectorXd mu, sd;   // column stats (sd = 1 where the column is constant)
    Eigen::VectorXd yc;
    double y_mean = 0.0;
    std::vector<bool> constant;
};

Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    Standardized s;
    const auto n = X.rows();
    s.mu = X.colwise().mean();
    s.sd.resize(X.cols());
    s.constant.assign(static_cast<std::size_t>(X.cols()), false);
    s.Z = X.rowwise() - s.mu.transpose();
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double var = s.Z.col(j).squaredNorm() / static_cast<double>(n);
        if (var == 0.0) {
            s.sd(j) = 1.0;
            s.constant[static_cast<std::size_t>(j)] = true;
        } else {
            s.sd(j) = std::sqrt(var);
            s.Z.col(j) /= s.sd(j);
        }
    }
    s.y_mean = y.mean();
    s.yc = y.array() - s.y_mean;
    return s;
}

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

// Coordinate descent in the standardized domain; w is both the warm start
// and the result. Returns true when the sweep limit was not hit.
bool cd_solve(const Standardized& s, double lambda, Eigen::VectorXd* w) {
    const auto n = static_cast<double>(s.Z.rows());
    Eigen::VectorXd r = s.yc - s.Z * (*w);
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double dmax = 0.0;
        for (Eigen::Index j = 0; j < s.Z.cols(); ++j) {
            if (s.constant[static_cast<std::size_t>(j)]) continue;  // pinned at 0
            const double rho = s.Z.col(j).dot(r) / n + (*w)(j);
            const double wj = soft_threshold(rho, lambda);
            const double d = wj - (*w)(j);
            if (d != 0.0) {
                r -= s.Z.col(j) * d;
                (*w)(j) = wj;
                dmax = std::max(dmax, std::abs(d));
            }
        }
        if (dmax < kCoefTol) return true;
    }
    return false;
}

std::vector<double> default_grid(double lmax) {
    std::vector<double> grid(50);
    for (int i = 0; i < 50; ++i) grid[static_cast<std::size_t>(i)] = lmax * std::pow(10.0, -4.0 * i / 49.0);
    return grid;
}

void shuffle_indices(std::vector<Eigen::Index>* idx, Rng& rng) {
    for (std::size_t i = idx->size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        std::swap((*idx)[i - 1], (*idx)[std::min(j, i - 1)]);
    }
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& y, const std::vector<Eigen::Index>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(rows[i]);
    return out;
}

}  // namespace

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const auto s = standardize(X, y);
    double lmax = 0.0;
    for (Eigen::Index j = 0; j < s.Z.cols(); ++j) {
        if (s.constant[static_cast<std::size_t>(j)]) continue;
        lmax = std::max(lmax, std::abs(s.Z.col(j).dot(s.yc)) / static_cast<double>(X.rows()));
    }
    return lmax;
}

DissimModel fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const std::vector<double>& lambdas, int folds, Rng& rng) {
    if (X.rows() != y.size()) throw std::invalid_argument("fit_lasso: row count mismatch");
    if (X.rows() < folds) throw std::invalid_argument("fit_lasso: need at least `folds` rows");
    if (folds < 2) throw std::invalid_argument("fit_lasso: need at least 2 folds");

    std::vector<double> grid = lambdas;
    if (grid.empty()) grid = default_grid(lasso_lambda_max(X, y));
    std::sort(grid.begin(), grid.end(), std::greater<>());

    // Shuffled round-robin fold assignment.
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(X.rows()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
    shuffle_indices(&idx, rng);
    std::vector<int> fold_of(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        fold_of[static_cast<std::size_t>(idx[i])] = static_cast<int>(i) % folds;

    DissimModel model;
    model.converged = true;
    std::vector<double> cv_mse(grid.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> train, test;
        for (std::size_t i = 0; i < fold_of.size(); ++i)
            (fold_of[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
        if (test.empty() || train.empty()) continue;
        const Eigen::MatrixXd Xtr = take_rows(X, train);
        const Eigen::VectorXd ytr = take_rows(y, train);
        const Eigen::MatrixXd Xte = take_rows(X, test);
        const Eigen::VectorXd yte = take_rows(y, test);
        const auto s = standardize(Xtr, ytr);
        Eigen::VectorXd w = Eigen::VectorXd::Zero(X.cols());  // warm-started along the path
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            if (!cd_solve(s, grid[gi], &w)) model.converged = false;
            const Eigen::VectorXd w_orig = w.array() / s.sd.array();
            const double b0 = s.y_mean - w_orig.dot(s.mu);
            const Eigen::VectorXd pred = (Xte * w_orig).array() + b0;
            cv_mse[gi] += (yte - pred).squaredNorm() / static_cast<double>(yte.size()) / folds;
        }
    }
    std::size_t best = 0;
    for (std::size_t gi = 1; gi < grid.size(); ++gi)
        if (cv_mse[gi] < cv_mse[best]) best = gi;

    const auto s = standardize(X, y);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(X.cols());
    if (!cd_solve(s, grid[best], &w)) model.converged = false;
    model.w = w.array() / s.sd.array();
    model.intercept = s.y_mean - model.w.dot(s.mu);
    model.lambda = grid[best];
    model.cv_report.reserve(grid.size());
    for (std::size_t gi = 0; gi < grid.size(); ++gi) model.cv_report.emplace_back(grid[gi], cv_mse[gi]);
    return model;
}

SplitReport evaluate_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double train_frac, int repeats, Rng& rng) {
    if (X.rows() != y.size()) throw std::invalid_argument("evaluate_split: row count mismatch");
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw std::invalid_argument("evaluate_split: train_frac must lie in (0, 1)");
    if (repeats < 1) throw std::invalid_argument("evaluate_split: need at least one repeat");
    const auto n = X.rows();
    const auto n_train =
        std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(train_frac * static_cast<double>(n))),
                                 1, n - 1);
    if (n < 2) throw std::invalid_argument("evaluate_split: too few rows to split");

    SplitReport report;
    report.repeats = repeats;
    std::vector<double> r2s;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
    for (int rep = 0; rep < repeats; ++rep) {
        shuffle_indices(&idx, rng);
        const std::vector<Eigen::Index> train(idx.begin(), idx.begin() + n_train);
        const std::vector<Eigen::Index> test(idx.begin() + n_train, idx.end());
        const Eigen::MatrixXd Xtr = take_rows(X, train);
        const Eigen::VectorXd ytr = take_rows(y, train);
        const int folds = std::min<int>(10, static_cast<int>(n_train));
        const auto model = fit_lasso(Xtr, ytr, {}, folds, rng);
        const Eigen::MatrixXd Xte = take_rows(X, test);
        const Eigen::VectorXd yte = take_rows(y, test);
        const Eigen::VectorXd pred = (Xte * model.w).array() + model.intercept;
        const double ss_tot = (yte.array() - yte.mean()).square().sum();
        if (ss_tot == 0.0) {
            ++report.degenerate_repeats;
            continue;
        }
        const double ss_res = (yte - pred).squaredNorm();
        r2s.push_back(1.0 - ss_res / ss_tot);
    }
    if (r2s.empty()) {
        report.r2_mean = std::nan("");
        report.r2_sd = std::nan("");
        return report;
    }
    double mean = 0.0;
    for (double v : r2s) mean += v;
    mean /= static_cast<double>(r2s.size());
    double var = 0.0;
    for (double v : r2s) var += (v - mean) * (v - mean);
    report.r2_mean = mean;
    report.r2_sd = r2s.size() > 1 ? std::sqrt(var / static_cast<double>(r2s.size() - 1)) : 0.0;
    return report;
}

AblationCurves component_ablation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  int repeats, Rng& rng) {
    AblationCurves curves;
    for (Eigen::Index i = 1; i <= X.cols(); ++i) {
        curves.solo.push_back(evaluate_split(X.col(i - 1), y, 0.8, repeats, rng));
        curves.cumulative.push_back(evaluate_split(X.leftCols(i), y, 0.8, repeats, rng));
    }
    return curves;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        std::size_t i = 0;
        while (i < field.size() && field[i] == ' ') ++i;
        out.push_back(field.substr(i));
    }
    return out;
}

}  // namespace

RatingsTable load_ratings_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty ratings file: " + path);
    const auto header = split_csv_line(line);
    if (header.size() != 3 || header[0] != "stim_a" || header[1] != "stim_b" || header[2] != "rating")
        throw std::runtime_error("ratings CSV must have header stim_a,stim_b,rating: " + path);
    RatingsTable table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 3 fields");
        Rating r;
        r.stim_a = fields[0];
        r.stim_b = fields[1];
        try {
            r.rating = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad rating value");
        }
        if (r.rating < 0.0 || r.rating > 1.0)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": rating outside [0, 1]");
        table.push_back(std::move(r));
    }
    return table;
}

void build_design(const RatingsTable& table,
                  const std::vector<std::pair<std::string, PcaScores>>& scores,
                  bool include_self_pairs, Eigen::MatrixXd* X, Eigen::VectorXd* y) {
    if (table.empty()) throw std::invalid_argument("build_design: empty ratings table");
    auto find = [&scores](const std::string& id) -> const PcaScores& {
        for (const auto& [label, s] : scores)
            if (label == id) return s;
        throw std::runtime_error("ratings reference unknown stimulus id: " + id);
    };
    std::vector<std::vector<double>> rows;
    std::vector<double> ys;
    for (const auto& r : table) {
        if (!include_self_pairs && r.stim_a == r.stim_b) continue;
        rows.push_back(local_distances(find(r.stim_a), find(r.stim_b)));
        ys.push_back(r.rating);
    }
    if (rows.empty()) throw std::invalid_argument("build_design: no usable rating rows");
    X->resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    y->resize(static_cast<Eigen::Index>(ys.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            (*X)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        (*y)(static_cast<Eigen::Index>(i)) = ys[i];
    }
}

std::string dissim_model_to_json(const DissimModel& m) {
    nlohmann::ordered_json j;
    j["w"] = std::vector<double>(m.w.data(), m.w.data() + m.w.size());
    j["intercept"] = m.intercept;
    j["lambda"] = m.lambda;
    nlohmann::ordered_json id;
    id["domain"] = m.domain == PowerDomain::dB ? "dB" : "linear";
    id["k"] = m.basis_k;
    nlohmann::ordered_json bank;
    bank["n_bands"] = m.bank.n_bands;
    bank["f_min"] = m.bank.f_min;
    bank["f_max"] = m.bank.f_max;
    bank["jnd"] = m.bank.jnd;
    bank["sample_rate"] = m.bank.sample_rate;
    id["bank"] = bank;
    j["basis_id"] = id;
    auto& cv = j["cv"] = nlohmann::ordered_json::array();
    for (const auto& [lam, mse] : m.cv_report) cv.push_back({lam, mse});
    j["converged"] = m.converged;
    return j.dump(2);
}

DissimModel dissim_model_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    DissimModel m;
    const auto w = j.at("w").get<std::vector<double>>();
    m.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.intercept = j.at("intercept").get<double>();
    m.lambda = j.at("lambda").get<double>();
    const auto& id = j.at("basis_id");
    m.domain = id.at("domain").get<std::string>() == "dB" ? PowerDomain::dB : PowerDomain::linear;
    m.basis_k = id.at("k").get<int>();
    const auto& bank = id.at("bank");
    m.bank.n_bands = bank.at("n_bands").get<int>();
    m.bank.f_min = bank.at("f_min").get<double>();
    m.bank.f_max = bank.at("f_max").get<double>();
    m.bank.jnd = bank.at("jnd").get<double>();
    m.bank.sample_rate = bank.at("sample_rate").get<double>();
    if (j.contains("cv"))
        for (const auto& row : j.at("cv"))
            m.cv_report.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
    m.converged = j.value("converged", true);
    return m;
}

}  // namespace vibro
