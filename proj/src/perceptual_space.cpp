#include "vibro/perceptual_space.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "vibro/signal.hpp"

namespace vibro {

DistanceMatrix::DistanceMatrix(Eigen::MatrixXd values) : d(std::move(values)) {
    if (d.rows() != d.cols()) throw std::invalid_argument("DistanceMatrix: must be square");
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        if (d(i, i) != 0.0) throw std::invalid_argument("DistanceMatrix: diagonal must be zero");
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            if (d(i, j) < 0.0) throw std::invalid_argument("DistanceMatrix: entries must be nonnegative");
            if (std::abs(d(i, j) - d(j, i)) > 1e-12)
                throw std::invalid_argument("DistanceMatrix: must be symmetric");
        }
    }
}

Embedding classical_mds(const DistanceMatrix& dm, int dims) {
    const auto n = dm.n();
    if (dims < 1) throw std::invalid_argument("classical_mds: dims must be >= 1");
    if (n < dims + 1) throw std::invalid_argument("classical_mds: need at least dims+1 points");

    const Eigen::MatrixXd D2 = dm.d.array().square();
    const Eigen::MatrixXd J =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    const Eigen::MatrixXd B = -0.5 * J * D2 * J;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
    if (es.info() != Eigen::Success) throw std::runtime_error("classical_mds: eigendecomposition failed");

    Embedding emb;
    emb.eigenvalues.resize(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j)
        emb.eigenvalues[static_cast<std::size_t>(j)] = es.eigenvalues()(n - 1 - j);

    emb.coords = Eigen::MatrixXd::Zero(n, dims);
    for (int a = 0; a < dims; ++a) {
        const double ev = emb.eigenvalues[static_cast<std::size_t>(a)];
        if (ev <= 0.0) break;  // remaining axes stay zero-padded
        Eigen::VectorXd axis = es.eigenvectors().col(n - 1 - a) * std::sqrt(ev);
        Eigen::Index imax = 0;
        axis.cwiseAbs().maxCoeff(&imax);
        if (axis(imax) < 0.0) axis = -axis;  // deterministic axis sign
        emb.coords.col(a) = axis;
        emb.positive_dims = a + 1;
    }

    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dhat = (emb.coords.row(i) - emb.coords.row(j)).norm();
            num += (dm.d(i, j) - dhat) * (dm.d(i, j) - dhat);
            den += dm.d(i, j) * dm.d(i, j);
        }
    }
    emb.stress = den > 0.0 ? std::sqrt(num / den) : 0.0;
    return emb;
}

ProcrustesResult procrustes(const Eigen::MatrixXd& target, const Eigen::MatrixXd& source) {
    if (target.rows() != source.rows() || target.cols() != source.cols())
        throw std::invalid_argument("procrustes: configurations must share shape");
    if (target.rows() < 1) throw std::invalid_argument("procrustes: empty configuration");

    const Eigen::RowVectorXd mt = target.colwise().mean();
    const Eigen::RowVectorXd ms = source.colwise().mean();
    const Eigen::MatrixXd T = target.rowwise() - mt;
    const Eigen::MatrixXd S = source.rowwise() - ms;
    const double s_norm2 = S.squaredNorm();
    if (s_norm2 == 0.0) throw std::invalid_argument("procrustes: degenerate source (all points identical)");

    const Eigen::MatrixXd A = S.transpose() * T;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    ProcrustesResult r;
    r.rotation = svd.matrixU() * svd.matrixV().transpose();  // full orthogonal group
    r.scale = svd.singularValues().sum() / s_norm2;
    r.aligned = (r.scale * S * r.rotation).rowwise() + mt;

    r.point_residual.resize(static_cast<std::size_t>(target.rows()));
    r.total_error = 0.0;
    for (Eigen::Index i = 0; i < target.rows(); ++i) {
        const double e = (r.aligned.row(i) - target.row(i)).norm();
        r.point_residual[static_cast<std::size_t>(i)] = e;
        r.total_error += e * e;
    }
    return r;
}

std::pair<double, double> component_arrow(const std::vector<double>& scores, const Embedding& emb) {
    if (static_cast<Eigen::Index>(scores.size()) != emb.coords.rows())
        throw std::invalid_argument("component_arrow: score count does not match embedding");
    if (scores.size() < 3) throw std::invalid_argument("component_arrow: need at least 3 points");
    std::vector<double> ax0(scores.size()), ax1(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        ax0[i] = emb.coords(static_cast<Eigen::Index>(i), 0);
        ax1[i] = emb.coords.cols() > 1 ? emb.coords(static_cast<Eigen::Index>(i), 1) : 0.0;
    }
    return {pearson_r(scores, ax0), pearson_r(scores, ax1)};
}

std::string embedding_to_json(const Embedding& emb) {
    nlohmann::ordered_json j;
    j["labels"] = emb.labels;
    auto& coords = j["coords"] = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < emb.coords.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(emb.coords.cols()));
        for (Eigen::Index c = 0; c < emb.coords.cols(); ++c) row[static_cast<std::size_t>(c)] = emb.coords(i, c);
        coords.push_back(row);
    }
    j["eigenvalues"] = emb.eigenvalues;
    j["stress"] = emb.stress;
    j["positive_dims"] = emb.positive_dims;
    return j.dump(2);
}

std::string procrustes_to_json(const ProcrustesResult& r, const std::vector<std::string>& labels) {
    nlohmann::ordered_json j;
    j["labels"] = labels;
    auto& aligned = j["aligned"] = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < r.aligned.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(r.aligned.cols()));
        for (Eigen::Index c = 0; c < r.aligned.cols(); ++c) row[static_cast<std::size_t>(c)] = r.aligned(i, c);
        aligned.push_back(row);
    }
    j["point_residual"] = r.point_residual;
    j["total_error"] = r.total_error;
    j["scale"] = r.scale;
    return j.dump(2);
}

}  // namespace vibro
