#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace vibro {

// Symmetric nonnegative distances with zero diagonal.
struct DistanceMatrix {
    Eigen::MatrixXd d;

    explicit DistanceMatrix(Eigen::MatrixXd values);
    Eigen::Index n() const { return d.rows(); }
};

// Classical-MDS result. All signed eigenvalues of the double-centered Gram
// matrix are retained; human dissimilarities need not be Euclidean and
// negative values are part of the report.
struct Embedding {
    Eigen::MatrixXd coords;           // n x dims, column means zero
    std::vector<double> eigenvalues;  // all n, descending, signed
    double stress = 0.0;              // Kruskal stress-1 against the input distances
    int positive_dims = 0;            // eigenpairs actually used; < dims means zero-padded axes
    std::vector<std::string> labels;
};

struct ProcrustesResult {
    Eigen::MatrixXd aligned;            // source mapped onto the target
    std::vector<double> point_residual; // per-point distance to the target
    double total_error = 0.0;           // sum of squared residuals
    double scale = 1.0;
    Eigen::MatrixXd rotation;           // orthogonal (reflections permitted)
};

// Double-center -0.5*J*D^2*J and embed on the top positive eigenpairs.
// Axis signs are deterministic (largest-magnitude coordinate positive).
Embedding classical_mds(const DistanceMatrix& d, int dims);

// Optimal translation + rotation/reflection + uniform scale of source onto
// target (least squares). Throws when the source is degenerate.
ProcrustesResult procrustes(const Eigen::MatrixXd& target, const Eigen::MatrixXd& source);

// Pearson correlations of per-stimulus scores against each embedding axis.
std::pair<double, double> component_arrow(const std::vector<double>& scores, const Embedding& emb);

std::string embedding_to_json(const Embedding& emb);
std::string procrustes_to_json(const ProcrustesResult& r, const std::vector<std::string>& labels);

}  // namespace vibro
