#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace graff {

enum class RoundingRule {
    /// Walk u in descending order, add each vertex compatible with the
    /// current set, stop at the first one that would lower the density.
    GreedyDensity,
};

struct SolverParams {
    int max_iterations = 50;          ///< projected-gradient steps per penalty stage
    int max_stages = 40;              ///< penalty increases before giving up
    double tolerance = 1e-4;          ///< stop a stage when |u_new - u| drops below this
    double penalty_growth = 2.0;      ///< penalty multiplier between stages, > 1
    double initial_penalty = 1e-2;
    int power_iterations = 100;       ///< for the initial iterate
    /// Extra solves restricted to the closed neighborhood of the vertices
    /// with the largest row sums; the densest rounded result wins.
    int neighborhood_restarts = 8;
    RoundingRule rounding = RoundingRule::GreedyDensity;

    void validate() const;
};

struct Selection {
    std::vector<std::size_t> indices;  ///< ascending
    Eigen::VectorXd u;                 ///< final relaxed iterate (empty for the brute-force oracle)
    double objective = 0.0;            ///< density u^T M u / u^T u of the binary indicator

    bool empty() const { return indices.empty(); }
};

/// Unweighted graph of the nonzero off-diagonal entries of M. Any positive
/// weight counts as an edge.
class ConstraintGraph {
public:
    explicit ConstraintGraph(const Eigen::MatrixXd &M);

    std::size_t size() const { return n_; }
    bool connected(std::size_t i, std::size_t j) const { return adjacency_[i * n_ + j] != 0; }
    const std::vector<std::size_t> &neighbors(std::size_t i) const { return neighbors_[i]; }
    std::size_t edge_count() const;

private:
    std::size_t n_ = 0;
    std::vector<char> adjacency_;
    std::vector<std::vector<std::size_t>> neighbors_;
};

ConstraintGraph binarize_constraints(const Eigen::MatrixXd &M);

class SizeLimitExceeded : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Density u^T M u / u^T u of the indicator of `indices`.
double subset_density(const Eigen::MatrixXd &M, const std::vector<std::size_t> &indices);

/// Relaxed densest-clique selection. Maximizes u^T M u over the
/// nonnegative unit sphere with a growing penalty on pairs whose weight is
/// zero, then rounds the iterate to a feasible index set. Deterministic.
Selection solve_densest(const Eigen::MatrixXd &M, const SolverParams &params = {});

inline constexpr std::size_t kBruteForceLimit = 20;

/// Exact maximizer by enumerating every clique of the constraint graph.
/// Ties go to the lexicographically smallest index set. Throws
/// SizeLimitExceeded above kBruteForceLimit vertices.
Selection brute_force_densest(const Eigen::MatrixXd &M);

}  // namespace graff
