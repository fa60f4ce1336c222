#include "graff/clique_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace graff {

void SolverParams::validate() const {
    if (max_iterations <= 0 || max_stages <= 0 || power_iterations < 0 || !(tolerance > 0.0) ||
        !(penalty_growth > 1.0) || !(initial_penalty > 0.0) || neighborhood_restarts < 0) {
        throw std::invalid_argument("invalid solver parameters");
    }
}

ConstraintGraph::ConstraintGraph(const Eigen::MatrixXd &M)
    : n_(static_cast<std::size_t>(M.rows())), adjacency_(n_ * n_, 0), neighbors_(n_) {
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
            if (i != j && M(i, j) > 0.0) {
                adjacency_[i * n_ + j] = 1;
                neighbors_[i].push_back(j);
            }
        }
    }
}

std::size_t ConstraintGraph::edge_count() const {
    std::size_t total = 0;
    for (const auto &nb : neighbors_) {
        total += nb.size();
    }
    return total / 2;
}

ConstraintGraph binarize_constraints(const Eigen::MatrixXd &M) { return ConstraintGraph(M); }

double subset_density(const Eigen::MatrixXd &M, const std::vector<std::size_t> &indices) {
    if (indices.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t i : indices) {
        for (std::size_t j : indices) {
            total += M(i, j);
        }
    }
    return total / static_cast<double>(indices.size());
}

namespace {

struct SparseRow {
    std::vector<std::size_t> cols;
    std::vector<double> weights;
};

// Penalized objective F(u) = u^T M u - d * u^T N u, where N marks the
// forbidden (zero-weight) off-diagonal pairs. Both products are evaluated
// through the sparse positive part of M and its pattern, using
// u^T N u = (sum u)^2 - |u|^2 - u^T C u.
class PenalizedObjective {
public:
    PenalizedObjective(const Eigen::MatrixXd &M, const ConstraintGraph &graph)
        : rows_(graph.size()) {
        for (std::size_t i = 0; i < graph.size(); ++i) {
            for (std::size_t j : graph.neighbors(i)) {
                rows_[i].cols.push_back(j);
                rows_[i].weights.push_back(M(i, j));
            }
        }
    }

    // Returns F(u) and writes the gradient into `grad`.
    double evaluate(const Eigen::VectorXd &u, double penalty, Eigen::VectorXd &grad) const {
        const auto n = static_cast<Eigen::Index>(rows_.size());
        grad.resize(n);
        const double sum = u.sum();
        double quad = 0.0;
        double violation = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double mu = u(i);
            double cu = 0.0;
            const SparseRow &row = rows_[i];
            for (std::size_t k = 0; k < row.cols.size(); ++k) {
                const double uj = u(static_cast<Eigen::Index>(row.cols[k]));
                mu += row.weights[k] * uj;
                cu += uj;
            }
            const double nu = sum - u(i) - cu;
            quad += u(i) * mu;
            violation += u(i) * nu;
            grad(i) = 2.0 * (mu - penalty * nu);
        }
        return quad - penalty * violation;
    }

    Eigen::VectorXd multiply(const Eigen::VectorXd &u) const {
        Eigen::VectorXd out = u;
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const SparseRow &row = rows_[i];
            for (std::size_t k = 0; k < row.cols.size(); ++k) {
                out(static_cast<Eigen::Index>(i)) +=
                    row.weights[k] * u(static_cast<Eigen::Index>(row.cols[k]));
            }
        }
        return out;
    }

private:
    std::vector<SparseRow> rows_;
};

// Projection onto the nonnegative part of the unit sphere. Returns false
// when nothing positive survives.
bool project(Eigen::VectorXd &v) {
    v = v.cwiseMax(0.0);
    const double norm = v.norm();
    if (!(norm > 0.0)) {
        return false;
    }
    v /= norm;
    return true;
}

bool support_feasible(const Eigen::VectorXd &u, const ConstraintGraph &graph) {
    std::vector<std::size_t> support;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (u(i) > 0.0) {
            support.push_back(static_cast<std::size_t>(i));
        }
    }
    for (std::size_t p = 0; p < support.size(); ++p) {
        for (std::size_t q = p + 1; q < support.size(); ++q) {
            if (!graph.connected(support[p], support[q])) {
                return false;
            }
        }
    }
    return true;
}

std::vector<std::size_t> round_greedy(const Eigen::MatrixXd &M, const ConstraintGraph &graph,
                                      const Eigen::VectorXd &u) {
    std::vector<std::size_t> order(static_cast<std::size_t>(u.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return u(a) > u(b); });

    std::vector<std::size_t> chosen;
    double off_diagonal = 0.0;  // sum over ordered pairs
    for (std::size_t candidate : order) {
        double link = 0.0;
        bool feasible = true;
        for (std::size_t s : chosen) {
            if (!graph.connected(candidate, s)) {
                feasible = false;
                break;
            }
            link += M(candidate, s);
        }
        if (!feasible) {
            continue;
        }
        const double size = static_cast<double>(chosen.size());
        if (!chosen.empty()) {
            const double current = 1.0 + off_diagonal / size;
            const double next = 1.0 + (off_diagonal + 2.0 * link) / (size + 1.0);
            if (next < current) {
                break;
            }
        }
        chosen.push_back(candidate);
        off_diagonal += 2.0 * link;
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace

namespace {

// Penalty homotopy followed by rounding. Starts from the dominant
// eigenvector of M unless a nonnegative start vector is given.
Selection solve_once(const Eigen::MatrixXd &M, const SolverParams &params,
                     const Eigen::VectorXd *start = nullptr) {
    Selection out;
    const Eigen::Index m = M.rows();
    const ConstraintGraph graph(M);
    const PenalizedObjective objective(M, graph);

    Eigen::VectorXd u = Eigen::VectorXd::Ones(m) / std::sqrt(static_cast<double>(m));
    if (start != nullptr) {
        u = start->normalized();
    }
    for (int it = 0; start == nullptr && it < params.power_iterations; ++it) {
        Eigen::VectorXd next = objective.multiply(u);
        const double norm = next.norm();
        if (!(norm > 0.0)) {
            break;
        }
        u = next / norm;
    }

    double penalty = params.initial_penalty;
    Eigen::VectorXd grad(m);
    Eigen::VectorXd trial_grad(m);
    double step = 1.0;
    for (int stage = 0; stage < params.max_stages; ++stage) {
        double value = objective.evaluate(u, penalty, grad);
        for (int it = 0; it < params.max_iterations; ++it) {
            // Backtracking: accept the first step that increases F.
            Eigen::VectorXd trial;
            double trial_value = value;
            bool improved = false;
            step = std::min(step * 2.0, 1e3);
            while (step > 1e-14) {
                trial = u + step * grad;
                if (project(trial)) {
                    trial_value = objective.evaluate(trial, penalty, trial_grad);
                    if (trial_value > value) {
                        improved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if (!improved) {
                break;
            }
            const double change = (trial - u).norm();
            u = std::move(trial);
            grad.swap(trial_grad);
            value = trial_value;
            if (change < params.tolerance) {
                break;
            }
        }
        if (support_feasible(u, graph)) {
            break;
        }
        penalty *= params.penalty_growth;
    }

    out.u = u;
    out.indices = round_greedy(M, graph, u);
    out.objective = subset_density(M, out.indices);
    return out;
}

}  // namespace

Selection solve_densest(const Eigen::MatrixXd &M, const SolverParams &params) {
    params.validate();
    const Eigen::Index m = M.rows();
    if (m == 0) {
        return {};
    }
    Selection best = solve_once(M, params);

    // Restart on the closed neighborhoods of the heaviest vertices, each
    // seeded with the weights of its own row.
    const ConstraintGraph graph(M);
    std::vector<std::size_t> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    const Eigen::VectorXd strength = M.rowwise().sum();
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return strength(a) > strength(b); });
    const std::size_t restarts =
        std::min(order.size(), static_cast<std::size_t>(params.neighborhood_restarts));
    for (std::size_t r = 0; r < restarts; ++r) {
        const std::size_t v = order[r];
        std::vector<std::size_t> local{v};
        local.insert(local.end(), graph.neighbors(v).begin(), graph.neighbors(v).end());
        std::sort(local.begin(), local.end());
        if (local.size() == static_cast<std::size_t>(m)) {
            continue;
        }
        const auto n = static_cast<Eigen::Index>(local.size());
        Eigen::MatrixXd sub(n, n);
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = 0; q < n; ++q) {
                sub(p, q) = M(local[p], local[q]);
            }
        }
        const auto seed = std::lower_bound(local.begin(), local.end(), v) - local.begin();
        const Eigen::VectorXd start = sub.col(seed);
        const Selection candidate = solve_once(sub, params, &start);
        if (candidate.objective > best.objective + 1e-12) {
            best.indices.clear();
            for (std::size_t idx : candidate.indices) {
                best.indices.push_back(local[idx]);
            }
            best.objective = candidate.objective;
            best.u = Eigen::VectorXd::Zero(m);
            for (Eigen::Index p = 0; p < n; ++p) {
                best.u(local[p]) = candidate.u(p);
            }
        }
    }
    return best;
}

Selection brute_force_densest(const Eigen::MatrixXd &M) {
    const auto m = static_cast<std::size_t>(M.rows());
    if (m > kBruteForceLimit) {
        throw SizeLimitExceeded("brute_force_densest: more than 20 vertices");
    }
    Selection best;
    if (m == 0) {
        return best;
    }
    const ConstraintGraph graph(M);

    std::vector<std::size_t> current;
    // Depth-first enumeration of cliques in lexicographic order; every
    // clique is visited exactly once, extended only by larger indices.
    auto visit = [&](auto &&self, std::size_t start, double off_diagonal) -> void {
        for (std::size_t v = start; v < m; ++v) {
            double link = 0.0;
            bool feasible = true;
            for (std::size_t s : current) {
                if (!graph.connected(v, s)) {
                    feasible = false;
                    break;
                }
                link += M(v, s);
            }
            if (!feasible) {
                continue;
            }
            current.push_back(v);
            const double total = off_diagonal + 2.0 * link;
            const double density = 1.0 + total / static_cast<double>(current.size());
            const bool better = density > best.objective + 1e-12;
            const bool tie = std::abs(density - best.objective) <= 1e-12 &&
                             std::lexicographical_compare(current.begin(), current.end(),
                                                          best.indices.begin(),
                                                          best.indices.end());
            if (best.indices.empty() || better || tie) {
                best.indices = current;
                best.objective = density;
            }
            self(self, v + 1, total);
            current.pop_back();
        }
    };
    visit(visit, 0, 0.0);
    return best;
}

}  // namespace graff
