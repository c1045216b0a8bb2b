#ifndef ASMFS_FEATURE_SELECTION_HPP
#define ASMFS_FEATURE_SELECTION_HPP

#include "asmfs/common.hpp"
#include "asmfs/data_model.hpp"
#include "asmfs/similarity.hpp"

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace asmfs {

/// Hyperparameters of the joint W/S fit. lambda weights the similarity term,
/// mu the L2,1 sparsity term. Defaults sit at the middle of the search grids.
struct AsmfsConfig {
    double lambda = 20.0;
    double mu = 10.0;
    int k = 5;
    int max_outer_iters = 50;
    int inner_w_iters = 10;
    double rel_tol = 1e-5;
    double irls_epsilon = 1e-8;
    bool clamp_k = true;

    void validate() const {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be finite and >= 0");
        if (!(mu >= 0.0) || !std::isfinite(mu)) throw ValidationError("mu must be finite and >= 0");
        if (k < 1) throw ValidationError("K must be >= 1");
        if (max_outer_iters < 1) throw ValidationError("max_outer_iters must be >= 1");
        if (inner_w_iters < 1) throw ValidationError("inner_w_iters must be >= 1");
        if (!(rel_tol > 0.0)) throw ValidationError("rel_tol must be > 0");
        if (!(irls_epsilon > 0.0)) throw ValidationError("irls_epsilon must be > 0");
    }
};

struct FitResult {
    Matrix W;  // d x M
    SimilarityMatrix S;
    std::vector<double> objective_history;
    bool converged = false;
    int iterations = 0;
    std::vector<std::string> warnings;
};

/// Per-inner-iteration diagnostics of update_W.
struct WSolveTrace {
    std::vector<double> smoothed_objectives;  // includes W_init when one is given
    std::vector<double> relative_residuals;   // worst modality per inner iteration
    std::vector<std::string> warnings;
};

inline double l21_norm(const Matrix& W) {
    double total = 0.0;
    for (Index i = 0; i < W.rows(); ++i) total += W.row(i).norm();
    return total;
}

/// L with sum_{i,k} S_ik (z_i - z_k)^2 == z' L z for every z, also for asymmetric S:
/// L = diag(row sums) + diag(column sums) - S - S'.
inline Matrix build_graph_term(const Matrix& S) {
    Matrix L = -(S + S.transpose());
    L.diagonal() += S.rowwise().sum() + S.colwise().sum().transpose();
    return L;
}

/// IRLS weights 1 / (2 sqrt(||w_i||^2 + eps^2)): the majorizer weights of the
/// eps-smoothed L2,1 norm. Equal to 1/(2 ||w_i||) in floating point once the
/// row norm dominates eps, and 1/(2 eps) on zero rows.
inline Vector update_D(const Matrix& W, double irls_epsilon) {
    Vector D(W.rows());
    const double eps2 = irls_epsilon * irls_epsilon;
    for (Index i = 0; i < W.rows(); ++i) D(i) = 0.5 / std::sqrt(W.row(i).squaredNorm() + eps2);
    return D;
}

namespace detail {

/// Fixed per-fit quantities of the W-subproblem.
struct WProblem {
    std::vector<Matrix> gram;     // X_m X_m'
    std::vector<Vector> xy;       // X_m y
    std::vector<Matrix> graph;    // X_m L X_m' (empty when lambda == 0)
    const MultiModalDataset* data = nullptr;

    explicit WProblem(const MultiModalDataset& d) : data(&d) {
        for (const Matrix& x : d.modalities) {
            Matrix g = Matrix::Zero(x.rows(), x.rows());
            g.selfadjointView<Eigen::Lower>().rankUpdate(x);
            gram.push_back(g.selfadjointView<Eigen::Lower>());
            xy.push_back(x * d.labels);
        }
    }

    void set_graph(const Matrix& L) {
        graph.clear();
        for (const Matrix& x : data->modalities) graph.push_back(x * L * x.transpose());
    }
};

inline double regression_loss(const MultiModalDataset& data, const Matrix& W) {
    double loss = 0.0;
    for (Index m = 0; m < data.num_modalities(); ++m)
        loss += (data.labels - data.modalities[m].transpose() * W.col(m)).squaredNorm();
    return loss;
}

inline double graph_penalty(const MultiModalDataset& data, const Matrix& L, const Matrix& W) {
    double total = 0.0;
    for (Index m = 0; m < data.num_modalities(); ++m) {
        const Vector z = data.modalities[m].transpose() * W.col(m);
        total += z.dot(L * z);
    }
    return total;
}

inline double smoothed_l21(const Matrix& W, double eps) {
    double total = 0.0;
    for (Index i = 0; i < W.rows(); ++i) total += std::sqrt(W.row(i).squaredNorm() + eps * eps);
    return total;
}

/// One IRLS round: solve (X X' + mu D + lambda X L X') w_m = X y for every modality.
inline Matrix solve_weighted(const WProblem& prob, const Vector& D, double lambda, double mu,
                             std::vector<std::string>& warnings, double* worst_residual = nullptr) {
    const Index d = D.size();
    const Index m_count = static_cast<Index>(prob.gram.size());
    Matrix W(d, m_count);
    double worst = 0.0;
    for (Index m = 0; m < m_count; ++m) {
        Matrix A = prob.gram[static_cast<std::size_t>(m)];
        if (lambda != 0.0) A += lambda * prob.graph[static_cast<std::size_t>(m)];
        A.diagonal() += mu * D;
        const Vector& b = prob.xy[static_cast<std::size_t>(m)];
        Eigen::LLT<Matrix> llt(A);
        if (llt.info() != Eigen::Success) {
            A.diagonal().array() += 1e-10;
            llt.compute(A);
            warnings.push_back("W-system for modality " + std::to_string(m) +
                               " not positive definite; added ridge 1e-10 I");
            warn(warnings.back());
            if (llt.info() != Eigen::Success)
                throw NumericError("W-system for modality " + std::to_string(m) + " is not positive definite");
        }
        Vector w = llt.solve(b);
        // one step of iterative refinement
        w += llt.solve(b - A * w);
        W.col(m) = w;
        if (worst_residual != nullptr) {
            const double denom = A.norm() * w.norm() + b.norm();
            const double rel = denom > 0.0 ? (A * w - b).norm() / denom : 0.0;
            worst = std::max(worst, rel);
        }
    }
    if (worst_residual != nullptr) *worst_residual = worst;
    return W;
}

}  // namespace detail

/// sum_m ||y - X_m' w_m||^2 + mu sum_i sqrt(||w_i||^2 + eps^2) + lambda sum_m w_m' X_m L X_m' w_m.
/// The IRLS inner loop never increases this value.
inline double smoothed_w_objective(const MultiModalDataset& data, const Matrix& L, const Matrix& W, double lambda,
                                   double mu, double irls_epsilon) {
    double v = detail::regression_loss(data, W) + mu * detail::smoothed_l21(W, irls_epsilon);
    if (lambda != 0.0) v += lambda * detail::graph_penalty(data, L, W);
    return v;
}

/// Quadratic surrogate with D held fixed:
/// sum_m ||y - X_m' w_m||^2 + mu Tr(W' D W) + lambda sum_m w_m' X_m L X_m' w_m.
inline double surrogate_objective(const MultiModalDataset& data, const Matrix& L, const Vector& D, const Matrix& W,
                                  double lambda, double mu) {
    double v = detail::regression_loss(data, W) + mu * (W.transpose() * D.asDiagonal() * W).trace();
    if (lambda != 0.0) v += lambda * detail::graph_penalty(data, L, W);
    return v;
}

/// Column m: -2 X_m (y - X_m' w_m) + 2 mu D w_m + 2 lambda X_m L X_m' w_m (L symmetric).
inline Matrix surrogate_gradient(const MultiModalDataset& data, const Matrix& L, const Vector& D, const Matrix& W,
                                 double lambda, double mu) {
    Matrix G(W.rows(), W.cols());
    for (Index m = 0; m < data.num_modalities(); ++m) {
        const Matrix& x = data.modalities[m];
        const Vector z = x.transpose() * W.col(m);
        Vector g = -2.0 * x * (data.labels - z) + 2.0 * mu * D.asDiagonal() * W.col(m);
        if (lambda != 0.0) g += 2.0 * lambda * x * (L * z);
        G.col(m) = g;
    }
    return G;
}

/// Gradient of smoothed_w_objective; equals surrogate_gradient with D = update_D(W).
inline Matrix smoothed_w_gradient(const MultiModalDataset& data, const Matrix& L, const Matrix& W, double lambda,
                                  double mu, double irls_epsilon) {
    return surrogate_gradient(data, L, update_D(W, irls_epsilon), W, lambda, mu);
}

/// Runs config.inner_w_iters IRLS rounds with S fixed. An empty W_init starts
/// from D = I; otherwise D is derived from W_init.
inline Matrix update_W(const MultiModalDataset& data, const SimilarityMatrix& S, const AsmfsConfig& config,
                       const Matrix& W_init, WSolveTrace* trace = nullptr) {
    config.validate();
    detail::WProblem prob(data);
    Matrix L;
    if (config.lambda != 0.0) {
        L = build_graph_term(S.values);
        prob.set_graph(L);
    }
    Vector D = W_init.size() == 0 ? Vector::Ones(data.num_features()) : update_D(W_init, config.irls_epsilon);
    std::vector<std::string> warnings;
    if (trace != nullptr && W_init.size() != 0)
        trace->smoothed_objectives.push_back(
            smoothed_w_objective(data, L, W_init, config.lambda, config.mu, config.irls_epsilon));
    Matrix W = W_init;
    for (int it = 0; it < config.inner_w_iters; ++it) {
        double residual = 0.0;
        W = detail::solve_weighted(prob, D, config.lambda, config.mu, warnings, trace ? &residual : nullptr);
        D = update_D(W, config.irls_epsilon);
        if (trace != nullptr) {
            trace->smoothed_objectives.push_back(
                smoothed_w_objective(data, L, W, config.lambda, config.mu, config.irls_epsilon));
            trace->relative_residuals.push_back(residual);
        }
    }
    if (trace != nullptr) trace->warnings.insert(trace->warnings.end(), warnings.begin(), warnings.end());
    return W;
}

/// Joint objective: regression loss + mu ||W||_{2,1}
///   + lambda sum_i (sum_k d_ik(W) s_ik + gamma_i ||s_i||^2).
inline double asmfs_objective(const MultiModalDataset& data, const Matrix& W, const SimilarityMatrix& S,
                              double lambda, double mu) {
    double v = detail::regression_loss(data, W) + mu * l21_norm(W);
    if (lambda != 0.0 && S.values.size() != 0) {
        double gamma_term = 0.0;
        for (Index i = 0; i < S.values.rows(); ++i) gamma_term += S.gammas(i) * S.values.row(i).squaredNorm();
        v += lambda * (detail::graph_penalty(data, build_graph_term(S.values), W) + gamma_term);
    }
    return v;
}

namespace detail {

enum class SimilarityMode { adaptive, fixed, none };

inline FitResult alternating_fit(const MultiModalDataset& data, const AsmfsConfig& config, SimilarityMode mode) {
    config.validate();
    data.validate();
    if (!data.has_both_classes()) throw ValidationError("training data must contain both classes");

    FitResult fit;
    WProblem prob(data);
    const bool need_similarity = mode == SimilarityMode::adaptive || (mode == SimilarityMode::fixed && config.lambda != 0.0);
    if (need_similarity) {
        fit.S = initial_similarity(data, config.k, config.clamp_k);
        fit.warnings.insert(fit.warnings.end(), fit.S.warnings.begin(), fit.S.warnings.end());
    }
    const bool use_graph = need_similarity && config.lambda != 0.0;
    if (use_graph) prob.set_graph(build_graph_term(fit.S.values));

    Vector D = Vector::Ones(data.num_features());
    double previous = std::numeric_limits<double>::quiet_NaN();
    for (int outer = 1; outer <= config.max_outer_iters; ++outer) {
        for (int inner = 0; inner < config.inner_w_iters; ++inner) {
            fit.W = solve_weighted(prob, D, use_graph ? config.lambda : 0.0, config.mu, fit.warnings);
            D = update_D(fit.W, config.irls_epsilon);
        }
        if (mode == SimilarityMode::adaptive) {
            fit.S = update_similarity(data, fit.W, config.k, config.clamp_k);
            if (use_graph) prob.set_graph(build_graph_term(fit.S.values));
        }
        const double objective = asmfs_objective(data, fit.W, fit.S, use_graph ? config.lambda : 0.0, config.mu);
        if (!std::isfinite(objective)) throw NumericError("objective became non-finite at outer iteration " + std::to_string(outer));
        fit.objective_history.push_back(objective);
        fit.iterations = outer;
        if (outer > 1 && std::abs(objective - previous) <= config.rel_tol * std::abs(previous)) {
            fit.converged = true;
            break;
        }
        previous = objective;
    }
    if (mode == SimilarityMode::adaptive && !fit.S.warnings.empty())
        fit.warnings.insert(fit.warnings.end(), fit.S.warnings.begin(), fit.S.warnings.end());
    return fit;
}

}  // namespace detail

/// Alternates IRLS rounds on W with closed-form S updates until the relative
/// change of the joint objective falls below rel_tol. Starts from D = I and S
/// built from raw-feature distances.
inline FitResult asmfs_fit(const MultiModalDataset& data, const AsmfsConfig& config) {
    return detail::alternating_fit(data, config, detail::SimilarityMode::adaptive);
}

/// Ablation: S is computed once from raw distances and never updated.
inline FitResult fixed_similarity_fit(const MultiModalDataset& data, const AsmfsConfig& config) {
    return detail::alternating_fit(data, config, detail::SimilarityMode::fixed);
}

/// Multi-task L2,1 least squares (lambda = 0), IRLS to relative change < 1e-6, at most 100 rounds.
inline Matrix mtfs_fit(const MultiModalDataset& data, double mu) {
    AsmfsConfig config;
    config.lambda = 0.0;
    config.mu = mu;
    config.inner_w_iters = 1;
    config.max_outer_iters = 100;
    config.rel_tol = 1e-6;
    return detail::alternating_fit(data, config, detail::SimilarityMode::none).W;
}

/// min_w ||y - X' w||^2 + mu ||w||_1 by cyclic coordinate descent. X is d x n.
inline Vector lasso_fit(const Matrix& X, const Vector& y, double mu, int max_sweeps = 100000) {
    if (X.cols() != y.size()) throw ValidationError("lasso_fit: X has " + std::to_string(X.cols()) + " columns, y has " + std::to_string(y.size()));
    if (!(mu >= 0.0)) throw ValidationError("lasso_fit: mu must be >= 0");
    const Index d = X.rows();
    Vector w = Vector::Zero(d);
    Vector residual = y;
    const Vector col_sq = X.rowwise().squaredNorm();
    const double half_mu = 0.5 * mu;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Index j = 0; j < d; ++j) {
            if (col_sq(j) == 0.0) continue;
            const double old = w(j);
            const double rho = X.row(j).dot(residual) + col_sq(j) * old;
            double updated = 0.0;
            if (rho > half_mu) updated = (rho - half_mu) / col_sq(j);
            else if (rho < -half_mu) updated = (rho + half_mu) / col_sq(j);
            if (updated != old) {
                residual -= (updated - old) * X.row(j).transpose();
                w(j) = updated;
            }
            max_change = std::max(max_change, std::abs(updated - old) * std::sqrt(col_sq(j)));
        }
        if (max_change <= 1e-13 * (1.0 + y.norm())) break;
    }
    return w;
}

// ---------------------------------------------------------------------------
// Feature ranking.

enum class RankingRule { joint, per_modality };

struct ModalityRanking {
    std::vector<Index> ranking;   // feature indices, descending score
    std::vector<double> scores;   // indexed by feature
    std::vector<Index> selected;  // ascending feature indices
};

/// Scores are ||w_i,:|| (joint) or |w_im| (per modality). Selected features
/// score above eps_select * max score; top_t > 0 instead keeps the top t.
inline std::vector<ModalityRanking> select_features(const Matrix& W, RankingRule rule = RankingRule::joint,
                                                    double eps_select = 1e-6, int top_t = 0) {
    std::vector<ModalityRanking> out;
    for (Index m = 0; m < W.cols(); ++m) {
        ModalityRanking r;
        r.scores.resize(static_cast<std::size_t>(W.rows()));
        for (Index i = 0; i < W.rows(); ++i)
            r.scores[static_cast<std::size_t>(i)] = rule == RankingRule::joint ? W.row(i).norm() : std::abs(W(i, m));
        r.ranking.resize(r.scores.size());
        std::iota(r.ranking.begin(), r.ranking.end(), Index{0});
        std::stable_sort(r.ranking.begin(), r.ranking.end(), [&](Index a, Index b) {
            return r.scores[static_cast<std::size_t>(a)] > r.scores[static_cast<std::size_t>(b)];
        });
        const double max_score = r.scores.empty() ? 0.0 : r.scores[static_cast<std::size_t>(r.ranking.front())];
        if (top_t > 0) {
            const auto t = std::min<std::size_t>(static_cast<std::size_t>(top_t), r.ranking.size());
            r.selected.assign(r.ranking.begin(), r.ranking.begin() + static_cast<std::ptrdiff_t>(t));
        } else if (max_score > 0.0) {
            for (Index i : r.ranking)
                if (r.scores[static_cast<std::size_t>(i)] > eps_select * max_score) r.selected.push_back(i);
        }
        std::sort(r.selected.begin(), r.selected.end());
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON.

inline nlohmann::json to_json(const AsmfsConfig& c) {
    return {{"lambda", c.lambda},           {"mu", c.mu},
            {"k", c.k},                     {"max_outer_iters", c.max_outer_iters},
            {"inner_w_iters", c.inner_w_iters}, {"rel_tol", c.rel_tol},
            {"irls_epsilon", c.irls_epsilon}, {"clamp_k", c.clamp_k}};
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(m.size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) values.push_back(m(i, j));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", values}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto values = j.at("values").get<std::vector<double>>();
    if (static_cast<Index>(values.size()) != rows * cols) throw ValidationError("matrix JSON has wrong value count");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index c = 0; c < cols; ++c) m(i, c) = values[static_cast<std::size_t>(i * cols + c)];
    return m;
}

inline nlohmann::json similarity_to_json(const SimilarityMatrix& S) {
    nlohmann::json triplets = nlohmann::json::array();
    for (Index i = 0; i < S.values.rows(); ++i)
        for (Index j = 0; j < S.values.cols(); ++j)
            if (S.values(i, j) != 0.0) triplets.push_back({i, j, S.values(i, j)});
    std::vector<double> gammas(S.gammas.data(), S.gammas.data() + S.gammas.size());
    return {{"n", S.values.rows()}, {"k", S.neighbor_count}, {"triplets", triplets}, {"gammas", gammas}};
}

inline nlohmann::json to_json(const FitResult& fit, const AsmfsConfig& config) {
    return {{"W", matrix_to_json(fit.W)},
            {"S", similarity_to_json(fit.S)},
            {"objective_history", fit.objective_history},
            {"converged", fit.converged},
            {"iterations", fit.iterations},
            {"warnings", fit.warnings},
            {"config", to_json(config)}};
}

}  // namespace asmfs

#endif  // ASMFS_FEATURE_SELECTION_HPP
