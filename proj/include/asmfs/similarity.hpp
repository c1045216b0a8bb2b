#ifndef ASMFS_SIMILARITY_HPP
#define ASMFS_SIMILARITY_HPP

#include "asmfs/common.hpp"
#include "asmfs/data_model.hpp"

#include <fstream>
#include <numeric>
#include <string>
#include <vector>

namespace asmfs {

/// Squared distances from one subject to each of its same-class peers.
struct DistanceRow {
    Index subject = 0;
    std::vector<Index> candidates;
    std::vector<double> distances;
};

/// Shared n x n similarity over subjects. Rows are probability vectors with
/// at most K nonzeros, all on same-class subjects.
struct SimilarityMatrix {
    Matrix values;
    int neighbor_count = 0;
    Vector gammas;
    std::vector<int> row_neighbor_count;  // effective K per row after clamping
    std::vector<std::string> warnings;
};

/// Solution of one row's simplex-constrained QP, aligned with the row's candidates.
struct RowSolution {
    std::vector<double> weights;
    double gamma = 0.0;
    double eta = 0.0;
};

namespace detail {

template <class DistanceFn>
DistanceRow within_class_row(const Vector& labels, Index i, DistanceFn&& dist) {
    DistanceRow row;
    row.subject = i;
    for (Index j = 0; j < labels.size(); ++j) {
        if (j == i || labels(j) != labels(i)) continue;
        row.candidates.push_back(j);
        row.distances.push_back(dist(j));
    }
    return row;
}

}  // namespace detail

/// d_ik = sum_m (w_m' x_i - w_m' x_k)^2 over same-class k != i.
inline DistanceRow projected_distance_row(const MultiModalDataset& data, const Matrix& W, Index i) {
    const Index m_count = data.num_modalities();
    Vector p_i(m_count);
    for (Index m = 0; m < m_count; ++m) p_i(m) = W.col(m).dot(data.modalities[m].col(i));
    return detail::within_class_row(data.labels, i, [&](Index k) {
        double s = 0.0;
        for (Index m = 0; m < m_count; ++m) {
            const double diff = p_i(m) - W.col(m).dot(data.modalities[m].col(k));
            s += diff * diff;
        }
        return s;
    });
}

/// d_ik = sum_m ||x_i^(m) - x_k^(m)||^2 in the original feature space.
inline DistanceRow raw_distance_row(const MultiModalDataset& data, Index i) {
    return detail::within_class_row(data.labels, i, [&](Index k) {
        double s = 0.0;
        for (const Matrix& x : data.modalities) s += (x.col(i) - x.col(k)).squaredNorm();
        return s;
    });
}

/// Closed-form K-sparse solution of
///   min_s sum_k d_k s_k + gamma s_k^2,  s on the probability simplex,
/// with gamma chosen as the largest value that keeps exactly K neighbors:
///   gamma = K/2 d_(K+1) - 1/2 sum_{k<=K} d_(k).
/// Ties in distance are broken by ascending subject index.
inline RowSolution solve_row(const DistanceRow& row, int k) {
    const std::size_t p = row.distances.size();
    if (k < 1) throw ValidationError("neighbor count K must be >= 1");
    if (p < static_cast<std::size_t>(k) + 1) throw NeighborCountError(row.subject, static_cast<Index>(p), k);

    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (row.distances[a] != row.distances[b]) return row.distances[a] < row.distances[b];
        return row.candidates[a] < row.candidates[b];
    });

    const double kd = static_cast<double>(k);
    const double d_next = row.distances[order[k]];
    double head_sum = 0.0;
    for (int r = 0; r < k; ++r) head_sum += row.distances[order[r]];
    // sum over the K nearest of (d_(K+1) - d_(k)); equals 2 * gamma.
    double gap_sum = 0.0;
    for (int r = 0; r < k; ++r) gap_sum += d_next - row.distances[order[r]];

    RowSolution sol;
    sol.weights.assign(p, 0.0);
    sol.gamma = std::max(0.0, 0.5 * gap_sum);
    if (gap_sum > 0.0) {
        sol.eta = 1.0 / kd + head_sum / (kd * gap_sum);
        // s_k = -d_k / (2 gamma) + eta, rewritten so the K weights are
        // nonnegative ratios that sum to one exactly.
        for (int r = 0; r < k; ++r) sol.weights[order[r]] = (d_next - row.distances[order[r]]) / gap_sum;
    } else {
        // gamma = 0: the first K+1 distances coincide; take the uniform limit.
        sol.eta = 1.0 / kd;
        for (int r = 0; r < k; ++r) sol.weights[order[r]] = 1.0 / kd;
    }
    return sol;
}

/// sum_k d_k s_k + gamma s_k^2 for one row.
inline double row_objective(const std::vector<double>& distances, const std::vector<double>& weights, double gamma) {
    double v = 0.0;
    for (std::size_t k = 0; k < distances.size(); ++k) v += distances[k] * weights[k] + gamma * weights[k] * weights[k];
    return v;
}

namespace detail {

template <class RowFn>
SimilarityMatrix assemble_similarity(const Vector& labels, int k, bool clamp_k, RowFn&& make_row) {
    if (k < 1) throw ValidationError("neighbor count K must be >= 1");
    const Index n = labels.size();
    SimilarityMatrix sim;
    sim.values = Matrix::Zero(n, n);
    sim.neighbor_count = k;
    sim.gammas = Vector::Zero(n);
    sim.row_neighbor_count.assign(static_cast<std::size_t>(n), k);
    Index clamped = 0;
    for (Index i = 0; i < n; ++i) {
        const DistanceRow row = make_row(i);
        const Index p = static_cast<Index>(row.candidates.size());
        int k_row = k;
        if (p < k + 1) {
            if (!clamp_k || p == 0) throw NeighborCountError(i, p, k);
            k_row = static_cast<int>(std::max<Index>(1, p - 1));
            ++clamped;
        }
        sim.row_neighbor_count[static_cast<std::size_t>(i)] = k_row;
        if (p == 1) {
            // A lone peer takes all the weight.
            sim.values(i, row.candidates[0]) = 1.0;
            continue;
        }
        const RowSolution sol = solve_row(row, k_row);
        sim.gammas(i) = sol.gamma;
        for (std::size_t c = 0; c < row.candidates.size(); ++c) sim.values(i, row.candidates[c]) = sol.weights[c];
    }
    if (clamped > 0) {
        sim.warnings.push_back(std::to_string(clamped) + " row(s) had fewer than K+1=" + std::to_string(k + 1) +
                               " same-class peers; K clamped for those rows");
        warn(sim.warnings.back());
    }
    return sim;
}

}  // namespace detail

/// Rebuilds S from the current projections W' X (one row per subject).
inline SimilarityMatrix update_similarity(const MultiModalDataset& data, const Matrix& W, int k, bool clamp_k = true) {
    // Project once; the row builder then only touches M scalars per subject.
    const Index n = data.num_subjects();
    const Index m_count = data.num_modalities();
    Matrix proj(m_count, n);
    for (Index m = 0; m < m_count; ++m) proj.row(m) = W.col(m).transpose() * data.modalities[m];
    return detail::assemble_similarity(data.labels, k, clamp_k, [&](Index i) {
        return detail::within_class_row(data.labels, i,
                                        [&](Index j) { return (proj.col(i) - proj.col(j)).squaredNorm(); });
    });
}

/// S from raw-feature distances; used to initialize and for the fixed-similarity ablation.
inline SimilarityMatrix initial_similarity(const MultiModalDataset& data, int k, bool clamp_k = true) {
    return detail::assemble_similarity(data.labels, k, clamp_k, [&](Index i) { return raw_distance_row(data, i); });
}

inline void write_similarity_dense_csv(const SimilarityMatrix& sim, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    const Index n = sim.values.rows();
    for (Index j = 0; j < n; ++j) out << (j ? "," : "") << "s" << j;
    out << '\n';
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) out << (j ? "," : "") << csv::format_double(sim.values(i, j));
        out << '\n';
    }
}

inline void write_similarity_triplets_csv(const SimilarityMatrix& sim, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "i,j,s_ij\n";
    for (Index i = 0; i < sim.values.rows(); ++i)
        for (Index j = 0; j < sim.values.cols(); ++j)
            if (sim.values(i, j) != 0.0) out << i << ',' << j << ',' << csv::format_double(sim.values(i, j)) << '\n';
}

}  // namespace asmfs

#endif  // ASMFS_SIMILARITY_HPP
