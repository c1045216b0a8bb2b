#ifndef ASMFS_CLASSIFY_HPP
#define ASMFS_CLASSIFY_HPP

#include "asmfs/common.hpp"
#include "asmfs/data_model.hpp"
#include "asmfs/feature_selection.hpp"
#include "asmfs/folds.hpp"

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace asmfs {

// ---------------------------------------------------------------------------
// Kernels

/// Gram matrix A' B of column-sample matrices (d' x p and d' x q).
inline Matrix linear_kernel(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows())
        throw ValidationError("linear_kernel: feature counts differ (" + std::to_string(A.rows()) + " vs " +
                              std::to_string(B.rows()) + ")");
    return A.transpose() * B;
}

inline void check_simplex_weights(const Vector& betas) {
    if (betas.size() == 0) throw ValidationError("kernel weights are empty");
    for (Index m = 0; m < betas.size(); ++m)
        if (!(betas(m) >= 0.0)) throw ValidationError("kernel weight " + std::to_string(m) + " is negative");
    if (std::abs(betas.sum() - 1.0) > 1e-9) throw ValidationError("kernel weights must sum to 1");
}

/// sum_m beta_m K_m with beta on the probability simplex.
inline Matrix combine_kernels(const std::vector<Matrix>& kernels, const Vector& betas) {
    if (kernels.empty()) throw ValidationError("combine_kernels: no kernels");
    if (static_cast<Index>(kernels.size()) != betas.size())
        throw ValidationError("combine_kernels: " + std::to_string(kernels.size()) + " kernels but " +
                              std::to_string(betas.size()) + " weights");
    check_simplex_weights(betas);
    Matrix out = Matrix::Zero(kernels.front().rows(), kernels.front().cols());
    for (std::size_t m = 0; m < kernels.size(); ++m) {
        if (kernels[m].rows() != out.rows() || kernels[m].cols() != out.cols())
            throw ValidationError("combine_kernels: kernel shapes differ");
        out += betas(static_cast<Index>(m)) * kernels[m];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Soft-margin dual SVM on a precomputed kernel, solved by SMO with
// second-order working-set selection.

struct SvmOptions {
    double C = 1.0;
    double tolerance = 1e-5;
    long max_iterations = 100000;
    bool check_psd = true;
};

struct SvmSolution {
    Vector alphas;
    double bias = 0.0;
    long iterations = 0;
    double max_violation = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

inline void check_kernel_psd(const Matrix& K) {
    const double scale = std::max(1.0, K.diagonal().cwiseAbs().maxCoeff());
    if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw NumericError("kernel matrix is not symmetric");
    Matrix shifted = K;
    shifted.diagonal().array() += 1e-8 * scale;
    Eigen::LDLT<Matrix> ldlt(shifted);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() < 0.0).any())
        throw NumericError("kernel matrix is not positive semidefinite within tolerance");
}

}  // namespace detail

inline SvmSolution svm_train(const Matrix& K, const Vector& y, const SvmOptions& opt = {}) {
    const Index n = y.size();
    if (K.rows() != n || K.cols() != n) throw ValidationError("svm_train: kernel is not n x n");
    if (!(opt.C > 0.0)) throw ValidationError("svm_train: C must be > 0");
    bool has_pos = false;
    bool has_neg = false;
    for (Index i = 0; i < n; ++i) {
        if (y(i) == 1.0) has_pos = true;
        else if (y(i) == -1.0) has_neg = true;
        else throw ValidationError("svm_train: labels must be +1/-1");
    }
    if (!has_pos || !has_neg) throw ValidationError("svm_train: both classes must be present");
    if (opt.check_psd) detail::check_kernel_psd(K);

    const double C = opt.C;
    constexpr double tau = 1e-12;
    SvmSolution sol;
    Vector alpha = Vector::Zero(n);
    Vector G = Vector::Constant(n, -1.0);  // gradient of 1/2 a'Qa - e'a
    auto Q = [&](Index i, Index j) { return y(i) * y(j) * K(i, j); };
    auto in_up = [&](Index t) { return (y(t) > 0 && alpha(t) < C) || (y(t) < 0 && alpha(t) > 0); };
    auto in_low = [&](Index t) { return (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < C); };

    long iter = 0;
    for (;; ++iter) {
        double g_max = -std::numeric_limits<double>::infinity();
        Index i = -1;
        for (Index t = 0; t < n; ++t)
            if (in_up(t) && -y(t) * G(t) > g_max) {
                g_max = -y(t) * G(t);
                i = t;
            }
        double g_min = std::numeric_limits<double>::infinity();
        Index j = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Index t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            const double v = -y(t) * G(t);
            g_min = std::min(g_min, v);
            if (i < 0) continue;
            const double b = g_max - v;
            if (b > 0.0) {
                double a = K(i, i) + K(t, t) - 2.0 * K(i, t);
                if (a <= 0.0) a = tau;
                const double score = -(b * b) / a;
                if (score < best) {
                    best = score;
                    j = t;
                }
            }
        }
        sol.max_violation = (i < 0 || !std::isfinite(g_min)) ? 0.0 : g_max - g_min;
        if (i < 0 || j < 0 || sol.max_violation < opt.tolerance) break;
        if (iter >= opt.max_iterations) {
            sol.warnings.push_back("SMO stopped at the iteration limit with KKT violation " +
                                   std::to_string(sol.max_violation));
            warn(sol.warnings.back());
            break;
        }

        const double old_i = alpha(i);
        const double old_j = alpha(j);
        // Q_ii + Q_jj -+ 2 Q_ij with Q_ij = y_i y_j K_ij is K_ii + K_jj - 2 K_ij in both branches.
        double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
        if (quad <= 0.0) quad = tau;
        if (y(i) != y(j)) {
            const double delta = (-G(i) - G(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0.0) {
                if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = diff; }
            } else {
                if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = -diff; }
            }
            if (diff > 0.0) {
                if (alpha(i) > C) { alpha(i) = C; alpha(j) = C - diff; }
            } else {
                if (alpha(j) > C) { alpha(j) = C; alpha(i) = C + diff; }
            }
        } else {
            const double delta = (G(i) - G(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > C) {
                if (alpha(i) > C) { alpha(i) = C; alpha(j) = sum - C; }
            } else {
                if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = sum; }
            }
            if (sum > C) {
                if (alpha(j) > C) { alpha(j) = C; alpha(i) = sum - C; }
            } else {
                if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = sum; }
            }
        }
        const double di = alpha(i) - old_i;
        const double dj = alpha(j) - old_j;
        for (Index t = 0; t < n; ++t) G(t) += Q(t, i) * di + Q(t, j) * dj;
    }
    sol.iterations = iter;

    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    int free_count = 0;
    for (Index t = 0; t < n; ++t) {
        const double yg = y(t) * G(t);
        if (alpha(t) >= C) {
            if (y(t) < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha(t) <= 0.0) {
            if (y(t) > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            free_sum += yg;
            ++free_count;
        }
    }
    double rho = 0.0;
    if (free_count > 0) {
        rho = free_sum / free_count;
    } else {
        rho = 0.5 * (ub + lb);
        sol.warnings.push_back("no free support vectors; bias from bound midpoint");
        log(LogLevel::info, sol.warnings.back());
    }
    sol.alphas = alpha;
    sol.bias = -rho;
    return sol;
}

/// Dual objective sum a - 1/2 sum a_i a_j y_i y_j K_ij.
inline double svm_dual_objective(const Matrix& K, const Vector& y, const Vector& alpha) {
    const Vector ay = alpha.cwiseProduct(y);
    return alpha.sum() - 0.5 * ay.dot(K * ay);
}

/// Largest KKT violation max_{I_up} -y G - min_{I_low} -y G.
inline double svm_kkt_violation(const Matrix& K, const Vector& y, const Vector& alpha, double C) {
    const Vector G = y.asDiagonal() * (K * alpha.cwiseProduct(y)) - Vector::Ones(y.size());
    double up = -std::numeric_limits<double>::infinity();
    double low = std::numeric_limits<double>::infinity();
    for (Index t = 0; t < y.size(); ++t) {
        const double v = -y(t) * G(t);
        if ((y(t) > 0 && alpha(t) < C) || (y(t) < 0 && alpha(t) > 0)) up = std::max(up, v);
        if ((y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < C)) low = std::min(low, v);
    }
    if (!std::isfinite(up) || !std::isfinite(low)) return 0.0;
    return std::max(0.0, up - low);
}

// ---------------------------------------------------------------------------
// Multi-kernel model

/// Columns feeding one kernel: (modality, feature) pairs. A per-modality
/// multi-kernel model has one view per modality; a concatenated model has a
/// single view spanning all modalities.
struct KernelView {
    std::vector<int> modality;
    std::vector<Index> feature;

    std::size_t size() const { return feature.size(); }

    Matrix extract(const MultiModalDataset& data) const {
        Matrix out(static_cast<Index>(feature.size()), data.num_subjects());
        for (std::size_t c = 0; c < feature.size(); ++c)
            out.row(static_cast<Index>(c)) = data.modalities[static_cast<std::size_t>(modality[c])].row(feature[c]);
        return out;
    }

    static KernelView single(int m, const std::vector<Index>& features) {
        KernelView v;
        v.modality.assign(features.size(), m);
        v.feature = features;
        return v;
    }
};

struct TrainedClassifier {
    std::string method;
    std::vector<KernelView> views;
    Vector betas;
    Vector alphas;
    Vector labels;
    double bias = 0.0;
    double C = 1.0;
    std::vector<Matrix> support_vectors;  // per view: selected features x training subjects
    NormalizationStats normalization;
    std::vector<std::string> modality_names;
    Index feature_count = 0;
    nlohmann::json hyperparameters = nlohmann::json::object();
    std::vector<std::string> warnings;
};

struct Prediction {
    Vector decision_values;
    Vector labels;
};

/// Decision values for already-normalized subjects given as per-view matrices.
inline Vector decision_values(const TrainedClassifier& model, const std::vector<Matrix>& view_data) {
    if (view_data.size() != model.views.size()) throw ValidationError("predict: wrong number of kernel views");
    const Index q = view_data.empty() ? 0 : view_data.front().cols();
    Matrix combined = Matrix::Zero(model.alphas.size(), q);
    for (std::size_t v = 0; v < model.views.size(); ++v) {
        if (view_data[v].rows() != model.support_vectors[v].rows())
            throw ValidationError("predict: view " + std::to_string(v) + " has " + std::to_string(view_data[v].rows()) +
                                  " features, model expects " + std::to_string(model.support_vectors[v].rows()));
        combined += model.betas(static_cast<Index>(v)) * linear_kernel(model.support_vectors[v], view_data[v]);
    }
    const Vector ay = model.alphas.cwiseProduct(model.labels);
    Vector f = combined.transpose() * ay;
    f.array() += model.bias;
    return f;
}

inline Vector sign_labels(const Vector& decisions) {
    return decisions.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
}

/// Normalizes raw subjects with the model's training statistics, restricts to
/// the selected features and evaluates sign(sum_i y_i a_i sum_m beta_m k_m(x_i, x) + b).
inline Prediction predict(const TrainedClassifier& model, const MultiModalDataset& subjects) {
    if (subjects.num_modalities() < static_cast<Index>(model.normalization.mean.size())) {
        const std::size_t missing = static_cast<std::size_t>(subjects.num_modalities());
        const std::string name = missing < model.modality_names.size() ? model.modality_names[missing] : std::to_string(missing);
        throw ValidationError("model expects " + std::to_string(model.normalization.mean.size()) +
                              " modalities; missing modality '" + name + "'");
    }
    if (subjects.num_modalities() > static_cast<Index>(model.normalization.mean.size()))
        throw ValidationError("model expects " + std::to_string(model.normalization.mean.size()) + " modalities, got " +
                              std::to_string(subjects.num_modalities()));
    if (subjects.num_subjects() > 0 && subjects.num_features() != model.feature_count)
        throw ValidationError("model expects " + std::to_string(model.feature_count) + " features per modality, got " +
                              std::to_string(subjects.num_features()));
    Prediction p;
    if (subjects.num_subjects() == 0) {
        p.decision_values.resize(0);
        p.labels.resize(0);
        return p;
    }
    const MultiModalDataset normalized = zscore_apply(subjects, model.normalization);
    std::vector<Matrix> views;
    for (const KernelView& v : model.views) views.push_back(v.extract(normalized));
    p.decision_values = decision_values(model, views);
    p.labels = sign_labels(p.decision_values);
    return p;
}

// ---------------------------------------------------------------------------
// Kernel-weight search

/// Candidate weights in preference order. M = 2: beta_1 = 0.9, 0.8, ..., 0.1.
/// M > 2: all simplex points on the 0.1 lattice, lexicographically descending.
inline std::vector<Vector> beta_grid(int M) {
    std::vector<Vector> grid;
    if (M <= 1) {
        grid.push_back(Vector::Ones(1));
        return grid;
    }
    if (M == 2) {
        for (int a = 9; a >= 1; --a) {
            Vector b(2);
            b << a / 10.0, (10 - a) / 10.0;
            grid.push_back(b);
        }
        return grid;
    }
    std::vector<int> parts(static_cast<std::size_t>(M), 0);
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
        if (pos == M - 1) {
            parts[static_cast<std::size_t>(pos)] = remaining;
            Vector b(M);
            for (int m = 0; m < M; ++m) b(m) = parts[static_cast<std::size_t>(m)] / 10.0;
            grid.push_back(b);
            return;
        }
        for (int v = remaining; v >= 0; --v) {
            parts[static_cast<std::size_t>(pos)] = v;
            rec(pos + 1, remaining - v);
        }
    };
    rec(0, 10);
    return grid;
}

inline Matrix kernel_subset(const Matrix& K, const std::vector<Index>& rows, const std::vector<Index>& cols) {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) out(static_cast<Index>(r), static_cast<Index>(c)) = K(rows[r], cols[c]);
    return out;
}

inline Vector vector_subset(const Vector& v, const std::vector<Index>& idx) {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) out(static_cast<Index>(r)) = v(idx[r]);
    return out;
}

/// Picks kernel weights by cross-validated accuracy over beta_grid(M).
/// view_data are normalized per-view training matrices; folds is a fold
/// assignment over the training subjects. Ties keep the earlier grid point.
inline Vector grid_search_beta(const std::vector<Matrix>& view_data, const Vector& labels, double C,
                               const std::vector<int>& folds) {
    const int M = static_cast<int>(view_data.size());
    const auto grid = beta_grid(M);
    if (grid.size() == 1) return grid.front();
    std::vector<Matrix> kernels;
    for (const Matrix& v : view_data) kernels.push_back(linear_kernel(v, v));
    const int fold_total = fold_count(folds);
    std::vector<FoldSplit> splits;
    for (int f = 0; f < fold_total; ++f) splits.push_back(fold_split(folds, f));

    SvmOptions opt;
    opt.C = C;
    double best_score = -1.0;
    Vector best = grid.front();
    for (const Vector& betas : grid) {
        const Matrix K = combine_kernels(kernels, betas);
        double acc_sum = 0.0;
        int used = 0;
        for (const FoldSplit& s : splits) {
            if (s.test.empty()) continue;
            const Vector y_train = vector_subset(labels, s.train);
            if ((y_train.array() > 0).all() || (y_train.array() < 0).all()) continue;
            const SvmSolution sol = svm_train(kernel_subset(K, s.train, s.train), y_train, opt);
            const Vector f = kernel_subset(K, s.test, s.train) * sol.alphas.cwiseProduct(y_train);
            int correct = 0;
            for (std::size_t t = 0; t < s.test.size(); ++t) {
                const double label = f(static_cast<Index>(t)) + sol.bias >= 0.0 ? 1.0 : -1.0;
                if (label == labels(s.test[t])) ++correct;
            }
            acc_sum += static_cast<double>(correct) / static_cast<double>(s.test.size());
            ++used;
        }
        const double score = used > 0 ? acc_sum / used : 0.0;
        if (score > best_score) {
            best_score = score;
            best = betas;
        }
    }
    return best;
}

/// Trains the multi-kernel SVM for normalized training data and chosen views.
inline TrainedClassifier train_classifier(const MultiModalDataset& normalized_train, std::vector<KernelView> views,
                                          const Vector& betas, double C) {
    TrainedClassifier model;
    model.views = std::move(views);
    model.betas = betas;
    model.C = C;
    model.labels = normalized_train.labels;
    model.feature_count = normalized_train.num_features();
    model.modality_names = normalized_train.modality_names;
    std::vector<Matrix> kernels;
    for (const KernelView& v : model.views) {
        model.support_vectors.push_back(v.extract(normalized_train));
        kernels.push_back(linear_kernel(model.support_vectors.back(), model.support_vectors.back()));
    }
    SvmOptions opt;
    opt.C = C;
    SvmSolution sol = svm_train(combine_kernels(kernels, betas), model.labels, opt);
    model.alphas = sol.alphas;
    model.bias = sol.bias;
    model.warnings = std::move(sol.warnings);
    return model;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const nlohmann::json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

inline nlohmann::json to_json(const NormalizationStats& s) {
    nlohmann::json mean = nlohmann::json::array();
    nlohmann::json sd = nlohmann::json::array();
    for (std::size_t m = 0; m < s.mean.size(); ++m) {
        mean.push_back(vector_to_json(s.mean[m]));
        sd.push_back(vector_to_json(s.stddev[m]));
    }
    return {{"mean", mean}, {"stddev", sd}};
}

inline NormalizationStats normalization_from_json(const nlohmann::json& j) {
    NormalizationStats s;
    for (const auto& v : j.at("mean")) s.mean.push_back(vector_from_json(v));
    for (const auto& v : j.at("stddev")) s.stddev.push_back(vector_from_json(v));
    if (s.mean.size() != s.stddev.size()) throw ValidationError("normalization JSON: mean/stddev length mismatch");
    return s;
}

inline nlohmann::json to_json(const TrainedClassifier& m) {
    nlohmann::json views = nlohmann::json::array();
    for (const KernelView& v : m.views) views.push_back({{"modality", v.modality}, {"feature", v.feature}});
    nlohmann::json svs = nlohmann::json::array();
    for (const Matrix& sv : m.support_vectors) svs.push_back(matrix_to_json(sv));
    return {{"method", m.method},
            {"views", views},
            {"betas", vector_to_json(m.betas)},
            {"alphas", vector_to_json(m.alphas)},
            {"labels", vector_to_json(m.labels)},
            {"bias", m.bias},
            {"C", m.C},
            {"support_vectors", svs},
            {"normalization", to_json(m.normalization)},
            {"modality_names", m.modality_names},
            {"feature_count", m.feature_count},
            {"hyperparameters", m.hyperparameters},
            {"warnings", m.warnings}};
}

inline TrainedClassifier classifier_from_json(const nlohmann::json& j) {
    try {
        TrainedClassifier m;
        m.method = j.at("method").get<std::string>();
        for (const auto& v : j.at("views")) {
            KernelView kv;
            kv.modality = v.at("modality").get<std::vector<int>>();
            kv.feature = v.at("feature").get<std::vector<Index>>();
            if (kv.modality.size() != kv.feature.size()) throw ValidationError("model JSON: view column lists differ in length");
            m.views.push_back(std::move(kv));
        }
        m.betas = vector_from_json(j.at("betas"));
        m.alphas = vector_from_json(j.at("alphas"));
        m.labels = vector_from_json(j.at("labels"));
        m.bias = j.at("bias").get<double>();
        m.C = j.at("C").get<double>();
        for (const auto& sv : j.at("support_vectors")) m.support_vectors.push_back(matrix_from_json(sv));
        m.normalization = normalization_from_json(j.at("normalization"));
        m.modality_names = j.at("modality_names").get<std::vector<std::string>>();
        m.feature_count = j.at("feature_count").get<Index>();
        if (j.contains("hyperparameters")) m.hyperparameters = j.at("hyperparameters");
        if (m.views.size() != m.support_vectors.size() || static_cast<Index>(m.views.size()) != m.betas.size())
            throw ValidationError("model JSON: views, support_vectors and betas disagree in length");
        if (m.alphas.size() != m.labels.size()) throw ValidationError("model JSON: alphas and labels differ in length");
        for (std::size_t v = 0; v < m.views.size(); ++v) {
            if (m.support_vectors[v].rows() != static_cast<Index>(m.views[v].size()) ||
                m.support_vectors[v].cols() != m.alphas.size())
                throw ValidationError("model JSON: support vector matrix " + std::to_string(v) + " has the wrong shape");
            for (std::size_t c = 0; c < m.views[v].size(); ++c)
                if (m.views[v].modality[c] < 0 || m.views[v].modality[c] >= static_cast<int>(m.normalization.mean.size()) ||
                    m.views[v].feature[c] < 0 || m.views[v].feature[c] >= m.feature_count)
                    throw ValidationError("model JSON: view " + std::to_string(v) + " references an unknown column");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model JSON: ") + e.what());
    }
}

}  // namespace asmfs

#endif  // ASMFS_CLASSIFY_HPP
