#ifndef ASMFS_EVALUATION_HPP
#define ASMFS_EVALUATION_HPP

#include "asmfs/classify.hpp"
#include "asmfs/common.hpp"
#include "asmfs/data_model.hpp"
#include "asmfs/feature_selection.hpp"
#include "asmfs/folds.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace asmfs {

// ---------------------------------------------------------------------------
// Methods

enum class Method { svm, lasso_svm, mksvm, lasso_mksvm, mtfs, fixed_similarity, asmfs };

inline const std::vector<Method>& all_methods() {
    static const std::vector<Method> methods = {Method::svm,  Method::lasso_svm,        Method::mksvm, Method::lasso_mksvm,
                                                Method::mtfs, Method::fixed_similarity, Method::asmfs};
    return methods;
}

inline std::string method_name(Method m) {
    switch (m) {
        case Method::svm: return "svm";
        case Method::lasso_svm: return "lasso_svm";
        case Method::mksvm: return "mksvm";
        case Method::lasso_mksvm: return "lasso_mksvm";
        case Method::mtfs: return "mtfs";
        case Method::fixed_similarity: return "fixed_similarity";
        case Method::asmfs: return "asmfs";
    }
    return "unknown";
}

inline Method parse_method(const std::string& name) {
    for (Method m : all_methods())
        if (method_name(m) == name) return m;
    throw ValidationError("unknown method '" + name +
                          "' (expected svm, lasso_svm, mksvm, lasso_mksvm, mtfs, fixed_similarity or asmfs)");
}

inline bool uses_lambda(Method m) { return m == Method::asmfs || m == Method::fixed_similarity; }
inline bool uses_k(Method m) { return uses_lambda(m); }
inline bool uses_mu(Method m) { return m != Method::svm && m != Method::mksvm; }

struct Hyperparameters {
    double lambda = 20.0;
    double mu = 10.0;
    int k = 5;
};

inline nlohmann::json to_json(const Hyperparameters& h, Method method) {
    nlohmann::json j = nlohmann::json::object();
    if (uses_lambda(method)) j["lambda"] = h.lambda;
    if (uses_mu(method)) j["mu"] = h.mu;
    if (uses_k(method)) j["k"] = h.k;
    return j;
}

/// Hyperparameter search domains.
struct Grids {
    std::vector<double> lambda = {0.1, 5, 20, 60, 100};
    std::vector<double> mu = {0, 5, 10, 15, 20};
    std::vector<int> k = {1, 3, 5, 7, 9};
};

/// Grid points for a method, in tie-break preference order: smaller mu, then
/// smaller lambda, then smaller K.
inline std::vector<Hyperparameters> grid_points(Method method, const Grids& grids) {
    std::vector<double> mus = uses_mu(method) ? grids.mu : std::vector<double>{0.0};
    std::vector<double> lambdas = uses_lambda(method) ? grids.lambda : std::vector<double>{0.0};
    std::vector<int> ks = uses_k(method) ? grids.k : std::vector<int>{1};
    std::sort(mus.begin(), mus.end());
    std::sort(lambdas.begin(), lambdas.end());
    std::sort(ks.begin(), ks.end());
    std::vector<Hyperparameters> out;
    for (double mu : mus)
        for (double lambda : lambdas)
            for (int k : ks) out.push_back({lambda, mu, k});
    return out;
}

struct CvPlan {
    int folds = 10;
    int repeats = 10;
    int inner_folds = 10;
    bool stratified = true;
    std::uint64_t seed = 0;

    void validate() const {
        if (folds < 2) throw ValidationError("folds must be >= 2");
        if (inner_folds < 2) throw ValidationError("inner_folds must be >= 2");
        if (repeats < 1) throw ValidationError("repeats must be >= 1");
    }
};

inline nlohmann::json to_json(const CvPlan& p) {
    return {{"folds", p.folds}, {"repeats", p.repeats}, {"inner_folds", p.inner_folds}, {"stratified", p.stratified}, {"seed", p.seed}};
}

inline std::vector<int> kfold_assignment(const Vector& labels, int folds, std::uint64_t seed, bool stratified) {
    if (stratified) return stratified_kfold(labels, folds, seed);
    const Index n = labels.size();
    if (n < folds) throw ValidationError("cannot split " + std::to_string(n) + " subjects into " + std::to_string(folds) + " folds");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(derive_seed(seed, {0x5f01d}));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> assignment(static_cast<std::size_t>(n));
    for (std::size_t p = 0; p < order.size(); ++p) assignment[static_cast<std::size_t>(order[p])] = static_cast<int>(p % static_cast<std::size_t>(folds));
    return assignment;
}

// ---------------------------------------------------------------------------
// Pipeline: normalize -> select features -> kernel weights -> SVM.

struct PipelineOptions {
    AsmfsConfig base;  // iteration limits and tolerances; lambda/mu/K come from Hyperparameters
    double C = 1.0;
    bool beta_search = true;
    int beta_folds = 10;
    double eps_select = 1e-6;
    int top_t = 0;
    std::uint64_t seed = 0;
};

inline nlohmann::json to_json(const PipelineOptions& o) {
    return {{"asmfs", to_json(o.base)},     {"C", o.C},
            {"beta_search", o.beta_search}, {"beta_folds", o.beta_folds},
            {"eps_select", o.eps_select},   {"top_t", o.top_t}};
}

struct PipelineFit {
    TrainedClassifier model;
    std::optional<FitResult> fit;  // present for asmfs / fixed_similarity
    AsmfsConfig fit_config;
    Matrix coefficients;           // d x M selection coefficients (empty for svm / mksvm)
};

namespace detail {

inline std::vector<Index> all_features(Index d) {
    std::vector<Index> f(static_cast<std::size_t>(d));
    std::iota(f.begin(), f.end(), Index{0});
    return f;
}

inline std::vector<Index> nonzero_coefficients(const Vector& w, double eps_select, int top_t) {
    Matrix as_col = w;
    return select_features(as_col, RankingRule::per_modality, eps_select, top_t).front().selected;
}

}  // namespace detail

inline PipelineFit fit_pipeline(const MultiModalDataset& train, Method method, const Hyperparameters& hyper,
                                const PipelineOptions& options) {
    train.validate();
    if (!train.has_both_classes()) throw ValidationError("training split must contain both classes");
    PipelineFit out;
    const NormalizationStats stats = zscore_fit(train);
    const MultiModalDataset norm = zscore_apply(train, stats);
    const int M = static_cast<int>(norm.num_modalities());
    const Index d = norm.num_features();

    std::vector<KernelView> views;
    auto views_from_joint = [&](const Matrix& W) {
        const auto ranking = select_features(W, RankingRule::joint, options.eps_select, options.top_t);
        for (int m = 0; m < M; ++m) views.push_back(KernelView::single(m, ranking[static_cast<std::size_t>(m)].selected));
    };

    switch (method) {
        case Method::svm: {
            KernelView all;
            for (int m = 0; m < M; ++m)
                for (Index f = 0; f < d; ++f) {
                    all.modality.push_back(m);
                    all.feature.push_back(f);
                }
            views.push_back(std::move(all));
            break;
        }
        case Method::lasso_svm: {
            Matrix X(d * M, norm.num_subjects());
            for (int m = 0; m < M; ++m) X.middleRows(m * d, d) = norm.modalities[static_cast<std::size_t>(m)];
            const Vector w = lasso_fit(X, norm.labels, hyper.mu);
            out.coefficients = Eigen::Map<const Matrix>(w.data(), d, M);
            KernelView v;
            for (Index c : detail::nonzero_coefficients(w, options.eps_select, options.top_t)) {
                v.modality.push_back(static_cast<int>(c / d));
                v.feature.push_back(c % d);
            }
            views.push_back(std::move(v));
            break;
        }
        case Method::mksvm:
            for (int m = 0; m < M; ++m) views.push_back(KernelView::single(m, detail::all_features(d)));
            break;
        case Method::lasso_mksvm: {
            out.coefficients.resize(d, M);
            for (int m = 0; m < M; ++m) {
                const Vector w = lasso_fit(norm.modalities[static_cast<std::size_t>(m)], norm.labels, hyper.mu);
                out.coefficients.col(m) = w;
                views.push_back(KernelView::single(m, detail::nonzero_coefficients(w, options.eps_select, options.top_t)));
            }
            break;
        }
        case Method::mtfs:
            out.coefficients = mtfs_fit(norm, hyper.mu);
            views_from_joint(out.coefficients);
            break;
        case Method::fixed_similarity:
        case Method::asmfs: {
            AsmfsConfig cfg = options.base;
            cfg.lambda = hyper.lambda;
            cfg.mu = hyper.mu;
            cfg.k = hyper.k;
            out.fit_config = cfg;
            out.fit = method == Method::asmfs ? asmfs_fit(norm, cfg) : fixed_similarity_fit(norm, cfg);
            out.coefficients = out.fit->W;
            views_from_joint(out.coefficients);
            break;
        }
    }

    Vector betas = Vector::Constant(static_cast<Index>(views.size()), 1.0 / static_cast<double>(views.size()));
    if (views.size() > 1 && options.beta_search) {
        std::vector<Matrix> view_data;
        for (const KernelView& v : views) view_data.push_back(v.extract(norm));
        const auto folds = stratified_kfold(norm.labels, options.beta_folds, derive_seed(options.seed, {0xbe7a}));
        betas = grid_search_beta(view_data, norm.labels, options.C, folds);
    }
    out.model = train_classifier(norm, std::move(views), betas, options.C);
    out.model.method = method_name(method);
    out.model.normalization = stats;
    out.model.hyperparameters = to_json(hyper, method);
    return out;
}

// ---------------------------------------------------------------------------
// Metrics

struct FoldMetrics {
    std::optional<double> accuracy;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> f1;
    std::optional<double> auc;
    int tp = 0;
    int tn = 0;
    int fp = 0;
    int fn = 0;
    std::vector<std::string> warnings;
};

/// Area under the ROC curve by the rank (Mann-Whitney) statistic with
/// tie-averaged ranks. nullopt when a class is absent.
inline std::optional<double> auc_score(const Vector& labels, const Vector& scores) {
    const Index n = labels.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) < scores(b); });
    double rank_sum_pos = 0.0;
    double n_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores(order[j + 1]) == scores(order[i])) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t t = i; t <= j; ++t)
            if (labels(order[t]) > 0) {
                rank_sum_pos += avg_rank;
                n_pos += 1.0;
            }
        i = j + 1;
    }
    const double n_neg = static_cast<double>(n) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) return std::nullopt;
    return (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

/// Positive class is +1.
inline FoldMetrics compute_metrics(const Vector& truth, const Vector& predicted, const Vector& decisions) {
    if (truth.size() != predicted.size() || truth.size() != decisions.size())
        throw ValidationError("compute_metrics: length mismatch");
    FoldMetrics r;
    for (Index i = 0; i < truth.size(); ++i) {
        const bool pos = truth(i) > 0;
        const bool pred_pos = predicted(i) > 0;
        if (pos && pred_pos) ++r.tp;
        else if (!pos && !pred_pos) ++r.tn;
        else if (!pos && pred_pos) ++r.fp;
        else ++r.fn;
    }
    const double n = static_cast<double>(truth.size());
    if (n > 0) r.accuracy = (r.tp + r.tn) / n;
    if (r.tp + r.fn > 0) r.sensitivity = static_cast<double>(r.tp) / (r.tp + r.fn);
    else r.warnings.push_back("no positive subjects: sensitivity undefined");
    if (r.tn + r.fp > 0) r.specificity = static_cast<double>(r.tn) / (r.tn + r.fp);
    else r.warnings.push_back("no negative subjects: specificity undefined");
    if (2 * r.tp + r.fp + r.fn > 0) r.f1 = 2.0 * r.tp / (2.0 * r.tp + r.fp + r.fn);
    else r.warnings.push_back("no positive subjects or predictions: F1 undefined");
    r.auc = auc_score(truth, decisions);
    if (!r.auc) r.warnings.push_back("single-class fold: AUC undefined");
    for (const auto& w : r.warnings) log(LogLevel::info, w);
    return r;
}

struct RocPoint {
    double fpr;
    double tpr;
    double threshold;
};

/// ROC points swept over distinct decision values, highest first, starting at (0, 0, +inf).
inline std::vector<RocPoint> roc_curve(const Vector& labels, const Vector& scores) {
    std::vector<Index> order(static_cast<std::size_t>(labels.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) > scores(b); });
    const double P = static_cast<double>((labels.array() > 0).count());
    const double N = static_cast<double>(labels.size()) - P;
    std::vector<RocPoint> pts;
    pts.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    double tp = 0.0;
    double fp = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double thr = scores(order[i]);
        while (i < order.size() && scores(order[i]) == thr) {
            (labels(order[i]) > 0 ? tp : fp) += 1.0;
            ++i;
        }
        pts.push_back({N > 0 ? fp / N : 0.0, P > 0 ? tp / P : 0.0, thr});
    }
    return pts;
}

// ---------------------------------------------------------------------------
// Nested CV

struct GridScore {
    Hyperparameters hyper;
    double mean_accuracy = 0.0;
};

struct NestedFit {
    Hyperparameters best;
    std::vector<GridScore> scores;  // empty when the grid has one point
    PipelineFit pipeline;
};

/// Picks (lambda, mu, K) by inner-CV accuracy on the training split, then refits
/// the whole pipeline on it. Inner-CV pipelines use uniform kernel weights; the
/// final refit searches them.
inline NestedFit nested_cv_fit(const MultiModalDataset& train, Method method, const Grids& grids, const CvPlan& plan,
                               const PipelineOptions& options, int jobs = 1) {
    plan.validate();
    NestedFit out;
    const auto points = grid_points(method, grids);
    if (points.empty()) throw ValidationError("empty hyperparameter grid");
    out.best = points.front();
    if (points.size() > 1) {
        const auto assignment = kfold_assignment(train.labels, plan.inner_folds, derive_seed(options.seed, {0x1a2e}), plan.stratified);
        const int F = plan.inner_folds;
        std::vector<MultiModalDataset> inner_train;
        std::vector<MultiModalDataset> inner_test;
        for (int f = 0; f < F; ++f) {
            const FoldSplit s = fold_split(assignment, f);
            inner_train.push_back(train.subset(s.train));
            inner_test.push_back(train.subset(s.test));
        }
        PipelineOptions inner_opt = options;
        inner_opt.beta_search = false;
        std::vector<double> acc(points.size() * static_cast<std::size_t>(F), std::numeric_limits<double>::quiet_NaN());
        parallel_for(acc.size(), jobs, [&](std::size_t task) {
            const std::size_t p = task / static_cast<std::size_t>(F);
            const int f = static_cast<int>(task % static_cast<std::size_t>(F));
            if (inner_test[static_cast<std::size_t>(f)].num_subjects() == 0) return;
            const PipelineFit fit = fit_pipeline(inner_train[static_cast<std::size_t>(f)], method, points[p], inner_opt);
            const Prediction pred = predict(fit.model, inner_test[static_cast<std::size_t>(f)]);
            const Vector& truth = inner_test[static_cast<std::size_t>(f)].labels;
            acc[task] = static_cast<double>((pred.labels.array() == truth.array()).count()) / static_cast<double>(truth.size());
        });
        double best_score = -1.0;
        for (std::size_t p = 0; p < points.size(); ++p) {
            double sum = 0.0;
            int used = 0;
            for (int f = 0; f < F; ++f) {
                const double a = acc[p * static_cast<std::size_t>(F) + static_cast<std::size_t>(f)];
                if (std::isnan(a)) continue;
                sum += a;
                ++used;
            }
            const double mean = used > 0 ? sum / used : 0.0;
            out.scores.push_back({points[p], mean});
            if (mean > best_score) {
                best_score = mean;
                out.best = points[p];
            }
        }
    }
    PipelineOptions final_opt = options;
    final_opt.beta_folds = plan.inner_folds;
    out.pipeline = fit_pipeline(train, method, out.best, final_opt);
    return out;
}

// ---------------------------------------------------------------------------
// Benchmark

struct FoldEntry {
    int repeat = 0;
    int fold = 0;
    int n_test = 0;
    FoldMetrics metrics;
    nlohmann::json hyperparameters = nlohmann::json::object();
    std::optional<std::string> error;
};

struct MetricSummary {
    std::optional<double> mean;
    std::optional<double> std;
    int count = 0;
};

struct MetricsReport {
    std::string method;
    std::vector<FoldEntry> folds;
    MetricSummary accuracy, sensitivity, specificity, f1, auc;
    std::vector<RocPoint> roc;
    int failed_folds = 0;
    nlohmann::json config = nlohmann::json::object();
};

inline MetricSummary summarize(const std::vector<FoldEntry>& folds, std::optional<double> FoldMetrics::*field) {
    MetricSummary s;
    std::vector<double> values;
    for (const FoldEntry& e : folds)
        if (!e.error && e.metrics.*field) values.push_back(*(e.metrics.*field));
    s.count = static_cast<int>(values.size());
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    s.mean = mean;
    s.std = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    return s;
}

/// Repeated (stratified) k-fold CV of every method; each outer training split
/// runs its own nested hyperparameter search. Fold failures are recorded and
/// skipped.
inline std::vector<MetricsReport> run_benchmark(const MultiModalDataset& data, const std::vector<Method>& methods,
                                                const Grids& grids, const CvPlan& plan, const PipelineOptions& options,
                                                int jobs = 1) {
    data.validate();
    plan.validate();
    const std::size_t R = static_cast<std::size_t>(plan.repeats);
    const std::size_t F = static_cast<std::size_t>(plan.folds);
    std::vector<std::vector<int>> assignments;
    for (std::size_t r = 0; r < R; ++r)
        assignments.push_back(kfold_assignment(data.labels, plan.folds, derive_seed(plan.seed, {0xc0, r}), plan.stratified));

    struct TaskResult {
        FoldEntry entry;
        std::vector<Index> test;
        Vector decisions;
    };
    const std::size_t per_method = R * F;
    std::vector<TaskResult> results(methods.size() * per_method);
    parallel_for(results.size(), jobs, [&](std::size_t task) {
        const std::size_t mi = task / per_method;
        const std::size_t r = (task % per_method) / F;
        const std::size_t f = task % F;
        TaskResult& out = results[task];
        out.entry.repeat = static_cast<int>(r);
        out.entry.fold = static_cast<int>(f);
        const FoldSplit split = fold_split(assignments[r], static_cast<int>(f));
        out.test = split.test;
        out.entry.n_test = static_cast<int>(split.test.size());
        try {
            PipelineOptions opt = options;
            opt.seed = derive_seed(plan.seed, {0xf0, r, f});
            const MultiModalDataset train = data.subset(split.train);
            const MultiModalDataset test = data.subset(split.test);
            const NestedFit nested = nested_cv_fit(train, methods[mi], grids, plan, opt, 1);
            out.entry.hyperparameters = to_json(nested.best, methods[mi]);
            const Prediction pred = predict(nested.pipeline.model, test);
            out.decisions = pred.decision_values;
            out.entry.metrics = compute_metrics(test.labels, pred.labels, pred.decision_values);
        } catch (const std::exception& e) {
            out.entry.error = e.what();
            warn(method_name(methods[mi]) + " repeat " + std::to_string(r) + " fold " + std::to_string(f) +
                 " failed: " + e.what());
        }
    });

    std::vector<MetricsReport> reports;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        MetricsReport rep;
        rep.method = method_name(methods[mi]);
        std::vector<double> pooled_labels;
        std::vector<double> pooled_scores;
        for (std::size_t t = 0; t < per_method; ++t) {
            TaskResult& tr = results[mi * per_method + t];
            if (tr.entry.error) ++rep.failed_folds;
            else
                for (std::size_t s = 0; s < tr.test.size(); ++s) {
                    pooled_labels.push_back(data.labels(tr.test[s]));
                    pooled_scores.push_back(tr.decisions(static_cast<Index>(s)));
                }
            rep.folds.push_back(std::move(tr.entry));
        }
        rep.accuracy = summarize(rep.folds, &FoldMetrics::accuracy);
        rep.sensitivity = summarize(rep.folds, &FoldMetrics::sensitivity);
        rep.specificity = summarize(rep.folds, &FoldMetrics::specificity);
        rep.f1 = summarize(rep.folds, &FoldMetrics::f1);
        rep.auc = summarize(rep.folds, &FoldMetrics::auc);
        rep.roc = roc_curve(Eigen::Map<Vector>(pooled_labels.data(), static_cast<Index>(pooled_labels.size())),
                            Eigen::Map<Vector>(pooled_scores.data(), static_cast<Index>(pooled_scores.size())));
        rep.config = {{"plan", to_json(plan)}, {"pipeline", to_json(options)}};
        reports.push_back(std::move(rep));
    }
    return reports;
}

// ---------------------------------------------------------------------------
// Report output

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline nlohmann::json summary_json(const MetricSummary& s) {
    return {{"mean", optional_json(s.mean)}, {"std", optional_json(s.std)}, {"count", s.count}};
}

}  // namespace detail

inline nlohmann::json to_json(const FoldMetrics& m) {
    return {{"accuracy", detail::optional_json(m.accuracy)},
            {"sensitivity", detail::optional_json(m.sensitivity)},
            {"specificity", detail::optional_json(m.specificity)},
            {"f1", detail::optional_json(m.f1)},
            {"auc", detail::optional_json(m.auc)},
            {"tp", m.tp},
            {"tn", m.tn},
            {"fp", m.fp},
            {"fn", m.fn},
            {"warnings", m.warnings}};
}

inline nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json folds = nlohmann::json::array();
    for (const FoldEntry& e : r.folds) {
        nlohmann::json j = {{"repeat", e.repeat}, {"fold", e.fold}, {"n_test", e.n_test}, {"hyperparameters", e.hyperparameters}};
        if (e.error) j["error"] = *e.error;
        else j["metrics"] = to_json(e.metrics);
        folds.push_back(std::move(j));
    }
    return {{"method", r.method},
            {"aggregate",
             {{"accuracy", detail::summary_json(r.accuracy)},
              {"sensitivity", detail::summary_json(r.sensitivity)},
              {"specificity", detail::summary_json(r.specificity)},
              {"f1", detail::summary_json(r.f1)},
              {"auc", detail::summary_json(r.auc)}}},
            {"failed_folds", r.failed_folds},
            {"folds", folds},
            {"config", r.config}};
}

/// Aligned table: Method, Accuracy, Sensitivity, Specificity, F1, AUC (mean+-std).
inline std::string format_table(const std::vector<MetricsReport>& reports) {
    auto cell = [](const MetricSummary& s) {
        if (!s.mean) return std::string("n/a");
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4f+-%.4f", *s.mean, s.std.value_or(0.0));
        return std::string(buf);
    };
    std::size_t method_width = 6;
    for (const auto& r : reports) method_width = std::max(method_width, r.method.size());
    std::ostringstream out;
    const char* headers[] = {"Accuracy", "Sensitivity", "Specificity", "F1", "AUC"};
    out << std::left << std::setw(static_cast<int>(method_width)) << "Method";
    for (const char* h : headers) out << "  " << std::setw(15) << h;
    out << '\n';
    for (const auto& r : reports) {
        out << std::left << std::setw(static_cast<int>(method_width)) << r.method;
        for (const MetricSummary* s : {&r.accuracy, &r.sensitivity, &r.specificity, &r.f1, &r.auc})
            out << "  " << std::setw(15) << cell(*s);
        out << '\n';
    }
    return out.str();
}

inline void write_roc_csv(const std::vector<RocPoint>& roc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "fpr,tpr,threshold\n";
    for (const RocPoint& p : roc)
        out << csv::format_double(p.fpr) << ',' << csv::format_double(p.tpr) << ','
            << (std::isinf(p.threshold) ? std::string("inf") : csv::format_double(p.threshold)) << '\n';
}

}  // namespace asmfs

#endif  // ASMFS_EVALUATION_HPP
