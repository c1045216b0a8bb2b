// Acceptance gate: one PASS/FAIL line per criterion. Run with a criterion
// number (1-10) to check just that one; no argument runs all of them.
#include "asmfs/asmfs.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <thread>

using namespace asmfs;
using namespace asmfs_test;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[violated] " << what << "; ";
        }
    }
};

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

MultiModalDataset normalized(const MultiModalDataset& d) { return zscore_apply(d, zscore_fit(d)); }

SyntheticSpec default_benchmark() { return SyntheticSpec{}; }  // n=200, d=93, M=2, 10 informative, seed 0

std::vector<Index> top_rows(const Matrix& W, std::size_t count) {
    std::vector<Index> order(static_cast<std::size_t>(W.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return W.row(a).norm() > W.row(b).norm(); });
    std::vector<Index> top;
    for (Index i : order)
        if (top.size() < count && W.row(i).norm() > 0.0) top.push_back(i);
    return top;
}

int recovered(const Matrix& W, const std::vector<Index>& informative) {
    int hits = 0;
    for (Index i : top_rows(W, informative.size()))
        hits += std::find(informative.begin(), informative.end(), i) != informative.end();
    return hits;
}

// 1. solve_row against the brute-force simplex QP oracle.
void criterion1(Outcome& out) {
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    const int ks[] = {1, 3, 5, 7, 9};
    double worst_gap = 0.0;
    double worst_obj = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < 200; ++t) {
        const int k = ks[t % 5];
        const int p = k + 1 + static_cast<int>(rng() % static_cast<unsigned>(50 - k));
        DistanceRow row;
        for (int c = 0; c < p; ++c) {
            row.candidates.push_back(c + 1);
            row.distances.push_back(u(rng));
        }
        const RowSolution sol = solve_row(row, k);
        const std::vector<double> oracle = oracle_simplex_qp(row.distances, sol.gamma);
        for (int c = 0; c < p; ++c)
            worst_gap = std::max(worst_gap, std::abs(sol.weights[static_cast<std::size_t>(c)] - oracle[static_cast<std::size_t>(c)]));
        worst_obj = std::max(worst_obj, row_objective(row.distances, sol.weights, sol.gamma) -
                                            row_objective(row.distances, oracle, sol.gamma));
    }
    out.detail << "max |s - oracle| = " << worst_gap << ", max objective excess = " << worst_obj << "; ";
    out.require(worst_gap <= 1e-8, "max-norm gap <= 1e-8");
    out.require(worst_obj <= 1e-8, "objective excess <= 1e-8");
}

// 2. Structure of every learned S.
void criterion2(Outcome& out) {
    std::mt19937_64 rng(1002);
    long rows = 0;
    for (int t = 0; t < 50; ++t) {
        const Index M = 1 + static_cast<Index>(rng() % 3);
        const auto data = normalized(random_dataset(4 + static_cast<Index>(rng() % 8), 20 + static_cast<Index>(rng() % 20), M, rng, 5));
        AsmfsConfig cfg;
        cfg.k = 1 + static_cast<int>(rng() % 5);
        cfg.lambda = 0.5 + static_cast<double>(rng() % 20);
        cfg.mu = 0.5 + static_cast<double>(rng() % 10);
        cfg.max_outer_iters = 5;
        const FitResult fit = asmfs_fit(data, cfg);
        const Matrix& S = fit.S.values;
        for (Index i = 0; i < S.rows(); ++i, ++rows) {
            out.require(std::abs(S.row(i).sum() - 1.0) <= 1e-9, "row sum 1 +- 1e-9");
            int support = 0;
            for (Index j = 0; j < S.cols(); ++j) {
                out.require(S(i, j) >= 0.0 && S(i, j) <= 1.0, "entries in [0,1]");
                if (data.labels(i) != data.labels(j)) out.require(S(i, j) == 0.0, "cross-class zero");
                support += S(i, j) > 0.0;
            }
            out.require(support <= cfg.k, "support <= K");
        }
    }
    out.detail << rows << " rows over 50 datasets checked; ";
}

// 3. IRLS descent and normal-equation certificate.
void criterion3(Outcome& out) {
    std::mt19937_64 rng(1003);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_rise = -std::numeric_limits<double>::infinity();
    double worst_residual = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Index d = 1 + static_cast<Index>(rng() % 30);
        const Index n = 8 + static_cast<Index>(rng() % 53);
        const Index M = 1 + static_cast<Index>(rng() % 3);
        const auto data = normalized(random_dataset(d, n, M, rng, 3));
        AsmfsConfig cfg;
        cfg.k = 1 + static_cast<int>(rng() % 2);
        cfg.lambda = 100.0 * u(rng);
        cfg.mu = 0.1 + 20.0 * u(rng);
        cfg.inner_w_iters = 15;
        const SimilarityMatrix S = initial_similarity(data, cfg.k);
        WSolveTrace trace;
        update_W(data, S, cfg, Matrix(), &trace);
        for (std::size_t s = 1; s < trace.smoothed_objectives.size(); ++s)
            worst_rise = std::max(worst_rise, trace.smoothed_objectives[s] - trace.smoothed_objectives[s - 1]);
        for (double r : trace.relative_residuals) worst_residual = std::max(worst_residual, r);
    }
    out.detail << "largest objective rise = " << worst_rise << ", worst relative residual = " << worst_residual << "; ";
    out.require(worst_rise <= 1e-9, "objective non-increasing within 1e-9");
    out.require(worst_residual <= 1e-8, "relative residual <= 1e-8");
}

// 4. Analytic gradient of the smooth surrogate against central differences.
void criterion4(Outcome& out) {
    std::mt19937_64 rng(1004);
    double worst = 0.0;
    const double h = 1e-5;
    for (int t = 0; t < 20; ++t) {
        const auto data = random_dataset(4, 6, 2, rng, 3);
        const Matrix W = random_matrix(4, 2, rng);
        const auto S = update_similarity(data, random_matrix(4, 2, rng), 1);
        const Matrix L = build_graph_term(S.values);
        const Vector D = update_D(random_matrix(4, 2, rng), 1e-8);
        const double lambda = 0.5 + t % 3;
        const double mu = 2.0;
        const Matrix g = surrogate_gradient(data, L, D, W, lambda, mu);
        Matrix fd(4, 2);
        for (Index i = 0; i < 4; ++i)
            for (Index m = 0; m < 2; ++m) {
                Matrix P = W;
                Matrix Q = W;
                P(i, m) += h;
                Q(i, m) -= h;
                fd(i, m) = (surrogate_objective(data, L, D, P, lambda, mu) - surrogate_objective(data, L, D, Q, lambda, mu)) / (2 * h);
            }
        worst = std::max(worst, (g - fd).norm() / std::max(1e-12, g.norm()));
    }
    out.detail << "worst relative error = " << worst << "; ";
    out.require(worst <= 1e-4, "relative error <= 1e-4");
}

// 5. Outer-loop convergence on the default benchmark at default settings.
void criterion5(Outcome& out) {
    const auto data = normalized(generate(default_benchmark()).dataset);
    AsmfsConfig cfg;  // lambda 20, mu 10, K 5, rel_tol 1e-5
    cfg.max_outer_iters = 200;
    const FitResult fit = asmfs_fit(data, cfg);
    out.detail << "lambda=" << cfg.lambda << " mu=" << cfg.mu << " K=" << cfg.k << ": converged=" << fit.converged
               << " after " << fit.iterations << " iterations; ";
    out.require(fit.converged && fit.iterations <= 30, "relative change < 1e-5 within 30 outer iterations");

    // diagnostic sweep over the search grids (does not affect the verdict)
    const Grids grids;
    std::map<int, int> histogram;
    int within = 0;
    int total = 0;
    for (double lambda : grids.lambda)
        for (double mu : grids.mu)
            for (int k : {1, 5, 9}) {
                AsmfsConfig c;
                c.lambda = lambda;
                c.mu = mu;
                c.k = k;
                c.max_outer_iters = 200;
                const FitResult f = asmfs_fit(data, c);
                ++total;
                within += f.converged && f.iterations <= 30;
                ++histogram[f.converged ? (f.iterations + 9) / 10 * 10 : -1];
            }
    out.detail << "grid sweep: " << within << "/" << total << " configs converge within 30 (iteration buckets:";
    for (const auto& [bucket, count] : histogram)
        out.detail << ' ' << (bucket < 0 ? std::string("none") : "<=" + std::to_string(bucket)) << ':' << count;
    out.detail << "); ";
}

// 6. Planted-feature recovery and method ordering under correlated noise.
void criterion6(Outcome& out) {
    CvPlan plan;  // inner_folds 10
    const Grids grids;
    const PipelineOptions options;
    {
        const auto synth = generate(default_benchmark());
        const auto nf = nested_cv_fit(synth.dataset, Method::asmfs, grids, plan, options, jobs());
        const int hits = recovered(nf.pipeline.coefficients, synth.informative);
        out.detail << "default: asmfs (lambda=" << nf.best.lambda << " mu=" << nf.best.mu << " K=" << nf.best.k
                   << ") recovers " << hits << "/10; ";
        out.require(hits >= 8, "asmfs recovers >= 8 of 10");
    }
    SyntheticSpec spec = default_benchmark();
    spec.correlated_noise = true;
    const auto synth = generate(spec);
    std::map<Method, int> hits;
    for (Method m : {Method::asmfs, Method::fixed_similarity, Method::lasso_mksvm}) {
        const auto nf = nested_cv_fit(synth.dataset, m, grids, plan, options, jobs());
        hits[m] = recovered(nf.pipeline.coefficients, synth.informative);
        out.detail << method_name(m) << "=" << hits[m] << " ";
    }
    out.detail << "under correlated noise; ";
    out.require(hits[Method::asmfs] >= hits[Method::fixed_similarity], "asmfs >= fixed_similarity");
    out.require(hits[Method::fixed_similarity] >= hits[Method::lasso_mksvm], "fixed_similarity >= lasso_mksvm");
}

// 7. End-to-end accuracy on separable data; sparsity helps on the noisy benchmark.
void criterion7(Outcome& out) {
    SyntheticSpec spec = default_benchmark();
    spec.class_separation = 3.0;
    spec.noise_sigma = 1.0;
    CvPlan plan;
    plan.folds = 10;
    plan.repeats = 1;
    Grids defaults;  // one point: the default hyperparameters
    const AsmfsConfig base;
    defaults.lambda = {base.lambda};
    defaults.mu = {base.mu};
    defaults.k = {base.k};
    const auto reports = run_benchmark(generate(spec).dataset, {Method::asmfs}, defaults, plan, PipelineOptions{}, jobs());
    const double acc = reports[0].accuracy.mean.value_or(0.0);
    out.detail << "separable 10-fold asmfs accuracy = " << acc << " (" << reports[0].failed_folds << " failed folds); ";
    out.require(acc >= 0.95 && reports[0].failed_folds == 0, "accuracy >= 0.95");

    const auto nf = nested_cv_fit(generate(default_benchmark()).dataset, Method::asmfs, Grids{}, CvPlan{}, PipelineOptions{}, jobs());
    double best_zero = -1.0;
    double best_positive = -1.0;
    for (const GridScore& g : nf.scores)
        (g.hyper.mu == 0.0 ? best_zero : best_positive) = std::max(g.hyper.mu == 0.0 ? best_zero : best_positive, g.mean_accuracy);
    out.detail << "noisy benchmark inner CV: best mu=0 " << best_zero << " vs best mu>0 " << best_positive << "; ";
    out.require(best_zero < best_positive, "mu=0 strictly below best mu>0");
}

// 8. SMO solutions: feasibility, KKT, primal-dual agreement, separable blobs.
void criterion8(Outcome& out) {
    std::mt19937_64 rng(1008);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst_kkt = 0.0;
    double worst_eq = 0.0;
    double worst_primal = 0.0;
    int fits = 0;
    auto check = [&](const Matrix& X, const Vector& y, double C) {
        const Matrix K = linear_kernel(X, X);
        SvmOptions opt;
        opt.C = C;
        const SvmSolution sol = svm_train(K, y, opt);
        ++fits;
        out.require(sol.alphas.minCoeff() >= 0.0 && sol.alphas.maxCoeff() <= C, "0 <= alpha <= C");
        worst_eq = std::max(worst_eq, std::abs(sol.alphas.dot(y)));
        worst_kkt = std::max(worst_kkt, svm_kkt_violation(K, y, sol.alphas, C));
        const Vector w = X * sol.alphas.cwiseProduct(y);
        const Matrix probe = random_matrix(X.rows(), 10, rng);
        const Vector dual = linear_kernel(X, probe).transpose() * sol.alphas.cwiseProduct(y);
        const Vector primal = probe.transpose() * w;
        worst_primal = std::max(worst_primal, (dual - primal).cwiseAbs().maxCoeff() / (1.0 + primal.cwiseAbs().maxCoeff()));
        return sol;
    };
    for (int t = 0; t < 30; ++t) {
        const Index n = 20 + static_cast<Index>(rng() % 60);
        Vector y(n);
        for (Index j = 0; j < n; ++j) y(j) = j % 2 ? 1.0 : -1.0;
        check(random_matrix(3 + static_cast<Index>(rng() % 10), n, rng), y, 0.1 + 0.2 * t);
    }
    int blobs_ok = 0;
    for (int t = 0; t < 10; ++t) {
        const Index n = 60;
        Matrix X(2, n);
        Vector y(n);
        for (Index j = 0; j < n; ++j) {
            y(j) = j % 2 ? 1.0 : -1.0;
            X(0, j) = y(j) * (1.0 + std::abs(normal(rng)));  // gap of 2 along the first axis
            X(1, j) = 3.0 * normal(rng);
        }
        const SvmSolution sol = check(X, y, 1.0);
        const Vector f = linear_kernel(X, X) * sol.alphas.cwiseProduct(y) + Vector::Constant(n, sol.bias);
        blobs_ok += (sign_labels(f).array() == y.array()).all();
    }
    out.detail << fits << " fits: max |sum a y| = " << worst_eq << ", max KKT violation = " << worst_kkt
               << ", max primal-dual gap = " << worst_primal << ", blobs perfect " << blobs_ok << "/10; ";
    out.require(worst_eq <= 1e-6, "|sum alpha y| <= 1e-6");
    out.require(worst_kkt <= 1e-5, "KKT violation <= 1e-5");
    out.require(worst_primal <= 1e-8, "primal-dual agreement within 1e-8");
    out.require(blobs_ok == 10, "100% training accuracy on separable blobs");
}

// 9. Metric identities.
void criterion9(Outcome& out) {
    Vector truth(7);
    Vector pred(7);
    truth << 1, 1, 1, -1, -1, -1, -1;
    pred << 1, 1, -1, -1, -1, -1, 1;
    const FoldMetrics m = compute_metrics(truth, pred, pred);
    out.require(m.tp == 2 && m.tn == 3 && m.fp == 1 && m.fn == 1, "confusion counts");
    out.require(m.accuracy == 5.0 / 7.0 && m.sensitivity == 2.0 / 3.0 && m.specificity == 3.0 / 4.0 && m.f1 == 2.0 / 3.0,
                "ACC 5/7, SEN 2/3, SPE 3/4, F1 2/3 exactly");
    Vector y(4);
    Vector s(4);
    y << 1, 1, -1, -1;
    s << 3, 2, 1, 0;
    const FoldMetrics perfect = compute_metrics(y, y, s);
    out.require(perfect.auc == 1.0 && perfect.accuracy == 1.0 && perfect.f1 == 1.0, "perfect ranking gives AUC 1");
    std::mt19937_64 rng(1009);
    std::normal_distribution<double> normal;
    int checked = 0;
    for (int t = 0; t < 100; ++t) {
        Vector labels(40);
        Vector scores(40);
        for (Index i = 0; i < 40; ++i) {
            labels(i) = i % 2 ? 1.0 : -1.0;
            scores(i) = std::round(4.0 * normal(rng)) / 4.0 + 0.3 * labels(i);
        }
        const auto base = auc_score(labels, scores);
        out.require(auc_score(labels, scores.array().exp().matrix()) == base, "AUC invariant under exp");
        out.require(auc_score(labels, (3.0 * scores.array() + 1.0).matrix()) == base, "AUC invariant under affine map");
        out.require(auc_score(labels, scores.array().cube().matrix()) == base, "AUC invariant under cube");
        ++checked;
    }
    out.detail << "hand cases exact, " << checked << " monotone-transform checks; ";
}

struct CliRun {
    int code;
    std::string report;
};

CliRun run_evaluate(const fs::path& data, const fs::path& out, int jobs_flag) {
    const std::string cmd = std::string("\"") + ASMFS_CLI_PATH + "\" evaluate --modality \"" + (data / "mod0.csv").string() +
                            "\" --modality \"" + (data / "mod1.csv").string() + "\" --labels \"" +
                            (data / "labels.csv").string() + "\" --config \"" + (data / "evaluate.json").string() +
                            "\" --out \"" + out.string() + "\" --jobs " + std::to_string(jobs_flag) + " > /dev/null";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out / "report.json")};
}

// 10. Same config, same bytes, for any --jobs.
void criterion10(Outcome& out) {
    const fs::path dir = temp_dir("acceptance_determinism");
    const std::string synth = std::string("\"") + ASMFS_CLI_PATH + "\" synth --out \"" + dir.string() + "\" --seed 0 > /dev/null";
    out.require(std::system(synth.c_str()) == 0, "synth succeeds");
    write_file(dir / "evaluate.json", R"({
  "methods": ["svm", "lasso_mksvm", "fixed_similarity", "asmfs"],
  "folds": 5, "repeats": 2, "inner_folds": 3, "seed": 11,
  "grid_lambda": [5, 60], "grid_mu": [0, 10], "grid_k": [3, 7]
})");
    const fs::path run_dir = dir / "run";
    std::vector<std::string> reports;
    for (int j : {1, 4, 1, 4}) {
        const CliRun r = run_evaluate(dir, run_dir, j);
        out.require(r.code == 0 && !r.report.empty(), "evaluate succeeds");
        reports.push_back(r.report);
    }
    bool identical = true;
    for (const auto& r : reports) identical = identical && r == reports.front();
    out.detail << "4 runs (jobs 1,4,1,4), report.json " << reports.front().size() << " bytes, identical=" << identical << "; ";
    out.require(identical, "bit-identical report.json");
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    setenv("ASMFS_LOG", "error", 0);  // keep the gate output to one line per criterion
    const std::vector<Criterion> all = {
        {1, "KKT-oracle equivalence", 1, criterion1},
        {2, "similarity structure", 1, criterion2},
        {3, "IRLS descent + certificate", 10, criterion3},
        {4, "gradient check", 5, criterion4},
        {5, "convergence within 30 outer iterations", 60, criterion5},
        {6, "feature recovery and ordering", 900, criterion6},
        {7, "end-to-end classification", 900, criterion7},
        {8, "SVM correctness", 5, criterion8},
        {9, "metric identities", 1, criterion9},
        {10, "determinism across --jobs", 1800, criterion10},
    };
    std::set<int> wanted;
    for (int a = 1; a < argc; ++a) wanted.insert(std::atoi(argv[a]));
    bool all_pass = true;
    for (const Criterion& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        Outcome out;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(out);
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail << "exception: " << e.what() << "; ";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.budget_s) {
            out.pass = false;
            out.detail << "[violated] runtime budget " << c.budget_s << " s; ";
        }
        std::printf("criterion %d (%s): %s  [%.2f s of %.0f s] %s\n", c.id, c.name, out.pass ? "PASS" : "FAIL", secs,
                    c.budget_s, out.detail.str().c_str());
        std::fflush(stdout);
        all_pass = all_pass && out.pass;
    }
    return all_pass ? 0 : 1;
}
