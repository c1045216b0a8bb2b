// asmfs command-line tool: synth, fit, evaluate, predict.
//
// Settings come from an optional JSON config (--config) with command-line
// flags taking precedence. Every JSON artifact embeds the resolved config and
// the tool version; CSV artifacts get a run.json sidecar in the output dir.
//
// Exit status: 0 success, 1 runtime/numeric failure, 2 usage/validation failure.

#include "asmfs/asmfs.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace asmfs;

namespace {

struct RunConfig {
    std::string command;

    std::vector<std::string> modalities;
    std::string labels;
    std::string model;
    std::string out = "asmfs_out";

    std::string method = "asmfs";
    std::vector<std::string> methods;  // evaluate; empty means {method}

    AsmfsConfig asmfs;
    CvPlan plan;
    Grids grids;
    PipelineOptions pipeline;
    bool tune = false;  // fit: nested CV over the grids instead of the given lambda/mu/K
    int jobs = 1;

    SyntheticSpec synth;
};

// Keys accepted in a config file; anything else is rejected.
const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "modalities", "labels", "model", "out", "method", "methods", "lambda", "mu", "k", "max_outer_iters",
        "inner_w_iters", "rel_tol", "irls_epsilon", "clamp_k", "folds", "repeats", "inner_folds", "stratified",
        "seed", "jobs", "C", "beta_search", "beta_folds", "eps_select", "top_t", "tune", "grid_lambda", "grid_mu",
        "grid_k", "n", "d", "M", "n_informative", "class_separation", "noise_sigma", "correlated_noise"};
    return keys;
}

template <typename T>
void take(const json& j, const char* key, T& target) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config key '") + key + "': " + e.what());
    }
}

void apply_config_file(const std::string& path, RunConfig& rc) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ValidationError("config '" + path + "' must be a JSON object");
    const auto& keys = known_keys();
    for (const auto& item : j.items())
        if (std::find(keys.begin(), keys.end(), item.key()) == keys.end())
            throw ValidationError("config '" + path + "': unknown key '" + item.key() + "'");
    take(j, "modalities", rc.modalities);
    take(j, "labels", rc.labels);
    take(j, "model", rc.model);
    take(j, "out", rc.out);
    take(j, "method", rc.method);
    take(j, "methods", rc.methods);
    take(j, "lambda", rc.asmfs.lambda);
    take(j, "mu", rc.asmfs.mu);
    take(j, "k", rc.asmfs.k);
    take(j, "max_outer_iters", rc.asmfs.max_outer_iters);
    take(j, "inner_w_iters", rc.asmfs.inner_w_iters);
    take(j, "rel_tol", rc.asmfs.rel_tol);
    take(j, "irls_epsilon", rc.asmfs.irls_epsilon);
    take(j, "clamp_k", rc.asmfs.clamp_k);
    take(j, "folds", rc.plan.folds);
    take(j, "repeats", rc.plan.repeats);
    take(j, "inner_folds", rc.plan.inner_folds);
    take(j, "stratified", rc.plan.stratified);
    take(j, "seed", rc.plan.seed);
    take(j, "jobs", rc.jobs);
    take(j, "C", rc.pipeline.C);
    take(j, "beta_search", rc.pipeline.beta_search);
    take(j, "beta_folds", rc.pipeline.beta_folds);
    take(j, "eps_select", rc.pipeline.eps_select);
    take(j, "top_t", rc.pipeline.top_t);
    take(j, "tune", rc.tune);
    take(j, "grid_lambda", rc.grids.lambda);
    take(j, "grid_mu", rc.grids.mu);
    take(j, "grid_k", rc.grids.k);
    take(j, "n", rc.synth.n);
    take(j, "d", rc.synth.d);
    take(j, "M", rc.synth.M);
    take(j, "n_informative", rc.synth.n_informative);
    take(j, "class_separation", rc.synth.class_separation);
    take(j, "noise_sigma", rc.synth.noise_sigma);
    take(j, "correlated_noise", rc.synth.correlated_noise);
}

// Flag values; set only when given on the command line.
struct Flags {
    std::optional<std::string> config;
    std::vector<std::string> modalities;
    std::optional<std::string> labels, model, out, method;
    std::vector<std::string> methods;
    std::optional<double> lambda, mu;
    std::optional<int> k, max_outer_iters, inner_w_iters;
    std::optional<int> folds, repeats, inner_folds;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs, top_t;
    std::optional<double> C;
    bool tune = false;
    bool no_beta_search = false;
    std::vector<double> grid_lambda, grid_mu;
    std::vector<int> grid_k;
    std::optional<int> n, d, M, n_informative;
    std::optional<double> class_separation, noise_sigma;
    bool correlated_noise = false;
};

template <typename T>
void override_with(const std::optional<T>& flag, T& target) {
    if (flag) target = *flag;
}

RunConfig resolve(const std::string& command, const Flags& f) {
    RunConfig rc;
    rc.command = command;
    if (f.config) apply_config_file(*f.config, rc);
    if (!f.modalities.empty()) rc.modalities = f.modalities;
    override_with(f.labels, rc.labels);
    override_with(f.model, rc.model);
    override_with(f.out, rc.out);
    override_with(f.method, rc.method);
    if (!f.methods.empty()) rc.methods = f.methods;
    override_with(f.lambda, rc.asmfs.lambda);
    override_with(f.mu, rc.asmfs.mu);
    override_with(f.k, rc.asmfs.k);
    override_with(f.max_outer_iters, rc.asmfs.max_outer_iters);
    override_with(f.inner_w_iters, rc.asmfs.inner_w_iters);
    override_with(f.folds, rc.plan.folds);
    override_with(f.repeats, rc.plan.repeats);
    override_with(f.inner_folds, rc.plan.inner_folds);
    override_with(f.seed, rc.plan.seed);
    override_with(f.jobs, rc.jobs);
    override_with(f.top_t, rc.pipeline.top_t);
    override_with(f.C, rc.pipeline.C);
    if (f.tune) rc.tune = true;
    if (f.no_beta_search) rc.pipeline.beta_search = false;
    if (!f.grid_lambda.empty()) rc.grids.lambda = f.grid_lambda;
    if (!f.grid_mu.empty()) rc.grids.mu = f.grid_mu;
    if (!f.grid_k.empty()) rc.grids.k = f.grid_k;
    override_with(f.n, rc.synth.n);
    override_with(f.d, rc.synth.d);
    override_with(f.M, rc.synth.M);
    override_with(f.n_informative, rc.synth.n_informative);
    override_with(f.class_separation, rc.synth.class_separation);
    override_with(f.noise_sigma, rc.synth.noise_sigma);
    if (f.correlated_noise) rc.synth.correlated_noise = true;

    rc.synth.seed = rc.plan.seed;
    rc.pipeline.seed = rc.plan.seed;
    rc.pipeline.base = rc.asmfs;
    if (rc.methods.empty()) rc.methods = {rc.method};

    auto absolute = [](std::string& p) {
        if (!p.empty()) p = fs::absolute(p).lexically_normal().string();
    };
    for (auto& p : rc.modalities) absolute(p);
    absolute(rc.labels);
    absolute(rc.model);
    absolute(rc.out);

    // validation, before any work or file output
    if (rc.jobs < 1) throw ValidationError("--jobs must be >= 1");
    rc.asmfs.validate();
    rc.plan.validate();
    parse_method(rc.method);
    for (const auto& m : rc.methods) parse_method(m);
    if (rc.grids.lambda.empty() || rc.grids.mu.empty() || rc.grids.k.empty())
        throw ValidationError("hyperparameter grids must be non-empty");
    for (double v : rc.grids.lambda)
        if (!(v >= 0.0)) throw ValidationError("grid_lambda entries must be >= 0");
    for (double v : rc.grids.mu)
        if (!(v >= 0.0)) throw ValidationError("grid_mu entries must be >= 0");
    for (int v : rc.grids.k)
        if (v < 1) throw ValidationError("grid_k entries must be >= 1");
    if (!(rc.pipeline.C > 0.0)) throw ValidationError("C must be > 0");
    if (rc.pipeline.beta_folds < 2) throw ValidationError("beta_folds must be >= 2");
    if (rc.pipeline.top_t < 0) throw ValidationError("top_t must be >= 0");
    if (command == "synth") rc.synth.validate();
    if (command == "fit" || command == "evaluate") {
        if (rc.modalities.empty()) throw ValidationError(command + " needs at least one --modality file");
        if (rc.labels.empty()) throw ValidationError(command + " needs --labels");
    }
    if (command == "predict") {
        if (rc.modalities.empty()) throw ValidationError("predict needs at least one --modality file");
        if (rc.model.empty()) throw ValidationError("predict needs --model");
    }
    return rc;
}

// The echoed config. jobs is left out: it changes scheduling, never results,
// and outputs must not depend on it.
json to_json(const RunConfig& rc) {
    json j = {{"command", rc.command}, {"out", rc.out}};
    if (rc.command == "synth") {
        j["synthetic"] = asmfs::to_json(rc.synth);
        return j;
    }
    j["modalities"] = rc.modalities;
    if (rc.command == "predict") {
        j["model"] = rc.model;
        return j;
    }
    j["labels"] = rc.labels;
    j["asmfs"] = asmfs::to_json(rc.asmfs);
    j["pipeline"] = asmfs::to_json(rc.pipeline);
    j["seed"] = rc.plan.seed;
    if (rc.command == "fit") {
        j["method"] = rc.method;
        j["tune"] = rc.tune;
    } else {
        j["methods"] = rc.methods;
    }
    if (rc.command == "evaluate" || rc.tune) {
        j["plan"] = asmfs::to_json(rc.plan);
        j["grids"] = {{"lambda", rc.grids.lambda}, {"mu", rc.grids.mu}, {"k", rc.grids.k}};
    }
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json envelope(const RunConfig& rc) { return {{"version", version_string}, {"config", to_json(rc)}}; }

void prepare_out(const RunConfig& rc) {
    std::error_code ec;
    fs::create_directories(rc.out, ec);
    if (ec) throw Error("cannot create output directory '" + rc.out + "': " + ec.message());
    write_json(fs::path(rc.out) / "run.json", envelope(rc));
}

int cmd_synth(const RunConfig& rc) {
    const SyntheticData synth = generate(rc.synth);
    prepare_out(rc);
    const SyntheticFiles files = save_synthetic(synth, rc.out, envelope(rc));
    for (const auto& p : files.modalities) std::cout << p << '\n';
    std::cout << files.labels << '\n' << files.ground_truth << '\n';
    return 0;
}

std::string format_number(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

int cmd_fit(const RunConfig& rc) {
    const MultiModalDataset data = load_dataset(rc.modalities, rc.labels);
    if (!data.has_both_classes()) throw ValidationError("training data must contain both classes");
    const Method method = parse_method(rc.method);
    Hyperparameters hyper{rc.asmfs.lambda, rc.asmfs.mu, rc.asmfs.k};
    PipelineFit pipeline;
    std::vector<GridScore> scores;
    if (rc.tune) {
        NestedFit nested = nested_cv_fit(data, method, rc.grids, rc.plan, rc.pipeline, rc.jobs);
        hyper = nested.best;
        scores = std::move(nested.scores);
        pipeline = std::move(nested.pipeline);
    } else {
        pipeline = fit_pipeline(data, method, hyper, rc.pipeline);
    }
    const Prediction train_pred = predict(pipeline.model, data);
    const double train_acc =
        static_cast<double>((train_pred.labels.array() == data.labels.array()).count()) / static_cast<double>(data.num_subjects());

    prepare_out(rc);
    json model = envelope(rc);
    model["model"] = asmfs::to_json(pipeline.model);
    write_json(fs::path(rc.out) / "model.json", model);

    json fit = envelope(rc);
    fit["method"] = rc.method;
    fit["hyperparameters"] = asmfs::to_json(hyper, method);
    fit["training_accuracy"] = train_acc;
    if (pipeline.fit) fit["fit"] = asmfs::to_json(*pipeline.fit, pipeline.fit_config);
    if (pipeline.coefficients.size() > 0) fit["coefficients"] = matrix_to_json(pipeline.coefficients);
    if (!scores.empty()) {
        json grid = json::array();
        for (const GridScore& g : scores) {
            json e = asmfs::to_json(g.hyper, method);
            e["mean_accuracy"] = g.mean_accuracy;
            grid.push_back(std::move(e));
        }
        fit["grid_scores"] = std::move(grid);
    }
    write_json(fs::path(rc.out) / "fit.json", fit);

    std::ostringstream s;
    s << version_string << "\n";
    s << "method: " << rc.method << "\n";
    s << "lambda: " << (uses_lambda(method) ? format_number(hyper.lambda) : std::string("inactive")) << "\n";
    s << "mu: " << (uses_mu(method) ? format_number(hyper.mu) : std::string("inactive")) << "\n";
    s << "K: " << (uses_k(method) ? std::to_string(hyper.k) : std::string("inactive")) << "\n";
    s << "subjects: " << data.num_subjects() << ", features: " << data.num_features()
      << ", modalities: " << data.num_modalities() << "\n";
    s << "training accuracy: " << format_number(train_acc) << "\n";
    s << "kernel weights:";
    for (Index m = 0; m < pipeline.model.betas.size(); ++m) s << ' ' << format_number(pipeline.model.betas(m));
    s << "\n";
    if (pipeline.fit) {
        s << "converged: " << (pipeline.fit->converged ? "yes" : "no") << " after " << pipeline.fit->iterations
          << " iterations\n";
        s << "objective history:\n";
        for (std::size_t t = 0; t < pipeline.fit->objective_history.size(); ++t)
            s << "  " << (t + 1) << "  " << csv::format_double(pipeline.fit->objective_history[t]) << "\n";
    }
    if (pipeline.coefficients.size() > 0) {
        const bool joint = method == Method::mtfs || method == Method::asmfs || method == Method::fixed_similarity;
        const auto ranking =
            select_features(pipeline.coefficients, joint ? RankingRule::joint : RankingRule::per_modality,
                            rc.pipeline.eps_select, rc.pipeline.top_t);
        const std::size_t shown = joint ? 1 : ranking.size();
        for (std::size_t m = 0; m < shown; ++m) {
            s << "selected features" << (joint ? " (joint)" : " (" + data.modality_names[m] + ")") << ": "
              << ranking[m].selected.size() << "\n";
            for (Index f : ranking[m].ranking) {
                const double score = ranking[m].scores[static_cast<std::size_t>(f)];
                if (std::find(ranking[m].selected.begin(), ranking[m].selected.end(), f) == ranking[m].selected.end())
                    continue;
                s << "  " << data.feature_names[static_cast<std::size_t>(f)] << "  " << csv::format_double(score) << "\n";
            }
        }
    }
    s << "resolved config:\n" << to_json(rc).dump(2) << "\n";
    write_text(fs::path(rc.out) / "summary.txt", s.str());
    std::cout << s.str().substr(0, s.str().find("objective history")) << std::flush;
    return 0;
}

int cmd_evaluate(const RunConfig& rc) {
    const MultiModalDataset data = load_dataset(rc.modalities, rc.labels);
    std::vector<Method> methods;
    for (const auto& m : rc.methods) methods.push_back(parse_method(m));
    const auto reports = run_benchmark(data, methods, rc.grids, rc.plan, rc.pipeline, rc.jobs);

    prepare_out(rc);
    json doc = envelope(rc);
    json list = json::array();
    for (const auto& r : reports) list.push_back(asmfs::to_json(r));
    doc["reports"] = std::move(list);
    write_json(fs::path(rc.out) / "report.json", doc);

    const std::string table = format_table(reports);
    write_text(fs::path(rc.out) / "report.txt", std::string(version_string) + "\n" + table);
    for (const auto& r : reports) write_roc_csv(r.roc, (fs::path(rc.out) / ("roc_" + r.method + ".csv")).string());
    std::cout << table;
    for (const auto& r : reports)
        if (r.failed_folds > 0) std::cerr << r.method << ": " << r.failed_folds << " fold(s) failed, see report.json\n";
    return 0;
}

int cmd_predict(const RunConfig& rc) {
    std::ifstream in(rc.model);
    if (!in) throw ValidationError("cannot open model '" + rc.model + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("model '" + rc.model + "' is not valid JSON: " + e.what());
    }
    if (!doc.contains("model")) throw ValidationError("model '" + rc.model + "' has no \"model\" entry");
    const TrainedClassifier model = classifier_from_json(doc.at("model"));
    const MultiModalDataset subjects = load_modalities(rc.modalities);
    const Prediction p = predict(model, subjects);

    prepare_out(rc);
    std::ostringstream s;
    s << "subject,decision,label\n";
    for (Index j = 0; j < p.decision_values.size(); ++j)
        s << j << ',' << csv::format_double(p.decision_values(j)) << ',' << (p.labels(j) > 0 ? 1 : -1) << '\n';
    const fs::path path = fs::path(rc.out) / "predictions.csv";
    write_text(path, s.str());
    std::cout << path.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive-similarity multi-modality feature selection"};
    app.set_version_flag("--version", version_string);
    app.require_subcommand(1);

    Flags f;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", f.config, "JSON config file; flags override its values");
        sub->add_option("--out", f.out, "Output directory");
        sub->add_option("--seed", f.seed, "Top-level random seed");
    };
    auto add_data = [&](CLI::App* sub, bool labels) {
        sub->add_option("--modality", f.modalities, "Modality CSV (repeat once per modality, in order)");
        if (labels) sub->add_option("--labels", f.labels, "Labels CSV");
    };
    auto add_model_options = [&](CLI::App* sub) {
        sub->add_option("--lambda", f.lambda, "Similarity-term weight");
        sub->add_option("--mu", f.mu, "L2,1 sparsity weight");
        sub->add_option("--k", f.k, "Neighbor count K");
        sub->add_option("--max-outer-iters", f.max_outer_iters, "Outer iteration limit");
        sub->add_option("--inner-w-iters", f.inner_w_iters, "IRLS rounds per outer iteration");
        sub->add_option("--C", f.C, "SVM box constraint");
        sub->add_option("--top-t", f.top_t, "Keep the t best features (0 = threshold rule)");
        sub->add_flag("--no-beta-search", f.no_beta_search, "Use uniform kernel weights");
        sub->add_option("--jobs", f.jobs, "Concurrent folds / grid points");
        sub->add_option("--folds", f.folds, "Outer CV folds");
        sub->add_option("--repeats", f.repeats, "CV repeats");
        sub->add_option("--inner-folds", f.inner_folds, "Inner CV folds (hyperparameters, kernel weights)");
        sub->add_option("--grid-lambda", f.grid_lambda, "lambda search grid");
        sub->add_option("--grid-mu", f.grid_mu, "mu search grid");
        sub->add_option("--grid-k", f.grid_k, "K search grid");
    };

    CLI::App* synth = app.add_subcommand("synth", "Write a seeded synthetic dataset");
    add_common(synth);
    synth->add_option("--n", f.n, "Subjects");
    synth->add_option("--d", f.d, "Features per modality");
    synth->add_option("--M", f.M, "Modalities");
    synth->add_option("--n-informative", f.n_informative, "Planted informative features");
    synth->add_option("--separation", f.class_separation, "Distance between class means");
    synth->add_option("--noise", f.noise_sigma, "Noise standard deviation");
    synth->add_flag("--correlated-noise", f.correlated_noise, "Share half the noise across modalities");

    CLI::App* fit = app.add_subcommand("fit", "Fit a pipeline on the whole dataset");
    add_common(fit);
    add_data(fit, true);
    add_model_options(fit);
    fit->add_option("--method", f.method, "svm, lasso_svm, mksvm, lasso_mksvm, mtfs, fixed_similarity, asmfs");
    fit->add_flag("--tune", f.tune, "Pick lambda/mu/K by nested CV over the grids");

    CLI::App* evaluate = app.add_subcommand("evaluate", "Cross-validated benchmark");
    add_common(evaluate);
    add_data(evaluate, true);
    add_model_options(evaluate);
    evaluate->add_option("--method", f.methods, "Method(s) to benchmark; repeat for several");

    CLI::App* predict_cmd = app.add_subcommand("predict", "Apply a fitted model");
    add_common(predict_cmd);
    add_data(predict_cmd, false);
    predict_cmd->add_option("--model", f.model, "model.json written by fit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const std::string command = app.get_subcommands().front()->get_name();
        const RunConfig rc = resolve(command, f);
        if (command == "synth") return cmd_synth(rc);
        if (command == "fit") return cmd_fit(rc);
        if (command == "evaluate") return cmd_evaluate(rc);
        return cmd_predict(rc);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
