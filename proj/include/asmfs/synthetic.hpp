#ifndef ASMFS_SYNTHETIC_HPP
#define ASMFS_SYNTHETIC_HPP

// Seeded multi-modal data with planted informative features, plus brute-force
// oracles used by the test suites. The oracles deliberately share no code with
// the solvers they check.

#include "asmfs/common.hpp"
#include "asmfs/data_model.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

namespace asmfs {

struct SyntheticSpec {
    int n = 200;
    int d = 93;
    int M = 2;
    int n_informative = 10;
    double class_separation = 1.0;
    double noise_sigma = 1.0;
    bool correlated_noise = false;
    std::uint64_t seed = 0;

    void validate() const {
        if (n < 4) throw ValidationError("synthetic n must be >= 4");
        if (d < 1) throw ValidationError("synthetic d must be >= 1");
        if (M < 1) throw ValidationError("synthetic M must be >= 1");
        if (n_informative < 1 || n_informative > d)
            throw ValidationError("synthetic n_informative must be in [1, d]; got " + std::to_string(n_informative) +
                                  " with d=" + std::to_string(d));
        if (!(class_separation >= 0.0) || !std::isfinite(class_separation))
            throw ValidationError("synthetic class_separation must be finite and >= 0");
        if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
            throw ValidationError("synthetic noise_sigma must be finite and >= 0");
    }
};

struct SyntheticData {
    MultiModalDataset dataset;
    std::vector<Index> informative;  // sorted ascending
};

/// Informative features: class-conditional Gaussians with means +-separation/2.
/// Other features: pure noise. Modalities share the informative set but draw
/// independent noise; with correlated_noise half the noise variance is a
/// component shared by all modalities.
inline SyntheticData generate(const SyntheticSpec& spec) {
    spec.validate();
    SyntheticData out;
    MultiModalDataset& data = out.dataset;

    Rng label_rng(derive_seed(spec.seed, {1}));
    std::vector<double> labels(static_cast<std::size_t>(spec.n));
    const int n_pos = spec.n / 2;
    for (int j = 0; j < spec.n; ++j) labels[static_cast<std::size_t>(j)] = j < n_pos ? 1.0 : -1.0;
    std::shuffle(labels.begin(), labels.end(), label_rng);
    data.labels = Eigen::Map<Vector>(labels.data(), spec.n);

    Rng feature_rng(derive_seed(spec.seed, {2}));
    std::vector<Index> perm(static_cast<std::size_t>(spec.d));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), feature_rng);
    out.informative.assign(perm.begin(), perm.begin() + spec.n_informative);
    std::sort(out.informative.begin(), out.informative.end());
    std::vector<char> is_informative(static_cast<std::size_t>(spec.d), 0);
    for (Index i : out.informative) is_informative[static_cast<std::size_t>(i)] = 1;

    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix shared = Matrix::Zero(spec.d, spec.n);
    if (spec.correlated_noise) {
        Rng shared_rng(derive_seed(spec.seed, {3}));
        for (int j = 0; j < spec.n; ++j)
            for (int i = 0; i < spec.d; ++i) shared(i, j) = normal(shared_rng);
    }
    const double own_scale = spec.correlated_noise ? std::sqrt(0.5) : 1.0;
    const double shared_scale = spec.correlated_noise ? std::sqrt(0.5) : 0.0;

    for (int m = 0; m < spec.M; ++m) {
        Rng noise_rng(derive_seed(spec.seed, {4, static_cast<std::uint64_t>(m)}));
        Matrix x(spec.d, spec.n);
        for (int j = 0; j < spec.n; ++j) {
            for (int i = 0; i < spec.d; ++i) {
                const double noise = own_scale * normal(noise_rng) + shared_scale * shared(i, j);
                const double mean = is_informative[static_cast<std::size_t>(i)] ? 0.5 * spec.class_separation * labels[static_cast<std::size_t>(j)] : 0.0;
                x(i, j) = mean + spec.noise_sigma * noise;
            }
        }
        data.modalities.push_back(std::move(x));
        data.modality_names.push_back("mod" + std::to_string(m));
    }
    for (int i = 0; i < spec.d; ++i) data.feature_names.push_back("f" + std::to_string(i));
    data.validate();
    return out;
}

inline nlohmann::json to_json(const SyntheticSpec& spec) {
    return {{"n", spec.n},
            {"d", spec.d},
            {"M", spec.M},
            {"n_informative", spec.n_informative},
            {"class_separation", spec.class_separation},
            {"noise_sigma", spec.noise_sigma},
            {"correlated_noise", spec.correlated_noise},
            {"seed", spec.seed}};
}

/// Paths written by save_synthetic, in order: modality CSVs, labels CSV, ground-truth JSON.
struct SyntheticFiles {
    std::vector<std::string> modalities;
    std::string labels;
    std::string ground_truth;
};

inline SyntheticFiles save_synthetic(const SyntheticData& synth, const std::string& dir,
                                     const nlohmann::json& extra = nlohmann::json::object()) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    SyntheticFiles files;
    for (const auto& name : synth.dataset.modality_names) files.modalities.push_back((fs::path(dir) / (name + ".csv")).string());
    files.labels = (fs::path(dir) / "labels.csv").string();
    files.ground_truth = (fs::path(dir) / "ground_truth.json").string();
    save_dataset(synth.dataset, files.modalities, files.labels);
    nlohmann::json truth = extra;
    truth["informative_features"] = synth.informative;
    std::ofstream out(files.ground_truth);
    if (!out) throw Error("cannot write '" + files.ground_truth + "'");
    out << truth.dump(2) << '\n';
    return files;
}

// ---------------------------------------------------------------------------
// Oracles.

/// Exact Euclidean projection of -d/(2 gamma) onto the probability simplex,
/// by sorting (Held-Wolfe-Crowder / Duchi et al.).
inline std::vector<double> oracle_simplex_qp(const std::vector<double>& d_vec, double gamma) {
    if (!(gamma > 0.0)) throw ValidationError("oracle_simplex_qp needs gamma > 0");
    const std::size_t p = d_vec.size();
    std::vector<double> v(p);
    for (std::size_t k = 0; k < p; ++k) v[k] = -d_vec[k] / (2.0 * gamma);
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double running = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        running += u[j];
        const double t = (running - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    std::vector<double> s(p);
    for (std::size_t k = 0; k < p; ++k) s[k] = std::max(v[k] - theta, 0.0);
    return s;
}

/// sum_{i,k} S_ik (z_i - z_k)^2 by direct double loop.
inline double oracle_quadratic_form(const Matrix& S, const Vector& z) {
    double total = 0.0;
    for (Index i = 0; i < S.rows(); ++i)
        for (Index k = 0; k < S.cols(); ++k) {
            const double diff = z(i) - z(k);
            total += S(i, k) * diff * diff;
        }
    return total;
}

}  // namespace asmfs

#endif  // ASMFS_SYNTHETIC_HPP
