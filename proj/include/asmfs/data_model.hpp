#ifndef ASMFS_DATA_MODEL_HPP
#define ASMFS_DATA_MODEL_HPP

#include "asmfs/common.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace asmfs {

/// M aligned modalities over the same n subjects and d features.
/// Modality m is stored d x n: column j is subject j's feature vector.
struct MultiModalDataset {
    std::vector<Matrix> modalities;
    Vector labels;  // entries in {+1, -1}
    std::vector<std::string> modality_names;
    std::vector<std::string> feature_names;

    Index num_modalities() const { return static_cast<Index>(modalities.size()); }
    Index num_features() const { return modalities.empty() ? 0 : modalities.front().rows(); }
    Index num_subjects() const { return labels.size(); }

    Index count_label(double label) const { return (labels.array() == label).count(); }
    bool has_both_classes() const { return count_label(1.0) > 0 && count_label(-1.0) > 0; }

    /// Restricts to the given subject indices, in the given order.
    MultiModalDataset subset(const std::vector<Index>& subjects) const {
        MultiModalDataset out;
        out.modality_names = modality_names;
        out.feature_names = feature_names;
        out.labels.resize(static_cast<Index>(subjects.size()));
        for (const Matrix& x : modalities) {
            Matrix sub(x.rows(), static_cast<Index>(subjects.size()));
            for (std::size_t j = 0; j < subjects.size(); ++j) sub.col(static_cast<Index>(j)) = x.col(subjects[j]);
            out.modalities.push_back(std::move(sub));
        }
        for (std::size_t j = 0; j < subjects.size(); ++j) out.labels(static_cast<Index>(j)) = labels(subjects[j]);
        return out;
    }

    /// Throws ValidationError if any structural invariant is broken.
    void validate() const {
        if (modalities.empty()) throw ValidationError("dataset has no modalities");
        const Index d = modalities.front().rows();
        const Index n = modalities.front().cols();
        if (d < 1) throw ValidationError("dataset has no features");
        if (n < 2) throw ValidationError("dataset needs at least 2 subjects, got " + std::to_string(n));
        for (std::size_t m = 0; m < modalities.size(); ++m) {
            const Matrix& x = modalities[m];
            if (x.rows() != d || x.cols() != n)
                throw ValidationError("modality " + std::to_string(m) + " is " + std::to_string(x.rows()) + "x" +
                                      std::to_string(x.cols()) + ", expected " + std::to_string(d) + "x" +
                                      std::to_string(n));
            for (Index j = 0; j < n; ++j)
                for (Index i = 0; i < d; ++i)
                    if (!std::isfinite(x(i, j)))
                        throw ValidationError("modality " + std::to_string(m) + " has a non-finite value at subject " +
                                              std::to_string(j) + ", feature " + std::to_string(i));
        }
        if (labels.size() != n)
            throw ValidationError("labels length " + std::to_string(labels.size()) + " does not match " +
                                  std::to_string(n) + " subjects");
        for (Index j = 0; j < n; ++j)
            if (labels(j) != 1.0 && labels(j) != -1.0)
                throw ValidationError("label at subject " + std::to_string(j) + " is not +1 or -1");
        if (!modality_names.empty() && modality_names.size() != modalities.size())
            throw ValidationError("modality_names length does not match modality count");
        if (!feature_names.empty() && static_cast<Index>(feature_names.size()) != d)
            throw ValidationError("feature_names length does not match feature count");
    }
};

/// Per-modality feature means and standard deviations of a training split.
struct NormalizationStats {
    std::vector<Vector> mean;
    std::vector<Vector> stddev;
};

inline NormalizationStats zscore_fit(const MultiModalDataset& train) {
    if (train.num_subjects() < 2) throw ValidationError("zscore_fit needs at least 2 subjects");
    NormalizationStats stats;
    const double n = static_cast<double>(train.num_subjects());
    for (const Matrix& x : train.modalities) {
        Vector mean = x.rowwise().sum() / n;
        Vector sd = ((x.colwise() - mean).array().square().rowwise().sum() / n).sqrt().matrix();
        // Constant features: centering zeroes them, dividing by 1 keeps them at 0.
        // Checked exactly, since the summed mean can be one ulp off the constant.
        for (Index i = 0; i < sd.size(); ++i)
            if (x.cols() > 0 && x.row(i).maxCoeff() == x.row(i).minCoeff()) {
                mean(i) = x(i, 0);
                sd(i) = 1.0;
            } else if (!(sd(i) > 0.0)) {
                sd(i) = 1.0;
            }
        stats.mean.push_back(std::move(mean));
        stats.stddev.push_back(std::move(sd));
    }
    return stats;
}

inline MultiModalDataset zscore_apply(const MultiModalDataset& data, const NormalizationStats& stats) {
    if (stats.mean.size() != data.modalities.size())
        throw ValidationError("normalization stats cover " + std::to_string(stats.mean.size()) +
                              " modalities, dataset has " + std::to_string(data.modalities.size()));
    MultiModalDataset out = data;
    for (std::size_t m = 0; m < data.modalities.size(); ++m) {
        if (stats.mean[m].size() != data.modalities[m].rows())
            throw ValidationError("normalization stats have " + std::to_string(stats.mean[m].size()) +
                                  " features, modality has " + std::to_string(data.modalities[m].rows()));
        out.modalities[m] = (data.modalities[m].colwise() - stats.mean[m]).array().colwise() / stats.stddev[m].array();
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV I/O. Modality files are n rows x d columns with a header of feature
// names; the labels file is a single "label" column.

namespace csv {

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    Table table;
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line);
        if (!have_header) {
            if (!fields.empty() && fields[0].size() >= 3 && static_cast<unsigned char>(fields[0][0]) == 0xEF)
                fields[0] = fields[0].substr(3);  // UTF-8 BOM
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw ValidationError("'" + path + "' line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, header has " +
                                  std::to_string(table.header.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string& f = fields[c];
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(f.c_str(), &end);
            if (f.empty() || end != f.c_str() + f.size())
                throw ValidationError("'" + path + "' row " + std::to_string(table.rows.size() + 1) + ", column " +
                                      std::to_string(c + 1) + ": cannot parse '" + f + "' as a number");
            if (!std::isfinite(v))
                throw ValidationError("'" + path + "' row " + std::to_string(table.rows.size() + 1) + ", column " +
                                      std::to_string(c + 1) + ": non-finite value '" + f + "'");
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw ValidationError("'" + path + "' is empty (missing header row)");
    return table;
}

/// 17 significant digits round-trip any finite double.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += items[i];
    }
    return out;
}

}  // namespace csv

/// Reads modality CSVs only. Labels are left as zeros; n = 0 (header-only
/// files) is allowed, which is what prediction on an empty subject set needs.
inline MultiModalDataset load_modalities(const std::vector<std::string>& modality_paths) {
    if (modality_paths.empty()) throw ValidationError("at least one modality file is required");
    MultiModalDataset data;
    std::size_t n = 0;
    std::size_t d = 0;
    for (std::size_t m = 0; m < modality_paths.size(); ++m) {
        const csv::Table t = csv::read(modality_paths[m]);
        if (m == 0) {
            n = t.rows.size();
            d = t.header.size();
            data.feature_names = t.header;
        } else if (t.rows.size() != n || t.header.size() != d) {
            throw ValidationError("shape mismatch: '" + modality_paths[0] + "' is " + std::to_string(n) + "x" +
                                  std::to_string(d) + " but '" + modality_paths[m] + "' is " +
                                  std::to_string(t.rows.size()) + "x" + std::to_string(t.header.size()));
        }
        Matrix x(static_cast<Index>(d), static_cast<Index>(n));
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < d; ++i) x(static_cast<Index>(i), static_cast<Index>(j)) = t.rows[j][i];
        data.modalities.push_back(std::move(x));
        std::string name = modality_paths[m];
        const auto slash = name.find_last_of("/\\");
        if (slash != std::string::npos) name = name.substr(slash + 1);
        const auto dot = name.rfind('.');
        if (dot != std::string::npos && dot > 0) name = name.substr(0, dot);
        data.modality_names.push_back(name);
    }
    data.labels = Vector::Zero(static_cast<Index>(n));
    return data;
}

inline MultiModalDataset load_dataset(const std::vector<std::string>& modality_paths, const std::string& labels_path) {
    MultiModalDataset data = load_modalities(modality_paths);
    const std::size_t n = static_cast<std::size_t>(data.num_subjects());
    const csv::Table lt = csv::read(labels_path);
    if (lt.header.size() != 1) throw ValidationError("'" + labels_path + "' must have exactly one column");
    if (lt.rows.size() != n)
        throw ValidationError("shape mismatch: '" + labels_path + "' has " + std::to_string(lt.rows.size()) +
                              " labels but '" + modality_paths[0] + "' has " + std::to_string(n) + " subjects");
    bool saw_zero = false;
    bool saw_minus = false;
    data.labels.resize(static_cast<Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        const double v = lt.rows[j][0];
        if (v == 0.0) saw_zero = true;
        else if (v == -1.0) saw_minus = true;
        else if (v != 1.0)
            throw ValidationError("'" + labels_path + "' row " + std::to_string(j + 1) + ": label " +
                                  csv::format_double(v) + " is outside {+1,-1} / {1,0}");
        data.labels(static_cast<Index>(j)) = v == 0.0 ? -1.0 : v;
    }
    if (saw_zero && saw_minus)
        throw ValidationError("'" + labels_path + "' mixes 0 and -1 labels");
    data.validate();
    return data;
}

inline void save_modality_csv(const Matrix& x, const std::vector<std::string>& feature_names, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << csv::join(feature_names) << '\n';
    for (Index j = 0; j < x.cols(); ++j) {
        for (Index i = 0; i < x.rows(); ++i) {
            if (i) out << ',';
            out << csv::format_double(x(i, j));
        }
        out << '\n';
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

inline void save_labels_csv(const Vector& labels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "label\n";
    for (Index j = 0; j < labels.size(); ++j) out << (labels(j) > 0 ? "1" : "-1") << '\n';
    if (!out) throw Error("failed writing '" + path + "'");
}

inline void save_dataset(const MultiModalDataset& data, const std::vector<std::string>& modality_paths,
                         const std::string& labels_path) {
    if (modality_paths.size() != data.modalities.size())
        throw ValidationError("need one output path per modality");
    std::vector<std::string> names = data.feature_names;
    if (names.empty())
        for (Index i = 0; i < data.num_features(); ++i) names.push_back("f" + std::to_string(i));
    for (std::size_t m = 0; m < data.modalities.size(); ++m) save_modality_csv(data.modalities[m], names, modality_paths[m]);
    save_labels_csv(data.labels, labels_path);
}

}  // namespace asmfs

#endif  // ASMFS_DATA_MODEL_HPP
