#include "metazsl/zsleval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "metazsl/errors.hpp"
#include "metazsl/optim.hpp"

namespace metazsl {

double harmonic_mean(double s, double u) {
    if (s + u == 0.0) return 0.0;
    return 2.0 * s * u / (s + u);
}

SyntheticDataset synthesize_dataset(const ModelConfig& cfg, const ModelParams& params,
                                    const std::map<int, std::vector<double>>& attrs,
                                    int per_class, Rng& rng) {
    if (per_class < 1) throw ConfigError("synthesize_dataset: per_class must be positive");
    if (attrs.empty()) throw DataError("synthesize_dataset: no classes given");
    SyntheticDataset ds;
    ds.x = Matrix(static_cast<int>(attrs.size()) * per_class, cfg.feature_dim);
    int cursor = 0;
    for (const auto& [class_id, attr] : attrs) {
        const Matrix rows = synthesize(cfg, params, rng, attr, per_class);
        for (int i = 0; i < per_class; ++i, ++cursor) {
            std::copy(rows.row(i), rows.row(i) + cfg.feature_dim, ds.x.row(cursor));
            ds.labels.push_back(class_id);
        }
        ds.per_class_counts[class_id] = per_class;
    }
    return ds;
}

namespace {

int class_row(const SoftmaxClassifier& clf, int class_id) {
    for (std::size_t i = 0; i < clf.class_ids.size(); ++i)
        if (clf.class_ids[i] == class_id) return static_cast<int>(i);
    throw DataError("classifier has no row for class " + std::to_string(class_id));
}

}  // namespace

CrossEntropyResult softmax_cross_entropy(const SoftmaxClassifier& clf, const Matrix& x,
                                         const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != x.rows)
        throw ShapeError("softmax_cross_entropy: one label per row required");
    if (clf.weights.cols != x.cols)
        throw ShapeError("softmax_cross_entropy: feature width mismatch");
    const int n = x.rows;
    const int c = clf.weights.rows;
    Matrix scores = matmul_nt(x, clf.weights);
    add_row_inplace(scores, clf.bias);

    CrossEntropyResult res;
    Matrix dscores(n, c);
    const double inv_n = 1.0 / n;
    for (int i = 0; i < n; ++i) {
        double* row = scores.row(i);
        const double mx = *std::max_element(row, row + c);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
        const double log_z = mx + std::log(sum);
        const int y = class_row(clf, labels[i]);
        res.value += (log_z - row[y]) * inv_n;
        double* drow = dscores.row(i);
        for (int j = 0; j < c; ++j) drow[j] = std::exp(row[j] - log_z) * inv_n;
        drow[y] -= inv_n;
    }
    res.dweights = matmul_tn(dscores, x);
    res.dbias = col_sums(dscores);
    return res;
}

SoftmaxClassifier train_softmax(const SyntheticDataset& dataset, int epochs, double lr,
                                std::uint64_t seed) {
    std::set<int> ids(dataset.labels.begin(), dataset.labels.end());
    if (ids.size() < 2) throw ConfigError("train_softmax: need at least two classes");
    SoftmaxClassifier init;
    init.class_ids.assign(ids.begin(), ids.end());
    const int c = static_cast<int>(ids.size());
    Rng rng(seed);
    init.weights = gaussian_sample(rng, c, dataset.x.cols);
    for (double& v : init.weights.data) v *= 0.01;
    init.bias.assign(c, 0.0);
    return train_softmax_from_init(dataset, epochs, lr, std::move(init));
}

SoftmaxClassifier train_softmax_from_init(const SyntheticDataset& dataset, int epochs, double lr,
                                          SoftmaxClassifier init) {
    if (epochs < 1) throw ConfigError("train_softmax: epochs must be positive");
    if (lr <= 0.0) throw ConfigError("train_softmax: lr must be positive");
    SoftmaxClassifier clf = std::move(init);
    const int c = clf.weights.rows;
    const long long n_params = static_cast<long long>(c) * clf.weights.cols + c;
    OptimizerState opt = OptimizerState::adam(n_params, lr);
    ParamSet flat;
    flat.values = clf.weights.data;
    flat.values.insert(flat.values.end(), clf.bias.begin(), clf.bias.end());
    for (int e = 0; e < epochs; ++e) {
        std::copy(flat.values.begin(), flat.values.begin() + clf.weights.data.size(),
                  clf.weights.data.begin());
        std::copy(flat.values.begin() + clf.weights.data.size(), flat.values.end(),
                  clf.bias.begin());
        const CrossEntropyResult ce = softmax_cross_entropy(clf, dataset.x, dataset.labels);
        ParamSet grad;
        grad.values = ce.dweights.data;
        grad.values.insert(grad.values.end(), ce.dbias.begin(), ce.dbias.end());
        adam_step(opt, flat, grad);
    }
    std::copy(flat.values.begin(), flat.values.begin() + clf.weights.data.size(),
              clf.weights.data.begin());
    std::copy(flat.values.begin() + clf.weights.data.size(), flat.values.end(), clf.bias.begin());
    return clf;
}

int predict_restricted(const SoftmaxClassifier& clf, const double* x, int dim,
                       const std::vector<int>& classes) {
    if (dim != clf.weights.cols) throw ShapeError("predict: feature width mismatch");
    if (classes.empty()) throw ConfigError("predict: empty class list");
    int best_class = classes.front();
    double best_score = -1e300;
    for (int class_id : classes) {
        const int r = class_row(clf, class_id);
        const double* w = clf.weights.row(r);
        double s = clf.bias[r];
        for (int j = 0; j < dim; ++j) s += w[j] * x[j];
        if (s > best_score) {
            best_score = s;
            best_class = class_id;
        }
    }
    return best_class;
}

PerClassAccuracy per_class_accuracy(const SoftmaxClassifier& clf, const Matrix& x,
                                    const std::vector<int>& labels,
                                    const std::vector<int>& classes) {
    if (classes.empty()) throw ConfigError("per_class_accuracy: empty class list");
    if (static_cast<int>(labels.size()) != x.rows)
        throw ShapeError("per_class_accuracy: one label per row required");
    std::set<int> class_set(classes.begin(), classes.end());
    for (int y : labels)
        if (!class_set.count(y))
            throw DataError("per_class_accuracy: test label " + std::to_string(y) +
                            " is outside the evaluation label space");

    std::map<int, std::pair<int, int>> counts;  // class -> (correct, total)
    for (int class_id : classes) counts[class_id] = {0, 0};
    for (int i = 0; i < x.rows; ++i) {
        const int pred = predict_restricted(clf, x.row(i), x.cols, classes);
        auto& [correct, total] = counts[labels[i]];
        total += 1;
        if (pred == labels[i]) correct += 1;
    }

    PerClassAccuracy out;
    int included = 0;
    for (int class_id : classes) {
        const auto& [correct, total] = counts[class_id];
        if (total == 0) {
            out.excluded.push_back(class_id);
            continue;
        }
        const double acc = static_cast<double>(correct) / total;
        out.table.emplace_back(class_id, acc);
        out.mean += acc;
        ++included;
    }
    if (included > 0) out.mean /= included;
    return out;
}

namespace {

struct TestSlice {
    Matrix x;
    std::vector<int> labels;
};

TestSlice gather_rows(const DatasetBundle& bundle, const std::vector<int>& rows) {
    TestSlice slice;
    slice.x = Matrix(static_cast<int>(rows.size()), bundle.feature_dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(bundle.features.row(rows[i]), bundle.features.row(rows[i]) + bundle.feature_dim,
                  slice.x.row(static_cast<int>(i)));
        slice.labels.push_back(bundle.labels[rows[i]]);
    }
    return slice;
}

std::map<int, std::vector<double>> gather_attrs(const DatasetBundle& bundle,
                                                const std::vector<int>& classes) {
    std::map<int, std::vector<double>> attrs;
    for (int c : classes) attrs[c] = bundle.attribute_for(c);
    return attrs;
}

SoftmaxClassifier fit_or_trivial(const SyntheticDataset& ds, const EvalOptions& opts,
                                 std::uint64_t seed) {
    std::set<int> ids(ds.labels.begin(), ds.labels.end());
    if (ids.size() == 1) {
        // Single-class label space: the restricted argmax is forced, no
        // training needed.
        SoftmaxClassifier clf;
        clf.class_ids.assign(ids.begin(), ids.end());
        clf.weights = Matrix(1, ds.x.cols);
        clf.bias.assign(1, 0.0);
        return clf;
    }
    return train_softmax(ds, opts.softmax_epochs, opts.softmax_lr, seed);
}

PerClassAccuracy filter_family(const PerClassAccuracy& acc, const std::vector<int>& family) {
    std::set<int> keep(family.begin(), family.end());
    PerClassAccuracy out;
    int included = 0;
    for (const auto& [class_id, a] : acc.table) {
        if (!keep.count(class_id)) continue;
        out.table.emplace_back(class_id, a);
        out.mean += a;
        ++included;
    }
    for (int class_id : acc.excluded)
        if (keep.count(class_id)) out.excluded.push_back(class_id);
    if (included > 0) out.mean /= included;
    return out;
}

}  // namespace

PerClassAccuracy evaluate_zsl_detailed(const ModelConfig& cfg, const ModelParams& params,
                                       const DatasetBundle& bundle, const EvalOptions& opts,
                                       std::uint64_t seed) {
    if (bundle.test_unseen_rows.empty())
        throw DataError("evaluate_zsl: bundle has no unseen test rows");
    Rng base(seed);
    Rng synth_rng = base.derive(0);
    const std::uint64_t clf_seed = base.derive(1).seed();

    const SyntheticDataset ds =
        synthesize_dataset(cfg, params, gather_attrs(bundle, bundle.unseen_classes),
                           opts.per_class, synth_rng);
    const SoftmaxClassifier clf = fit_or_trivial(ds, opts, clf_seed);
    const TestSlice test = gather_rows(bundle, bundle.test_unseen_rows);
    return per_class_accuracy(clf, test.x, test.labels, bundle.unseen_classes);
}

double evaluate_zsl(const ModelConfig& cfg, const ModelParams& params,
                    const DatasetBundle& bundle, const EvalOptions& opts, std::uint64_t seed) {
    return evaluate_zsl_detailed(cfg, params, bundle, opts, seed).mean;
}

GzslMetrics evaluate_gzsl(const ModelConfig& cfg, const ModelParams& params,
                          const DatasetBundle& bundle, const EvalOptions& opts,
                          std::uint64_t seed) {
    if (bundle.test_unseen_rows.empty() || bundle.test_seen_rows.empty())
        throw DataError("evaluate_gzsl: bundle needs seen and unseen test rows");
    Rng base(seed);
    Rng synth_rng = base.derive(0);
    const std::uint64_t clf_seed = base.derive(1).seed();

    std::vector<int> joint = bundle.seen_classes;
    joint.insert(joint.end(), bundle.unseen_classes.begin(), bundle.unseen_classes.end());
    std::sort(joint.begin(), joint.end());

    const SyntheticDataset ds = synthesize_dataset(cfg, params, gather_attrs(bundle, joint),
                                                   opts.per_class, synth_rng);
    const SoftmaxClassifier clf = fit_or_trivial(ds, opts, clf_seed);

    const TestSlice seen_test = gather_rows(bundle, bundle.test_seen_rows);
    const TestSlice unseen_test = gather_rows(bundle, bundle.test_unseen_rows);

    GzslMetrics m;
    m.seen_table =
        filter_family(per_class_accuracy(clf, seen_test.x, seen_test.labels, joint),
                      bundle.seen_classes);
    m.unseen_table =
        filter_family(per_class_accuracy(clf, unseen_test.x, unseen_test.labels, joint),
                      bundle.unseen_classes);
    m.seen_acc = m.seen_table.mean;
    m.unseen_acc = m.unseen_table.mean;
    m.harmonic = harmonic_mean(m.seen_acc, m.unseen_acc);
    return m;
}

namespace {

void append_table(std::ostringstream& out, const char* prefix, const PerClassAccuracy& acc) {
    for (const auto& [class_id, a] : acc.table) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", a);
        out << prefix << class_id << '\t' << buf << '\n';
    }
    for (int class_id : acc.excluded) out << prefix << class_id << "\tno_test_rows\n";
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string format_zsl_report(double accuracy, const PerClassAccuracy& table) {
    std::ostringstream out;
    out << "mode\tzsl\n";
    out << "unseen_mean_per_class_acc\t" << fmt6(accuracy) << '\n';
    out << "per_class_accuracy\n";
    append_table(out, "class_", table);
    return out.str();
}

std::string format_gzsl_report(const GzslMetrics& metrics) {
    std::ostringstream out;
    out << "mode\tgzsl\n";
    out << "unseen_acc\t" << fmt6(metrics.unseen_acc) << '\n';
    out << "seen_acc\t" << fmt6(metrics.seen_acc) << '\n';
    out << "harmonic_mean\t" << fmt6(metrics.harmonic) << '\n';
    out << "per_class_accuracy\n";
    append_table(out, "seen_class_", metrics.seen_table);
    append_table(out, "unseen_class_", metrics.unseen_table);
    return out.str();
}

}  // namespace metazsl
