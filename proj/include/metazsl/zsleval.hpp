#pragma once

#include <map>
#include <string>
#include <vector>

#include "metazsl/datasets.hpp"
#include "metazsl/genmodel.hpp"

namespace metazsl {

// Labeled synthetic features, the supervised stand-in for the missing
// training data of a class set.
struct SyntheticDataset {
    Matrix x;
    std::vector<int> labels;
    std::map<int, int> per_class_counts;
};

// Multinomial logistic regression: score_c = w_c . x + b_c.
struct SoftmaxClassifier {
    Matrix weights;              // classes x feature_dim
    std::vector<double> bias;
    std::vector<int> class_ids;  // row -> class id
};

struct PerClassAccuracy {
    double mean = 0.0;
    std::vector<std::pair<int, double>> table;  // class id -> accuracy
    std::vector<int> excluded;                  // classes with no test rows
};

struct GzslMetrics {
    double seen_acc = 0.0;
    double unseen_acc = 0.0;
    double harmonic = 0.0;
    PerClassAccuracy seen_table;
    PerClassAccuracy unseen_table;
};

// 2su/(s+u), 0 when both are 0.
double harmonic_mean(double s, double u);

// per_class rows for every class in attrs (ascending class id), drawn from
// the generator in evaluation mode.
SyntheticDataset synthesize_dataset(const ModelConfig& cfg, const ModelParams& params,
                                    const std::map<int, std::vector<double>>& attrs,
                                    int per_class, Rng& rng);

// Mean cross-entropy of the classifier on a labeled batch plus analytic
// gradients; label values index through class_ids.
struct CrossEntropyResult {
    double value = 0.0;
    Matrix dweights;
    std::vector<double> dbias;
};
CrossEntropyResult softmax_cross_entropy(const SoftmaxClassifier& clf, const Matrix& x,
                                         const std::vector<int>& labels);

// Full-batch Adam on the cross-entropy; the seed drives the small Gaussian
// weight init, so the run is a pure function of (dataset, epochs, lr, seed).
SoftmaxClassifier train_softmax(const SyntheticDataset& dataset, int epochs, double lr,
                                std::uint64_t seed);
SoftmaxClassifier train_softmax_from_init(const SyntheticDataset& dataset, int epochs, double lr,
                                          SoftmaxClassifier init);

// Argmax prediction restricted to `classes` (ids must be rows of the
// classifier).
int predict_restricted(const SoftmaxClassifier& clf, const double* x, int dim,
                       const std::vector<int>& classes);

// Unweighted mean of per-class accuracies over `classes`; classes without
// test rows are excluded from the mean and reported.
PerClassAccuracy per_class_accuracy(const SoftmaxClassifier& clf, const Matrix& x,
                                    const std::vector<int>& labels,
                                    const std::vector<int>& classes);

struct EvalOptions {
    int per_class = 300;
    int softmax_epochs = 400;
    double softmax_lr = 0.05;
};

// Synthesize the unseen classes, train a classifier over the unseen label
// space, score the real unseen test rows.
double evaluate_zsl(const ModelConfig& cfg, const ModelParams& params,
                    const DatasetBundle& bundle, const EvalOptions& opts, std::uint64_t seed);
PerClassAccuracy evaluate_zsl_detailed(const ModelConfig& cfg, const ModelParams& params,
                                       const DatasetBundle& bundle, const EvalOptions& opts,
                                       std::uint64_t seed);

// Synthesize seen and unseen classes, train one joint classifier, score the
// real seen/unseen test rows in the joint label space.
GzslMetrics evaluate_gzsl(const ModelConfig& cfg, const ModelParams& params,
                          const DatasetBundle& bundle, const EvalOptions& opts,
                          std::uint64_t seed);

// Tab-separated "metric value" lines plus a per-class block.
std::string format_zsl_report(double accuracy, const PerClassAccuracy& table);
std::string format_gzsl_report(const GzslMetrics& metrics);

}  // namespace metazsl
