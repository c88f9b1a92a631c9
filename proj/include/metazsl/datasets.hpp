#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metazsl/matrix.hpp"

namespace metazsl {

// A feature dataset with per-class attributes and a seen/unseen class split.
// On disk this is a directory of three files:
//
//   meta.json       name, feature_dim, attr_dim, class list, seen/unseen
//                   lists, test-row index lists
//   features.csv    header "row_id,label,f0..f{D-1}", one row per example
//   attributes.csv  header "class_id,a0..a{d_a-1}", one row per class
//
// Reals are printed with 9 significant digits, which round-trips exactly
// through load/save, so a re-saved bundle is byte-identical.
struct DatasetBundle {
    std::string name;
    int feature_dim = 0;
    int attr_dim = 0;
    Matrix features;                  // n x feature_dim
    std::vector<int> labels;          // n, class id per row
    Matrix attributes;                // one row per class in attr_class_ids order
    std::vector<int> attr_class_ids;
    std::vector<int> seen_classes;
    std::vector<int> unseen_classes;
    std::vector<int> test_seen_rows;
    std::vector<int> test_unseen_rows;

    int row_count() const { return features.rows; }
    // Attribute vector of a class; DataError if the class is unknown.
    std::vector<double> attribute_for(int class_id) const;
    // Rows available for training: seen-class rows outside the test sets.
    std::vector<int> train_rows() const;
    // Checks every structural invariant; throws DataError on violation.
    void validate() const;
};

DatasetBundle load_bundle(const std::string& dir_path);
void save_bundle(const DatasetBundle& bundle, const std::string& dir_path);

// Desk-scale Gaussian-cluster benchmark with a known oracle. Class means
// live in an attr_dim-dimensional linear subspace of feature space and each
// attribute vector is a fixed noisy linear projection of its class mean, so
// attributes carry enough signal to locate unseen clusters and a linear map
// from attributes recovers the means almost exactly.
struct SyntheticBenchSpec {
    int n_seen = 8;
    int n_unseen = 4;
    int feature_dim = 64;
    int attr_dim = 16;
    double cluster_std = 0.5;
    int examples_per_class = 30;
    double attr_noise = 0.02;
    // Fraction of each seen class's rows held out as seen-class test rows.
    double seen_test_fraction = 0.3;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SyntheticBench {
    DatasetBundle bundle;
    Matrix class_means;               // one row per class
    std::vector<int> mean_class_ids;

    std::vector<double> mean_for(int class_id) const;
};

SyntheticBench make_synthetic(const SyntheticBenchSpec& spec);

}  // namespace metazsl
