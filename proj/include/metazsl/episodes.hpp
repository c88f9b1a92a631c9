#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "metazsl/datasets.hpp"
#include "metazsl/rng.hpp"

namespace metazsl {

// One class available for episode sampling. `rows` is the active pool (the
// few-shot selection when subsampled), `full_rows` every training row of the
// class; the two coincide when no subsampling happened.
struct ClassEntry {
    int class_id = 0;
    std::vector<int> rows;
    std::vector<int> full_rows;
};

struct ClassPool {
    std::shared_ptr<const DatasetBundle> bundle;
    std::vector<ClassEntry> classes;

    int class_count() const { return static_cast<int>(classes.size()); }
};

struct EpisodeConfig {
    int n_way_tr = 10;
    int k_shot_tr = 5;
    int n_way_v = 10;
    int k_shot_v = 3;
    // Draw query examples from the class's full training rows instead of the
    // few-shot pool.
    bool val_from_full = false;

    void validate() const;
};

enum class SplitMode { disjoint, standard_split };

// A row-aligned episode half: features, attributes and class ids.
struct TaskSet {
    Matrix x;
    Matrix a;
    std::vector<int> labels;

    int size() const { return x.rows; }
};

struct Task {
    TaskSet support;
    TaskSet query;
    // Set when any class had fewer rows than shots and sampling fell back to
    // drawing with replacement.
    bool used_replacement = false;
};

// Pool over all training rows (every class keeps all of its rows).
ClassPool build_pool(std::shared_ptr<const DatasetBundle> bundle);

// Pool with exactly `shots` rows per seen class, drawn without replacement.
// DataError names any class with fewer rows than `shots`.
ClassPool subsample_fewshot(std::shared_ptr<const DatasetBundle> bundle, int shots,
                            std::uint64_t seed);

// Text persistence of a few-shot selection: one "class_id: i0 i1 ..." line
// per class. Reloading reproduces the pool exactly.
void save_selection(const ClassPool& pool, const std::string& path);
ClassPool load_selection(std::shared_ptr<const DatasetBundle> bundle, const std::string& path);

// One episode. Disjoint mode draws support and query class sets without
// overlap; standard mode draws query classes from the support classes and
// avoids support examples where the class has enough rows.
Task sample_task(const ClassPool& pool, const EpisodeConfig& cfg, Rng& rng, SplitMode mode);

std::vector<Task> sample_task_batch(const ClassPool& pool, const EpisodeConfig& cfg, Rng& rng,
                                    SplitMode mode, int batch_size);

}  // namespace metazsl
