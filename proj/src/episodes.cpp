#include "metazsl/episodes.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "metazsl/errors.hpp"

namespace metazsl {

void EpisodeConfig::validate() const {
    if (n_way_tr < 1 || n_way_v < 1) throw ConfigError("episode: way counts must be positive");
    if (k_shot_tr < 1 || k_shot_v < 1) throw ConfigError("episode: shot counts must be positive");
}

ClassPool build_pool(std::shared_ptr<const DatasetBundle> bundle) {
    bundle->validate();
    ClassPool pool;
    pool.bundle = bundle;
    for (int c : bundle->seen_classes) pool.classes.push_back(ClassEntry{c, {}, {}});
    for (int r : bundle->train_rows()) {
        for (auto& entry : pool.classes) {
            if (entry.class_id == bundle->labels[r]) {
                entry.rows.push_back(r);
                entry.full_rows.push_back(r);
                break;
            }
        }
    }
    for (const auto& entry : pool.classes)
        if (entry.rows.empty())
            throw DataError("class " + std::to_string(entry.class_id) + " has no training rows");
    return pool;
}

namespace {

// First k entries of a seeded partial Fisher-Yates pass over [0, n).
std::vector<int> choose_without_replacement(int n, int k, Rng& rng) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace

ClassPool subsample_fewshot(std::shared_ptr<const DatasetBundle> bundle, int shots,
                            std::uint64_t seed) {
    if (shots < 1) throw ConfigError("subsample_fewshot: shots must be positive");
    ClassPool pool = build_pool(std::move(bundle));
    Rng rng(seed);
    for (auto& entry : pool.classes) {
        const int have = static_cast<int>(entry.full_rows.size());
        if (have < shots)
            throw DataError("class " + std::to_string(entry.class_id) + " has only " +
                            std::to_string(have) + " rows, need " + std::to_string(shots));
        std::vector<int> picked = choose_without_replacement(have, shots, rng);
        std::vector<int> rows;
        rows.reserve(shots);
        for (int i : picked) rows.push_back(entry.full_rows[i]);
        std::sort(rows.begin(), rows.end());
        entry.rows = std::move(rows);
    }
    return pool;
}

void save_selection(const ClassPool& pool, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("could not write selection file " + path);
    for (const auto& entry : pool.classes) {
        f << entry.class_id << ':';
        for (int r : entry.rows) f << ' ' << r;
        f << '\n';
    }
}

ClassPool load_selection(std::shared_ptr<const DatasetBundle> bundle, const std::string& path) {
    ClassPool pool = build_pool(std::move(bundle));
    std::ifstream f(path);
    if (!f) throw DataError("could not open selection file " + path);
    std::string line;
    std::set<int> listed;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            throw DataError("selection file: malformed line '" + line + "'");
        const int class_id = std::stoi(line.substr(0, colon));
        std::istringstream rest(line.substr(colon + 1));
        std::vector<int> rows;
        int r;
        while (rest >> r) rows.push_back(r);
        bool found = false;
        for (auto& entry : pool.classes) {
            if (entry.class_id != class_id) continue;
            for (int row : rows)
                if (std::find(entry.full_rows.begin(), entry.full_rows.end(), row) ==
                    entry.full_rows.end())
                    throw DataError("selection file: row " + std::to_string(row) +
                                    " is not a training row of class " + std::to_string(class_id));
            entry.rows = rows;
            found = true;
            break;
        }
        if (!found)
            throw DataError("selection file: unknown class " + std::to_string(class_id));
        listed.insert(class_id);
    }
    for (const auto& entry : pool.classes)
        if (!listed.count(entry.class_id))
            throw DataError("selection file: class " + std::to_string(entry.class_id) +
                            " missing");
    return pool;
}

namespace {

struct DrawResult {
    std::vector<int> rows;
    bool replaced = false;
};

DrawResult draw_examples(const std::vector<int>& candidates, int k, Rng& rng) {
    DrawResult res;
    const int n = static_cast<int>(candidates.size());
    if (n >= k) {
        for (int i : choose_without_replacement(n, k, rng)) res.rows.push_back(candidates[i]);
    } else {
        res.replaced = true;
        for (int i = 0; i < k; ++i)
            res.rows.push_back(candidates[rng.next_below(static_cast<std::uint64_t>(n))]);
    }
    return res;
}

void append_rows(TaskSet& set, const DatasetBundle& bundle, int class_id,
                 const std::vector<int>& rows, int& cursor) {
    const std::vector<double> attr = bundle.attribute_for(class_id);
    for (int r : rows) {
        const double* feat = bundle.features.row(r);
        double* xrow = set.x.row(cursor);
        double* arow = set.a.row(cursor);
        for (int j = 0; j < bundle.feature_dim; ++j) xrow[j] = feat[j];
        for (int j = 0; j < bundle.attr_dim; ++j) arow[j] = attr[j];
        set.labels.push_back(class_id);
        ++cursor;
    }
}

}  // namespace

Task sample_task(const ClassPool& pool, const EpisodeConfig& cfg, Rng& rng, SplitMode mode) {
    cfg.validate();
    if (!pool.bundle) throw ConfigError("sample_task: pool has no bundle");
    const DatasetBundle& bundle = *pool.bundle;
    const int n_classes = pool.class_count();

    std::vector<int> support_idx, query_idx;
    if (mode == SplitMode::disjoint) {
        if (cfg.n_way_tr + cfg.n_way_v > n_classes)
            throw ConfigError("sample_task: pool has " + std::to_string(n_classes) +
                              " classes, need " + std::to_string(cfg.n_way_tr + cfg.n_way_v) +
                              " for a disjoint task");
        const std::vector<int> chosen =
            choose_without_replacement(n_classes, cfg.n_way_tr + cfg.n_way_v, rng);
        support_idx.assign(chosen.begin(), chosen.begin() + cfg.n_way_tr);
        query_idx.assign(chosen.begin() + cfg.n_way_tr, chosen.end());
    } else {
        if (cfg.n_way_tr > n_classes)
            throw ConfigError("sample_task: pool has too few classes for support");
        if (cfg.n_way_v > cfg.n_way_tr)
            throw ConfigError("sample_task: standard split draws query classes from the "
                              "support classes; n_way_v must not exceed n_way_tr");
        support_idx = choose_without_replacement(n_classes, cfg.n_way_tr, rng);
        for (int i : choose_without_replacement(cfg.n_way_tr, cfg.n_way_v, rng))
            query_idx.push_back(support_idx[i]);
    }

    Task task;
    task.support.x = Matrix(cfg.n_way_tr * cfg.k_shot_tr, bundle.feature_dim);
    task.support.a = Matrix(cfg.n_way_tr * cfg.k_shot_tr, bundle.attr_dim);
    task.query.x = Matrix(cfg.n_way_v * cfg.k_shot_v, bundle.feature_dim);
    task.query.a = Matrix(cfg.n_way_v * cfg.k_shot_v, bundle.attr_dim);

    // Support rows; remember what each class used so the standard split can
    // hold query examples out of them.
    std::vector<std::vector<int>> support_used(pool.classes.size());
    int cursor = 0;
    for (int idx : support_idx) {
        const ClassEntry& entry = pool.classes[idx];
        DrawResult drawn = draw_examples(entry.rows, cfg.k_shot_tr, rng);
        task.used_replacement |= drawn.replaced;
        support_used[idx] = drawn.rows;
        append_rows(task.support, bundle, entry.class_id, drawn.rows, cursor);
    }

    cursor = 0;
    for (int idx : query_idx) {
        const ClassEntry& entry = pool.classes[idx];
        const std::vector<int>& base = cfg.val_from_full ? entry.full_rows : entry.rows;
        std::vector<int> candidates;
        if (mode == SplitMode::standard_split) {
            // Example-level disjointness where the class has enough rows.
            std::set<int> used(support_used[idx].begin(), support_used[idx].end());
            for (int r : base)
                if (!used.count(r)) candidates.push_back(r);
            if (static_cast<int>(candidates.size()) < cfg.k_shot_v) candidates = base;
        } else {
            candidates = base;
        }
        DrawResult drawn = draw_examples(candidates, cfg.k_shot_v, rng);
        task.used_replacement |= drawn.replaced;
        append_rows(task.query, bundle, entry.class_id, drawn.rows, cursor);
    }
    return task;
}

std::vector<Task> sample_task_batch(const ClassPool& pool, const EpisodeConfig& cfg, Rng& rng,
                                    SplitMode mode, int batch_size) {
    if (batch_size < 1) throw ConfigError("sample_task_batch: batch_size must be positive");
    std::vector<Task> tasks;
    tasks.reserve(batch_size);
    for (int i = 0; i < batch_size; ++i) tasks.push_back(sample_task(pool, cfg, rng, mode));
    return tasks;
}

}  // namespace metazsl
