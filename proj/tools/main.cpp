#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include "metazsl/checkpoint.hpp"
#include "metazsl/errors.hpp"
#include "metazsl/metatrain.hpp"
#include "metazsl/zsleval.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace metazsl;
using cli::RunConfig;
using cli::sub_seed;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

struct TrainFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> dataset_dir;
    std::optional<std::string> shots;
    std::optional<int> outer_steps;
    std::optional<std::string> out_dir;
    bool no_meta = false;
    bool standard_split = false;
    bool cvae_only = false;
    bool no_meta_disc = false;
};

RunConfig merged_config(const TrainFlags& f) {
    RunConfig cfg = f.config_path.empty() ? RunConfig{} : cli::load_run_config(f.config_path);
    if (f.seed) cfg.seed = *f.seed;
    if (f.dataset_dir) cfg.dataset_dir = *f.dataset_dir;
    if (f.shots) cfg.shots = *f.shots;
    if (f.outer_steps) cfg.outer_steps = *f.outer_steps;
    if (f.out_dir) cfg.out_dir = *f.out_dir;
    if (f.no_meta) cfg.meta_enabled = false;
    if (f.standard_split) cfg.disjoint_tasks = false;
    if (f.cvae_only) cfg.cvae_only = true;
    if (f.no_meta_disc) cfg.meta_on_discriminator = false;
    return cfg;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw DataError("could not write " + path);
    f << content;
}

int run_gen_data(const SyntheticBenchSpec& spec, const std::string& out) {
    const SyntheticBench bench = make_synthetic(spec);
    save_bundle(bench.bundle, out);
    // Oracle means alongside the bundle for audit and for nearest-mean
    // baselines; the loader ignores extra files.
    std::ostringstream means;
    means << "class_id";
    for (int j = 0; j < bench.class_means.cols; ++j) means << ",m" << j;
    means << '\n';
    for (int i = 0; i < bench.class_means.rows; ++i) {
        means << bench.mean_class_ids[i];
        for (int j = 0; j < bench.class_means.cols; ++j) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.9g", bench.class_means(i, j));
            means << ',' << buf;
        }
        means << '\n';
    }
    write_file((fs::path(out) / "oracle_means.csv").string(), means.str());
    std::cout << "wrote " << bench.bundle.row_count() << " rows ("
              << bench.bundle.seen_classes.size() << " seen / "
              << bench.bundle.unseen_classes.size() << " unseen classes) to " << out << "\n";
    return kExitOk;
}

int run_train(const TrainFlags& flags) {
    const RunConfig cfg = merged_config(flags);
    if (cfg.dataset_dir.empty()) throw ConfigError("train: --dataset-dir or config required");

    fs::create_directories(cfg.out_dir);
    write_file((fs::path(cfg.out_dir) / "config.txt").string(), cli::dump_run_config(cfg));

    auto bundle = std::make_shared<DatasetBundle>(load_bundle(cfg.dataset_dir));
    const ModelConfig model = cfg.model_config(bundle->feature_dim, bundle->attr_dim);
    const MetaConfig meta = cfg.meta_config();
    const EpisodeConfig ecfg = cfg.episode_config();

    const int shots = cfg.shot_count();
    ClassPool pool;
    if (shots == 0) {
        pool = build_pool(bundle);
    } else {
        pool = subsample_fewshot(bundle, shots, sub_seed(cfg.seed, 1));
        save_selection(pool, (fs::path(cfg.out_dir) / "fewshot_selection.txt").string());
    }

    std::ofstream trace((fs::path(cfg.out_dir) / "trace.tsv").string());
    if (!trace) throw DataError("could not write trace file");
    std::ofstream episodes_log;
    if (cfg.episode_log) {
        episodes_log.open((fs::path(cfg.out_dir) / "episodes.log").string());
        if (!episodes_log) throw DataError("could not write episode log");
    }

    TrainHooks hooks;
    hooks.on_step = [&](const TraceRow& row) { trace << format_trace_row(row) << '\n'; };
    hooks.on_checkpoint = [&](const TrainState& state) {
        Checkpoint ck;
        ck.config = model;
        ck.params = state.params;
        ck.opt_eg = state.opt_eg;
        ck.opt_d = state.opt_d;
        ck.seed = cfg.seed;
        ck.step = static_cast<std::uint64_t>(state.step);
        save_checkpoint(ck, (fs::path(cfg.out_dir) /
                             ("checkpoint_step" + std::to_string(state.step) + ".bin"))
                                .string());
    };
    if (cfg.episode_log)
        hooks.on_tasks = [&](long long step, std::span<const Task> tasks) {
            for (std::size_t t = 0; t < tasks.size(); ++t) {
                episodes_log << step << '\t' << t << "\tsupport:";
                std::set<int> sup(tasks[t].support.labels.begin(),
                                  tasks[t].support.labels.end());
                for (int c : sup) episodes_log << ' ' << c;
                episodes_log << "\tquery:";
                std::set<int> qry(tasks[t].query.labels.begin(), tasks[t].query.labels.end());
                for (int c : qry) episodes_log << ' ' << c;
                episodes_log << '\n';
            }
        };

    const TrainState state = train(model, meta, ecfg, pool, sub_seed(cfg.seed, 2), hooks);

    Checkpoint ck;
    ck.config = model;
    ck.params = state.params;
    ck.opt_eg = state.opt_eg;
    ck.opt_d = state.opt_d;
    ck.seed = cfg.seed;
    ck.step = static_cast<std::uint64_t>(state.step);
    save_checkpoint(ck, (fs::path(cfg.out_dir) / "checkpoint.bin").string());
    std::cout << "trained " << state.step << " outer steps; checkpoint and trace in "
              << cfg.out_dir << "\n";
    return kExitOk;
}

int run_eval(const std::string& checkpoint_path, const std::string& dataset_dir,
             const std::string& mode, int per_class, int epochs, double lr, std::uint64_t seed,
             const std::string& out_path) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const DatasetBundle bundle = load_bundle(dataset_dir);
    if (bundle.feature_dim != ck.config.feature_dim || bundle.attr_dim != ck.config.attr_dim)
        throw ConfigError("eval: checkpoint dims (" + std::to_string(ck.config.feature_dim) +
                          "," + std::to_string(ck.config.attr_dim) +
                          ") do not match the bundle (" + std::to_string(bundle.feature_dim) +
                          "," + std::to_string(bundle.attr_dim) + ")");
    EvalOptions opts;
    opts.per_class = per_class;
    opts.softmax_epochs = epochs;
    opts.softmax_lr = lr;

    std::string report;
    if (mode == "zsl") {
        const PerClassAccuracy acc =
            evaluate_zsl_detailed(ck.config, ck.params, bundle, opts, sub_seed(seed, 3));
        report = format_zsl_report(acc.mean, acc);
        std::printf("ZSL mean per-class accuracy: %.1f\n", acc.mean * 100.0);
    } else if (mode == "gzsl") {
        const GzslMetrics m =
            evaluate_gzsl(ck.config, ck.params, bundle, opts, sub_seed(seed, 3));
        report = format_gzsl_report(m);
        std::printf("GZSL U S H: %.1f %.1f %.1f\n", m.unseen_acc * 100.0, m.seen_acc * 100.0,
                    m.harmonic * 100.0);
    } else {
        throw ConfigError("eval: mode must be zsl or gzsl");
    }
    std::cout << report;
    if (!out_path.empty()) write_file(out_path, report);
    return kExitOk;
}

int run_synth(const std::string& checkpoint_path, const std::string& dataset_dir,
              const std::string& classes_arg, int n, std::uint64_t seed,
              const std::string& out_path) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const DatasetBundle bundle = load_bundle(dataset_dir);
    if (bundle.feature_dim != ck.config.feature_dim || bundle.attr_dim != ck.config.attr_dim)
        throw ConfigError("synth: checkpoint dims do not match the bundle");

    std::vector<int> classes;
    if (classes_arg.empty() || classes_arg == "unseen") {
        classes = bundle.unseen_classes;
    } else if (classes_arg == "all") {
        classes = bundle.attr_class_ids;
    } else {
        std::stringstream ss(classes_arg);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) classes.push_back(std::stoi(item));
    }
    if (classes.empty()) throw ConfigError("synth: no classes to synthesize");

    std::map<int, std::vector<double>> attrs;
    for (int c : classes) attrs[c] = bundle.attribute_for(c);
    Rng rng(sub_seed(seed, 4));
    const SyntheticDataset ds = synthesize_dataset(ck.config, ck.params, attrs, n, rng);

    std::ofstream f(out_path);
    if (!f) throw DataError("could not write " + out_path);
    f << "row_id,label";
    for (int j = 0; j < ds.x.cols; ++j) f << ",f" << j;
    f << '\n';
    for (int r = 0; r < ds.x.rows; ++r) {
        f << r << ',' << ds.labels[r];
        for (int j = 0; j < ds.x.cols; ++j) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.9g", ds.x(r, j));
            f << ',' << buf;
        }
        f << '\n';
    }
    std::cout << "wrote " << ds.x.rows << " synthetic rows to " << out_path << "\n";
    return kExitOk;
}

int run_validate(const std::string& dataset_dir) {
    const DatasetBundle b = load_bundle(dataset_dir);
    std::cout << "name: " << b.name << "\n"
              << "feature_dim: " << b.feature_dim << "\n"
              << "attr_dim: " << b.attr_dim << "\n"
              << "rows: " << b.row_count() << "\n"
              << "seen classes: " << b.seen_classes.size() << "\n"
              << "unseen classes: " << b.unseen_classes.size() << "\n"
              << "test rows (seen/unseen): " << b.test_seen_rows.size() << "/"
              << b.test_unseen_rows.size() << "\n"
              << "train rows: " << b.train_rows().size() << "\n"
              << "ok\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Meta-learned generative feature synthesis for zero-shot evaluation"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate the synthetic cluster benchmark");
    SyntheticBenchSpec spec;
    std::string gen_out = "data/synthetic";
    gen->add_option("--out", gen_out, "Output dataset directory");
    gen->add_option("--seed", spec.seed, "Generator seed");
    gen->add_option("--n-seen", spec.n_seen, "Seen class count");
    gen->add_option("--n-unseen", spec.n_unseen, "Unseen class count");
    gen->add_option("--feature-dim", spec.feature_dim, "Feature dimension");
    gen->add_option("--attr-dim", spec.attr_dim, "Attribute dimension");
    gen->add_option("--cluster-std", spec.cluster_std, "Within-class standard deviation");
    gen->add_option("--examples-per-class", spec.examples_per_class, "Rows per class");
    gen->add_option("--attr-noise", spec.attr_noise, "Attribute noise scale");
    gen->add_option("--seen-test-fraction", spec.seen_test_fraction,
                    "Held-out fraction of each seen class");

    // train
    auto* tr = app.add_subcommand("train", "Train on a dataset directory");
    TrainFlags tf;
    tr->add_option("--config", tf.config_path, "Run configuration file");
    tr->add_option("--seed", tf.seed, "Master seed (overrides config)");
    tr->add_option("--dataset-dir", tf.dataset_dir, "Dataset directory (overrides config)");
    tr->add_option("--shots", tf.shots, "Examples kept per seen class: count or 'all'");
    tr->add_option("--outer-steps", tf.outer_steps, "Outer step count (overrides config)");
    tr->add_option("--out", tf.out_dir, "Output directory (overrides config)");
    tr->add_flag("--no-meta", tf.no_meta, "Disable inner-loop adaptation");
    tr->add_flag("--standard-split", tf.standard_split,
                 "Sample query classes from the support classes");
    tr->add_flag("--cvae-only", tf.cvae_only, "Drop all adversarial terms");
    tr->add_flag("--no-meta-disc", tf.no_meta_disc,
                 "Keep the discriminator out of the inner loop");

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
    std::string ev_ck, ev_data, ev_mode = "zsl", ev_out;
    int ev_per_class = 300, ev_epochs = 400;
    double ev_lr = 0.05;
    std::uint64_t ev_seed = 1;
    ev->add_option("checkpoint", ev_ck, "Checkpoint file")->required();
    ev->add_option("--dataset-dir", ev_data, "Dataset directory")->required();
    ev->add_option("--mode", ev_mode, "zsl | gzsl");
    ev->add_option("--per-class", ev_per_class, "Synthetic rows per class");
    ev->add_option("--epochs", ev_epochs, "Classifier epochs");
    ev->add_option("--lr", ev_lr, "Classifier learning rate");
    ev->add_option("--seed", ev_seed, "Evaluation seed");
    ev->add_option("--out", ev_out, "Also write the report to this file");

    // synth
    auto* sy = app.add_subcommand("synth", "Synthesize class-conditional features");
    std::string sy_ck, sy_data, sy_classes, sy_out = "synthetic.csv";
    int sy_n = 1;
    std::uint64_t sy_seed = 1;
    sy->add_option("checkpoint", sy_ck, "Checkpoint file")->required();
    sy->add_option("--dataset-dir", sy_data, "Dataset directory (for attributes)")->required();
    sy->add_option("--classes", sy_classes, "Comma-separated ids, 'unseen' (default) or 'all'");
    sy->add_option("--n", sy_n, "Rows per class");
    sy->add_option("--seed", sy_seed, "Synthesis seed");
    sy->add_option("--out", sy_out, "Output CSV path");

    // validate-data
    auto* va = app.add_subcommand("validate-data", "Check a dataset directory");
    std::string va_data;
    va->add_option("--dataset-dir", va_data, "Dataset directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) return run_gen_data(spec, gen_out);
        if (tr->parsed()) return run_train(tf);
        if (ev->parsed())
            return run_eval(ev_ck, ev_data, ev_mode, ev_per_class, ev_epochs, ev_lr, ev_seed,
                            ev_out);
        if (sy->parsed()) return run_synth(sy_ck, sy_data, sy_classes, sy_n, sy_seed, sy_out);
        if (va->parsed()) return run_validate(va_data);
    } catch (const DivergenceError& e) {
        std::cerr << "error: training diverged at step " << e.step << ": " << e.what() << "\n";
        return kExitDiverged;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}
