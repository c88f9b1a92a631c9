#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metazsl/genmodel.hpp"
#include "metazsl/metatrain.hpp"
#include "metazsl/zsleval.hpp"

namespace metazsl::cli {

// Every knob of a run in one flat record. Parsed from a "key = value" text
// file; command-line flags override file values; the merged result is echoed
// into the output directory before anything runs, and re-running from that
// echo reproduces the outputs bit for bit.
struct RunConfig {
    std::string dataset_dir;
    std::string out_dir = "runs/out";
    std::uint64_t seed = 1;
    std::string shots = "all";  // "5" | "10" | "all" (any positive count works)

    int latent_dim = 16;
    std::vector<int> encoder_hidden = {1024, 512};
    std::vector<int> decoder_hidden = {1024};
    std::vector<int> disc_hidden = {1024, 512};
    double dropout_rate = 0.3;
    std::string disc_mode = "critic";      // critic | probabilistic
    std::string de_term_z = "posterior";   // posterior | prior
    bool literal_adv_sign = false;
    double disc_clip = 0.01;
    double lambda_adv = 1.0;

    int n_way_tr = 10;
    int k_shot_tr = 5;
    int n_way_v = 10;
    int k_shot_v = 3;
    bool val_from_full = false;

    double eta1 = 0.01;
    double eta2 = 0.01;
    int inner_steps = 3;
    int task_batch_size = 4;
    int outer_steps = 1000;
    std::string outer_optimizer = "adam";  // adam | sgd
    double outer_lr = 0.001;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    bool meta_enabled = true;
    bool meta_on_generator = true;
    bool meta_on_discriminator = true;
    bool disjoint_tasks = true;
    bool cvae_only = false;
    bool first_order = true;
    int checkpoint_interval = 0;
    bool episode_log = false;

    int per_class_synth = 300;
    int softmax_epochs = 400;
    double softmax_lr = 0.05;

    // Derived views over the flat record.
    ModelConfig model_config(int feature_dim, int attr_dim) const;
    MetaConfig meta_config() const;
    EpisodeConfig episode_config() const;
    EvalOptions eval_options() const;
    // Shot count, or 0 for "all".
    int shot_count() const;
};

RunConfig load_run_config(const std::string& path);
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value);
std::string dump_run_config(const RunConfig& cfg);

// Stable per-component sub-seed derivation from the master seed.
std::uint64_t sub_seed(std::uint64_t master, std::uint64_t tag);

}  // namespace metazsl::cli
