#pragma once

#include <functional>
#include <span>

#include "metazsl/episodes.hpp"
#include "metazsl/losses.hpp"
#include "metazsl/optim.hpp"

namespace metazsl {

// Everything the episodic trainer needs besides the model shapes. Inner
// steps are plain gradient steps (descent for theta_eg, ascent for theta_d);
// the outer update goes through the configured optimizer with first-order
// meta-gradients.
struct MetaConfig {
    double eta1 = 0.01;          // inner lr for theta_eg
    double eta2 = 0.01;          // inner lr for theta_d
    int inner_steps = 3;
    int task_batch_size = 4;
    int outer_steps = 1000;
    OptKind outer_kind = OptKind::adam;
    double outer_lr = 0.001;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double lambda_adv = 1.0;
    bool meta_enabled = true;
    bool meta_on_generator = true;
    bool meta_on_discriminator = true;
    bool disjoint_tasks = true;
    bool cvae_only = false;
    bool first_order = true;
    int checkpoint_interval = 0;  // 0 disables periodic checkpoints

    SplitMode split_mode() const {
        return disjoint_tasks ? SplitMode::disjoint : SplitMode::standard_split;
    }
    void validate() const;
};

struct TraceRow {
    long long step = 0;
    double inner_vg = 0.0;
    double inner_d = 0.0;
    double outer_vg = 0.0;
    double outer_d = 0.0;
};

struct TrainState {
    ModelParams params;
    OptimizerState opt_eg;
    OptimizerState opt_d;
    long long step = 0;
    std::vector<TraceRow> trace;
    Rng rng;

    TrainState() : rng(0) {}
};

// The two per-task objectives the trainer optimizes. Injection point for
// the surrogate losses used by the trainer's own tests; standard() wires in
// the real joint and discriminator objectives.
struct LossBackend {
    std::function<LossValue(const ModelParams&, const TaskSet&, Rng&)> vg;
    std::function<LossValue(const ModelParams&, const TaskSet&, Rng&)> d;

    static LossBackend standard(const ModelConfig& cfg, const MetaConfig& meta);
};

// Adapted copy of params after inner_steps rounds of task-batch-averaged
// updates on the supports. Both gradients of one round are evaluated at the
// same parameters before either block moves. The input params are never
// modified.
ModelParams inner_adapt(const ModelConfig& cfg, const MetaConfig& meta,
                        const LossBackend& backend, const ModelParams& params,
                        std::span<const Task> tasks, Rng& rng);

// One outer step: adapt on the supports, evaluate the adapted parameters on
// the queries, update the original parameters with the outer optimizer, and
// append a trace row. Disabled quantities are recorded as NaN.
void outer_update(const ModelConfig& cfg, const MetaConfig& meta, const LossBackend& backend,
                  TrainState& state, std::span<const Task> tasks);

struct TrainHooks {
    std::function<void(const TraceRow&)> on_step;
    std::function<void(const TrainState&)> on_checkpoint;
    // Fires right after each task batch is sampled (episode audit logging).
    std::function<void(long long step, std::span<const Task>)> on_tasks;
};

// Full training run: init, then outer_steps iterations of sample-and-update.
// Deterministic in (cfg, meta, ecfg, pool, seed). Throws DivergenceError
// when a loss or parameter goes non-finite.
TrainState train(const ModelConfig& cfg, const MetaConfig& meta, const EpisodeConfig& ecfg,
                 const ClassPool& pool, std::uint64_t seed, const TrainHooks& hooks = {});

std::string format_trace_row(const TraceRow& row);

}  // namespace metazsl
