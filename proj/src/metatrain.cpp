#include "metazsl/metatrain.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "metazsl/errors.hpp"

namespace metazsl {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_inner_lr(double eta, const char* name) {
    // 0 disables adaptation for that block; otherwise stay in the searched
    // range.
    if (eta == 0.0) return;
    if (eta < 1e-8 || eta > 1e-1)
        throw ConfigError(std::string(name) + " must be 0 or in [1e-8, 1e-1]");
}

ParamSet concat(const ParamSet& a, const ParamSet& b) {
    ParamSet out;
    out.values.reserve(a.values.size() + b.values.size());
    out.values.insert(out.values.end(), a.values.begin(), a.values.end());
    out.values.insert(out.values.end(), b.values.begin(), b.values.end());
    return out;
}

void split_into(const ParamSet& joint, ParamSet& a, ParamSet& b) {
    std::copy(joint.values.begin(), joint.values.begin() + a.size(), a.values.begin());
    std::copy(joint.values.begin() + a.size(), joint.values.end(), b.values.begin());
}

void add_scaled(ParamSet& into, const ParamSet& from, double scale) {
    for (std::size_t i = 0; i < into.values.size(); ++i)
        into.values[i] += scale * from.values[i];
}

struct InnerOut {
    ModelParams params;
    double first_vg = kNan;
    double first_d = kNan;
};

InnerOut inner_adapt_impl(const ModelConfig& cfg, const MetaConfig& meta,
                          const LossBackend& backend, const ModelParams& params,
                          std::span<const Task> tasks, Rng& rng) {
    if (tasks.empty()) throw ConfigError("inner_adapt: empty task batch");
    const bool adapt_eg = meta.meta_on_generator;
    const bool adapt_d = meta.meta_on_discriminator && !meta.cvae_only;
    const double inv_n = 1.0 / static_cast<double>(tasks.size());

    InnerOut out;
    out.params = params;
    for (int step = 0; step < meta.inner_steps; ++step) {
        ParamSet ge, gg, gd;
        double mean_vg = 0.0, mean_d = 0.0;
        if (adapt_eg) {
            ge = ParamSet::zeros(params.theta_e.size());
            gg = ParamSet::zeros(params.theta_g.size());
            for (const Task& task : tasks) {
                const LossValue lv = backend.vg(out.params, task.support, rng);
                if (!std::isfinite(lv.value))
                    throw DivergenceError(-1, "inner joint objective is not finite");
                mean_vg += lv.value * inv_n;
                add_scaled(ge, *lv.grad_e, inv_n);
                add_scaled(gg, *lv.grad_g, inv_n);
            }
        }
        if (adapt_d) {
            gd = ParamSet::zeros(params.theta_d.size());
            for (const Task& task : tasks) {
                const LossValue ld = backend.d(out.params, task.support, rng);
                if (!std::isfinite(ld.value))
                    throw DivergenceError(-1, "inner discriminator objective is not finite");
                mean_d += ld.value * inv_n;
                add_scaled(gd, *ld.grad_d, inv_n);
            }
        }
        if (step == 0) {
            if (adapt_eg) out.first_vg = mean_vg;
            if (adapt_d) out.first_d = mean_d;
        }
        // Both gradients are evaluated before either block moves.
        if (adapt_eg) {
            sgd_step(out.params.theta_e, ge, meta.eta1, StepDirection::descend);
            sgd_step(out.params.theta_g, gg, meta.eta1, StepDirection::descend);
        }
        if (adapt_d) {
            sgd_step(out.params.theta_d, gd, meta.eta2, StepDirection::ascend);
            clip_values(out.params.theta_d, cfg.disc_clip);
        }
    }
    return out;
}

}  // namespace

void MetaConfig::validate() const {
    check_inner_lr(eta1, "eta1");
    check_inner_lr(eta2, "eta2");
    if (inner_steps < 1) throw ConfigError("inner_steps must be positive");
    if (task_batch_size < 1) throw ConfigError("task_batch_size must be positive");
    if (outer_steps < 0) throw ConfigError("outer_steps must be non-negative");
    if (outer_lr <= 0.0) throw ConfigError("outer_lr must be positive");
    if (lambda_adv < 0.0) throw ConfigError("lambda_adv must be non-negative");
    if (!first_order)
        throw ConfigError("only first-order meta-gradients are supported");
    if (checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be non-negative");
}

LossBackend LossBackend::standard(const ModelConfig& cfg, const MetaConfig& meta) {
    const double lambda = meta.cvae_only ? 0.0 : meta.lambda_adv;
    LossBackend backend;
    backend.vg = [cfg, lambda](const ModelParams& p, const TaskSet& set, Rng& rng) {
        return joint_vg_loss(cfg, p, set.x, set.a, rng, lambda);
    };
    backend.d = [cfg](const ModelParams& p, const TaskSet& set, Rng& rng) {
        return disc_loss(cfg, p, set.x, set.a, rng);
    };
    return backend;
}

ModelParams inner_adapt(const ModelConfig& cfg, const MetaConfig& meta,
                        const LossBackend& backend, const ModelParams& params,
                        std::span<const Task> tasks, Rng& rng) {
    return inner_adapt_impl(cfg, meta, backend, params, tasks, rng).params;
}

void outer_update(const ModelConfig& cfg, const MetaConfig& meta, const LossBackend& backend,
                  TrainState& state, std::span<const Task> tasks) {
    if (tasks.empty()) throw ConfigError("outer_update: empty task batch");
    const bool use_d = !meta.cvae_only;
    const double inv_n = 1.0 / static_cast<double>(tasks.size());
    state.step += 1;

    TraceRow row;
    row.step = state.step;
    row.inner_vg = kNan;
    row.inner_d = kNan;
    row.outer_d = kNan;

    const ModelParams* eval_params = &state.params;
    ModelParams adapted;
    if (meta.meta_enabled) {
        InnerOut io;
        try {
            io = inner_adapt_impl(cfg, meta, backend, state.params, tasks, state.rng);
        } catch (const DivergenceError& e) {
            throw DivergenceError(state.step, e.what());
        }
        adapted = std::move(io.params);
        row.inner_vg = io.first_vg;
        row.inner_d = io.first_d;
        eval_params = &adapted;
    }

    // Query losses at the (possibly adapted) parameters; with first-order
    // meta-gradients these are also the gradients applied to the originals.
    ParamSet ge = ParamSet::zeros(state.params.theta_e.size());
    ParamSet gg = ParamSet::zeros(state.params.theta_g.size());
    ParamSet gd;
    double outer_vg = 0.0, outer_d = 0.0;
    for (const Task& task : tasks) {
        const LossValue lv = backend.vg(*eval_params, task.query, state.rng);
        if (!std::isfinite(lv.value))
            throw DivergenceError(state.step, "outer joint objective is not finite");
        outer_vg += lv.value * inv_n;
        add_scaled(ge, *lv.grad_e, inv_n);
        add_scaled(gg, *lv.grad_g, inv_n);
    }
    if (use_d) {
        gd = ParamSet::zeros(state.params.theta_d.size());
        for (const Task& task : tasks) {
            const LossValue ld = backend.d(*eval_params, task.query, state.rng);
            if (!std::isfinite(ld.value))
                throw DivergenceError(state.step, "outer discriminator objective is not finite");
            outer_d += ld.value * inv_n;
            add_scaled(gd, *ld.grad_d, inv_n);
        }
    }
    row.outer_vg = outer_vg;
    if (use_d) row.outer_d = outer_d;

    ParamSet eg = concat(state.params.theta_e, state.params.theta_g);
    const ParamSet geg = concat(ge, gg);
    optimizer_step(state.opt_eg, eg, geg, StepDirection::descend);
    split_into(eg, state.params.theta_e, state.params.theta_g);
    if (use_d) {
        optimizer_step(state.opt_d, state.params.theta_d, gd, StepDirection::ascend);
        clip_values(state.params.theta_d, cfg.disc_clip);
    }

    if (!state.params.is_finite())
        throw DivergenceError(state.step, "parameters are not finite after outer update");
    state.trace.push_back(row);
}

TrainState train(const ModelConfig& cfg, const MetaConfig& meta, const EpisodeConfig& ecfg,
                 const ClassPool& pool, std::uint64_t seed, const TrainHooks& hooks) {
    cfg.validate();
    meta.validate();
    ecfg.validate();

    TrainState state;
    state.rng = Rng(seed);
    state.params = init_params(cfg, state.rng);
    const long long n_eg = state.params.theta_e.size() + state.params.theta_g.size();
    const long long n_d = state.params.theta_d.size();
    if (meta.outer_kind == OptKind::adam) {
        state.opt_eg = OptimizerState::adam(n_eg, meta.outer_lr, meta.adam_beta1,
                                            meta.adam_beta2, meta.adam_epsilon);
        state.opt_d = OptimizerState::adam(n_d, meta.outer_lr, meta.adam_beta1, meta.adam_beta2,
                                           meta.adam_epsilon);
    } else {
        state.opt_eg = OptimizerState::sgd(meta.outer_lr);
        state.opt_d = OptimizerState::sgd(meta.outer_lr);
    }

    const LossBackend backend = LossBackend::standard(cfg, meta);
    for (int step = 0; step < meta.outer_steps; ++step) {
        const std::vector<Task> tasks = sample_task_batch(pool, ecfg, state.rng,
                                                          meta.split_mode(),
                                                          meta.task_batch_size);
        if (hooks.on_tasks) hooks.on_tasks(state.step + 1, tasks);
        try {
            outer_update(cfg, meta, backend, state, tasks);
        } catch (const DivergenceError& e) {
            // Abort with the tail of the loss trace attached rather than
            // clamping and carrying on.
            std::string msg = e.what();
            msg += "; trace tail:";
            const std::size_t from = state.trace.size() > 5 ? state.trace.size() - 5 : 0;
            for (std::size_t i = from; i < state.trace.size(); ++i)
                msg += " [" + format_trace_row(state.trace[i]) + "]";
            throw DivergenceError(e.step, msg);
        }
        if (hooks.on_step) hooks.on_step(state.trace.back());
        if (meta.checkpoint_interval > 0 && state.step % meta.checkpoint_interval == 0 &&
            hooks.on_checkpoint)
            hooks.on_checkpoint(state);
    }
    return state;
}

std::string format_trace_row(const TraceRow& row) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%lld\t%.17g\t%.17g\t%.17g\t%.17g", row.step, row.inner_vg,
                  row.inner_d, row.outer_vg, row.outer_d);
    return buf;
}

}  // namespace metazsl
