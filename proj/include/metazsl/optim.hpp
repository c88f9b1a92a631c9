#pragma once

#include <cstdint>
#include <vector>

#include "metazsl/mlp.hpp"

namespace metazsl {

enum class StepDirection { descend, ascend };

enum class OptKind { sgd, adam };

// State for one flat parameter vector. SGD keeps only the learning rate;
// Adam adds bias-corrected first and second moments.
struct OptimizerState {
    OptKind kind = OptKind::sgd;
    long long step_count = 0;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::vector<double> m;  // first moment (adam)
    std::vector<double> v;  // second moment (adam)

    static OptimizerState sgd(double lr);
    static OptimizerState adam(long long param_count, double lr, double beta1 = 0.9,
                               double beta2 = 0.999, double epsilon = 1e-8);
};

// params -/+ lr * grad depending on direction.
void sgd_step(ParamSet& params, const ParamSet& grad, double lr, StepDirection dir);

// Standard Adam with bias correction; increments state.step_count. Always
// descends; callers wanting ascent negate the gradient.
void adam_step(OptimizerState& state, ParamSet& params, const ParamSet& grad);

// Dispatches on state.kind; ascent is grad negation for adam.
void optimizer_step(OptimizerState& state, ParamSet& params, const ParamSet& grad,
                    StepDirection dir);

// Clamps every entry to [-c, c]. c <= 0 disables clipping.
void clip_values(ParamSet& params, double c);

}  // namespace metazsl
