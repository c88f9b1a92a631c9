#include "metazsl/optim.hpp"

#include <cmath>

#include "metazsl/errors.hpp"

namespace metazsl {

OptimizerState OptimizerState::sgd(double lr) {
    OptimizerState s;
    s.kind = OptKind::sgd;
    s.learning_rate = lr;
    return s;
}

OptimizerState OptimizerState::adam(long long param_count, double lr, double beta1, double beta2,
                                    double epsilon) {
    OptimizerState s;
    s.kind = OptKind::adam;
    s.learning_rate = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    s.m.assign(param_count, 0.0);
    s.v.assign(param_count, 0.0);
    return s;
}

void sgd_step(ParamSet& params, const ParamSet& grad, double lr, StepDirection dir) {
    if (params.size() != grad.size()) throw ShapeError("sgd_step: length mismatch");
    if (lr < 0.0) throw ConfigError("sgd_step: lr must be non-negative");
    const double sign = dir == StepDirection::descend ? -1.0 : 1.0;
    for (std::size_t i = 0; i < params.values.size(); ++i)
        params.values[i] += sign * lr * grad.values[i];
}

void adam_step(OptimizerState& state, ParamSet& params, const ParamSet& grad) {
    if (state.kind != OptKind::adam) throw ConfigError("adam_step: state is not adam");
    if (params.size() != grad.size() ||
        state.m.size() != params.values.size() || state.v.size() != params.values.size())
        throw ShapeError("adam_step: length mismatch");
    state.step_count += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        const double g = grad.values[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double mhat = state.m[i] / corr1;
        const double vhat = state.v[i] / corr2;
        params.values[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
}

void optimizer_step(OptimizerState& state, ParamSet& params, const ParamSet& grad,
                    StepDirection dir) {
    if (state.kind == OptKind::sgd) {
        sgd_step(params, grad, state.learning_rate, dir);
        state.step_count += 1;
        return;
    }
    if (dir == StepDirection::descend) {
        adam_step(state, params, grad);
    } else {
        ParamSet neg = grad;
        for (double& v : neg.values) v = -v;
        adam_step(state, params, neg);
    }
}

void clip_values(ParamSet& params, double c) {
    if (c <= 0.0) return;
    for (double& v : params.values) {
        if (v > c) v = c;
        if (v < -c) v = -c;
    }
}

}  // namespace metazsl
