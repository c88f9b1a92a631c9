#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "metazsl/errors.hpp"
#include "metazsl/mlp.hpp"
#include "metazsl/optim.hpp"
#include "metazsl/rng.hpp"
#include "oracles.hpp"

using namespace metazsl;

TEST_CASE("matrix basics and shape errors") {
    Matrix a(2, 3);
    a(0, 0) = 1;
    a(1, 2) = 5;
    CHECK(a.data.size() == 6);
    CHECK(a(1, 2) == 5);
    Matrix b(3, 2);
    CHECK(matmul(a, b).rows == 2);
    CHECK_THROWS_AS(matmul(a, a), ShapeError);
    CHECK_THROWS_AS(concat_cols(a, Matrix(3, 1)), ShapeError);
}

TEST_CASE("rng determinism and derivation") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    bool differs = false;
    Rng a2(42);
    for (int i = 0; i < 100; ++i) differs |= a2.next_u64() != c.next_u64();
    CHECK(differs);
    CHECK(Rng(7).derive(1).seed() != Rng(7).derive(2).seed());
    CHECK(Rng(7).derive(1).seed() == Rng(7).derive(1).seed());
}

TEST_CASE("gaussian_sample: same seed identical, different seeds differ") {
    Rng r1(9), r2(9), r3(10);
    const Matrix m1 = gaussian_sample(r1, 4, 5);
    const Matrix m2 = gaussian_sample(r2, 4, 5);
    const Matrix m3 = gaussian_sample(r3, 4, 5);
    CHECK(m1.data == m2.data);
    CHECK(m1.data != m3.data);
}

TEST_CASE("gaussian_sample: moments over 1e6 draws") {
    Rng rng(123);
    const Matrix m = gaussian_sample(rng, 1000, 1000);
    double mean = 0.0;
    for (double v : m.data) mean += v;
    mean /= static_cast<double>(m.data.size());
    double var = 0.0;
    for (double v : m.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(m.data.size());
    CHECK(mean > -0.01);
    CHECK(mean < 0.01);
    CHECK(var > 0.99);
    CHECK(var < 1.01);
}

TEST_CASE("dropout_mask: rate 0 is all ones") {
    Rng rng(1);
    const Matrix m = dropout_mask(rng, 3, 4, 0.0);
    for (double v : m.data) CHECK(v == 1.0);
}

TEST_CASE("dropout_mask: zero fraction and unit expectation at rate 0.3") {
    Rng rng(5);
    const Matrix m = dropout_mask(rng, 1000, 1000, 0.3);
    int zeros = 0;
    double sum = 0.0;
    for (double v : m.data) {
        if (v == 0.0)
            ++zeros;
        else
            CHECK(v == doctest::Approx(1.0 / 0.7).epsilon(1e-12));
        sum += v;
    }
    const double frac = static_cast<double>(zeros) / static_cast<double>(m.data.size());
    CHECK(frac > 0.295);
    CHECK(frac < 0.305);
    // mask * constant input keeps the mean within 1%
    CHECK(sum / static_cast<double>(m.data.size()) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("dropout_mask: rate out of range") {
    Rng rng(1);
    CHECK_THROWS_AS(dropout_mask(rng, 2, 2, 1.0), ConfigError);
    CHECK_THROWS_AS(dropout_mask(rng, 2, 2, -0.1), ConfigError);
}

TEST_CASE("flatten/unflatten round-trip") {
    const MlpSpec spec = MlpSpec::dense({3, 5, 2});
    Rng rng(11);
    const ParamSet p = glorot_init(spec, rng);
    CHECK(p.size() == spec.param_count());
    const ParamSet q = flatten(spec, unflatten(spec, p));
    CHECK(p.values == q.values);
}

TEST_CASE("mlp_forward: identity single layer") {
    const MlpSpec spec = MlpSpec::dense({2, 2});
    ParamSet p = ParamSet::zeros(spec.param_count());
    p.values[0] = 1.0;  // W(0,0)
    p.values[3] = 1.0;  // W(1,1)
    Matrix in(1, 2);
    in(0, 0) = 1.0;
    in(0, 1) = 2.0;
    const Matrix out = mlp_eval(spec, p, in);
    CHECK(out(0, 0) == 1.0);
    CHECK(out(0, 1) == 2.0);
}

TEST_CASE("mlp_forward: relu clamps a forced negative") {
    // One relu layer then a linear pass-through keeps the final layer linear.
    MlpSpec spec;
    spec.widths = {1, 1, 1};
    spec.activations = {Activation::relu, Activation::linear};
    ParamSet p = ParamSet::zeros(spec.param_count());
    p.values[0] = 2.0;  // W0
    p.values[1] = 1.0;  // b0
    p.values[2] = 1.0;  // W1
    Matrix in(1, 1);
    in(0, 0) = -3.0;
    const Matrix out = mlp_eval(spec, p, in);
    CHECK(out(0, 0) == 0.0);  // relu(2 * -3 + 1) = relu(-5) = 0
}

TEST_CASE("mlp_forward matches the reference forward pass") {
    const MlpSpec spec = MlpSpec::dense({4, 7, 5, 3});
    Rng rng(20);
    const ParamSet p = glorot_init(spec, rng);
    const Matrix in = gaussian_sample(rng, 6, 4);
    const auto [out, cache] = mlp_forward(spec, p, in);
    const Matrix ref = oracles::mlp_forward_reference(spec, p, in);
    REQUIRE(out.same_shape(ref));
    for (std::size_t i = 0; i < out.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));
    CHECK(mlp_eval(spec, p, in).data == out.data);
}

TEST_CASE("mlp_forward with dropout masks matches the reference") {
    const MlpSpec spec = MlpSpec::dense({3, 6, 4, 2}, 0.4);
    Rng rng(33);
    const ParamSet p = glorot_init(spec, rng);
    const Matrix in = gaussian_sample(rng, 5, 3);
    std::vector<Matrix> masks{dropout_mask(rng, 5, 6, 0.4), dropout_mask(rng, 5, 4, 0.4)};
    const auto [out, cache] = mlp_forward(spec, p, in, &masks);
    const Matrix ref = oracles::mlp_forward_reference(spec, p, in, &masks);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));
}

TEST_CASE("mlp_forward shape errors") {
    const MlpSpec spec = MlpSpec::dense({3, 2});
    const ParamSet p = ParamSet::zeros(spec.param_count());
    CHECK_THROWS_AS(mlp_eval(spec, p, Matrix(1, 4)), ShapeError);
    CHECK_THROWS_AS(mlp_eval(spec, ParamSet::zeros(3), Matrix(1, 3)), ShapeError);
}

TEST_CASE("mlp_backward: linear layer gradients are x and 1") {
    const MlpSpec spec = MlpSpec::dense({2, 1});
    ParamSet p = ParamSet::zeros(spec.param_count());
    p.values = {0.5, -0.25, 0.1};  // w0, w1, b
    Matrix in(1, 2);
    in(0, 0) = 3.0;
    in(0, 1) = -4.0;
    const auto fwd = mlp_forward(spec, p, in);
    Matrix up(1, 1);
    up(0, 0) = 1.0;
    const auto bw = mlp_backward(fwd.cache, up);
    CHECK(bw.param_grad.values[0] == 3.0);   // dW0 = x0
    CHECK(bw.param_grad.values[1] == -4.0);  // dW1 = x1
    CHECK(bw.param_grad.values[2] == 1.0);   // db
    CHECK(bw.input_grad(0, 0) == 0.5);
    CHECK(bw.input_grad(0, 1) == -0.25);
}

TEST_CASE("mlp_backward: dead relu passes zero gradient") {
    MlpSpec spec;
    spec.widths = {1, 1, 1};
    spec.activations = {Activation::relu, Activation::linear};
    ParamSet p = ParamSet::zeros(spec.param_count());
    p.values = {1.0, -2.0, 3.0, 0.0};  // W0, b0 (forces negative preact), W1, b1
    Matrix in(1, 1);
    in(0, 0) = 1.0;
    const auto fwd = mlp_forward(spec, p, in);
    Matrix up(1, 1);
    up(0, 0) = 1.0;
    const auto bw = mlp_backward(fwd.cache, up);
    CHECK(bw.input_grad(0, 0) == 0.0);
}

TEST_CASE("mlp_backward matches finite differences on a random 3-layer net") {
    const MlpSpec spec = MlpSpec::dense({4, 6, 5, 2});
    Rng rng(77);
    const ParamSet p = glorot_init(spec, rng);
    const Matrix in = gaussian_sample(rng, 3, 4);
    // Scalar loss: weighted sum of outputs, weights fixed.
    const Matrix w = gaussian_sample(rng, 3, 2);
    const auto fwd = mlp_forward(spec, p, in);
    const auto bw = mlp_backward(fwd.cache, w);
    const ParamSet fd = finite_diff_grad(
        [&](const ParamSet& q) {
            const Matrix out = mlp_eval(spec, q, in);
            double s = 0.0;
            for (std::size_t i = 0; i < out.data.size(); ++i) s += out.data[i] * w.data[i];
            return s;
        },
        p, 1e-5);
    CHECK(oracles::max_rel_err(bw.param_grad, fd) < 1e-6);
}

TEST_CASE("mlp_backward rejects a mismatched upstream shape") {
    const MlpSpec spec = MlpSpec::dense({2, 3});
    const ParamSet p = ParamSet::zeros(spec.param_count());
    const auto fwd = mlp_forward(spec, p, Matrix(2, 2));
    CHECK_THROWS_AS(mlp_backward(fwd.cache, Matrix(2, 2)), ShapeError);
}

TEST_CASE("finite_diff_grad on closed-form functions") {
    ParamSet p;
    p.values = {1.0, 2.0};
    const ParamSet g1 = finite_diff_grad(
        [](const ParamSet& q) {
            double s = 0.0;
            for (double v : q.values) s += 0.5 * v * v;
            return s;
        },
        p, 1e-5);
    CHECK(g1.values[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(g1.values[1] == doctest::Approx(2.0).epsilon(1e-8));

    p.values = {3.0, 5.0};
    const ParamSet g2 = finite_diff_grad(
        [](const ParamSet& q) { return q.values[0] * q.values[1]; }, p, 1e-5);
    CHECK(g2.values[0] == doctest::Approx(5.0).epsilon(1e-8));
    CHECK(g2.values[1] == doctest::Approx(3.0).epsilon(1e-8));

    CHECK_THROWS_AS(finite_diff_grad([](const ParamSet&) { return 1.0; }, p, 0.0), ConfigError);
}

TEST_CASE("sgd_step directions") {
    ParamSet p;
    p.values = {1.0};
    ParamSet g;
    g.values = {1.0};
    sgd_step(p, g, 0.1, StepDirection::descend);
    CHECK(p.values[0] == doctest::Approx(0.9).epsilon(1e-15));
    sgd_step(p, g, 0.1, StepDirection::ascend);
    CHECK(p.values[0] == doctest::Approx(1.0).epsilon(1e-15));
    ParamSet zero;
    zero.values = {0.0};
    sgd_step(p, zero, 0.5, StepDirection::descend);
    CHECK(p.values[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(sgd_step(p, ParamSet::zeros(2), 0.1, StepDirection::descend), ShapeError);
}

TEST_CASE("adam_step: first step moves by about -lr") {
    OptimizerState st = OptimizerState::adam(1, 0.001);
    ParamSet p;
    p.values = {0.0};
    ParamSet g;
    g.values = {1.0};
    adam_step(st, p, g);
    CHECK(st.step_count == 1);
    // mhat = vhat = 1 after bias correction, so the step is lr/(1 + eps).
    CHECK(p.values[0] == doctest::Approx(-0.001).epsilon(1e-6));
}

TEST_CASE("adam_step: zero gradient keeps parameters fixed") {
    OptimizerState st = OptimizerState::adam(2, 0.01);
    ParamSet p;
    p.values = {1.5, -2.5};
    ParamSet g = ParamSet::zeros(2);
    for (int i = 0; i < 50; ++i) adam_step(st, p, g);
    CHECK(p.values[0] == 1.5);
    CHECK(p.values[1] == -2.5);
}

TEST_CASE("adam_step: 3-step trace equals the hand-stepped reference") {
    const std::vector<double> grads{0.7, -1.3, 0.2};
    const auto ref = oracles::adam_trace_reference(2.0, grads, 0.05, 0.9, 0.999, 1e-8);
    OptimizerState st = OptimizerState::adam(1, 0.05);
    ParamSet p;
    p.values = {2.0};
    for (std::size_t t = 0; t < grads.size(); ++t) {
        ParamSet g;
        g.values = {grads[t]};
        adam_step(st, p, g);
        CHECK(p.values[0] == doctest::Approx(ref[t]).epsilon(1e-12));
    }
}

TEST_CASE("clip_values bounds and disabled mode") {
    ParamSet p;
    p.values = {0.5, -0.5, 0.005};
    clip_values(p, 0.01);
    CHECK(p.values[0] == 0.01);
    CHECK(p.values[1] == -0.01);
    CHECK(p.values[2] == 0.005);
    ParamSet q;
    q.values = {5.0};
    clip_values(q, 0.0);
    CHECK(q.values[0] == 5.0);
}

TEST_CASE("glorot_init stays inside the fan bound and is deterministic") {
    const MlpSpec spec = MlpSpec::dense({10, 20, 3});
    Rng r1(4), r2(4);
    const ParamSet a = glorot_init(spec, r1);
    const ParamSet b = glorot_init(spec, r2);
    CHECK(a.values == b.values);
    const double bound0 = std::sqrt(6.0 / (10 + 20));
    for (long long i = 0; i < 10 * 20; ++i) CHECK(std::abs(a.values[i]) <= bound0);
    // biases zero
    for (long long i = bias_offset(spec, 0); i < weight_offset(spec, 1); ++i)
        CHECK(a.values[i] == 0.0);
}
