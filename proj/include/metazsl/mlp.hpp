#pragma once

#include <functional>
#include <vector>

#include "metazsl/matrix.hpp"
#include "metazsl/rng.hpp"

namespace metazsl {

enum class Activation { relu, linear };

// Shape of a fully-connected stack. Layer l maps widths[l] -> widths[l+1];
// activations has one entry per layer and the last one must be linear.
// Dropout applies to hidden activations only (after the ReLU).
struct MlpSpec {
    std::vector<int> widths;
    std::vector<Activation> activations;
    double dropout_rate = 0.0;

    // ReLU on every hidden layer, linear output.
    static MlpSpec dense(std::vector<int> widths, double dropout_rate = 0.0);

    int layer_count() const { return static_cast<int>(widths.size()) - 1; }
    int input_width() const { return widths.front(); }
    int output_width() const { return widths.back(); }
    long long param_count() const;
    void validate() const;

    bool operator==(const MlpSpec&) const = default;
};

// Flat parameter vector laid out as (W0, b0, W1, b1, ...). W_l is stored
// row-major with shape widths[l] x widths[l+1].
struct ParamSet {
    std::vector<double> values;

    static ParamSet zeros(long long n) { return ParamSet{std::vector<double>(n, 0.0)}; }
    long long size() const { return static_cast<long long>(values.size()); }
    bool is_finite() const;
};

// Offset of layer l's weight block / bias block within the flat vector.
long long weight_offset(const MlpSpec& spec, int layer);
long long bias_offset(const MlpSpec& spec, int layer);

// Per-layer (weights, bias) view of a flat ParamSet, and its inverse.
// flatten(unflatten(p)) == p for any spec-conforming p.
struct LayerParams {
    Matrix weights;               // in x out
    std::vector<double> bias;     // out
};
std::vector<LayerParams> unflatten(const MlpSpec& spec, const ParamSet& params);
ParamSet flatten(const MlpSpec& spec, const std::vector<LayerParams>& layers);

// Everything mlp_backward needs: the layer shapes, a copy of the parameters
// the forward pass used, per-layer inputs and pre-activations, and the
// dropout masks (empty when the pass ran without dropout).
struct ForwardCache {
    MlpSpec spec;
    ParamSet params;
    std::vector<Matrix> inputs;     // one per layer, batch x widths[l]
    std::vector<Matrix> preacts;    // one per layer, batch x widths[l+1]
    std::vector<Matrix> masks;      // one per hidden layer, or empty
};

struct ForwardResult {
    Matrix output;
    ForwardCache cache;
};

// Runs the stack on a batch (rows are samples). When masks is non-null it
// must hold one mask per hidden layer, each batch x widths[l+1]; masks are
// applied to the post-ReLU activations.
ForwardResult mlp_forward(const MlpSpec& spec, const ParamSet& params, const Matrix& input,
                          const std::vector<Matrix>* masks = nullptr);

// Forward pass without building a cache (evaluation path, no dropout).
Matrix mlp_eval(const MlpSpec& spec, const ParamSet& params, const Matrix& input);

struct BackwardResult {
    ParamSet param_grad;
    Matrix input_grad;
};

// Gradients of the scalar loss whose gradient w.r.t. the forward output is
// upstream_grad. The cache must come from a matching mlp_forward call.
BackwardResult mlp_backward(const ForwardCache& cache, const Matrix& upstream_grad);

// Per-layer uniform init in +/- sqrt(6 / (fan_in + fan_out)); biases zero.
ParamSet glorot_init(const MlpSpec& spec, Rng& rng);

// Central-difference gradient (f(x+h e_i) - f(x-h e_i)) / 2h per coordinate.
// Test oracle for every analytic gradient in the library.
ParamSet finite_diff_grad(const std::function<double(const ParamSet&)>& loss_fn,
                          const ParamSet& params, double h);

}  // namespace metazsl
