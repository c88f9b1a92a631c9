#include "metazsl/mlp.hpp"

#include <cmath>
#include <cstring>

#include "metazsl/errors.hpp"

namespace metazsl {

MlpSpec MlpSpec::dense(std::vector<int> widths, double dropout_rate) {
    MlpSpec spec;
    spec.widths = std::move(widths);
    spec.dropout_rate = dropout_rate;
    const int layers = static_cast<int>(spec.widths.size()) - 1;
    spec.activations.assign(layers > 0 ? layers : 0, Activation::relu);
    if (!spec.activations.empty()) spec.activations.back() = Activation::linear;
    spec.validate();
    return spec;
}

long long MlpSpec::param_count() const {
    long long n = 0;
    for (int l = 0; l + 1 < static_cast<int>(widths.size()); ++l)
        n += static_cast<long long>(widths[l]) * widths[l + 1] + widths[l + 1];
    return n;
}

void MlpSpec::validate() const {
    if (widths.size() < 2) throw ConfigError("MlpSpec needs at least two widths");
    for (int w : widths)
        if (w < 1) throw ConfigError("MlpSpec widths must be positive");
    if (activations.size() != widths.size() - 1)
        throw ConfigError("MlpSpec needs one activation per layer");
    if (activations.back() != Activation::linear)
        throw ConfigError("MlpSpec final layer must be linear");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("MlpSpec dropout_rate must be in [0, 1)");
}

bool ParamSet::is_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

long long weight_offset(const MlpSpec& spec, int layer) {
    long long off = 0;
    for (int l = 0; l < layer; ++l)
        off += static_cast<long long>(spec.widths[l]) * spec.widths[l + 1] + spec.widths[l + 1];
    return off;
}

long long bias_offset(const MlpSpec& spec, int layer) {
    return weight_offset(spec, layer) +
           static_cast<long long>(spec.widths[layer]) * spec.widths[layer + 1];
}

std::vector<LayerParams> unflatten(const MlpSpec& spec, const ParamSet& params) {
    if (params.size() != spec.param_count())
        throw ShapeError("unflatten: parameter length does not match spec");
    std::vector<LayerParams> layers;
    for (int l = 0; l < spec.layer_count(); ++l) {
        const int in = spec.widths[l], out = spec.widths[l + 1];
        LayerParams lp;
        lp.weights = Matrix(in, out);
        const double* w = params.values.data() + weight_offset(spec, l);
        std::memcpy(lp.weights.data.data(), w, sizeof(double) * in * out);
        const double* b = params.values.data() + bias_offset(spec, l);
        lp.bias.assign(b, b + out);
        layers.push_back(std::move(lp));
    }
    return layers;
}

ParamSet flatten(const MlpSpec& spec, const std::vector<LayerParams>& layers) {
    if (static_cast<int>(layers.size()) != spec.layer_count())
        throw ShapeError("flatten: layer count does not match spec");
    ParamSet p = ParamSet::zeros(spec.param_count());
    for (int l = 0; l < spec.layer_count(); ++l) {
        const int in = spec.widths[l], out = spec.widths[l + 1];
        if (layers[l].weights.rows != in || layers[l].weights.cols != out ||
            layers[l].bias.size() != static_cast<std::size_t>(out))
            throw ShapeError("flatten: layer shape does not match spec");
        std::memcpy(p.values.data() + weight_offset(spec, l), layers[l].weights.data.data(),
                    sizeof(double) * in * out);
        std::memcpy(p.values.data() + bias_offset(spec, l), layers[l].bias.data(),
                    sizeof(double) * out);
    }
    return p;
}

namespace {

// out = x * W + b with W taken from the flat parameter block.
Matrix affine(const Matrix& x, const double* w, const double* b, int in, int out) {
    Matrix y(x.rows, out);
    for (int i = 0; i < x.rows; ++i) {
        const double* xrow = x.row(i);
        double* yrow = y.row(i);
        for (int j = 0; j < out; ++j) yrow[j] = b[j];
        for (int k = 0; k < in; ++k) {
            const double xik = xrow[k];
            const double* wrow = w + static_cast<std::size_t>(k) * out;
            for (int j = 0; j < out; ++j) yrow[j] += xik * wrow[j];
        }
    }
    return y;
}

}  // namespace

ForwardResult mlp_forward(const MlpSpec& spec, const ParamSet& params, const Matrix& input,
                          const std::vector<Matrix>* masks) {
    spec.validate();
    if (params.size() != spec.param_count())
        throw ShapeError("mlp_forward: parameter length does not match spec");
    if (input.cols != spec.input_width())
        throw ShapeError("mlp_forward: input width does not match spec");
    const int layers = spec.layer_count();
    if (masks && static_cast<int>(masks->size()) != layers - 1)
        throw ShapeError("mlp_forward: need one dropout mask per hidden layer");

    ForwardResult res;
    res.cache.spec = spec;
    res.cache.params = params;

    Matrix act = input;
    for (int l = 0; l < layers; ++l) {
        const int in = spec.widths[l], out = spec.widths[l + 1];
        res.cache.inputs.push_back(act);
        Matrix z = affine(act, params.values.data() + weight_offset(spec, l),
                          params.values.data() + bias_offset(spec, l), in, out);
        res.cache.preacts.push_back(z);
        if (spec.activations[l] == Activation::relu) {
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
        }
        if (l < layers - 1 && masks) {
            const Matrix& m = (*masks)[l];
            if (!m.same_shape(z)) throw ShapeError("mlp_forward: dropout mask shape mismatch");
            z = hadamard(z, m);
            res.cache.masks.push_back(m);
        }
        act = std::move(z);
    }
    res.output = std::move(act);
    return res;
}

Matrix mlp_eval(const MlpSpec& spec, const ParamSet& params, const Matrix& input) {
    if (params.size() != spec.param_count())
        throw ShapeError("mlp_eval: parameter length does not match spec");
    if (input.cols != spec.input_width())
        throw ShapeError("mlp_eval: input width does not match spec");
    Matrix act = input;
    for (int l = 0; l < spec.layer_count(); ++l) {
        act = affine(act, params.values.data() + weight_offset(spec, l),
                     params.values.data() + bias_offset(spec, l), spec.widths[l],
                     spec.widths[l + 1]);
        if (spec.activations[l] == Activation::relu)
            for (double& v : act.data) v = v > 0.0 ? v : 0.0;
    }
    return act;
}

BackwardResult mlp_backward(const ForwardCache& cache, const Matrix& upstream_grad) {
    const MlpSpec& spec = cache.spec;
    const int layers = spec.layer_count();
    if (static_cast<int>(cache.inputs.size()) != layers)
        throw ShapeError("mlp_backward: cache does not match a forward call");
    if (upstream_grad.rows != cache.inputs[0].rows || upstream_grad.cols != spec.output_width())
        throw ShapeError("mlp_backward: upstream gradient shape mismatch");

    BackwardResult res;
    res.param_grad = ParamSet::zeros(spec.param_count());

    Matrix g = upstream_grad;
    for (int l = layers - 1; l >= 0; --l) {
        const int in = spec.widths[l], out = spec.widths[l + 1];
        // Undo dropout, then the activation gate.
        if (l < layers - 1 && !cache.masks.empty()) g = hadamard(g, cache.masks[l]);
        if (spec.activations[l] == Activation::relu) {
            const Matrix& z = cache.preacts[l];
            for (std::size_t i = 0; i < g.data.size(); ++i)
                if (z.data[i] <= 0.0) g.data[i] = 0.0;
        }
        const Matrix& x = cache.inputs[l];
        // dW = x^T g
        double* dw = res.param_grad.values.data() + weight_offset(spec, l);
        for (int r = 0; r < x.rows; ++r) {
            const double* xrow = x.row(r);
            const double* grow = g.row(r);
            for (int i = 0; i < in; ++i) {
                const double xi = xrow[i];
                double* dwrow = dw + static_cast<std::size_t>(i) * out;
                for (int j = 0; j < out; ++j) dwrow[j] += xi * grow[j];
            }
        }
        // db = column sums of g
        double* db = res.param_grad.values.data() + bias_offset(spec, l);
        for (int r = 0; r < g.rows; ++r) {
            const double* grow = g.row(r);
            for (int j = 0; j < out; ++j) db[j] += grow[j];
        }
        // dx = g W^T
        const double* w = cache.params.values.data() + weight_offset(spec, l);
        Matrix dx(g.rows, in);
        for (int r = 0; r < g.rows; ++r) {
            const double* grow = g.row(r);
            double* dxrow = dx.row(r);
            for (int i = 0; i < in; ++i) {
                const double* wrow = w + static_cast<std::size_t>(i) * out;
                double s = 0.0;
                for (int j = 0; j < out; ++j) s += grow[j] * wrow[j];
                dxrow[i] = s;
            }
        }
        g = std::move(dx);
    }
    res.input_grad = std::move(g);
    return res;
}

ParamSet glorot_init(const MlpSpec& spec, Rng& rng) {
    ParamSet p = ParamSet::zeros(spec.param_count());
    for (int l = 0; l < spec.layer_count(); ++l) {
        const int in = spec.widths[l], out = spec.widths[l + 1];
        const double bound = std::sqrt(6.0 / (in + out));
        double* w = p.values.data() + weight_offset(spec, l);
        for (long long i = 0; i < static_cast<long long>(in) * out; ++i)
            w[i] = (2.0 * rng.uniform01() - 1.0) * bound;
        // biases stay zero
    }
    return p;
}

ParamSet finite_diff_grad(const std::function<double(const ParamSet&)>& loss_fn,
                          const ParamSet& params, double h) {
    if (h <= 0.0) throw ConfigError("finite_diff_grad: h must be positive");
    ParamSet grad = ParamSet::zeros(params.size());
    ParamSet probe = params;
    for (long long i = 0; i < params.size(); ++i) {
        const double orig = probe.values[i];
        probe.values[i] = orig + h;
        const double fp = loss_fn(probe);
        probe.values[i] = orig - h;
        const double fm = loss_fn(probe);
        probe.values[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("finite_diff_grad: loss is not finite");
        grad.values[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

}  // namespace metazsl
