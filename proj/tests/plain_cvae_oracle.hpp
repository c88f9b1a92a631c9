#pragma once

// Independently coded plain-CVAE training loop (no meta, no adversarial
// terms): per-neuron forward/backward and a hand-stepped Adam, sharing only
// the episode stream and the parameter initialization with the trainer it
// checks. Returns the per-step mean query loss.

#include <algorithm>
#include <cmath>
#include <vector>

#include "metazsl/episodes.hpp"
#include "metazsl/genmodel.hpp"

namespace oracles {

inline std::vector<double> plain_cvae_trace(const metazsl::ModelConfig& cfg, int steps,
                                            int task_batch, const metazsl::EpisodeConfig& ecfg,
                                            const metazsl::ClassPool& pool, std::uint64_t seed,
                                            double outer_lr) {
    using namespace metazsl;

    Rng rng(seed);
    ModelParams p0 = init_params(cfg, rng);  // shared starting point
    const int dz = cfg.latent_dim;
    auto enc_layers = unflatten(cfg.encoder, p0.theta_e);
    auto dec_layers = unflatten(cfg.decoder, p0.theta_g);

    const long long n_eg = cfg.encoder.param_count() + cfg.decoder.param_count();
    std::vector<double> m(n_eg, 0.0), v(n_eg, 0.0);
    long long t_step = 0;

    auto forward = [](const std::vector<LayerParams>& layers, const MlpSpec& spec,
                      const Matrix& input, std::vector<Matrix>& acts, std::vector<Matrix>& pre) {
        Matrix h = input;
        acts.clear();
        pre.clear();
        for (std::size_t l = 0; l < layers.size(); ++l) {
            acts.push_back(h);
            Matrix z(h.rows, layers[l].weights.cols);
            for (int r = 0; r < h.rows; ++r)
                for (int j = 0; j < layers[l].weights.cols; ++j) {
                    double s = layers[l].bias[j];
                    for (int i = 0; i < layers[l].weights.rows; ++i)
                        s += h(r, i) * layers[l].weights(i, j);
                    z(r, j) = s;
                }
            pre.push_back(z);
            if (spec.activations[l] == Activation::relu)
                for (double& x : z.data) x = x > 0 ? x : 0.0;
            h = z;
        }
        return h;
    };
    auto backward = [](const std::vector<LayerParams>& layers, const MlpSpec& spec,
                       const std::vector<Matrix>& acts, const std::vector<Matrix>& pre,
                       Matrix delta, std::vector<LayerParams>& grads) {
        grads.assign(layers.size(), {});
        for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
            if (spec.activations[l] == Activation::relu)
                for (std::size_t i = 0; i < delta.data.size(); ++i)
                    if (pre[l].data[i] <= 0) delta.data[i] = 0.0;
            grads[l].weights = Matrix(layers[l].weights.rows, layers[l].weights.cols);
            grads[l].bias.assign(layers[l].bias.size(), 0.0);
            for (int r = 0; r < delta.rows; ++r)
                for (int j = 0; j < delta.cols; ++j) {
                    grads[l].bias[j] += delta(r, j);
                    for (int i = 0; i < layers[l].weights.rows; ++i)
                        grads[l].weights(i, j) += acts[l](r, i) * delta(r, j);
                }
            Matrix prev(delta.rows, layers[l].weights.rows);
            for (int r = 0; r < delta.rows; ++r)
                for (int i = 0; i < layers[l].weights.rows; ++i) {
                    double s = 0.0;
                    for (int j = 0; j < delta.cols; ++j)
                        s += delta(r, j) * layers[l].weights(i, j);
                    prev(r, i) = s;
                }
            delta = prev;
        }
        return delta;
    };

    std::vector<double> trace;
    for (int step = 0; step < steps; ++step) {
        const auto tasks = sample_task_batch(pool, ecfg, rng, SplitMode::disjoint, task_batch);
        std::vector<LayerParams> genc(enc_layers.size()), gdec(dec_layers.size());
        for (std::size_t l = 0; l < enc_layers.size(); ++l) {
            genc[l].weights = Matrix(enc_layers[l].weights.rows, enc_layers[l].weights.cols);
            genc[l].bias.assign(enc_layers[l].bias.size(), 0.0);
        }
        for (std::size_t l = 0; l < dec_layers.size(); ++l) {
            gdec[l].weights = Matrix(dec_layers[l].weights.rows, dec_layers[l].weights.cols);
            gdec[l].bias.assign(dec_layers[l].bias.size(), 0.0);
        }
        double mean_loss = 0.0;
        for (const Task& task : tasks) {
            const TaskSet& set = task.query;  // meta disabled: query sets only
            const int batch = set.size();
            Matrix eps(batch, dz);
            for (double& x : eps.data) x = rng.normal();

            std::vector<Matrix> eacts, epre, dacts, dpre;
            const Matrix enc_out =
                forward(enc_layers, cfg.encoder, concat_cols(set.x, set.a), eacts, epre);
            Matrix mu = slice_cols(enc_out, 0, dz);
            Matrix lv = slice_cols(enc_out, dz, 2 * dz);
            for (double& x : lv.data) x = std::clamp(x, -10.0, 10.0);
            Matrix z = mu;
            for (std::size_t i = 0; i < z.data.size(); ++i)
                z.data[i] += std::exp(0.5 * lv.data[i]) * eps.data[i];
            const Matrix xhat =
                forward(dec_layers, cfg.decoder, concat_cols(z, set.a), dacts, dpre);

            double loss = 0.0;
            Matrix dxhat(batch, cfg.feature_dim);
            for (std::size_t i = 0; i < xhat.data.size(); ++i) {
                const double diff = xhat.data[i] - set.x.data[i];
                loss += 0.5 * diff * diff / batch;
                dxhat.data[i] = diff / batch;
            }
            for (std::size_t i = 0; i < mu.data.size(); ++i)
                loss += 0.5 *
                        (mu.data[i] * mu.data[i] + std::exp(lv.data[i]) - lv.data[i] - 1.0) /
                        batch;
            mean_loss += loss / tasks.size();

            std::vector<LayerParams> gd;
            const Matrix dv = backward(dec_layers, cfg.decoder, dacts, dpre, dxhat, gd);
            const Matrix dzm = slice_cols(dv, 0, dz);
            Matrix dmu = dzm;
            Matrix dlv(batch, dz);
            for (std::size_t i = 0; i < dmu.data.size(); ++i) {
                dmu.data[i] += mu.data[i] / batch;
                dlv.data[i] = dzm.data[i] * eps.data[i] * 0.5 * std::exp(0.5 * lv.data[i]) +
                              0.5 * (std::exp(lv.data[i]) - 1.0) / batch;
            }
            std::vector<LayerParams> ge;
            backward(enc_layers, cfg.encoder, eacts, epre, concat_cols(dmu, dlv), ge);
            for (std::size_t l = 0; l < ge.size(); ++l) {
                for (std::size_t i = 0; i < ge[l].weights.data.size(); ++i)
                    genc[l].weights.data[i] += ge[l].weights.data[i] / tasks.size();
                for (std::size_t i = 0; i < ge[l].bias.size(); ++i)
                    genc[l].bias[i] += ge[l].bias[i] / tasks.size();
            }
            for (std::size_t l = 0; l < gd.size(); ++l) {
                for (std::size_t i = 0; i < gd[l].weights.data.size(); ++i)
                    gdec[l].weights.data[i] += gd[l].weights.data[i] / tasks.size();
                for (std::size_t i = 0; i < gd[l].bias.size(); ++i)
                    gdec[l].bias[i] += gd[l].bias[i] / tasks.size();
            }
        }
        trace.push_back(mean_loss);

        ParamSet flat_grad = flatten(cfg.encoder, genc);
        {
            const ParamSet g2 = flatten(cfg.decoder, gdec);
            flat_grad.values.insert(flat_grad.values.end(), g2.values.begin(), g2.values.end());
        }
        ParamSet flat = flatten(cfg.encoder, enc_layers);
        {
            const ParamSet f2 = flatten(cfg.decoder, dec_layers);
            flat.values.insert(flat.values.end(), f2.values.begin(), f2.values.end());
        }
        t_step += 1;
        const double c1 = 1.0 - std::pow(0.9, static_cast<double>(t_step));
        const double c2 = 1.0 - std::pow(0.999, static_cast<double>(t_step));
        for (long long i = 0; i < n_eg; ++i) {
            const double g = flat_grad.values[i];
            m[i] = 0.9 * m[i] + 0.1 * g;
            v[i] = 0.999 * v[i] + 0.001 * g * g;
            flat.values[i] -= outer_lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + 1e-8);
        }
        ParamSet enc_flat, dec_flat;
        enc_flat.values.assign(flat.values.begin(),
                               flat.values.begin() + cfg.encoder.param_count());
        dec_flat.values.assign(flat.values.begin() + cfg.encoder.param_count(),
                               flat.values.end());
        enc_layers = unflatten(cfg.encoder, enc_flat);
        dec_layers = unflatten(cfg.decoder, dec_flat);
    }
    return trace;
}

}  // namespace oracles
