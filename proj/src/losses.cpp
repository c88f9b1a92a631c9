#include "metazsl/losses.hpp"

#include <cmath>

#include "metazsl/errors.hpp"

namespace metazsl {

namespace {

std::vector<Matrix> draw_hidden_masks(const MlpSpec& spec, int batch, double rate, Rng& rng) {
    std::vector<Matrix> masks;
    if (rate <= 0.0) return masks;
    for (int l = 0; l < spec.layer_count() - 1; ++l)
        masks.push_back(dropout_mask(rng, batch, spec.widths[l + 1], rate));
    return masks;
}

const std::vector<Matrix>* maybe(const std::vector<Matrix>& masks) {
    return masks.empty() ? nullptr : &masks;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)) = -softplus(-x), stable for large |x|.
double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

void check_batch(const Matrix& x, const Matrix& a, const ModelConfig& cfg) {
    if (x.rows == 0) throw ShapeError("loss: empty batch");
    if (x.rows != a.rows) throw ShapeError("loss: x and a batches differ");
    if (x.cols != cfg.feature_dim || a.cols != cfg.attr_dim)
        throw ShapeError("loss: column widths do not match config");
}

void accumulate(ParamSet& into, const ParamSet& from, double scale) {
    for (std::size_t i = 0; i < into.values.size(); ++i)
        into.values[i] += scale * from.values[i];
}

struct PosteriorPass {
    ForwardCache cache;
    Matrix mu;
    Matrix log_var_raw;
    Matrix log_var;
};

PosteriorPass encoder_pass(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                           const Matrix& a, const std::vector<Matrix>& masks) {
    PosteriorPass p;
    ForwardResult fwd =
        mlp_forward(cfg.encoder, params.theta_e, concat_cols(x, a), maybe(masks));
    p.mu = slice_cols(fwd.output, 0, cfg.latent_dim);
    p.log_var_raw = slice_cols(fwd.output, cfg.latent_dim, 2 * cfg.latent_dim);
    p.log_var = clamp_log_var(p.log_var_raw);
    p.cache = std::move(fwd.cache);
    return p;
}

}  // namespace

KlResult kl_gaussian(const GaussianPosterior& post) {
    if (!post.mu.same_shape(post.log_var))
        throw ShapeError("kl_gaussian: mu and log_var shapes differ");
    const int batch = post.mu.rows;
    KlResult res;
    res.dmu = Matrix(post.mu.rows, post.mu.cols);
    res.dlog_var = Matrix(post.mu.rows, post.mu.cols);
    const double inv_b = 1.0 / batch;
    for (std::size_t i = 0; i < post.mu.data.size(); ++i) {
        const double mu = post.mu.data[i];
        const double lv = post.log_var.data[i];
        res.value += 0.5 * (mu * mu + std::exp(lv) - lv - 1.0) * inv_b;
        res.dmu.data[i] = mu * inv_b;
        res.dlog_var.data[i] = 0.5 * (std::exp(lv) - 1.0) * inv_b;
    }
    return res;
}

ElboNoise ElboNoise::draw(const ModelConfig& cfg, int batch, Rng& rng) {
    ElboNoise n;
    n.enc_masks = draw_hidden_masks(cfg.encoder, batch, cfg.dropout_rate, rng);
    n.eps = gaussian_sample(rng, batch, cfg.latent_dim);
    n.dec_masks = draw_hidden_masks(cfg.decoder, batch, cfg.dropout_rate, rng);
    return n;
}

GenAdvNoise GenAdvNoise::draw(const ModelConfig& cfg, int batch, Rng& rng) {
    GenAdvNoise n;
    n.z = gaussian_sample(rng, batch, cfg.latent_dim);
    n.dec_masks = draw_hidden_masks(cfg.decoder, batch, cfg.dropout_rate, rng);
    n.disc_masks = draw_hidden_masks(cfg.discriminator, batch, cfg.dropout_rate, rng);
    return n;
}

DiscNoise DiscNoise::draw(const ModelConfig& cfg, int batch, Rng& rng) {
    DiscNoise n;
    if (cfg.de_term_z == DeTermZ::posterior) {
        n.enc_masks = draw_hidden_masks(cfg.encoder, batch, cfg.dropout_rate, rng);
        n.eps = gaussian_sample(rng, batch, cfg.latent_dim);
    } else {
        n.z_de = gaussian_sample(rng, batch, cfg.latent_dim);
    }
    n.z_gen = gaussian_sample(rng, batch, cfg.latent_dim);
    n.gen_dec_masks = draw_hidden_masks(cfg.decoder, batch, cfg.dropout_rate, rng);
    n.de_dec_masks = draw_hidden_masks(cfg.decoder, batch, cfg.dropout_rate, rng);
    n.disc_masks_real = draw_hidden_masks(cfg.discriminator, batch, cfg.dropout_rate, rng);
    n.disc_masks_gen = draw_hidden_masks(cfg.discriminator, batch, cfg.dropout_rate, rng);
    n.disc_masks_de = draw_hidden_masks(cfg.discriminator, batch, cfg.dropout_rate, rng);
    return n;
}

JointVgNoise JointVgNoise::draw(const ModelConfig& cfg, int batch, Rng& rng, double lambda_adv) {
    JointVgNoise n;
    n.elbo = ElboNoise::draw(cfg, batch, rng);
    if (lambda_adv != 0.0) {
        n.gen = GenAdvNoise::draw(cfg, batch, rng);
        n.has_gen = true;
    }
    return n;
}

LossValue elbo_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                    const Matrix& a, const ElboNoise& noise) {
    check_batch(x, a, cfg);
    const int batch = x.rows;
    const double inv_b = 1.0 / batch;

    PosteriorPass enc = encoder_pass(cfg, params, x, a, noise.enc_masks);

    // z = mu + exp(lv/2) * eps
    Matrix sigma = enc.log_var;
    for (double& v : sigma.data) v = std::exp(0.5 * v);
    Matrix z = enc.mu;
    for (std::size_t i = 0; i < z.data.size(); ++i)
        z.data[i] += sigma.data[i] * noise.eps.data[i];

    ForwardResult dec = mlp_forward(cfg.decoder, params.theta_g, concat_cols(z, a),
                                    maybe(noise.dec_masks));
    const Matrix& xhat = dec.output;

    double recon = 0.0;
    Matrix dxhat(xhat.rows, xhat.cols);
    for (std::size_t i = 0; i < xhat.data.size(); ++i) {
        const double diff = xhat.data[i] - x.data[i];
        recon += 0.5 * diff * diff * inv_b;
        dxhat.data[i] = diff * inv_b;
    }

    const KlResult kl = kl_gaussian({enc.mu, enc.log_var});

    BackwardResult dec_bw = mlp_backward(dec.cache, dxhat);
    const Matrix dz = slice_cols(dec_bw.input_grad, 0, cfg.latent_dim);

    // Through the reparameterization into (mu, log_var), plus the KL terms,
    // with the clamp acting as a gradient gate on log_var.
    Matrix dmu = dz;
    for (std::size_t i = 0; i < dmu.data.size(); ++i) dmu.data[i] += kl.dmu.data[i];
    Matrix dlv(enc.log_var.rows, enc.log_var.cols);
    for (std::size_t i = 0; i < dlv.data.size(); ++i) {
        double g = dz.data[i] * noise.eps.data[i] * 0.5 * sigma.data[i] + kl.dlog_var.data[i];
        const double raw = enc.log_var_raw.data[i];
        if (raw <= -kLogVarClamp || raw >= kLogVarClamp) g = 0.0;
        dlv.data[i] = g;
    }

    BackwardResult enc_bw = mlp_backward(enc.cache, concat_cols(dmu, dlv));

    LossValue out;
    out.value = recon + kl.value;
    out.grad_e = std::move(enc_bw.param_grad);
    out.grad_g = std::move(dec_bw.param_grad);
    return out;
}

LossValue elbo_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                    const Matrix& a, Rng& rng) {
    return elbo_loss(cfg, params, x, a, ElboNoise::draw(cfg, x.rows, rng));
}

namespace {

// Scores one batch through the discriminator (with masks) and returns the
// contribution of `weight * mean term(score)` to a disc-side objective,
// accumulating d(objective)/d(theta_d). When input_grad is non-null the
// gradient w.r.t. the feature columns of the input is stored there instead
// of the theta_d gradient (generator-side use).
double scored_term(const ModelConfig& cfg, const ModelParams& params, const Matrix& feats,
                   const Matrix& a, const std::vector<Matrix>& masks, double weight,
                   bool probabilistic, bool real_side, ParamSet* theta_d_grad,
                   Matrix* input_grad) {
    const int batch = feats.rows;
    ForwardResult fwd = mlp_forward(cfg.discriminator, params.theta_d, concat_cols(feats, a),
                                    maybe(masks));
    const double inv_b = 1.0 / batch;
    double term = 0.0;
    Matrix upstream(batch, 1);
    for (int i = 0; i < batch; ++i) {
        const double s = fwd.output(i, 0);
        if (!probabilistic) {
            term += s * inv_b;
            upstream(i, 0) = weight * inv_b;
        } else if (real_side) {
            term += log_sigmoid(s) * inv_b;
            upstream(i, 0) = weight * (1.0 - sigmoid(s)) * inv_b;
        } else {
            term += log_sigmoid(-s) * inv_b;  // log(1 - sigmoid(s))
            upstream(i, 0) = -weight * sigmoid(s) * inv_b;
        }
    }
    BackwardResult bw = mlp_backward(fwd.cache, upstream);
    if (theta_d_grad) accumulate(*theta_d_grad, bw.param_grad, 1.0);
    if (input_grad) *input_grad = slice_cols(bw.input_grad, 0, cfg.feature_dim);
    return weight * term;
}

}  // namespace

LossValue disc_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                    const Matrix& a, const DiscNoise& noise) {
    check_batch(x, a, cfg);
    const bool prob = cfg.disc_mode == DiscMode::probabilistic;

    // Fakes are data as far as theta_d is concerned: plain forwards.
    Matrix z_de;
    if (cfg.de_term_z == DeTermZ::posterior) {
        PosteriorPass enc = encoder_pass(cfg, params, x, a, noise.enc_masks);
        z_de = enc.mu;
        for (std::size_t i = 0; i < z_de.data.size(); ++i)
            z_de.data[i] += std::exp(0.5 * enc.log_var.data[i]) * noise.eps.data[i];
    } else {
        z_de = noise.z_de;
    }
    const Matrix xhat_de =
        mlp_forward(cfg.decoder, params.theta_g, concat_cols(z_de, a), maybe(noise.de_dec_masks))
            .output;
    const Matrix xhat_gen =
        mlp_forward(cfg.decoder, params.theta_g, concat_cols(noise.z_gen, a),
                    maybe(noise.gen_dec_masks))
            .output;

    LossValue out;
    out.grad_d = ParamSet::zeros(params.theta_d.size());
    out.value += scored_term(cfg, params, x, a, noise.disc_masks_real, +1.0, prob, true,
                             &*out.grad_d, nullptr);
    out.value += scored_term(cfg, params, xhat_gen, a, noise.disc_masks_gen, prob ? +1.0 : -1.0,
                             prob, false, &*out.grad_d, nullptr);
    out.value += scored_term(cfg, params, xhat_de, a, noise.disc_masks_de, prob ? +1.0 : -1.0,
                             prob, false, &*out.grad_d, nullptr);
    return out;
}

LossValue disc_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                    const Matrix& a, Rng& rng) {
    return disc_loss(cfg, params, x, a, DiscNoise::draw(cfg, x.rows, rng));
}

LossValue gen_adv_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& a,
                       const GenAdvNoise& noise) {
    if (a.rows == 0) throw ShapeError("gen_adv_loss: empty batch");
    if (a.cols != cfg.attr_dim) throw ShapeError("gen_adv_loss: attribute width mismatch");
    const bool prob = cfg.disc_mode == DiscMode::probabilistic;

    ForwardResult dec = mlp_forward(cfg.decoder, params.theta_g, concat_cols(noise.z, a),
                                    maybe(noise.dec_masks));

    // Loss is -mean score (or -mean log sigmoid): the "real side" scoring
    // with weight -1. theta_d gradients are computed and dropped; only the
    // input gradient flows back into the generator.
    Matrix dxhat;
    LossValue out;
    out.value = scored_term(cfg, params, dec.output, a, noise.disc_masks, -1.0, prob, true,
                            nullptr, &dxhat);
    out.grad_g = mlp_backward(dec.cache, dxhat).param_grad;
    return out;
}

LossValue gen_adv_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& a,
                       Rng& rng) {
    return gen_adv_loss(cfg, params, a, GenAdvNoise::draw(cfg, a.rows, rng));
}

LossValue joint_vg_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                        const Matrix& a, const JointVgNoise& noise, double lambda_adv) {
    LossValue e = elbo_loss(cfg, params, x, a, noise.elbo);
    if (lambda_adv == 0.0) return e;
    if (!noise.has_gen) throw ConfigError("joint_vg_loss: noise drawn without adversarial part");
    const LossValue g = gen_adv_loss(cfg, params, a, noise.gen);
    const double sign = cfg.literal_adv_sign ? -1.0 : 1.0;
    e.value += lambda_adv * sign * g.value;
    accumulate(*e.grad_g, *g.grad_g, lambda_adv * sign);
    return e;
}

LossValue joint_vg_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                        const Matrix& a, Rng& rng, double lambda_adv) {
    return joint_vg_loss(cfg, params, x, a, JointVgNoise::draw(cfg, x.rows, rng, lambda_adv),
                         lambda_adv);
}

}  // namespace metazsl
