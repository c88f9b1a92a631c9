#include "metazsl/genmodel.hpp"

#include <cmath>

#include "metazsl/errors.hpp"

namespace metazsl {

ModelConfig ModelConfig::make(int feature_dim, int attr_dim, int latent_dim,
                              std::vector<int> encoder_hidden, std::vector<int> decoder_hidden,
                              std::vector<int> disc_hidden, double dropout_rate) {
    ModelConfig cfg;
    cfg.feature_dim = feature_dim;
    cfg.attr_dim = attr_dim;
    cfg.latent_dim = latent_dim;
    cfg.dropout_rate = dropout_rate;

    std::vector<int> enc{feature_dim + attr_dim};
    enc.insert(enc.end(), encoder_hidden.begin(), encoder_hidden.end());
    enc.push_back(2 * latent_dim);
    cfg.encoder = MlpSpec::dense(std::move(enc), dropout_rate);

    std::vector<int> dec{latent_dim + attr_dim};
    dec.insert(dec.end(), decoder_hidden.begin(), decoder_hidden.end());
    dec.push_back(feature_dim);
    cfg.decoder = MlpSpec::dense(std::move(dec), dropout_rate);

    std::vector<int> dis{feature_dim + attr_dim};
    dis.insert(dis.end(), disc_hidden.begin(), disc_hidden.end());
    dis.push_back(1);
    cfg.discriminator = MlpSpec::dense(std::move(dis), dropout_rate);

    cfg.validate();
    return cfg;
}

void ModelConfig::validate() const {
    if (feature_dim < 1 || attr_dim < 1 || latent_dim < 1)
        throw ConfigError("ModelConfig dimensions must be positive");
    encoder.validate();
    decoder.validate();
    discriminator.validate();
    if (encoder.input_width() != feature_dim + attr_dim)
        throw ConfigError("encoder input width must be feature_dim + attr_dim");
    if (encoder.output_width() != 2 * latent_dim)
        throw ConfigError("encoder output width must be 2 * latent_dim");
    if (decoder.input_width() != latent_dim + attr_dim)
        throw ConfigError("decoder input width must be latent_dim + attr_dim");
    if (decoder.output_width() != feature_dim)
        throw ConfigError("decoder output width must be feature_dim");
    if (discriminator.input_width() != feature_dim + attr_dim)
        throw ConfigError("discriminator input width must be feature_dim + attr_dim");
    if (discriminator.output_width() != 1)
        throw ConfigError("discriminator output width must be 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("dropout_rate must be in [0, 1)");
}

ModelParams init_params(const ModelConfig& cfg, Rng& rng) {
    ModelParams p;
    p.theta_e = glorot_init(cfg.encoder, rng);
    p.theta_g = glorot_init(cfg.decoder, rng);
    p.theta_d = glorot_init(cfg.discriminator, rng);
    return p;
}

Matrix clamp_log_var(Matrix log_var) {
    for (double& v : log_var.data) {
        if (v > kLogVarClamp) v = kLogVarClamp;
        if (v < -kLogVarClamp) v = -kLogVarClamp;
    }
    return log_var;
}

GaussianPosterior encode(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                         const Matrix& a) {
    if (x.rows != a.rows) throw ShapeError("encode: x and a batches differ");
    if (x.cols != cfg.feature_dim || a.cols != cfg.attr_dim)
        throw ShapeError("encode: column widths do not match config");
    const Matrix out = mlp_eval(cfg.encoder, params.theta_e, concat_cols(x, a));
    GaussianPosterior post;
    post.mu = slice_cols(out, 0, cfg.latent_dim);
    post.log_var = clamp_log_var(slice_cols(out, cfg.latent_dim, 2 * cfg.latent_dim));
    return post;
}

Matrix reparameterize(Rng& rng, const GaussianPosterior& post) {
    if (!post.mu.same_shape(post.log_var))
        throw ShapeError("reparameterize: mu and log_var shapes differ");
    const Matrix lv = clamp_log_var(post.log_var);
    Matrix z = gaussian_sample(rng, post.mu.rows, post.mu.cols);
    for (std::size_t i = 0; i < z.data.size(); ++i)
        z.data[i] = post.mu.data[i] + std::exp(0.5 * lv.data[i]) * z.data[i];
    return z;
}

Matrix decode(const ModelConfig& cfg, const ModelParams& params, const Matrix& z,
              const Matrix& a) {
    if (z.rows != a.rows) throw ShapeError("decode: z and a batches differ");
    if (z.cols != cfg.latent_dim || a.cols != cfg.attr_dim)
        throw ShapeError("decode: column widths do not match config");
    return mlp_eval(cfg.decoder, params.theta_g, concat_cols(z, a));
}

std::vector<double> discriminate(const ModelConfig& cfg, const ModelParams& params,
                                 const Matrix& x, const Matrix& a) {
    if (x.rows != a.rows) throw ShapeError("discriminate: x and a batches differ");
    if (x.cols != cfg.feature_dim || a.cols != cfg.attr_dim)
        throw ShapeError("discriminate: column widths do not match config");
    const Matrix out = mlp_eval(cfg.discriminator, params.theta_d, concat_cols(x, a));
    std::vector<double> scores(out.rows);
    for (int i = 0; i < out.rows; ++i) scores[i] = out(i, 0);
    return scores;
}

Matrix synthesize(const ModelConfig& cfg, const ModelParams& params, Rng& rng,
                  const std::vector<double>& attribute, int n) {
    if (n < 1) throw ConfigError("synthesize: n must be at least 1");
    if (attribute.size() != static_cast<std::size_t>(cfg.attr_dim))
        throw ShapeError("synthesize: attribute length does not match config");
    const Matrix z = gaussian_sample(rng, n, cfg.latent_dim);
    const Matrix a = repeat_row(attribute, n);
    return decode(cfg, params, z, a);
}

}  // namespace metazsl
