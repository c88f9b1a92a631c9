#pragma once

#include <optional>

#include "metazsl/genmodel.hpp"

namespace metazsl {

// Scalar objective plus analytic gradients. A gradient is present exactly
// when the loss depends on that parameter block; absent entries are the
// stop-gradient contract (the discriminator objective never reaches
// theta_e/theta_g, the adversarial generator term never reaches theta_d).
struct LossValue {
    double value = 0.0;
    std::optional<ParamSet> grad_e;
    std::optional<ParamSet> grad_g;
    std::optional<ParamSet> grad_d;
};

struct KlResult {
    double value = 0.0;
    Matrix dmu;
    Matrix dlog_var;
};

// Closed-form KL(q || N(0, I)) for a diagonal Gaussian posterior, averaged
// over the batch: (1/B) sum_i 1/2 sum_j (mu^2 + e^lv - lv - 1).
KlResult kl_gaussian(const GaussianPosterior& post);

// Fixed noise for one loss evaluation. Freezing these makes every loss a
// deterministic function of the parameters, which is what the
// finite-difference checks differentiate. Draw order is fixed by the
// corresponding draw() and must not change:
//   elbo:  encoder masks (layer order), eps, decoder masks
//   gen:   z, decoder masks, discriminator masks
//   disc:  posterior path (encoder masks, eps) or prior z_de; then z_gen,
//          generator-path decoder masks, de-path decoder masks, and the
//          three discriminator mask sets (real, gen fake, de fake)
// Mask vectors stay empty when the config's dropout rate is zero; no rng
// draws are consumed for them in that case.
struct ElboNoise {
    std::vector<Matrix> enc_masks;
    Matrix eps;
    std::vector<Matrix> dec_masks;

    static ElboNoise draw(const ModelConfig& cfg, int batch, Rng& rng);
};

struct GenAdvNoise {
    Matrix z;
    std::vector<Matrix> dec_masks;
    std::vector<Matrix> disc_masks;

    static GenAdvNoise draw(const ModelConfig& cfg, int batch, Rng& rng);
};

struct DiscNoise {
    std::vector<Matrix> enc_masks;  // posterior mode only
    Matrix eps;                     // posterior mode only
    Matrix z_de;                    // prior mode only
    Matrix z_gen;
    std::vector<Matrix> gen_dec_masks;
    std::vector<Matrix> de_dec_masks;
    std::vector<Matrix> disc_masks_real;
    std::vector<Matrix> disc_masks_gen;
    std::vector<Matrix> disc_masks_de;

    static DiscNoise draw(const ModelConfig& cfg, int batch, Rng& rng);
};

struct JointVgNoise {
    ElboNoise elbo;
    GenAdvNoise gen;
    bool has_gen = false;

    // Skips the adversarial draws entirely when lambda_adv is zero.
    static JointVgNoise draw(const ModelConfig& cfg, int batch, Rng& rng, double lambda_adv);
};

// Negative CVAE evidence lower bound: KL to the unit-Gaussian prior plus a
// squared-error reconstruction through one reparameterized latent per row.
// Gradients over (theta_e, theta_g).
LossValue elbo_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                    const Matrix& a, const ElboNoise& noise);
LossValue elbo_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                    const Matrix& a, Rng& rng);

// Discriminator objective: mean score of real rows minus the mean scores of
// the generator fakes and the reconstruction fakes (log-sigmoid form in
// probabilistic mode). Fakes are constants here; the only gradient is
// theta_d. Ascend on it.
LossValue disc_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                    const Matrix& a, const DiscNoise& noise);
LossValue disc_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                    const Matrix& a, Rng& rng);

// Adversarial generator term, sign chosen so that minimizing it raises the
// critic's score on fakes: -mean score (critic mode) or -mean log sigmoid
// (probabilistic mode). Gradient over theta_g only.
LossValue gen_adv_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& a,
                       const GenAdvNoise& noise);
LossValue gen_adv_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& a,
                       Rng& rng);

// elbo + lambda_adv * adversarial term (sign flipped when the config asks
// for the literal objective). lambda_adv == 0 returns the elbo result
// bit-for-bit. Gradients over (theta_e, theta_g).
LossValue joint_vg_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                        const Matrix& a, const JointVgNoise& noise, double lambda_adv);
LossValue joint_vg_loss(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                        const Matrix& a, Rng& rng, double lambda_adv);

}  // namespace metazsl
