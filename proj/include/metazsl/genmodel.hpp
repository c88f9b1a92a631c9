#pragma once

#include <vector>

#include "metazsl/mlp.hpp"
#include "metazsl/rng.hpp"

namespace metazsl {

// Discriminator head: an unbounded critic score, or a logit scored through
// log-sigmoid terms in the losses.
enum class DiscMode { critic, probabilistic };

// Which latent feeds the reconstruction term of the discriminator objective:
// the encoder posterior (default) or a fresh unit-Gaussian draw.
enum class DeTermZ { posterior, prior };

// Shapes and behavioural flags of the three networks. The decoder and the
// generator are the same network applied to different latents, so there are
// only three parameter blocks.
struct ModelConfig {
    int feature_dim = 0;   // D
    int attr_dim = 0;      // d_a
    int latent_dim = 0;    // d_z
    MlpSpec encoder;       // (D + d_a) -> ... -> 2 d_z
    MlpSpec decoder;       // (d_z + d_a) -> ... -> D
    MlpSpec discriminator; // (D + d_a) -> ... -> 1
    double dropout_rate = 0.3;
    DiscMode disc_mode = DiscMode::critic;
    DeTermZ de_term_z = DeTermZ::posterior;
    // Keep the adversarial term's sign exactly as the joint objective writes
    // it (generator then lowers its critic score). Off by default.
    bool literal_adv_sign = false;
    // Discriminator weight clip bound; <= 0 disables clipping.
    double disc_clip = 0.01;

    // Standard assembly: encoder and discriminator with two hidden layers,
    // decoder with one.
    static ModelConfig make(int feature_dim, int attr_dim, int latent_dim,
                            std::vector<int> encoder_hidden = {1024, 512},
                            std::vector<int> decoder_hidden = {1024},
                            std::vector<int> disc_hidden = {1024, 512},
                            double dropout_rate = 0.3);
    void validate() const;
};

struct ModelParams {
    ParamSet theta_e;
    ParamSet theta_g;  // shared by decoder and generator
    ParamSet theta_d;

    bool is_finite() const {
        return theta_e.is_finite() && theta_g.is_finite() && theta_d.is_finite();
    }
};

ModelParams init_params(const ModelConfig& cfg, Rng& rng);

// Diagonal Gaussian over the latent space, one row per batch element.
// log_var is clamped to [-10, 10] at construction.
struct GaussianPosterior {
    Matrix mu;
    Matrix log_var;
};

constexpr double kLogVarClamp = 10.0;

Matrix clamp_log_var(Matrix log_var);

// Encoder applied to [x | a]; the output splits into (mu, log_var) halves.
// Evaluation mode: no dropout.
GaussianPosterior encode(const ModelConfig& cfg, const ModelParams& params, const Matrix& x,
                         const Matrix& a);

// z = mu + exp(log_var / 2) * eps with eps ~ N(0, I).
Matrix reparameterize(Rng& rng, const GaussianPosterior& post);

// Decoder/generator applied to [z | a]. Evaluation mode: no dropout.
Matrix decode(const ModelConfig& cfg, const ModelParams& params, const Matrix& z,
              const Matrix& a);

// Raw discriminator output for [x | a], one score per row.
std::vector<double> discriminate(const ModelConfig& cfg, const ModelParams& params,
                                 const Matrix& x, const Matrix& a);

// n class-conditional feature vectors: fresh z ~ N(0, I) per row, decoded
// with the class attribute. Dropout disabled.
Matrix synthesize(const ModelConfig& cfg, const ModelParams& params, Rng& rng,
                  const std::vector<double>& attribute, int n);

}  // namespace metazsl
