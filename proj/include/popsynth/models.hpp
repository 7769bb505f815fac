#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "popsynth/codec.hpp"
#include "popsynth/errors.hpp"
#include "popsynth/matrix.hpp"
#include "popsynth/nn.hpp"
#include "popsynth/rng.hpp"
#include "popsynth/sampling.hpp"
#include "popsynth/survey.hpp"

namespace popsynth {

/// Hyperparameters for both model families. Defaults follow the library's
/// desk-scale conventions: GAN nets use two hidden layers [100, 50] with
/// Leaky ReLU, the VAE encoder [200, 100, 50] and decoder [50, 100, 200]
/// with ReLU.
struct TrainConfig {
    int epochs = 300;
    int batch_size = 1000;
    double lr_generator = 1e-3;
    double lr_discriminator = 1e-3;
    double lr_vae = 1e-3;
    std::size_t noise_dim = 100;
    std::size_t latent_dim = 8;
    std::vector<std::size_t> gan_hidden = {100, 50};
    std::vector<std::size_t> vae_encoder_hidden = {200, 100, 50};
    std::vector<std::size_t> vae_decoder_hidden = {50, 100, 200};
    double kl_weight = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        require(epochs >= 0, ErrorCode::BadConfig, "epochs must be >= 0");
        require(batch_size > 0, ErrorCode::BadConfig, "batch_size must be positive");
        require(lr_generator > 0 && lr_discriminator > 0 && lr_vae > 0, ErrorCode::BadConfig,
                "learning rates must be positive");
        require(noise_dim > 0 && latent_dim > 0, ErrorCode::BadConfig,
                "noise_dim and latent_dim must be positive");
        require(kl_weight >= 0, ErrorCode::BadConfig, "kl_weight must be nonnegative");
    }
};

/// One record per completed epoch. For the GAN, primary/secondary are the
/// discriminator and generator losses; for the VAE, reconstruction and KL.
struct EpochRecord {
    int epoch = 0;
    double primary_loss = 0.0;
    double secondary_loss = 0.0;
    double wall_ms = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
};

namespace detail {

inline Matrix normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    CounterRng rng(seed);
    return Matrix::filled_normal(rows, cols, rng);
}

inline Matrix vstack(const Matrix& top, const Matrix& bottom) {
    require(top.cols() == bottom.cols(), ErrorCode::ShapeMismatch, "vstack width mismatch");
    Matrix out(top.rows() + bottom.rows(), top.cols());
    std::copy(top.data().begin(), top.data().end(), out.data().begin());
    std::copy(bottom.data().begin(), bottom.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(top.data().size()));
    return out;
}

inline Matrix take_rows(const Matrix& m, const IndexList& indices) {
    Matrix out(indices.size(), m.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const double* src = m.row_ptr(indices[i]);
        std::copy(src, src + m.cols(), out.row_ptr(i));
    }
    return out;
}

inline MlpNetwork build_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                            Activation hidden_act, std::size_t output_dim, Activation output_act,
                            CounterRng& rng) {
    MlpNetwork net;
    net.input_dim = input_dim;
    std::size_t dim = input_dim;
    for (std::size_t width : hidden) {
        net.layers.push_back(make_dense(dim, width, hidden_act, rng));
        dim = width;
    }
    net.layers.push_back(make_dense(dim, output_dim, output_act, rng));
    return net;
}

inline double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace detail

/// Standard-normal matrix drawn from a counter stream; the shape every noise
/// and reparameterization draw in this module uses.
inline Matrix standard_normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    return detail::normal_matrix(rows, cols, seed);
}

// ---------------------------------------------------------------------------
// GAN
// ---------------------------------------------------------------------------

/// Generator (noise -> encoded row, softmax within one-hot blocks) and
/// discriminator (encoded row -> probability of being real). Optimizer
/// moments live in the model so training is resumable and deterministic.
struct GanModel {
    MlpNetwork generator;
    MlpNetwork discriminator;
    std::size_t noise_dim = 0;
    BlockLayout layout;
    AdamState generator_opt;
    AdamState discriminator_opt;
};

struct GanStepLosses {
    double d_loss = 0.0;
    double g_loss = 0.0;
};

inline GanModel gan_init(const BlockLayout& layout, const TrainConfig& config,
                         std::uint64_t seed) {
    require(!layout.empty(), ErrorCode::BadConfig, "gan_init needs a non-empty layout");
    config.validate();
    GanModel model;
    model.layout = layout;
    model.noise_dim = config.noise_dim;

    CounterRng rng(derive_seed(seed, fnv1a64("gan_init")));
    model.generator = detail::build_mlp(config.noise_dim, config.gan_hidden,
                                        Activation::leaky_relu, layout.total_width,
                                        Activation::softmax_blocks, rng);
    model.generator.layers.back().blocks = layout.blocks;
    model.discriminator = detail::build_mlp(layout.total_width, config.gan_hidden,
                                            Activation::leaky_relu, 1, Activation::sigmoid, rng);

    model.generator_opt =
        AdamState(model.generator.parameter_count(), {config.lr_generator, 0.9, 0.999, 1e-8});
    model.discriminator_opt = AdamState(model.discriminator.parameter_count(),
                                        {config.lr_discriminator, 0.9, 0.999, 1e-8});
    return model;
}

/// Noise streams consumed by one GAN step; exposed so tests can replay them.
inline std::uint64_t gan_noise_seed_d(std::uint64_t step_seed) {
    return derive_seed(step_seed, fnv1a64("gan_noise_d"));
}
inline std::uint64_t gan_noise_seed_g(std::uint64_t step_seed) {
    return derive_seed(step_seed, fnv1a64("gan_noise_g"));
}

/// Discriminator BCE on a fixed labeled batch plus its gradient w.r.t. the
/// discriminator parameters (flat). The generator is not involved.
inline std::pair<double, std::vector<double>> gan_discriminator_loss_gradients(
    const GanModel& model, const Matrix& inputs, const Matrix& targets) {
    const ForwardCache cache = forward_cached(model.discriminator, inputs);
    const ScalarLoss loss = bce_loss(cache.output(), targets);
    const NetworkGradients grads = backward(model.discriminator, cache, loss.grad);
    return {loss.value, grads.flatten()};
}

/// Non-saturating generator loss -mean(ln D(G(z))) for fixed noise, plus its
/// gradient w.r.t. the generator parameters (flat); the discriminator is
/// frozen.
inline std::pair<double, std::vector<double>> gan_generator_loss_gradients(const GanModel& model,
                                                                           const Matrix& noise) {
    const ForwardCache gen_cache = forward_cached(model.generator, noise);
    const ForwardCache disc_cache = forward_cached(model.discriminator, gen_cache.output());
    const Matrix targets(noise.rows(), 1, 1.0);
    const ScalarLoss loss = bce_loss(disc_cache.output(), targets);
    const NetworkGradients disc_grads = backward(model.discriminator, disc_cache, loss.grad);
    const NetworkGradients gen_grads = backward(model.generator, gen_cache, disc_grads.input_grad);
    return {loss.value, gen_grads.flatten()};
}

/// Assembles the labeled discriminator batch for a step: real rows labeled
/// 1 on top of generated rows labeled 0.
inline std::pair<Matrix, Matrix> gan_discriminator_batch(const GanModel& model,
                                                         const Matrix& real_batch,
                                                         const Matrix& noise) {
    const Matrix fake = forward(model.generator, noise);
    Matrix targets(real_batch.rows() + fake.rows(), 1);
    for (std::size_t r = 0; r < real_batch.rows(); ++r) targets(r, 0) = 1.0;
    return {detail::vstack(real_batch, fake), std::move(targets)};
}

/// One discriminator update (real labeled 1, generated labeled 0) with the
/// generator frozen, then one non-saturating generator update with the
/// discriminator frozen.
inline GanStepLosses gan_train_step(GanModel& model, const Matrix& real_batch,
                                    std::uint64_t seed) {
    require(real_batch.rows() > 0, ErrorCode::EmptyBatch, "gan_train_step needs rows");
    const std::size_t n = real_batch.rows();
    GanStepLosses losses;

    // Discriminator phase.
    {
        const Matrix noise = detail::normal_matrix(n, model.noise_dim, gan_noise_seed_d(seed));
        const auto [inputs, targets] = gan_discriminator_batch(model, real_batch, noise);
        auto [loss, grads] = gan_discriminator_loss_gradients(model, inputs, targets);
        losses.d_loss = loss;

        auto params = model.discriminator.flat_parameters();
        adam_step(params, grads, model.discriminator_opt);
        model.discriminator.set_flat_parameters(params);
    }

    // Generator phase: maximize D's belief that fakes are real.
    {
        const Matrix noise = detail::normal_matrix(n, model.noise_dim, gan_noise_seed_g(seed));
        auto [loss, grads] = gan_generator_loss_gradients(model, noise);
        losses.g_loss = loss;

        auto params = model.generator.flat_parameters();
        adam_step(params, grads, model.generator_opt);
        model.generator.set_flat_parameters(params);
    }
    return losses;
}

/// Epoch loop with deterministically shuffled batches; one D step then one G
/// step per batch.
inline TrainLog gan_train(GanModel& model, const EncodedMatrix& train,
                          const TrainConfig& config) {
    config.validate();
    require(train.data.rows() > 0, ErrorCode::EmptyData, "gan_train needs data");
    TrainLog log;
    const std::size_t n = train.data.rows();
    IndexList order(n);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double start = detail::now_ms();
        std::iota(order.begin(), order.end(), std::size_t{0});
        CounterRng shuffle_rng(
            derive_seed(config.seed, fnv1a64("gan_epoch"), static_cast<std::uint64_t>(epoch)));
        shuffle(order, shuffle_rng);

        double d_total = 0.0;
        double g_total = 0.0;
        std::size_t steps = 0;
        for (std::size_t start_row = 0; start_row < n;
             start_row += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end_row =
                std::min(n, start_row + static_cast<std::size_t>(config.batch_size));
            const IndexList batch_idx(order.begin() + start_row, order.begin() + end_row);
            const Matrix batch = detail::take_rows(train.data, batch_idx);
            const std::uint64_t step_seed =
                derive_seed(config.seed, fnv1a64("gan_step"), static_cast<std::uint64_t>(epoch),
                            static_cast<std::uint64_t>(steps));
            const GanStepLosses losses = gan_train_step(model, batch, step_seed);
            d_total += losses.d_loss;
            g_total += losses.g_loss;
            ++steps;
        }
        log.epochs.push_back({epoch, d_total / static_cast<double>(steps),
                              g_total / static_cast<double>(steps),
                              detail::now_ms() - start});
    }
    return log;
}

// ---------------------------------------------------------------------------
// VAE
// ---------------------------------------------------------------------------

/// Encoder maps an encoded row to (mu, log variance) of the latent
/// posterior; decoder maps a latent draw back to a soft encoded row.
struct VaeModel {
    MlpNetwork encoder;  // width -> 2 * latent_dim
    MlpNetwork decoder;  // latent_dim -> width
    std::size_t latent_dim = 0;
    BlockLayout layout;
    double kl_weight = 1.0;
    AdamState opt;  // joint over encoder then decoder parameters
};

struct VaeStepLosses {
    double reconstruction = 0.0;
    double kl = 0.0;
};

inline VaeModel vae_init(const BlockLayout& layout, const TrainConfig& config,
                         std::uint64_t seed) {
    require(!layout.empty(), ErrorCode::BadConfig, "vae_init needs a non-empty layout");
    config.validate();
    VaeModel model;
    model.layout = layout;
    model.latent_dim = config.latent_dim;
    model.kl_weight = config.kl_weight;

    CounterRng rng(derive_seed(seed, fnv1a64("vae_init")));
    model.encoder = detail::build_mlp(layout.total_width, config.vae_encoder_hidden,
                                      Activation::relu, 2 * config.latent_dim,
                                      Activation::linear, rng);
    model.decoder =
        detail::build_mlp(config.latent_dim, config.vae_decoder_hidden, Activation::relu,
                          layout.total_width, Activation::softmax_blocks, rng);
    model.decoder.layers.back().blocks = layout.blocks;

    model.opt = AdamState(model.encoder.parameter_count() + model.decoder.parameter_count(),
                          {config.lr_vae, 0.9, 0.999, 1e-8});
    return model;
}

inline std::uint64_t vae_eps_seed(std::uint64_t step_seed) {
    return derive_seed(step_seed, fnv1a64("vae_eps"));
}

/// Joint flat parameter vector (encoder first, decoder second) used by the
/// optimizer and the gradient checker.
inline std::vector<double> vae_flat_parameters(const VaeModel& model) {
    auto params = model.encoder.flat_parameters();
    const auto dec = model.decoder.flat_parameters();
    params.insert(params.end(), dec.begin(), dec.end());
    return params;
}

inline void vae_set_flat_parameters(VaeModel& model, const std::vector<double>& flat) {
    const std::size_t enc_count = model.encoder.parameter_count();
    require(flat.size() == enc_count + model.decoder.parameter_count(), ErrorCode::ShapeMismatch,
            "vae flat parameter size mismatch");
    model.encoder.set_flat_parameters(
        std::vector<double>(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(enc_count)));
    model.decoder.set_flat_parameters(
        std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(enc_count), flat.end()));
}

/// Full VAE loss for a fixed reparameterization draw eps: encode, form
/// z = mu + sigma * eps, decode, reconstruction + KL. Returns the losses and
/// the gradient of (reconstruction + kl_weight * KL) w.r.t. the joint flat
/// parameters. Pure; used by the train step and directly checkable against
/// finite differences.
inline std::pair<VaeStepLosses, std::vector<double>> vae_loss_gradients(const VaeModel& model,
                                                                        const Matrix& batch,
                                                                        const Matrix& eps) {
    const std::size_t n = batch.rows();
    const std::size_t latent = model.latent_dim;
    require(eps.rows() == n && eps.cols() == latent, ErrorCode::ShapeMismatch,
            "eps shape mismatch");

    const ForwardCache enc_cache = forward_cached(model.encoder, batch);
    const Matrix& enc_out = enc_cache.output();

    Matrix mu(n, latent);
    Matrix log_var(n, latent);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t d = 0; d < latent; ++d) {
            mu(r, d) = enc_out(r, d);
            log_var(r, d) = enc_out(r, latent + d);
        }
    }

    Matrix z(n, latent);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double sigma = std::exp(0.5 * log_var.data()[i]);
        z.data()[i] = mu.data()[i] + sigma * eps.data()[i];
    }

    const ForwardCache dec_cache = forward_cached(model.decoder, z);
    const ScalarLoss recon = reconstruction_loss(dec_cache.output(), batch, model.layout);
    const KlLoss kl = kl_standard_normal(mu, log_var);

    const NetworkGradients dec_grads = backward(model.decoder, dec_cache, recon.grad);

    // Chain dL/dz back into (mu, log_var), then add the KL terms.
    Matrix enc_out_grad(n, 2 * latent);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t d = 0; d < latent; ++d) {
            const double dz = dec_grads.input_grad(r, d);
            const double sigma = std::exp(0.5 * log_var(r, d));
            enc_out_grad(r, d) = dz + model.kl_weight * kl.mu_grad(r, d);
            enc_out_grad(r, latent + d) =
                dz * eps(r, d) * 0.5 * sigma + model.kl_weight * kl.log_var_grad(r, d);
        }
    }
    const NetworkGradients enc_grads = backward(model.encoder, enc_cache, enc_out_grad);

    auto grads = enc_grads.flatten();
    const auto dec_flat = dec_grads.flatten();
    grads.insert(grads.end(), dec_flat.begin(), dec_flat.end());
    return {{recon.value, kl.value}, std::move(grads)};
}

/// Encode, sample z = mu + sigma * eps, decode, then one joint Adam update
/// of encoder and decoder on reconstruction + kl_weight * KL. Tests may pin
/// the reparameterization noise via `eps_override`.
inline VaeStepLosses vae_train_step(VaeModel& model, const Matrix& batch, std::uint64_t seed,
                                    const Matrix* eps_override = nullptr) {
    require(batch.rows() > 0, ErrorCode::EmptyBatch, "vae_train_step needs rows");
    const Matrix eps = eps_override
                           ? *eps_override
                           : detail::normal_matrix(batch.rows(), model.latent_dim,
                                                   vae_eps_seed(seed));
    const auto [losses, grads] = vae_loss_gradients(model, batch, eps);

    auto params = vae_flat_parameters(model);
    adam_step(params, grads, model.opt);
    vae_set_flat_parameters(model, params);
    return losses;
}

inline TrainLog vae_train(VaeModel& model, const EncodedMatrix& train,
                          const TrainConfig& config) {
    config.validate();
    require(train.data.rows() > 0, ErrorCode::EmptyData, "vae_train needs data");
    TrainLog log;
    const std::size_t n = train.data.rows();
    IndexList order(n);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double start = detail::now_ms();
        std::iota(order.begin(), order.end(), std::size_t{0});
        CounterRng shuffle_rng(
            derive_seed(config.seed, fnv1a64("vae_epoch"), static_cast<std::uint64_t>(epoch)));
        shuffle(order, shuffle_rng);

        double recon_total = 0.0;
        double kl_total = 0.0;
        std::size_t steps = 0;
        for (std::size_t start_row = 0; start_row < n;
             start_row += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end_row =
                std::min(n, start_row + static_cast<std::size_t>(config.batch_size));
            const IndexList batch_idx(order.begin() + start_row, order.begin() + end_row);
            const Matrix batch = detail::take_rows(train.data, batch_idx);
            const std::uint64_t step_seed =
                derive_seed(config.seed, fnv1a64("vae_step"), static_cast<std::uint64_t>(epoch),
                            static_cast<std::uint64_t>(steps));
            const VaeStepLosses losses = vae_train_step(model, batch, step_seed);
            recon_total += losses.reconstruction;
            kl_total += losses.kl;
            ++steps;
        }
        log.epochs.push_back({epoch, recon_total / static_cast<double>(steps),
                              kl_total / static_cast<double>(steps),
                              detail::now_ms() - start});
    }
    return log;
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

/// Draws `count` fresh agents: latent/noise ~ N(0, I), soft rows through the
/// generator or decoder, then sample-mode decoding. Output is always
/// schema-valid, trained or not.
inline SurveyTable synthesize(const GanModel& model, std::size_t count, std::uint64_t seed) {
    if (count == 0) return SurveyTable(model.layout.schema);
    const Matrix noise =
        detail::normal_matrix(count, model.noise_dim, derive_seed(seed, fnv1a64("synth_noise")));
    EncodedMatrix soft{model.layout, forward(model.generator, noise)};
    return decode(soft, DecodeMode::sample, derive_seed(seed, fnv1a64("synth_decode")));
}

inline SurveyTable synthesize(const VaeModel& model, std::size_t count, std::uint64_t seed) {
    if (count == 0) return SurveyTable(model.layout.schema);
    const Matrix z =
        detail::normal_matrix(count, model.latent_dim, derive_seed(seed, fnv1a64("synth_noise")));
    EncodedMatrix soft{model.layout, forward(model.decoder, z)};
    return decode(soft, DecodeMode::sample, derive_seed(seed, fnv1a64("synth_decode")));
}

}  // namespace popsynth
