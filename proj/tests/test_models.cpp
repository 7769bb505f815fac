#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "popsynth/popsynth.hpp"

using namespace popsynth;

namespace {

BlockLayout survey_layout() { return build_layout(surrogate_schema(default_surrogate_profile())); }

Matrix encoded_rows(std::size_t n, std::uint64_t seed) {
    const SurveyTable table = generate_surrogate(n, seed, default_surrogate_profile());
    return encode(table, survey_layout()).data;
}

bool same_network(const MlpNetwork& a, const MlpNetwork& b) {
    return a.flat_parameters() == b.flat_parameters();
}

}  // namespace

TEST_CASE("gan_init builds the documented shapes deterministically") {
    const BlockLayout layout = survey_layout();
    TrainConfig config;
    const GanModel model = gan_init(layout, config, 42);

    REQUIRE(model.generator.layers.size() == 3);
    CHECK(model.generator.input_dim == 100);
    CHECK(model.generator.layers[0].out_dim() == 100);
    CHECK(model.generator.layers[1].out_dim() == 50);
    CHECK(model.generator.layers[2].out_dim() == 10);
    CHECK(model.generator.layers[2].activation == Activation::softmax_blocks);

    REQUIRE(model.discriminator.layers.size() == 3);
    CHECK(model.discriminator.input_dim == 10);
    CHECK(model.discriminator.layers[2].out_dim() == 1);
    CHECK(model.discriminator.layers[2].activation == Activation::sigmoid);

    const GanModel again = gan_init(layout, config, 42);
    CHECK(same_network(again.generator, model.generator));
    CHECK(same_network(again.discriminator, model.discriminator));

    const Matrix probe = encoded_rows(16, 1);
    const Matrix out = forward(model.discriminator, probe);
    for (double v : out.data()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("generator output rows are valid soft encodings") {
    const BlockLayout layout = survey_layout();
    TrainConfig config;
    const GanModel model = gan_init(layout, config, 7);
    const Matrix noise = standard_normal_matrix(8, model.noise_dim, 3);
    const Matrix soft = forward(model.generator, noise);
    for (std::size_t r = 0; r < soft.rows(); ++r) {
        for (const Block& block : layout.blocks) {
            if (block.kind == BlockKind::one_hot) {
                double total = 0.0;
                for (std::size_t j = 0; j < block.width; ++j) {
                    const double p = soft(r, block.offset + j);
                    CHECK(p >= 0.0);
                    total += p;
                }
                CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
            } else {
                CHECK(soft(r, block.offset) >= -1.0);
                CHECK(soft(r, block.offset) <= 1.0);
            }
        }
    }
}

TEST_CASE("untrained gan step losses start near ln 2") {
    const BlockLayout layout = survey_layout();
    TrainConfig config;
    GanModel model = gan_init(layout, config, 11);
    const Matrix real = encoded_rows(256, 2);
    const GanStepLosses losses = gan_train_step(model, real, 5);
    CHECK(std::abs(losses.d_loss - std::log(2.0)) < 0.15);
    CHECK(std::abs(losses.g_loss - std::log(2.0)) < 0.25);
}

TEST_CASE("gan step is deterministic given state and seed") {
    const BlockLayout layout = survey_layout();
    TrainConfig config;
    GanModel a = gan_init(layout, config, 13);
    GanModel b = a;
    const Matrix real = encoded_rows(64, 3);

    const GanStepLosses la = gan_train_step(a, real, 99);
    const GanStepLosses lb = gan_train_step(b, real, 99);
    CHECK(la.d_loss == lb.d_loss);
    CHECK(la.g_loss == lb.g_loss);
    CHECK(same_network(a.generator, b.generator));
    CHECK(same_network(a.discriminator, b.discriminator));

    CHECK_THROWS_AS(gan_train_step(a, Matrix(0, layout.total_width), 1), Error);
}

TEST_CASE("a tiny-rate discriminator step does not increase its loss") {
    const BlockLayout layout = survey_layout();
    TrainConfig config;
    config.lr_discriminator = 1e-6;
    config.lr_generator = 1e-6;
    GanModel model = gan_init(layout, config, 17);
    const GanModel before = model;
    const Matrix real = encoded_rows(64, 4);

    const std::uint64_t step_seed = 77;
    gan_train_step(model, real, step_seed);

    const Matrix noise =
        standard_normal_matrix(real.rows(), before.noise_dim, gan_noise_seed_d(step_seed));
    const auto [inputs, targets] = gan_discriminator_batch(before, real, noise);
    const double loss_before = gan_discriminator_loss_gradients(before, inputs, targets).first;
    const double loss_after = gan_discriminator_loss_gradients(model, inputs, targets).first;
    CHECK(loss_after <= loss_before + 1e-6);
}

TEST_CASE("gan loss gradients match finite differences on a 4-row batch") {
    const BlockLayout layout = survey_layout();
    TrainConfig config;
    config.noise_dim = 6;
    config.gan_hidden = {10, 8};
    GanModel model = gan_init(layout, config, 19);
    const Matrix real = encoded_rows(4, 5);

    SUBCASE("discriminator loss") {
        const Matrix noise = standard_normal_matrix(4, model.noise_dim, 21);
        const auto [inputs, targets] = gan_discriminator_batch(model, real, noise);
        const auto [loss, grads] = gan_discriminator_loss_gradients(model, inputs, targets);
        CHECK(loss > 0.0);

        GanModel probe = model;
        const auto report = gradient_check(
            [&](const std::vector<double>& flat) {
                probe.discriminator.set_flat_parameters(flat);
                return gan_discriminator_loss_gradients(probe, inputs, targets).first;
            },
            model.discriminator.flat_parameters(), grads, 1e-5, 1e-4);
        CHECK(report.passed());
    }
    SUBCASE("generator loss") {
        const Matrix noise = standard_normal_matrix(4, model.noise_dim, 23);
        const auto [loss, grads] = gan_generator_loss_gradients(model, noise);
        CHECK(loss > 0.0);

        GanModel probe = model;
        const auto report = gradient_check(
            [&](const std::vector<double>& flat) {
                probe.generator.set_flat_parameters(flat);
                return gan_generator_loss_gradients(probe, noise).first;
            },
            model.generator.flat_parameters(), grads, 1e-5, 1e-4);
        CHECK(report.passed());
    }
}

TEST_CASE("gan_train logs one record per epoch and zero epochs is a no-op") {
    const BlockLayout layout = survey_layout();
    TrainConfig config;
    config.batch_size = 32;
    GanModel model = gan_init(layout, config, 23);
    const GanModel before = model;
    const EncodedMatrix train{layout, encoded_rows(64, 6)};

    TrainConfig none = config;
    none.epochs = 0;
    CHECK(gan_train(model, train, none).epochs.empty());
    CHECK(same_network(model.generator, before.generator));
    CHECK(same_network(model.discriminator, before.discriminator));

    TrainConfig three = config;
    three.epochs = 3;
    const TrainLog log = gan_train(model, train, three);
    REQUIRE(log.epochs.size() == 3);
    for (const auto& record : log.epochs) {
        CHECK(std::isfinite(record.primary_loss));
        CHECK(std::isfinite(record.secondary_loss));
    }
}

TEST_CASE("vae_init builds the documented shapes deterministically") {
    const BlockLayout layout = survey_layout();
    TrainConfig config;
    const VaeModel model = vae_init(layout, config, 31);

    REQUIRE(model.encoder.layers.size() == 4);
    CHECK(model.encoder.input_dim == 10);
    CHECK(model.encoder.layers[0].out_dim() == 200);
    CHECK(model.encoder.layers[1].out_dim() == 100);
    CHECK(model.encoder.layers[2].out_dim() == 50);
    CHECK(model.encoder.layers[3].out_dim() == 2 * config.latent_dim);
    CHECK(model.encoder.layers[3].activation == Activation::linear);

    REQUIRE(model.decoder.layers.size() == 4);
    CHECK(model.decoder.input_dim == config.latent_dim);
    CHECK(model.decoder.layers[0].out_dim() == 50);
    CHECK(model.decoder.layers[1].out_dim() == 100);
    CHECK(model.decoder.layers[2].out_dim() == 200);
    CHECK(model.decoder.layers[3].out_dim() == 10);

    const VaeModel again = vae_init(layout, config, 31);
    CHECK(same_network(again.encoder, model.encoder));
    CHECK(same_network(again.decoder, model.decoder));

    // decoder output rows have softmax blocks summing to 1
    const Matrix z = standard_normal_matrix(4, config.latent_dim, 2);
    const Matrix soft = forward(model.decoder, z);
    for (std::size_t r = 0; r < soft.rows(); ++r) {
        for (const Block& block : layout.blocks) {
            if (block.kind != BlockKind::one_hot) continue;
            double total = 0.0;
            for (std::size_t j = 0; j < block.width; ++j) total += soft(r, block.offset + j);
            CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("zero reparameterization noise means z equals mu") {
    const BlockLayout layout = survey_layout();
    TrainConfig config;
    config.latent_dim = 4;
    const VaeModel model = vae_init(layout, config, 37);
    const Matrix batch = encoded_rows(6, 7);

    const Matrix zero_eps(6, 4);
    const auto [losses, grads] = vae_loss_gradients(model, batch, zero_eps);

    // Recompute by hand with z = mu.
    const Matrix enc_out = forward(model.encoder, batch);
    Matrix mu(6, 4);
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t d = 0; d < 4; ++d) mu(r, d) = enc_out(r, d);
    const Matrix decoded = forward(model.decoder, mu);
    const double expected = reconstruction_loss(decoded, batch, layout).value;
    CHECK(losses.reconstruction == doctest::Approx(expected).epsilon(1e-12));
    CHECK(losses.kl >= 0.0);
    CHECK(!grads.empty());
}

TEST_CASE("vae total loss gradient matches finite differences on a 4-row batch") {
    const BlockLayout layout = survey_layout();
    TrainConfig config;
    config.latent_dim = 3;
    config.vae_encoder_hidden = {12, 8};
    config.vae_decoder_hidden = {8, 12};
    const VaeModel model = vae_init(layout, config, 41);
    const Matrix batch = encoded_rows(4, 8);
    const Matrix eps = standard_normal_matrix(4, 3, 9);

    const auto [losses, grads] = vae_loss_gradients(model, batch, eps);
    CHECK(losses.kl >= 0.0);

    VaeModel probe = model;
    const auto report = gradient_check(
        [&](const std::vector<double>& flat) {
            vae_set_flat_parameters(probe, flat);
            const auto [l, g] = vae_loss_gradients(probe, batch, eps);
            return l.reconstruction + probe.kl_weight * l.kl;
        },
        vae_flat_parameters(model), grads, 1e-5, 1e-4);
    CHECK(report.passed());
}

TEST_CASE("vae training step is deterministic and keeps kl nonnegative") {
    const BlockLayout layout = survey_layout();
    TrainConfig config;
    config.latent_dim = 4;
    VaeModel a = vae_init(layout, config, 43);
    VaeModel b = a;
    const Matrix batch = encoded_rows(32, 9);

    for (std::uint64_t s = 0; s < 5; ++s) {
        const VaeStepLosses la = vae_train_step(a, batch, s);
        const VaeStepLosses lb = vae_train_step(b, batch, s);
        CHECK(la.reconstruction == lb.reconstruction);
        CHECK(la.kl == lb.kl);
        CHECK(la.kl >= 0.0);
    }
    CHECK(vae_flat_parameters(a) == vae_flat_parameters(b));

    CHECK_THROWS_AS(vae_train_step(a, Matrix(0, layout.total_width), 1), Error);
}

TEST_CASE("vae_train zero epochs is a no-op and log length equals epochs") {
    const BlockLayout layout = survey_layout();
    TrainConfig config;
    config.batch_size = 32;
    config.latent_dim = 4;
    VaeModel model = vae_init(layout, config, 47);
    const auto before = vae_flat_parameters(model);
    const EncodedMatrix train{layout, encoded_rows(64, 10)};

    TrainConfig none = config;
    none.epochs = 0;
    CHECK(vae_train(model, train, none).epochs.empty());
    CHECK(vae_flat_parameters(model) == before);

    TrainConfig four = config;
    four.epochs = 4;
    const TrainLog log = vae_train(model, train, four);
    REQUIRE(log.epochs.size() == 4);
}

TEST_CASE("vae reconstruction curve is mostly non-increasing on the toy problem") {
    const SurveyTable data = testutil::toy_table(0.8, 4000, 777);
    const BlockLayout layout = build_layout(data.schema());
    const EncodedMatrix encoded = encode(data, layout);

    TrainConfig config;
    config.epochs = 40;
    config.batch_size = 64;
    config.latent_dim = 4;
    config.vae_encoder_hidden = {32, 16};
    config.vae_decoder_hidden = {16, 32};
    config.lr_vae = 2e-5;
    config.seed = 32001;
    VaeModel model = vae_init(layout, config, 32002);
    const TrainLog log = vae_train(model, encoded, config);

    REQUIRE(log.epochs.size() == 40);
    int non_increasing = 0;
    for (std::size_t e = 1; e < log.epochs.size(); ++e)
        if (log.epochs[e].primary_loss <= log.epochs[e - 1].primary_loss + 1e-12)
            ++non_increasing;
    CHECK(non_increasing / static_cast<double>(log.epochs.size() - 1) >= 0.8);
    CHECK(log.epochs.back().primary_loss < log.epochs.front().primary_loss);
}

TEST_CASE("synthesize produces schema-valid deterministic tables") {
    const BlockLayout layout = survey_layout();
    TrainConfig config;
    const GanModel gan = gan_init(layout, config, 53);
    const VaeModel vae = vae_init(layout, config, 53);

    CHECK(synthesize(gan, 0, 1).row_count() == 0);
    CHECK(synthesize(vae, 0, 1).row_count() == 0);

    const SurveyTable from_gan = synthesize(gan, 10000, 5);
    const SurveyTable from_vae = synthesize(vae, 10000, 5);
    CHECK(from_gan.row_count() == 10000);
    CHECK(from_vae.row_count() == 10000);
    CHECK(synthesize(gan, 10000, 5) == from_gan);
    CHECK(synthesize(vae, 10000, 5) == from_vae);

    // SurveyTable construction validates every cell; spot-check anyway.
    const auto& schema = layout.schema;
    for (const SurveyTable* table : {&from_gan, &from_vae}) {
        for (std::size_t r = 0; r < 100; ++r) {
            CHECK(table->numeric_at(r, 0) >= schema.columns[0].numeric_min);
            CHECK(table->numeric_at(r, 0) <= schema.columns[0].numeric_max);
            CHECK(table->category_at(r, 2) >= 0);
            CHECK(table->category_at(r, 2) < 3);
        }
    }
}
