#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "popsynth/codec.hpp"
#include "popsynth/errors.hpp"
#include "popsynth/experiment.hpp"
#include "popsynth/models.hpp"
#include "popsynth/nn.hpp"
#include "popsynth/survey.hpp"

namespace popsynth {

inline constexpr int kCheckpointFormatVersion = 1;

namespace detail {

inline nlohmann::json network_to_json(const MlpNetwork& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        layers.push_back({{"in", layer.in_dim()},
                          {"out", layer.out_dim()},
                          {"activation", activation_name(layer.activation)},
                          {"leaky_slope", layer.leaky_slope}});
    }
    return nlohmann::json{{"input_dim", net.input_dim},
                          {"layers", std::move(layers)},
                          {"params", net.flat_parameters()}};
}

inline MlpNetwork network_from_json(const nlohmann::json& j, const BlockLayout& layout) {
    MlpNetwork net;
    net.input_dim = j.at("input_dim").get<std::size_t>();
    for (const auto& lj : j.at("layers")) {
        DenseLayer layer;
        layer.weights = Matrix(lj.at("out").get<std::size_t>(), lj.at("in").get<std::size_t>());
        layer.biases.assign(lj.at("out").get<std::size_t>(), 0.0);
        layer.activation = activation_from_name(lj.at("activation").get<std::string>());
        layer.leaky_slope = lj.value("leaky_slope", 0.2);
        if (layer.activation == Activation::softmax_blocks) layer.blocks = layout.blocks;
        net.layers.push_back(std::move(layer));
    }
    const auto params = j.at("params").get<std::vector<double>>();
    require(params.size() == net.parameter_count(), ErrorCode::CorruptFile,
            "checkpoint parameter count does not match declared shapes");
    net.set_flat_parameters(params);
    net.validate();
    return net;
}

}  // namespace detail

/// Either model family, reconstructed from a checkpoint file.
struct LoadedModel {
    ModelKind kind = ModelKind::gan;
    GanModel gan;
    VaeModel vae;
    TrainConfig config;

    SurveyTable synthesize_rows(std::size_t count, std::uint64_t seed) const {
        return kind == ModelKind::gan ? synthesize(gan, count, seed)
                                      : synthesize(vae, count, seed);
    }

    const SurveySchema& schema() const {
        return kind == ModelKind::gan ? gan.layout.schema : vae.layout.schema;
    }
};

inline void save_checkpoint(const GanModel& model, const TrainConfig& config,
                            const std::string& path) {
    nlohmann::json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["kind"] = "gan";
    j["schema"] = schema_to_json(model.layout.schema);
    j["schema_fingerprint"] = schema_fingerprint(model.layout.schema);
    j["config"] = train_config_to_json(config);
    j["noise_dim"] = model.noise_dim;
    j["generator"] = detail::network_to_json(model.generator);
    j["discriminator"] = detail::network_to_json(model.discriminator);
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoFailure, "cannot write checkpoint " + path);
    out << j.dump() << "\n";
    require(out.good(), ErrorCode::IoFailure, "write failed for checkpoint " + path);
}

inline void save_checkpoint(const VaeModel& model, const TrainConfig& config,
                            const std::string& path) {
    nlohmann::json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["kind"] = "vae";
    j["schema"] = schema_to_json(model.layout.schema);
    j["schema_fingerprint"] = schema_fingerprint(model.layout.schema);
    j["config"] = train_config_to_json(config);
    j["latent_dim"] = model.latent_dim;
    j["kl_weight"] = model.kl_weight;
    j["encoder"] = detail::network_to_json(model.encoder);
    j["decoder"] = detail::network_to_json(model.decoder);
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoFailure, "cannot write checkpoint " + path);
    out << j.dump() << "\n";
    require(out.good(), ErrorCode::IoFailure, "write failed for checkpoint " + path);
}

inline LoadedModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoFailure, "cannot open checkpoint " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::CorruptFile, "checkpoint parse error in " + path + ": " + e.what());
    }

    LoadedModel loaded;
    try {
        const int version = j.at("format_version").get<int>();
        require(version == kCheckpointFormatVersion, ErrorCode::VersionMismatch,
                "checkpoint format version " + std::to_string(version) + " not supported");

        const SurveySchema schema = schema_from_json(j.at("schema"));
        const auto fingerprint = j.at("schema_fingerprint").get<std::uint64_t>();
        require(fingerprint == schema_fingerprint(schema), ErrorCode::SchemaFingerprintMismatch,
                "checkpoint schema fingerprint does not match its schema");
        const BlockLayout layout = build_layout(schema);

        loaded.kind = model_kind_from_name(j.at("kind").get<std::string>());
        loaded.config = train_config_from_json(j.value("config", nlohmann::json::object()));
        if (loaded.kind == ModelKind::gan) {
            loaded.gan.layout = layout;
            loaded.gan.noise_dim = j.at("noise_dim").get<std::size_t>();
            loaded.gan.generator = detail::network_from_json(j.at("generator"), layout);
            loaded.gan.discriminator = detail::network_from_json(j.at("discriminator"), layout);
            loaded.gan.generator_opt = AdamState(loaded.gan.generator.parameter_count());
            loaded.gan.discriminator_opt =
                AdamState(loaded.gan.discriminator.parameter_count());
        } else {
            loaded.vae.layout = layout;
            loaded.vae.latent_dim = j.at("latent_dim").get<std::size_t>();
            loaded.vae.kl_weight = j.value("kl_weight", 1.0);
            loaded.vae.encoder = detail::network_from_json(j.at("encoder"), layout);
            loaded.vae.decoder = detail::network_from_json(j.at("decoder"), layout);
            loaded.vae.opt = AdamState(loaded.vae.encoder.parameter_count() +
                                       loaded.vae.decoder.parameter_count());
        }
    } catch (const Error&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::CorruptFile, "malformed checkpoint " + path + ": " + e.what());
    }
    return loaded;
}

}  // namespace popsynth
