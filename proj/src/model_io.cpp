#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dncm/errors.hpp"
#include "dncm/trainer.hpp"

namespace dncm::train {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out.flush()) throw IoError("write failed for '" + path.string() + "'");
}

std::ifstream open_for_read(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

nlohmann::json config_to_json(const TrainingConfig& c) {
    return {
        {"batch_size", c.batch_size},
        {"momentum", c.momentum},
        {"learning_rate", c.learning_rate},
        {"lr_decay_factor", c.lr_decay_factor},
        {"lr_decay_every_epochs", c.lr_decay_every_epochs},
        {"max_epoch", c.max_epoch},
        {"shuffle_seed", c.shuffle_seed},
        {"metric", std::string(ncm::metric_name(c.metric))},
        {"hidden_widths", c.hidden_widths},
        {"bias_enabled", c.bias_enabled},
    };
}

TrainingConfig config_from_json(const nlohmann::json& j) {
    TrainingConfig c;
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.momentum = j.at("momentum").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.lr_decay_factor = j.at("lr_decay_factor").get<double>();
    c.lr_decay_every_epochs = j.at("lr_decay_every_epochs").get<std::size_t>();
    c.max_epoch = j.at("max_epoch").get<std::size_t>();
    c.shuffle_seed = j.at("shuffle_seed").get<std::uint64_t>();
    c.metric = ncm::parse_metric(j.at("metric").get<std::string>());
    c.hidden_widths = j.at("hidden_widths").get<std::vector<std::size_t>>();
    c.bias_enabled = j.at("bias_enabled").get<bool>();
    return c;
}

}  // namespace

void save_model(const fs::path& dir, const DncmModel& model, const ModelMetadata& meta) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create model directory '" + dir.string() + "': " + ec.message());

    std::ostringstream weights;
    net::write_weights(weights, model.extractor);
    write_file(dir / kExtractorFile, weights.str());

    std::ostringstream registry;
    ncm::write_registry(registry, model.registry);
    write_file(dir / kRegistryFile, registry.str());

    std::ostringstream stats;
    data::write_standardization(stats, model.standardization);
    write_file(dir / kStandardizationFile, stats.str());

    nlohmann::json j = {
        {"format_version", kModelFormatVersion},
        {"metric", std::string(ncm::metric_name(model.metric))},
        {"seed", meta.seed},
        {"config", config_to_json(meta.config)},
        {"input_dim", model.extractor.input_dim()},
        {"feature_dim", model.extractor.output_dim()},
    };
    write_file(dir / kMetadataFile, j.dump(2) + "\n");
}

DncmModel load_model(const fs::path& dir, ModelMetadata* meta) {
    if (!fs::is_directory(dir)) throw IoError("model directory '" + dir.string() + "' does not exist");
    DncmModel model;

    nlohmann::json j;
    try {
        auto in = open_for_read(dir / kMetadataFile);
        j = nlohmann::json::parse(in);
        if (j.at("format_version").get<int>() != kModelFormatVersion)
            throw InvalidInput("model: unsupported format version in " + (dir / kMetadataFile).string());
        model.metric = ncm::parse_metric(j.at("metric").get<std::string>());
        if (meta) {
            meta->seed = j.at("seed").get<std::uint64_t>();
            meta->config = config_from_json(j.at("config"));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("model: malformed metadata: " + std::string(e.what()));
    }

    {
        auto in = open_for_read(dir / kExtractorFile);
        model.extractor = net::read_weights(in);
    }
    {
        auto in = open_for_read(dir / kRegistryFile);
        model.registry = ncm::read_registry(in);
    }
    {
        auto in = open_for_read(dir / kStandardizationFile);
        model.standardization = data::read_standardization(in);
    }

    if (!model.registry.empty() && model.registry.dim() != model.extractor.output_dim())
        throw InvalidInput("model: registry dimension does not match extractor output");
    if (model.standardization.mean.size() != model.extractor.input_dim())
        throw InvalidInput("model: standardization dimension does not match extractor input");
    return model;
}

}  // namespace dncm::train
