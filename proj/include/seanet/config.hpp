#pragma once

#include "seanet/model.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

namespace seanet {

/// Every tunable of the pipeline in one declarative structure. Defaults are
/// the published training protocol; `validate()` runs before any work starts
/// so bad setups fail immediately rather than mid-training.
struct Config {
    // data
    std::string dataset_root;
    std::string dataset_name = "EORSSD";
    int64_t input_size = 288;

    // optimization protocol
    int64_t batch_size = 8;
    std::string optimizer = "adam";
    double base_lr = 1e-4;
    double lr_decay = 0.1;
    int64_t lr_step_epochs = 30;
    int64_t epochs = 50;
    double lambda_edge = 0.5;
    uint64_t seed = 1;

    // architecture and ablations
    double width_mult = 1.0;
    bool no_dsmm = false;
    bool no_esam = false;
    bool no_sm = false;
    bool no_dilation = false;
    bool no_ccorr1 = false;
    bool no_ccorr2 = false;
    bool no_eeu = false;
    bool no_alignment = false;
    double dropout_p = 0.1;
    double iou_eps = 1.0;
    int64_t pool_kernel = 3;

    // artifacts
    std::string pretrained_backbone; // encoder checkpoint; empty = random init
    std::string out_dir = "runs/seanet";
    int64_t val_max_images = 0;      // cap validation set, 0 = use all
    int64_t max_steps_per_epoch = 0; // cap steps (smoke tests), 0 = full epoch

    void validate() const {
        SEANET_CHECK(input_size == 288,
                     "config: the forward path is fixed to 288x288 inputs, got input_size=",
                     input_size);
        SEANET_CHECK(batch_size > 0, "config: batch_size must be positive, got ", batch_size);
        SEANET_CHECK(optimizer == "adam", "config: unsupported optimizer '", optimizer,
                     "' (only 'adam')");
        SEANET_CHECK(base_lr > 0, "config: base_lr must be positive, got ", base_lr);
        SEANET_CHECK(lr_decay > 0 && lr_decay <= 1, "config: lr_decay must be in (0, 1], got ",
                     lr_decay);
        SEANET_CHECK(lr_step_epochs > 0, "config: lr_step_epochs must be positive, got ",
                     lr_step_epochs);
        SEANET_CHECK(epochs > 0, "config: epochs must be positive, got ", epochs);
        SEANET_CHECK(lambda_edge >= 0, "config: lambda_edge must be non-negative, got ",
                     lambda_edge);
        SEANET_CHECK(width_mult > 0, "config: width_mult must be positive, got ", width_mult);
        SEANET_CHECK(iou_eps > 0, "config: iou_eps must be positive, got ", iou_eps);
        SEANET_CHECK(val_max_images >= 0 && max_steps_per_epoch >= 0,
                     "config: caps must be non-negative");
        to_model_options().validate(); // flag consistency, dropout, pool kernel
    }

    ModelOptions to_model_options() const {
        ModelOptions o;
        o.width_mult = width_mult;
        o.no_dsmm = no_dsmm;
        o.no_esam = no_esam;
        o.no_sm = no_sm;
        o.no_dilation = no_dilation;
        o.no_ccorr1 = no_ccorr1;
        o.no_ccorr2 = no_ccorr2;
        o.no_eeu = no_eeu;
        o.no_alignment = no_alignment;
        o.pool_kernel = pool_kernel;
        o.dropout_p = dropout_p;
        return o;
    }

    /// Integer-epoch step schedule: one decay multiplier per full period.
    double lr_at_epoch(int64_t epoch) const {
        return base_lr * std::pow(lr_decay, static_cast<double>(epoch / lr_step_epochs));
    }
};

namespace config_detail {

template <typename T>
T get_as(const nlohmann::json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error("config: bad value for '" + key + "': " + v.dump());
    }
}

inline void set_field(Config& c, const std::string& key, const nlohmann::json& v) {
    if (key == "dataset_root") c.dataset_root = get_as<std::string>(v, key);
    else if (key == "dataset_name") c.dataset_name = get_as<std::string>(v, key);
    else if (key == "input_size") c.input_size = get_as<int64_t>(v, key);
    else if (key == "batch_size") c.batch_size = get_as<int64_t>(v, key);
    else if (key == "optimizer") c.optimizer = get_as<std::string>(v, key);
    else if (key == "base_lr") c.base_lr = get_as<double>(v, key);
    else if (key == "lr_decay") c.lr_decay = get_as<double>(v, key);
    else if (key == "lr_step_epochs") c.lr_step_epochs = get_as<int64_t>(v, key);
    else if (key == "epochs") c.epochs = get_as<int64_t>(v, key);
    else if (key == "lambda_edge") c.lambda_edge = get_as<double>(v, key);
    else if (key == "seed") c.seed = get_as<uint64_t>(v, key);
    else if (key == "width_mult") c.width_mult = get_as<double>(v, key);
    else if (key == "no_dsmm") c.no_dsmm = get_as<bool>(v, key);
    else if (key == "no_esam") c.no_esam = get_as<bool>(v, key);
    else if (key == "no_sm") c.no_sm = get_as<bool>(v, key);
    else if (key == "no_dilation") c.no_dilation = get_as<bool>(v, key);
    else if (key == "no_ccorr1") c.no_ccorr1 = get_as<bool>(v, key);
    else if (key == "no_ccorr2") c.no_ccorr2 = get_as<bool>(v, key);
    else if (key == "no_eeu") c.no_eeu = get_as<bool>(v, key);
    else if (key == "no_alignment") c.no_alignment = get_as<bool>(v, key);
    else if (key == "dropout_p") c.dropout_p = get_as<double>(v, key);
    else if (key == "iou_eps") c.iou_eps = get_as<double>(v, key);
    else if (key == "pool_kernel") c.pool_kernel = get_as<int64_t>(v, key);
    else if (key == "pretrained_backbone") c.pretrained_backbone = get_as<std::string>(v, key);
    else if (key == "out_dir") c.out_dir = get_as<std::string>(v, key);
    else if (key == "val_max_images") c.val_max_images = get_as<int64_t>(v, key);
    else if (key == "max_steps_per_epoch") c.max_steps_per_epoch = get_as<int64_t>(v, key);
    else
        throw Error("config: unknown key '" + key + "'");
}

} // namespace config_detail

inline nlohmann::json config_to_json(const Config& c) {
    return {{"dataset_root", c.dataset_root},
            {"dataset_name", c.dataset_name},
            {"input_size", c.input_size},
            {"batch_size", c.batch_size},
            {"optimizer", c.optimizer},
            {"base_lr", c.base_lr},
            {"lr_decay", c.lr_decay},
            {"lr_step_epochs", c.lr_step_epochs},
            {"epochs", c.epochs},
            {"lambda_edge", c.lambda_edge},
            {"seed", c.seed},
            {"width_mult", c.width_mult},
            {"no_dsmm", c.no_dsmm},
            {"no_esam", c.no_esam},
            {"no_sm", c.no_sm},
            {"no_dilation", c.no_dilation},
            {"no_ccorr1", c.no_ccorr1},
            {"no_ccorr2", c.no_ccorr2},
            {"no_eeu", c.no_eeu},
            {"no_alignment", c.no_alignment},
            {"dropout_p", c.dropout_p},
            {"iou_eps", c.iou_eps},
            {"pool_kernel", c.pool_kernel},
            {"pretrained_backbone", c.pretrained_backbone},
            {"out_dir", c.out_dir},
            {"val_max_images", c.val_max_images},
            {"max_steps_per_epoch", c.max_steps_per_epoch}};
}

inline Config config_from_json(const nlohmann::json& j) {
    SEANET_CHECK(j.is_object(), "config: top level must be a JSON object");
    Config c;
    for (const auto& [key, value] : j.items()) config_detail::set_field(c, key, value);
    return c;
}

inline Config load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    SEANET_CHECK(in.good(), "cannot open config file: ", file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed config file " + file.string() + ": " + e.what());
    }
    return config_from_json(j);
}

/// Apply one `key=value` command-line override. The value is parsed as JSON
/// when possible (numbers, booleans) and treated as a string otherwise.
inline void apply_override(Config& c, const std::string& assignment) {
    const auto eq = assignment.find('=');
    SEANET_CHECK(eq != std::string::npos && eq > 0, "override must look like key=value, got '",
                 assignment, "'");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    nlohmann::json v = nlohmann::json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (v.is_discarded() || v.is_object() || v.is_array()) v = raw;
    config_detail::set_field(c, key, v);
}

} // namespace seanet
