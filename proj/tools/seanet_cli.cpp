// Command-line entry points: train / evaluate / infer / complexity.
// Everything substantive lives in the library; this file only parses
// arguments, resolves the configuration and formats results.

#include "seanet/complexity.hpp"
#include "seanet/config.hpp"
#include "seanet/evaluate.hpp"
#include "seanet/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

/// Shared --config/--set handling. Precedence: built-in defaults, then the
/// config file, then each --set override in order.
struct ConfigArgs {
    std::string config_file;
    std::vector<std::string> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", config_file, "JSON configuration file")
            ->check(CLI::ExistingFile);
        cmd->add_option("--set", overrides,
                        "override one configuration key, e.g. --set base_lr=2e-4 "
                        "(repeatable, applied in order)");
    }

    seanet::Config resolve() const {
        seanet::Config c;
        if (!config_file.empty()) c = seanet::load_config(config_file);
        for (const auto& s : overrides) seanet::apply_override(c, s);
        return c;
    }
};

json report_to_json(const seanet::MetricReport& r) {
    return {{"s_alpha", r.s_alpha}, {"f_max", r.f_max}, {"f_mean", r.f_mean},
            {"f_adp", r.f_adp},     {"e_max", r.e_max}, {"e_mean", r.e_mean},
            {"e_adp", r.e_adp},     {"mae", r.mae}};
}

void write_text_file(const std::string& file, const std::string& text) {
    std::ofstream out(file);
    if (!out.good()) throw seanet::Error("cannot write file: " + file);
    out << text;
}

int run_train(const ConfigArgs& cfg_args) {
    const seanet::Config cfg = cfg_args.resolve();
    const seanet::TrainResult res = seanet::train_model(cfg, &std::cout);
    std::cout << "training finished: best val MAE " << std::setprecision(6)
              << res.best_val_mae << " at epoch " << res.best_epoch << "\n"
              << "  best checkpoint: " << res.best_checkpoint.string() << "\n"
              << "  last checkpoint: " << res.last_checkpoint.string() << "\n"
              << "  log: " << res.log_file.string() << std::endl;
    return 0;
}

int run_evaluate(const std::string& pred_dir, const std::string& gt_dir,
                 const std::string& out_file, const std::string& curves_file) {
    const seanet::FolderEvalResult res = seanet::evaluate_folder(pred_dir, gt_dir);
    for (const auto& stem : res.skipped)
        std::cerr << "warning: no matching pair for '" << stem << "', skipped" << std::endl;

    json report = report_to_json(res.mean);
    report["evaluated"] = res.evaluated();
    report["skipped"] = res.skipped;
    json per_image = json::object();
    for (const auto& [stem, rep] : res.per_image) per_image[stem] = report_to_json(rep);
    report["per_image"] = std::move(per_image);

    const std::string text = report.dump(2) + "\n";
    if (out_file.empty())
        std::cout << text;
    else
        write_text_file(out_file, text);

    if (!curves_file.empty()) {
        std::ostringstream csv;
        csv << std::setprecision(12) << "threshold,f_measure,e_measure\n";
        for (size_t k = 0; k < res.mean_f_curve.size(); ++k)
            csv << (static_cast<double>(k) / 255.0) << ',' << res.mean_f_curve[k] << ','
                << res.mean_e_curve[k] << '\n';
        write_text_file(curves_file, csv.str());
    }

    std::cout << std::setprecision(6) << "evaluated " << res.evaluated() << " pairs: MAE "
              << res.mean.mae << ", S " << res.mean.s_alpha << ", maxF " << res.mean.f_max
              << ", maxE " << res.mean.e_max << std::endl;
    return 0;
}

int run_infer(const ConfigArgs& cfg_args, const std::string& checkpoint,
              const std::string& input, const std::string& out_dir, bool viz) {
    std::shared_ptr<seanet::SeaNet<float>> net;
    if (cfg_args.config_file.empty() && cfg_args.overrides.empty()) {
        net = seanet::model_from_checkpoint(checkpoint);
    } else {
        const seanet::Config cfg = cfg_args.resolve();
        net = std::make_shared<seanet::SeaNet<float>>(cfg.to_model_options());
        seanet::load_checkpoint(checkpoint, *net);
    }
    const seanet::InferStats stats =
        seanet::infer_folder(*net, input, out_dir, /*input_size=*/288, viz);
    std::cout << "wrote " << stats.images << " saliency map(s) to "
              << stats.output_dir.string() << std::endl;
    return 0;
}

int run_complexity(const ConfigArgs& cfg_args, int64_t input_size,
                   const std::string& out_file) {
    const seanet::Config cfg = cfg_args.resolve();
    seanet::SeaNet<float> net(cfg.to_model_options());
    const seanet::ComplexityReport rep = seanet::analyze_complexity(net, input_size);

    json modules = json::array();
    for (const auto& e : rep.entries)
        modules.push_back({{"name", e.name}, {"params", e.params}, {"flops", e.flops}});
    const json out = {{"input_size", rep.input_size},
                      {"convention", rep.convention},
                      {"modules", std::move(modules)},
                      {"total_params", rep.total_params},
                      {"total_flops", rep.total_flops}};

    const std::string text = out.dump(2) + "\n";
    if (out_file.empty())
        std::cout << text;
    else
        write_text_file(out_file, text);

    std::cout << std::setprecision(4) << "total: " << rep.total_params / 1e6 << "M params, "
              << rep.total_flops / 1e9 << "G FLOPs at " << rep.input_size << "x"
              << rep.input_size << std::endl;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SeaNet: lightweight salient object detection in optical remote-sensing images"};
    app.require_subcommand(1);

    ConfigArgs train_cfg;
    CLI::App* train = app.add_subcommand("train", "train a model from a configuration");
    train_cfg.attach(train);

    std::string pred_dir, gt_dir, eval_out, curves_out;
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "score a folder of saliency maps against ground truth");
    evaluate->add_option("--pred", pred_dir, "directory of predicted maps")
        ->required()
        ->check(CLI::ExistingDirectory);
    evaluate->add_option("--gt", gt_dir, "directory of ground-truth masks")
        ->required()
        ->check(CLI::ExistingDirectory);
    evaluate->add_option("-o,--out", eval_out, "write the JSON report here (default: stdout)");
    evaluate->add_option("--curves", curves_out,
                         "write the 256-point F/E threshold curves as CSV");

    ConfigArgs infer_cfg;
    std::string ckpt_file, infer_input, infer_out;
    bool viz = false;
    CLI::App* infer = app.add_subcommand("infer", "predict saliency maps for images");
    infer->add_option("--checkpoint", ckpt_file, "trained model checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    infer->add_option("-i,--input", infer_input, "image file or directory")->required();
    infer->add_option("-o,--out", infer_out, "output directory")->required();
    infer->add_flag("--viz", viz, "also write side-by-side visualizations");
    infer_cfg.attach(infer);

    ConfigArgs cx_cfg;
    int64_t cx_input = 288;
    std::string cx_out;
    CLI::App* complexity =
        app.add_subcommand("complexity", "report per-module parameters and FLOPs");
    complexity->add_option("--input-size", cx_input, "square input size (multiple of 32)");
    complexity->add_option("-o,--out", cx_out, "write the JSON report here (default: stdout)");
    cx_cfg.attach(complexity);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return run_train(train_cfg);
        if (evaluate->parsed()) return run_evaluate(pred_dir, gt_dir, eval_out, curves_out);
        if (infer->parsed()) return run_infer(infer_cfg, ckpt_file, infer_input, infer_out, viz);
        if (complexity->parsed()) return run_complexity(cx_cfg, cx_input, cx_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
