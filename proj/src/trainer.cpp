#include "seanet/trainer.hpp"

#include "seanet/losses.hpp"
#include "seanet/optim.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

namespace seanet {

namespace fs = std::filesystem;

namespace {

// Sentinel indices for the non-augmentation random streams. Real sample
// indices are non-negative, so the derived engines can never collide with an
// augmentation engine.
constexpr int64_t kShuffleStream = -1;
constexpr int64_t kDropoutStream = -2;

/// Copy `B` network-ready samples into one (B,3,S,S) image batch and one
/// (B,1,S,S) mask batch. Inputs carry no gradient.
void fill_batch(const std::vector<Sample>& samples, Tensor<float>& images,
                Tensor<float>& masks) {
    const int64_t b = static_cast<int64_t>(samples.size());
    const int64_t s = samples[0].image.dim(1);
    images = Tensor<float>(Shape{b, 3, s, s});
    masks = Tensor<float>(Shape{b, 1, s, s});
    for (int64_t i = 0; i < b; ++i) {
        SEANET_CHECK(samples[i].image.dim(1) == s && samples[i].image.dim(2) == s,
                     "batch: inconsistent sample size for '", samples[i].stem, "'");
        std::copy(samples[i].image.vec().begin(), samples[i].image.vec().end(),
                  images.vec().begin() + i * 3 * s * s);
        std::copy(samples[i].gt.vec().begin(), samples[i].gt.vec().end(),
                  masks.vec().begin() + i * s * s);
    }
}

double scalar(const Tensor<float>& t) { return static_cast<double>(t.vec()[0]); }

void log_line(std::ofstream& log, std::ostream* console, const std::string& line) {
    log << line << '\n';
    log.flush();
    if (console) *console << line << std::endl;
}

std::string format_step(const StepRecord& r) {
    std::ostringstream os;
    os << std::setprecision(10) << "epoch=" << r.epoch << " step=" << r.step << " lr=" << r.lr
       << " bce=" << r.bce << " iou=" << r.iou << " edge_align=" << r.edge_align
       << " total=" << r.total;
    return os.str();
}

} // namespace

double mae_over_split(SeaNet<float>& net, const DatasetSplit& split, int64_t input_size,
                      int64_t max_images) {
    SEANET_CHECK(!split.pairs.empty(), "mae_over_split: split '", split.split, "' is empty");
    int64_t n = static_cast<int64_t>(split.size());
    if (max_images > 0) n = std::min(n, max_images);
    net.eval();
    NoGradGuard guard;
    std::mt19937_64 unused(0); // dropout is identity in eval mode
    double sum_abs = 0;
    int64_t pixels = 0;
    for (int64_t i = 0; i < n; ++i) {
        Sample s = preprocess(split.pairs[i].first, split.pairs[i].second, input_size);
        Tensor<float> x = reshape(s.image, Shape{1, 3, input_size, input_size});
        auto out = net.forward(x, unused);
        const auto& p = out.maps.s1.prob.vec();
        const auto& g = s.gt.vec();
        for (size_t k = 0; k < g.size(); ++k)
            sum_abs += std::abs(static_cast<double>(p[k]) - static_cast<double>(g[k]));
        pixels += static_cast<int64_t>(g.size());
    }
    return sum_abs / static_cast<double>(pixels);
}

TrainResult train_model(const Config& cfg, std::ostream* console) {
    // Fail on every setup problem before any expensive work: configuration,
    // dataset layout, pretrained weights, output directory.
    cfg.validate();
    const DatasetSplit train_split = load_split(cfg.dataset_root, "train");
    const DatasetSplit val_split = load_split(cfg.dataset_root, "test");

    auto net = std::make_shared<SeaNet<float>>(cfg.to_model_options());
    std::mt19937_64 init_rng(cfg.seed);
    net->init_weights(init_rng);
    if (!cfg.pretrained_backbone.empty()) {
        try {
            load_checkpoint(cfg.pretrained_backbone, *net->encoder);
        } catch (const Error& e) {
            throw Error("failed to load pretrained backbone weights from '" +
                        cfg.pretrained_backbone + "': " + e.what());
        }
    }

    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    {
        std::ofstream cfg_out(out_dir / "config.json");
        SEANET_CHECK(cfg_out.good(), "cannot write to output directory: ", out_dir.string());
        cfg_out << config_to_json(cfg).dump(2) << '\n';
    }
    std::ofstream log(out_dir / "train_log.txt");
    SEANET_CHECK(log.good(), "cannot open training log in ", out_dir.string());

    TrainResult result;
    result.log_file = out_dir / "train_log.txt";
    result.best_checkpoint = out_dir / "best.ckpt";
    result.last_checkpoint = out_dir / "last.ckpt";
    result.best_val_mae = std::numeric_limits<double>::infinity();

    Adam<float> adam(net->parameters(), static_cast<float>(cfg.base_lr));
    std::mt19937_64 dropout_rng = sample_rng(cfg.seed, kDropoutStream, 0);
    const Tensor<float> slope =
        net->edge_prelu ? net->edge_prelu->weight : Tensor<float>();

    CheckpointMeta meta;
    meta["config"] = config_to_json(cfg).dump();

    int64_t global_step = 0;
    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.lr_at_epoch(epoch);
        adam.set_lr(static_cast<float>(lr));
        net->train();

        std::vector<int64_t> order(train_split.size());
        std::iota(order.begin(), order.end(), int64_t(0));
        std::mt19937_64 shuffle_rng = sample_rng(cfg.seed, epoch, kShuffleStream);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_total = 0;
        int64_t epoch_steps = 0;
        const size_t bs = static_cast<size_t>(cfg.batch_size);
        for (size_t cursor = 0; cursor < order.size(); cursor += bs) {
            if (cfg.max_steps_per_epoch > 0 && epoch_steps >= cfg.max_steps_per_epoch) break;
            const size_t end = std::min(order.size(), cursor + bs);
            std::vector<Sample> batch;
            batch.reserve(end - cursor);
            for (size_t j = cursor; j < end; ++j) {
                const int64_t idx = order[j];
                Sample s = preprocess(train_split.pairs[idx].first,
                                      train_split.pairs[idx].second, cfg.input_size);
                std::mt19937_64 aug_rng = sample_rng(cfg.seed, epoch, idx);
                batch.push_back(augment(s, aug_rng));
            }
            Tensor<float> images, masks;
            fill_batch(batch, images, masks);

            auto out = net->forward(images, dropout_rng);
            LossBundle<float> loss =
                total_loss(out.maps, masks, out.edge1, out.edge2, slope,
                           static_cast<float>(cfg.lambda_edge),
                           static_cast<float>(cfg.iou_eps));
            adam.zero_grad();
            loss.total.backward();
            adam.step();

            StepRecord rec;
            rec.epoch = epoch;
            rec.step = global_step++;
            rec.lr = lr;
            rec.bce = scalar(loss.bce[0]) + scalar(loss.bce[1]) + scalar(loss.bce[2]);
            rec.iou = scalar(loss.iou[0]) + scalar(loss.iou[1]) + scalar(loss.iou[2]);
            rec.edge_align = scalar(loss.edge_align);
            rec.total = scalar(loss.total);
            result.steps.push_back(rec);
            log_line(log, console, format_step(rec));
            epoch_total += rec.total;
            ++epoch_steps;
        }
        result.epoch_mean_loss.push_back(epoch_steps ? epoch_total / epoch_steps : 0.0);

        const double mae =
            mae_over_split(*net, val_split, cfg.input_size, cfg.val_max_images);
        result.val_mae.push_back(mae);

        meta["epoch"] = std::to_string(epoch);
        meta["val_mae"] = std::to_string(mae);
        save_checkpoint(result.last_checkpoint, *net, meta);
        if (mae < result.best_val_mae) {
            result.best_val_mae = mae;
            result.best_epoch = epoch;
            save_checkpoint(result.best_checkpoint, *net, meta);
        }
        std::ostringstream os;
        os << std::setprecision(10) << "epoch=" << epoch << " val_mae=" << mae
           << " best_val_mae=" << result.best_val_mae << " best_epoch=" << result.best_epoch;
        log_line(log, console, os.str());
    }
    return result;
}

InferStats infer_folder(SeaNet<float>& net, const fs::path& input, const fs::path& out_dir,
                        int64_t input_size, bool viz) {
    std::vector<fs::path> files;
    if (fs::is_regular_file(input)) {
        files.push_back(input);
    } else if (fs::is_directory(input)) {
        for (const auto& [stem, file] : list_image_files(input)) files.push_back(file);
        SEANET_CHECK(!files.empty(), "no image files found in ", input.string());
    } else {
        throw Error("inference input does not exist: " + input.string());
    }
    fs::create_directories(out_dir);

    net.eval();
    NoGradGuard guard;
    std::mt19937_64 unused(0);
    for (const fs::path& file : files) {
        Sample s = preprocess_image(file, input_size);
        Tensor<float> x = reshape(s.image, Shape{1, 3, input_size, input_size});
        auto out = net.forward(x, unused);
        Tensor<float> map = reshape(out.maps.s1.prob.detach(), Shape{input_size, input_size});
        Tensor<float> full = resize_map_bilinear(map, s.original_height, s.original_width);
        write_gray_png(out_dir / (s.stem + ".png"), full);
        if (viz) {
            const Tensor<float> rgb = read_image_rgb(file); // (3, H, W)
            const int64_t h = rgb.dim(1), w = rgb.dim(2);
            Tensor<float> canvas(Shape{3, h, 2 * w});
            for (int64_t c = 0; c < 3; ++c)
                for (int64_t y = 0; y < h; ++y)
                    for (int64_t xw = 0; xw < w; ++xw) {
                        canvas.at(c, y, xw) = rgb.at(c, y, xw);
                        canvas.at(c, y, w + xw) = full.at(y, xw);
                    }
            write_rgb_png(out_dir / (s.stem + "_viz.png"), canvas);
        }
    }
    return InferStats{static_cast<int64_t>(files.size()), out_dir};
}

std::shared_ptr<SeaNet<float>> model_from_checkpoint(const fs::path& file,
                                                     CheckpointMeta* meta_out) {
    const CheckpointInfo info = read_checkpoint_info(file);
    ModelOptions opt;
    const auto it = info.meta.find("config");
    if (it != info.meta.end()) {
        nlohmann::json j = nlohmann::json::parse(it->second, nullptr,
                                                 /*allow_exceptions=*/false);
        SEANET_CHECK(!j.is_discarded(), "checkpoint ", file.string(),
                     " carries malformed config metadata");
        opt = config_from_json(j).to_model_options();
    }
    auto net = std::make_shared<SeaNet<float>>(opt);
    CheckpointMeta meta = load_checkpoint(file, *net);
    if (meta_out) *meta_out = std::move(meta);
    return net;
}

} // namespace seanet
