#pragma once

#include "seanet/checkpoint.hpp"
#include "seanet/config.hpp"
#include "seanet/data.hpp"
#include "seanet/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace seanet {

/// One optimization step as it appears in the training log. The three
/// supervised scales are pre-summed: `bce` and `iou` each aggregate S1-S3.
struct StepRecord {
    int64_t epoch = 0;
    int64_t step = 0; // global, 0-based
    double lr = 0;
    double bce = 0;
    double iou = 0;
    double edge_align = 0;
    double total = 0;
};

/// In-memory account of a finished run; the durable artifacts (checkpoints,
/// log, resolved config) live under `Config::out_dir`.
struct TrainResult {
    std::vector<StepRecord> steps;
    std::vector<double> epoch_mean_loss; // mean of `total` per epoch
    std::vector<double> val_mae;         // one entry per epoch
    double best_val_mae = 0;
    int64_t best_epoch = -1;
    std::filesystem::path best_checkpoint;
    std::filesystem::path last_checkpoint;
    std::filesystem::path log_file;
};

/// Mean absolute error between the full-resolution map S1 and the mask over
/// one split, evaluated at the network input size. Used for model selection
/// during training; folder evaluation at ground-truth resolution is the
/// `evaluate` entry point's job. `max_images` of 0 means the whole split.
double mae_over_split(SeaNet<float>& net, const DatasetSplit& split, int64_t input_size,
                      int64_t max_images = 0);

/// Run the published training protocol: Adam on the composite objective,
/// step-decayed learning rate, random flips/rotations, one checkpoint per
/// epoch plus the best-by-validation-MAE one. Every random choice (weight
/// init, shuffling, augmentation, dropout) derives from `cfg.seed`, so a
/// repeated run reproduces the first loss value bit for bit. Dataset and
/// configuration problems throw before any training work starts.
TrainResult train_model(const Config& cfg, std::ostream* console = nullptr);

struct InferStats {
    int64_t images = 0;
    std::filesystem::path output_dir;
};

/// Predict saliency for one image file or every image in a directory. Each
/// prediction is the S1 map resized back to the source resolution and saved
/// as `<stem>.png` (8-bit grayscale) under `out_dir`; with `viz` an
/// additional `<stem>_viz.png` shows input and prediction side by side.
InferStats infer_folder(SeaNet<float>& net, const std::filesystem::path& input,
                        const std::filesystem::path& out_dir, int64_t input_size = 288,
                        bool viz = false);

/// Rebuild the exact architecture a checkpoint was trained with (stored in
/// its metadata) and load the weights. Falls back to default options when the
/// file predates metadata; weight shape checks still guard against mismatch.
std::shared_ptr<SeaNet<float>> model_from_checkpoint(const std::filesystem::path& file,
                                                     CheckpointMeta* meta_out = nullptr);

} // namespace seanet
