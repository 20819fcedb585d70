#pragma once

#include "seanet/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace seanet {

/// One network-ready training/evaluation example. The image is normalized
/// with the statistics of the encoder's pretraining corpus; the mask is
/// strictly binary. `original_size` remembers the source image resolution so
/// predictions can be resized back for saving and for GT-resolution scoring.
struct Sample {
    Tensor<float> image; // (3, S, S), normalized
    Tensor<float> gt;    // (1, S, S), values in {0, 1}
    std::string stem;
    int64_t original_height = 0;
    int64_t original_width = 0;
};

/// A stem-matched, stem-sorted list of (image file, mask file) pairs under a
/// dataset root. Both common on-disk layouts are accepted:
///   <root>/<split>/image + <root>/<split>/GT
///   <root>/<split>-images + <root>/<split>-labels
struct DatasetSplit {
    std::filesystem::path root;
    std::string split; // "train" or "test"
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> pairs;

    size_t size() const { return pairs.size(); }
};

/// Per-channel RGB normalization constants of the encoder's pretraining
/// corpus; recorded here so configs and reports can state them.
inline constexpr std::array<float, 3> kNormMean{0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kNormStd{0.229f, 0.224f, 0.225f};

/// Scan a dataset root for one split and pair images with masks by filename
/// stem. Throws if the layout is missing, if the split is empty, or if any
/// file lacks a partner (the error lists every orphan).
DatasetSplit load_split(const std::filesystem::path& root, const std::string& split);

/// stem -> path for every recognized image file directly inside `dir`.
/// Throws on duplicate stems (same name, different extension) because any
/// later pairing would be ambiguous.
std::map<std::string, std::filesystem::path> list_image_files(
    const std::filesystem::path& dir);

/// Read and normalize one image: bilinear resize to `input_size`, scale to
/// [0,1], then per-channel standardization. The returned sample has an
/// undefined `gt`. Throws on unreadable files.
Sample preprocess_image(const std::filesystem::path& image_file, int64_t input_size = 288);

/// Full pair version: additionally nearest-resizes the mask to `input_size`
/// and binarizes it at one half of full intensity.
Sample preprocess(const std::filesystem::path& image_file,
                  const std::filesystem::path& mask_file, int64_t input_size = 288);

/// Random horizontal flip, vertical flip (each p = 1/2) and rotation by a
/// uniformly chosen quarter turn, applied identically to image and mask.
/// Draws a single engine word so the transform stream is portable.
Sample augment(const Sample& sample, std::mt19937_64& rng);

/// Per-sample engine derived from (global seed, epoch, index) so shuffled or
/// parallel loading cannot change which transform a sample receives.
std::mt19937_64 sample_rng(uint64_t global_seed, int64_t epoch, int64_t index);

// ------------------------------------------------------------- image files
// Thin wrappers around the imaging backend. Values are float in [0, 1];
// layouts are CHW.

/// Decode an image file to RGB. Throws on missing/corrupt files.
Tensor<float> read_image_rgb(const std::filesystem::path& file);

/// Decode an image file to a single gray channel (1, H, W).
Tensor<float> read_mask_gray(const std::filesystem::path& file);

/// Save a single-channel map (1, H, W) or (H, W), clamped to [0, 1], as an
/// 8-bit PNG. Parent directories are created as needed.
void write_gray_png(const std::filesystem::path& file, const Tensor<float>& map);

/// Save an RGB image (3, H, W), clamped to [0, 1], as an 8-bit PNG.
void write_rgb_png(const std::filesystem::path& file, const Tensor<float>& image);

/// Bilinear resize of a single-channel map (1, H, W) or (H, W) to an
/// arbitrary target size, returned as (out_h, out_w).
Tensor<float> resize_map_bilinear(const Tensor<float>& map, int64_t out_h, int64_t out_w);

} // namespace seanet
