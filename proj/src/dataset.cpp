#include "seanet/data.hpp"

#include "seanet/common.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace seanet {

namespace {

namespace fs = std::filesystem;

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

std::string join_stems(const std::map<std::string, fs::path>& files,
                       const std::map<std::string, fs::path>& partners) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [stem, path] : files) {
        if (partners.count(stem)) continue;
        os << (first ? "" : ", ") << stem;
        first = false;
    }
    return os.str();
}

} // namespace

std::map<std::string, fs::path> list_image_files(const fs::path& dir) {
    std::map<std::string, fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
        const std::string stem = entry.path().stem().string();
        auto [it, inserted] = out.emplace(stem, entry.path());
        SEANET_CHECK(inserted, "duplicate stem '", stem, "' in ", dir.string(), ": ",
                     it->second.string(), " vs ", entry.path().string());
    }
    return out;
}

DatasetSplit load_split(const fs::path& root, const std::string& split) {
    SEANET_CHECK(split == "train" || split == "test",
                 "load_split: split must be 'train' or 'test', got '", split, "'");
    SEANET_CHECK(fs::is_directory(root), "load_split: dataset root is not a directory: ",
                 root.string());

    // canonical layout first, then the flat distribution layout
    fs::path image_dir = root / split / "image";
    fs::path mask_dir = root / split / "GT";
    if (!fs::is_directory(image_dir) || !fs::is_directory(mask_dir)) {
        const fs::path alt_images = root / (split + "-images");
        const fs::path alt_masks = root / (split + "-labels");
        SEANET_CHECK(fs::is_directory(alt_images) && fs::is_directory(alt_masks),
                     "load_split: no dataset layout under ", root.string(), ": expected ",
                     image_dir.string(), " + ", mask_dir.string(), " or ", alt_images.string(),
                     " + ", alt_masks.string());
        image_dir = alt_images;
        mask_dir = alt_masks;
    }

    const auto images = list_image_files(image_dir);
    const auto masks = list_image_files(mask_dir);
    SEANET_CHECK(!images.empty() || !masks.empty(), "load_split: empty dataset: no images under ",
                 image_dir.string());

    const std::string orphan_images = join_stems(images, masks);
    const std::string orphan_masks = join_stems(masks, images);
    SEANET_CHECK(orphan_images.empty() && orphan_masks.empty(),
                 "load_split: unpaired files under ", root.string(),
                 (orphan_images.empty() ? std::string()
                                        : "; images without masks: " + orphan_images),
                 (orphan_masks.empty() ? std::string()
                                       : "; masks without images: " + orphan_masks));

    DatasetSplit out;
    out.root = root;
    out.split = split;
    out.pairs.reserve(images.size());
    for (const auto& [stem, image] : images) // std::map iterates stem-sorted
        out.pairs.emplace_back(image, masks.at(stem));
    return out;
}

// --------------------------------------------------------------- augmentation

namespace {

enum : uint64_t { kHFlipBit = 1, kVFlipBit = 2 };

Tensor<float> flip_h(const Tensor<float>& t) {
    const auto& s = t.shape();
    Tensor<float> out(s);
    for (int64_t c = 0; c < s[0]; ++c)
        for (int64_t y = 0; y < s[1]; ++y)
            for (int64_t x = 0; x < s[2]; ++x) out.at(c, y, x) = t.at(c, y, s[2] - 1 - x);
    return out;
}

Tensor<float> flip_v(const Tensor<float>& t) {
    const auto& s = t.shape();
    Tensor<float> out(s);
    for (int64_t c = 0; c < s[0]; ++c)
        for (int64_t y = 0; y < s[1]; ++y)
            for (int64_t x = 0; x < s[2]; ++x) out.at(c, y, x) = t.at(c, s[1] - 1 - y, x);
    return out;
}

/// One quarter turn clockwise: out is (C, W, H) with out[y][x] = in[H-1-x][y].
Tensor<float> rot90(const Tensor<float>& t) {
    const auto& s = t.shape();
    Tensor<float> out(Shape{s[0], s[2], s[1]});
    for (int64_t c = 0; c < s[0]; ++c)
        for (int64_t y = 0; y < s[2]; ++y)
            for (int64_t x = 0; x < s[1]; ++x) out.at(c, y, x) = t.at(c, s[1] - 1 - x, y);
    return out;
}

Tensor<float> apply(const Tensor<float>& t, bool hflip, bool vflip, int quarters) {
    Tensor<float> out = t;
    if (hflip) out = flip_h(out);
    if (vflip) out = flip_v(out);
    for (int q = 0; q < quarters; ++q) out = rot90(out);
    return out;
}

} // namespace

Sample augment(const Sample& sample, std::mt19937_64& rng) {
    SEANET_CHECK(sample.image.defined() && sample.image.shape().size() == 3,
                 "augment: sample has no (C, H, W) image");
    SEANET_CHECK(sample.gt.defined() && sample.gt.shape().size() == 3,
                 "augment: sample has no (1, H, W) mask");

    // one engine word supplies all three choices: two fair flip bits and a
    // uniform quarter-turn count, identical for image and mask
    const uint64_t bits = rng();
    const bool hflip = (bits & kHFlipBit) != 0;
    const bool vflip = (bits & kVFlipBit) != 0;
    const int quarters = static_cast<int>((bits >> 2) & 3);

    Sample out = sample;
    out.image = apply(sample.image, hflip, vflip, quarters);
    out.gt = apply(sample.gt, hflip, vflip, quarters);
    return out;
}

std::mt19937_64 sample_rng(uint64_t global_seed, int64_t epoch, int64_t index) {
    std::seed_seq seq{static_cast<uint32_t>(global_seed >> 32),
                      static_cast<uint32_t>(global_seed), static_cast<uint32_t>(epoch),
                      static_cast<uint32_t>(index)};
    return std::mt19937_64(seq);
}

} // namespace seanet
