#include "seanet/evaluate.hpp"

#include "seanet/common.hpp"
#include "seanet/data.hpp"

#include <algorithm>

namespace seanet {

namespace {

namespace fs = std::filesystem;

/// (1, H, W) float image in [0,1] -> (H, W) double map.
Tensor<double> to_map(const Tensor<float>& t) {
    const auto& s = t.shape();
    Tensor<double> out(Shape{s[1], s[2]});
    for (int64_t i = 0; i < t.numel(); ++i) out[i] = static_cast<double>(t[i]);
    return out;
}

} // namespace

FolderEvalResult evaluate_folder(const fs::path& pred_dir, const fs::path& gt_dir) {
    SEANET_CHECK(fs::is_directory(pred_dir), "evaluate_folder: not a directory: ",
                 pred_dir.string());
    SEANET_CHECK(fs::is_directory(gt_dir), "evaluate_folder: not a directory: ",
                 gt_dir.string());
    const auto preds = list_image_files(pred_dir);
    const auto gts = list_image_files(gt_dir);

    FolderEvalResult res;
    for (const auto& [stem, path] : preds)
        if (!gts.count(stem)) res.skipped.push_back(stem);
    for (const auto& [stem, path] : gts)
        if (!preds.count(stem)) res.skipped.push_back(stem);
    std::sort(res.skipped.begin(), res.skipped.end());

    for (const auto& [stem, pred_path] : preds) { // std::map iterates stem-sorted
        const auto gt_it = gts.find(stem);
        if (gt_it == gts.end()) continue;

        const Tensor<float> gt_raw = read_mask_gray(gt_it->second);
        const int64_t h = gt_raw.shape()[1], w = gt_raw.shape()[2];

        Tensor<float> pred_raw = read_mask_gray(pred_path);
        Tensor<double> pred;
        if (pred_raw.shape()[1] == h && pred_raw.shape()[2] == w) {
            pred = to_map(pred_raw);
        } else {
            const Tensor<float> resized = resize_map_bilinear(pred_raw, h, w);
            pred = Tensor<double>(Shape{h, w});
            for (int64_t i = 0; i < resized.numel(); ++i)
                pred[i] = static_cast<double>(resized[i]);
        }

        Tensor<double> gt(Shape{h, w});
        for (int64_t i = 0; i < gt_raw.numel(); ++i) gt[i] = gt_raw[i] > 0.5f ? 1.0 : 0.0;

        MetricReport rep;
        rep.mae = mae(pred, gt);
        rep.s_alpha = s_measure(pred, gt);
        const FMeasureResult f = f_measure(pred, gt);
        rep.f_max = f.f_max;
        rep.f_mean = f.f_mean;
        rep.f_adp = f.f_adp;
        const EMeasureResult e = e_measure(pred, gt);
        rep.e_max = e.e_max;
        rep.e_mean = e.e_mean;
        rep.e_adp = e.e_adp;
        res.per_image.emplace_back(stem, rep);

        for (int k = 0; k < metric_detail::kThresholds; ++k) {
            res.mean_f_curve[k] += f.curve[k];
            res.mean_e_curve[k] += e.curve[k];
        }
        res.mean.s_alpha += rep.s_alpha;
        res.mean.f_max += rep.f_max;
        res.mean.f_mean += rep.f_mean;
        res.mean.f_adp += rep.f_adp;
        res.mean.e_max += rep.e_max;
        res.mean.e_mean += rep.e_mean;
        res.mean.e_adp += rep.e_adp;
        res.mean.mae += rep.mae;
    }

    SEANET_CHECK(!res.per_image.empty(), "evaluate_folder: no same-stem pairs between ",
                 pred_dir.string(), " and ", gt_dir.string());
    const double n = static_cast<double>(res.per_image.size());
    res.mean.s_alpha /= n;
    res.mean.f_max /= n;
    res.mean.f_mean /= n;
    res.mean.f_adp /= n;
    res.mean.e_max /= n;
    res.mean.e_mean /= n;
    res.mean.e_adp /= n;
    res.mean.mae /= n;
    for (int k = 0; k < metric_detail::kThresholds; ++k) {
        res.mean_f_curve[k] /= n;
        res.mean_e_curve[k] /= n;
    }
    return res;
}

} // namespace seanet
