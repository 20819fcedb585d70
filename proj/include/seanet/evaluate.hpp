#pragma once

#include "seanet/metrics.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace seanet {

/// Dataset-level evaluation over a prediction folder and a ground-truth
/// folder paired by filename stem. Every field of `mean` is the arithmetic
/// average of the per-image reports; the averaged threshold curves are kept
/// for CSV export. Stems present on only one side are skipped and listed.
struct FolderEvalResult {
    MetricReport mean;
    std::vector<std::pair<std::string, MetricReport>> per_image; // stem-sorted
    std::array<double, metric_detail::kThresholds> mean_f_curve{};
    std::array<double, metric_detail::kThresholds> mean_e_curve{};
    std::vector<std::string> skipped; // unmatched stems, both sides, sorted

    size_t evaluated() const { return per_image.size(); }
    size_t warning_count() const { return skipped.size(); }
};

/// Scores every same-stem pair at ground-truth resolution: the prediction is
/// bilinearly resized to the mask's size and the mask is binarized at half
/// intensity. Throws when a file cannot be read or no pair exists at all;
/// missing partners are only a warning.
FolderEvalResult evaluate_folder(const std::filesystem::path& pred_dir,
                                 const std::filesystem::path& gt_dir);

} // namespace seanet
