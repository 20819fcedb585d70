#pragma once

#include "seanet/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

/// Saliency evaluation measures. All functions operate on single 2-D maps:
/// the prediction S with values in [0,1] and a strictly binary ground truth
/// G of the same shape. Threshold-sweep measures (F, E) min-max normalize the
/// prediction first (a constant map is kept as its constant value) and
/// binarize with `S >= tau` at the 256 thresholds tau = k/255; the adaptive
/// variants use tau_a = min(2*mean(S), 1) on the normalized map.
namespace seanet {

namespace metric_detail {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr int kThresholds = 256;

inline void check_pair(const Tensor<double>& s, const Tensor<double>& g, const char* op) {
    SEANET_CHECK(s.defined() && g.defined(), op, ": undefined input map");
    SEANET_CHECK(s.shape().size() == 2 && s.numel() > 0, op, ": expected a non-empty 2-D map, got ",
                 shape_str(s.shape()));
    SEANET_CHECK(s.shape() == g.shape(), op, ": shape mismatch ", shape_str(s.shape()), " vs ",
                 shape_str(g.shape()));
    for (int64_t i = 0; i < s.numel(); ++i) {
        SEANET_CHECK(s[i] >= 0.0 && s[i] <= 1.0, op, ": prediction value ", s[i],
                     " outside [0,1]");
        SEANET_CHECK(g[i] == 0.0 || g[i] == 1.0, op, ": ground truth value ", g[i],
                     " is not binary");
    }
}

/// Largest k in [0,255] with k/255 <= v, robust to the rounding of 255*v.
inline int threshold_bin(double v) {
    int k = static_cast<int>(std::floor(v * 255.0));
    k = std::clamp(k, 0, 255);
    if (k < 255 && v >= (k + 1) / 255.0) ++k;
    if (k > 0 && v < k / 255.0) --k;
    return k;
}

/// Per-threshold positive counts: ge[k] pixels satisfy S >= k/255, split into
/// true positives (over G=1) and false positives (over G=0).
struct SweepCounts {
    std::array<int64_t, kThresholds> tp{};
    std::array<int64_t, kThresholds> fp{};
    int64_t n_fg = 0; // |G = 1|
    int64_t n = 0;    // total pixels
};

inline SweepCounts sweep_counts(const Tensor<double>& s, const Tensor<double>& g) {
    SweepCounts c;
    c.n = s.numel();
    std::array<int64_t, kThresholds> hist_fg{}, hist_bg{};
    for (int64_t i = 0; i < s.numel(); ++i) {
        const int k = threshold_bin(s[i]);
        if (g[i] == 1.0) {
            ++hist_fg[static_cast<size_t>(k)];
            ++c.n_fg;
        } else {
            ++hist_bg[static_cast<size_t>(k)];
        }
    }
    int64_t run_fg = 0, run_bg = 0;
    for (int k = kThresholds - 1; k >= 0; --k) {
        run_fg += hist_fg[static_cast<size_t>(k)];
        run_bg += hist_bg[static_cast<size_t>(k)];
        c.tp[static_cast<size_t>(k)] = run_fg;
        c.fp[static_cast<size_t>(k)] = run_bg;
    }
    return c;
}

inline double fbeta(int64_t tp, int64_t pred_pos, int64_t n_fg, double beta2) {
    if (n_fg == 0) return 0.0; // empty ground truth: recall defined as 0
    if (pred_pos == 0 || tp == 0) return 0.0;
    const double p = static_cast<double>(tp) / static_cast<double>(pred_pos);
    const double r = static_cast<double>(tp) / static_cast<double>(n_fg);
    return (1.0 + beta2) * p * r / (beta2 * p + r);
}

/// Enhanced-alignment value of one (prediction, truth) cell given the two
/// map means: phi = 2ab/(a^2+b^2+eps) mapped through ((phi+1)^2)/4.
inline double enhanced_cell(double fm_dev, double gt_dev) {
    const double phi = 2.0 * fm_dev * gt_dev / (fm_dev * fm_dev + gt_dev * gt_dev + kEps);
    return (phi + 1.0) * (phi + 1.0) / 4.0;
}

/// E at one threshold from the confusion counts, with the degenerate all-black
/// and all-white ground-truth branches of the reference definition. The
/// enhanced matrix is averaged over pixels, which keeps the score in [0,1].
inline double e_from_counts(int64_t tp, int64_t fp, int64_t n_fg, int64_t n) {
    const int64_t pos = tp + fp;
    double total;
    if (n_fg == 0) {
        total = static_cast<double>(n - pos); // 1 - FM summed
    } else if (n_fg == n) {
        total = static_cast<double>(pos); // FM summed
    } else {
        const double mu_fm = static_cast<double>(pos) / static_cast<double>(n);
        const double mu_gt = static_cast<double>(n_fg) / static_cast<double>(n);
        total = static_cast<double>(tp) * enhanced_cell(1.0 - mu_fm, 1.0 - mu_gt) +
                static_cast<double>(fp) * enhanced_cell(1.0 - mu_fm, -mu_gt) +
                static_cast<double>(n_fg - tp) * enhanced_cell(-mu_fm, 1.0 - mu_gt) +
                static_cast<double>(n - n_fg - fp) * enhanced_cell(-mu_fm, -mu_gt);
    }
    return total / static_cast<double>(n);
}

} // namespace metric_detail

/// Min-max normalization applied to predictions before any thresholding; a
/// constant map has no range and is kept as-is.
inline Tensor<double> normalize_map(const Tensor<double>& s) {
    double lo = s[0], hi = s[0];
    for (int64_t i = 1; i < s.numel(); ++i) {
        lo = std::min(lo, s[i]);
        hi = std::max(hi, s[i]);
    }
    if (hi <= lo) return s;
    Tensor<double> out(s.shape());
    for (int64_t i = 0; i < s.numel(); ++i) out[i] = (s[i] - lo) / (hi - lo);
    return out;
}

/// Per-image adaptive binarization threshold min(2*mean(S), 1).
inline double adaptive_threshold(const Tensor<double>& s) {
    double m = 0;
    for (int64_t i = 0; i < s.numel(); ++i) m += s[i];
    m /= static_cast<double>(s.numel());
    return std::min(2.0 * m, 1.0);
}

/// Mean absolute error over pixels.
inline double mae(const Tensor<double>& s, const Tensor<double>& g) {
    metric_detail::check_pair(s, g, "mae");
    double acc = 0;
    for (int64_t i = 0; i < s.numel(); ++i) acc += std::abs(s[i] - g[i]);
    return acc / static_cast<double>(s.numel());
}

struct FMeasureResult {
    double f_max = 0, f_mean = 0, f_adp = 0;
    std::array<double, metric_detail::kThresholds> curve{};
};

/// F_beta over the 256-threshold sweep plus the adaptive threshold.
inline FMeasureResult f_measure(const Tensor<double>& s_raw, const Tensor<double>& g,
                                double beta2 = 0.3) {
    using namespace metric_detail;
    check_pair(s_raw, g, "f_measure");
    const Tensor<double> s = normalize_map(s_raw);
    const SweepCounts c = sweep_counts(s, g);

    FMeasureResult r;
    double sum = 0;
    for (int k = 0; k < kThresholds; ++k) {
        const auto ku = static_cast<size_t>(k);
        r.curve[ku] = fbeta(c.tp[ku], c.tp[ku] + c.fp[ku], c.n_fg, beta2);
        r.f_max = std::max(r.f_max, r.curve[ku]);
        sum += r.curve[ku];
    }
    r.f_mean = sum / kThresholds;

    const double tau = adaptive_threshold(s);
    int64_t tp = 0, pos = 0;
    for (int64_t i = 0; i < s.numel(); ++i) {
        if (s[i] >= tau) {
            ++pos;
            if (g[i] == 1.0) ++tp;
        }
    }
    r.f_adp = fbeta(tp, pos, c.n_fg, beta2);
    return r;
}

struct EMeasureResult {
    double e_max = 0, e_mean = 0, e_adp = 0;
    std::array<double, metric_detail::kThresholds> curve{};
};

/// Enhanced-alignment measure over the 256-threshold sweep plus the adaptive
/// threshold. With the prediction binarized, the alignment matrix takes one
/// of four values (one per confusion-matrix cell), so each threshold reduces
/// to a weighted sum over the cell counts.
inline EMeasureResult e_measure(const Tensor<double>& s_raw, const Tensor<double>& g) {
    using namespace metric_detail;
    check_pair(s_raw, g, "e_measure");
    const Tensor<double> s = normalize_map(s_raw);
    const SweepCounts c = sweep_counts(s, g);

    EMeasureResult r;
    double sum = 0;
    for (int k = 0; k < kThresholds; ++k) {
        const auto ku = static_cast<size_t>(k);
        r.curve[ku] = e_from_counts(c.tp[ku], c.fp[ku], c.n_fg, c.n);
        r.e_max = std::max(r.e_max, r.curve[ku]);
        sum += r.curve[ku];
    }
    r.e_mean = sum / kThresholds;

    const double tau = adaptive_threshold(s);
    int64_t tp = 0, fp = 0;
    for (int64_t i = 0; i < s.numel(); ++i) {
        if (s[i] >= tau) (g[i] == 1.0 ? tp : fp)++;
    }
    r.e_adp = e_from_counts(tp, fp, c.n_fg, c.n);
    return r;
}

/// Structure measure alpha*S_object + (1-alpha)*S_region, following the
/// published reference algorithm: object-aware foreground/background
/// similarity plus a 4-region SSIM-style term with centroid-based partition,
/// with the documented degenerate branches for empty and full ground truth.
inline double s_measure(const Tensor<double>& s, const Tensor<double>& g, double alpha = 0.5) {
    using metric_detail::kEps;
    metric_detail::check_pair(s, g, "s_measure");
    const int64_t h = s.shape()[0], w = s.shape()[1];
    const int64_t n = h * w;

    double g_sum = 0, s_sum = 0;
    for (int64_t i = 0; i < n; ++i) {
        g_sum += g[i];
        s_sum += s[i];
    }
    const double mu_g = g_sum / static_cast<double>(n);
    if (mu_g == 0.0) return 1.0 - s_sum / static_cast<double>(n); // all background
    if (mu_g == 1.0) return s_sum / static_cast<double>(n);       // all foreground

    // S_object: similarity 2x/(x^2+1+sigma_x) of the prediction over the
    // foreground mask and of its complement over the background mask, with
    // sample standard deviations.
    auto object_sim = [&](bool fg) {
        const double want = fg ? 1.0 : 0.0;
        double mean = 0;
        int64_t cnt = 0;
        for (int64_t i = 0; i < n; ++i) {
            if (g[i] == want) {
                mean += fg ? s[i] : 1.0 - s[i];
                ++cnt;
            }
        }
        mean /= static_cast<double>(cnt);
        double var = 0;
        for (int64_t i = 0; i < n; ++i) {
            if (g[i] == want) {
                const double d = (fg ? s[i] : 1.0 - s[i]) - mean;
                var += d * d;
            }
        }
        const double sigma = cnt > 1 ? std::sqrt(var / static_cast<double>(cnt - 1)) : 0.0;
        return 2.0 * mean / (mean * mean + 1.0 + sigma + kEps);
    };
    const double s_object = mu_g * object_sim(true) + (1.0 - mu_g) * object_sim(false);

    // Centroid of the foreground, 1-based with half-away-from-zero rounding
    // as in the reference implementation.
    double row_acc = 0, col_acc = 0;
    for (int64_t i = 0; i < h; ++i)
        for (int64_t j = 0; j < w; ++j)
            if (g.at(i, j) == 1.0) {
                row_acc += static_cast<double>(i + 1);
                col_acc += static_cast<double>(j + 1);
            }
    const int64_t cy = static_cast<int64_t>(std::round(row_acc / g_sum));
    const int64_t cx = static_cast<int64_t>(std::round(col_acc / g_sum));

    // S_region: SSIM-style similarity per quadrant, weighted by quadrant area.
    auto region_ssim = [&](int64_t r0, int64_t r1, int64_t c0, int64_t c1) {
        const int64_t m = (r1 - r0) * (c1 - c0);
        if (m == 0) return 0.0; // zero-area quadrant carries zero weight
        double ms = 0, mg = 0;
        for (int64_t i = r0; i < r1; ++i)
            for (int64_t j = c0; j < c1; ++j) {
                ms += s.at(i, j);
                mg += g.at(i, j);
            }
        ms /= static_cast<double>(m);
        mg /= static_cast<double>(m);
        double vs = 0, vg = 0, cov = 0;
        for (int64_t i = r0; i < r1; ++i)
            for (int64_t j = c0; j < c1; ++j) {
                const double ds = s.at(i, j) - ms;
                const double dg = g.at(i, j) - mg;
                vs += ds * ds;
                vg += dg * dg;
                cov += ds * dg;
            }
        const double denom = static_cast<double>(m) - 1.0 + kEps;
        vs /= denom;
        vg /= denom;
        cov /= denom;
        const double num = 4.0 * ms * mg * cov;
        const double den = (ms * ms + mg * mg) * (vs + vg);
        if (num != 0.0) return num / (den + kEps);
        return den == 0.0 ? 1.0 : 0.0;
    };
    double s_region = 0;
    const double area = static_cast<double>(n);
    s_region += region_ssim(0, cy, 0, cx) * static_cast<double>(cy * cx) / area;
    s_region += region_ssim(0, cy, cx, w) * static_cast<double>(cy * (w - cx)) / area;
    s_region += region_ssim(cy, h, 0, cx) * static_cast<double>((h - cy) * cx) / area;
    s_region += region_ssim(cy, h, cx, w) * static_cast<double>((h - cy) * (w - cx)) / area;

    return std::max(0.0, alpha * s_object + (1.0 - alpha) * s_region);
}

/// The eight per-image evaluation scalars.
struct MetricReport {
    double s_alpha = 0;
    double f_max = 0, f_mean = 0, f_adp = 0;
    double e_max = 0, e_mean = 0, e_adp = 0;
    double mae = 0;
};

/// All measures for one prediction/ground-truth pair.
inline MetricReport evaluate_pair(const Tensor<double>& s, const Tensor<double>& g) {
    MetricReport rep;
    rep.mae = mae(s, g);
    rep.s_alpha = s_measure(s, g);
    const FMeasureResult f = f_measure(s, g);
    rep.f_max = f.f_max;
    rep.f_mean = f.f_mean;
    rep.f_adp = f.f_adp;
    const EMeasureResult e = e_measure(s, g);
    rep.e_max = e.e_max;
    rep.e_mean = e.e_mean;
    rep.e_adp = e.e_adp;
    return rep;
}

} // namespace seanet
