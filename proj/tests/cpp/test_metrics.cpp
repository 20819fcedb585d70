#include <doctest.h>

#include "seanet/data.hpp"
#include "seanet/evaluate.hpp"
#include "seanet/metrics.hpp"
#include "testutil.hpp"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <vector>

using namespace seanet;
using namespace testutil;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// ---------------------------------------------------------------------------
// Reference oracles: deliberately naive transcriptions of the published
// definitions, kept structurally independent of the library implementation.
// ---------------------------------------------------------------------------

/// Min-max normalization as the sweeps apply it (constant map unchanged).
Tensor<double> oracle_normalize(const Tensor<double>& s) {
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

/// F_beta from an explicit confusion matrix at one threshold.
double oracle_f_at(const Tensor<double>& s_norm, const Tensor<double>& g, double tau,
                   double beta2) {
    int64_t tp = 0, fp = 0, fn = 0;
    for (int64_t i = 0; i < s_norm.numel(); ++i) {
        const bool pred = s_norm[i] >= tau;
        const bool truth = g[i] == 1.0;
        if (pred && truth) ++tp;
        if (pred && !truth) ++fp;
        if (!pred && truth) ++fn;
    }
    if (tp + fn == 0) return 0.0; // empty ground truth: recall is 0, F is 0
    if (tp == 0) return 0.0;
    const double p = double(tp) / double(tp + fp);
    const double r = double(tp) / double(tp + fn);
    return (1.0 + beta2) * p * r / (beta2 * p + r);
}

/// Enhanced-alignment measure of one binary foreground map: full per-pixel
/// alignment and enhancement matrices, averaged over pixels.
double oracle_e_binary(const Tensor<double>& fm, const Tensor<double>& g) {
    const int64_t n = g.numel();
    double n_fg = 0, mu_fm = 0;
    for (int64_t i = 0; i < n; ++i) {
        n_fg += g[i];
        mu_fm += fm[i];
    }
    mu_fm /= double(n);
    const double mu_gt = n_fg / double(n);

    double total = 0;
    for (int64_t i = 0; i < n; ++i) {
        if (n_fg == 0) {
            total += 1.0 - fm[i];
        } else if (n_fg == double(n)) {
            total += fm[i];
        } else {
            const double a = fm[i] - mu_fm;
            const double b = g[i] - mu_gt;
            const double align = 2.0 * a * b / (a * a + b * b + kEps);
            total += (align + 1.0) * (align + 1.0) / 4.0;
        }
    }
    return total / double(n);
}

double oracle_e_at(const Tensor<double>& s_norm, const Tensor<double>& g, double tau) {
    Tensor<double> fm(s_norm.shape());
    for (int64_t i = 0; i < s_norm.numel(); ++i) fm[i] = s_norm[i] >= tau ? 1.0 : 0.0;
    return oracle_e_binary(fm, g);
}

double oracle_mean(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    return m / double(v.size());
}

double oracle_sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = oracle_mean(v);
    double acc = 0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / double(v.size() - 1));
}

/// Object-level similarity 2x/(x^2 + 1 + sigma_x) over one masked value set.
double oracle_object(const std::vector<double>& vals) {
    const double x = oracle_mean(vals);
    const double sx = oracle_sample_std(vals);
    return 2.0 * x / (x * x + 1.0 + sx + kEps);
}

/// SSIM-style regional similarity on explicitly extracted value lists.
double oracle_ssim(const std::vector<double>& p, const std::vector<double>& t) {
    const auto n = double(p.size());
    const double x = oracle_mean(p), y = oracle_mean(t);
    double sx2 = 0, sy2 = 0, sxy = 0;
    for (size_t i = 0; i < p.size(); ++i) {
        sx2 += (p[i] - x) * (p[i] - x);
        sy2 += (t[i] - y) * (t[i] - y);
        sxy += (p[i] - x) * (t[i] - y);
    }
    sx2 /= n - 1.0 + kEps;
    sy2 /= n - 1.0 + kEps;
    sxy /= n - 1.0 + kEps;
    const double num = 4.0 * x * y * sxy;
    const double den = (x * x + y * y) * (sx2 + sy2);
    if (num != 0.0) return num / (den + kEps);
    return den == 0.0 ? 1.0 : 0.0;
}

/// Structure measure via explicit submatrix extraction around the 1-based,
/// half-away-from-zero-rounded foreground centroid.
double oracle_s_measure(const Tensor<double>& s, const Tensor<double>& g, double alpha = 0.5) {
    const int64_t h = s.shape()[0], w = s.shape()[1];
    const double n = double(h * w);
    double g_sum = 0, s_sum = 0;
    for (int64_t i = 0; i < h * w; ++i) {
        g_sum += g[i];
        s_sum += s[i];
    }
    if (g_sum == 0) return 1.0 - s_sum / n;
    if (g_sum == n) return s_sum / n;

    std::vector<double> fg_vals, bg_vals;
    for (int64_t i = 0; i < h * w; ++i) {
        if (g[i] == 1.0)
            fg_vals.push_back(s[i]);
        else
            bg_vals.push_back(1.0 - s[i]);
    }
    const double mu = g_sum / n;
    const double s_obj = mu * oracle_object(fg_vals) + (1.0 - mu) * oracle_object(bg_vals);

    double racc = 0, cacc = 0;
    for (int64_t i = 0; i < h; ++i)
        for (int64_t j = 0; j < w; ++j)
            if (g.at(i, j) == 1.0) {
                racc += double(i + 1);
                cacc += double(j + 1);
            }
    const auto cy = int64_t(std::round(racc / g_sum));
    const auto cx = int64_t(std::round(cacc / g_sum));

    auto extract = [&](const Tensor<double>& t, int64_t r0, int64_t r1, int64_t c0, int64_t c1) {
        std::vector<double> out;
        for (int64_t i = r0; i < r1; ++i)
            for (int64_t j = c0; j < c1; ++j) out.push_back(t.at(i, j));
        return out;
    };
    const int64_t r0s[4] = {0, 0, cy, cy}, r1s[4] = {cy, cy, h, h};
    const int64_t c0s[4] = {0, cx, 0, cx}, c1s[4] = {cx, w, cx, w};
    double s_reg = 0;
    for (int q = 0; q < 4; ++q) {
        const double weight = double((r1s[q] - r0s[q]) * (c1s[q] - c0s[q])) / n;
        if (weight == 0) continue;
        s_reg += weight * oracle_ssim(extract(s, r0s[q], r1s[q], c0s[q], c1s[q]),
                                      extract(g, r0s[q], r1s[q], c0s[q], c1s[q]));
    }
    const double q = alpha * s_obj + (1.0 - alpha) * s_reg;
    return q < 0 ? 0.0 : q;
}

Tensor<double> rand_map(Shape sh, std::mt19937_64& rng) {
    Tensor<double> t(std::move(sh));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = u(rng);
    return t;
}

Tensor<double> rand_gt(Shape sh, std::mt19937_64& rng, double p = 0.5) {
    Tensor<double> t(std::move(sh));
    std::bernoulli_distribution coin(p);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = coin(rng) ? 1.0 : 0.0;
    return t;
}

/// Ground truth guaranteed to have both foreground and background.
Tensor<double> rand_gt_mixed(Shape sh, std::mt19937_64& rng, double p = 0.5) {
    Tensor<double> t = rand_gt(std::move(sh), rng, p);
    t[0] = 1.0;
    t[t.numel() - 1] = 0.0;
    return t;
}

} // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("mae: identities, per-pixel oracle, input validation") {
    std::mt19937_64 rng(41);
    auto g = rand_gt_mixed({6, 6}, rng);
    CHECK(mae(g, g) == 0.0);

    Tensor<double> inv(g.shape());
    for (int64_t i = 0; i < g.numel(); ++i) inv[i] = 1.0 - g[i];
    CHECK(mae(inv, g) == 1.0);

    auto s = rand_map({3, 3}, rng);
    auto gb = rand_gt({3, 3}, rng);
    double want = 0;
    for (int64_t i = 0; i < 9; ++i) want += std::abs(s[i] - gb[i]);
    CHECK(mae(s, gb) == doctest::Approx(want / 9.0).epsilon(1e-15));

    CHECK_THROWS_AS(mae(s, rand_gt({3, 4}, rng)), Error);
    Tensor<double> bad_g({3, 3}, 0.5); // not binary
    CHECK_THROWS_AS(mae(s, bad_g), Error);
    Tensor<double> bad_s({3, 3}, 1.5); // outside [0,1]
    CHECK_THROWS_AS(mae(bad_s, gb), Error);
    CHECK_THROWS_AS(mae(rand_map({2, 2, 2}, rng), rand_gt({2, 2, 2}, rng)), Error);
}

TEST_CASE("normalize_map and the adaptive threshold") {
    std::mt19937_64 rng(42);
    auto s = rand_map({5, 5}, rng);
    auto n = normalize_map(s);
    double lo = s[0], hi = s[0];
    for (int64_t i = 0; i < s.numel(); ++i) {
        lo = std::min(lo, s[i]);
        hi = std::max(hi, s[i]);
    }
    for (int64_t i = 0; i < s.numel(); ++i)
        CHECK(n[i] == doctest::Approx((s[i] - lo) / (hi - lo)).epsilon(1e-15));

    Tensor<double> flat({4, 4}, 0.37); // constant map is left alone
    auto nf = normalize_map(flat);
    for (int64_t i = 0; i < nf.numel(); ++i) CHECK(nf[i] == 0.37);

    Tensor<double> low({2, 2}, 0.2);
    CHECK(adaptive_threshold(low) == doctest::Approx(0.4).epsilon(1e-15));
    Tensor<double> high({2, 2}, 0.8); // 2*mean saturates at 1
    CHECK(adaptive_threshold(high) == 1.0);
}

TEST_CASE("f-measure: identity band, P=R point, degenerate ground truths") {
    std::mt19937_64 rng(43);
    auto g = rand_gt_mixed({4, 4}, rng);
    auto f_id = f_measure(g, g);
    CHECK(f_id.f_max == 1.0);
    for (int k = 1; k < 256; ++k) CHECK(f_id.curve[size_t(k)] == 1.0);
    CHECK(f_id.curve[0] < 1.0); // threshold 0 marks everything positive

    // TP=6, FP=2, FN=2 -> P = R = 0.75, so F = P for any beta
    Tensor<double> gt(Shape{4, 4});
    Tensor<double> pred(Shape{4, 4});
    for (int64_t i = 0; i < 8; ++i) gt[i] = 1.0;   // 8 foreground pixels
    for (int64_t i = 0; i < 6; ++i) pred[i] = 1.0; // hits 6 of them
    pred[8] = pred[9] = 1.0;                       // and 2 background pixels
    for (double beta2 : {0.3, 1.0, 2.0}) {
        auto f = f_measure(pred, gt, beta2);
        CHECK(f.curve[128] == doctest::Approx(0.75).epsilon(1e-14));
        CHECK(f.f_adp == doctest::Approx(0.75).epsilon(1e-14));
    }

    Tensor<double> empty_gt(Shape{4, 4});
    auto fe = f_measure(rand_map({4, 4}, rng), empty_gt);
    CHECK(fe.f_max == 0.0);
    CHECK(fe.f_mean == 0.0);
    CHECK(fe.f_adp == 0.0);

    Tensor<double> full_gt({4, 4}, 1.0);
    auto ff = f_measure(full_gt, full_gt); // constant prediction, kept as 1
    CHECK(ff.f_max == 1.0);
    CHECK(ff.f_mean == 1.0);
}

TEST_CASE("f-measure matches the brute-force confusion-matrix oracle") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 4; ++trial) {
        auto s = rand_map({8, 8}, rng);
        // plant exact grid values to stress >= ties at the thresholds
        s[3] = 77.0 / 255.0;
        s[11] = 200.0 / 255.0;
        s[25] = 0.0;
        s[30] = 1.0;
        auto g = rand_gt({8, 8}, rng, 0.3 + 0.2 * trial);
        auto f = f_measure(s, g);

        auto sn = oracle_normalize(s);
        double sum = 0, best = 0;
        for (int k = 0; k < 256; ++k) {
            const double want = oracle_f_at(sn, g, double(k) / 255.0, 0.3);
            CHECK(f.curve[size_t(k)] == doctest::Approx(want).epsilon(1e-13));
            sum += want;
            best = std::max(best, want);
        }
        CHECK(f.f_max == doctest::Approx(best).epsilon(1e-13));
        CHECK(f.f_mean == doctest::Approx(sum / 256.0).epsilon(1e-13));

        double m = 0;
        for (int64_t i = 0; i < sn.numel(); ++i) m += sn[i];
        const double tau = std::min(2.0 * m / double(sn.numel()), 1.0);
        CHECK(f.f_adp == doctest::Approx(oracle_f_at(sn, g, tau, 0.3)).epsilon(1e-13));
        CHECK(f.f_max >= f.f_mean);
    }
}

TEST_CASE("s-measure: trivial values, degenerate branches, the 0.9 hand case") {
    std::mt19937_64 rng(45);
    auto g = rand_gt_mixed({8, 8}, rng);
    CHECK(s_measure(g, g) == doctest::Approx(1.0).epsilon(1e-6));

    Tensor<double> empty(Shape{5, 5});
    CHECK(s_measure(empty, empty) == 1.0); // all-background, S = 0
    Tensor<double> gray({5, 5}, 0.3);
    CHECK(s_measure(gray, empty) == doctest::Approx(0.7).epsilon(1e-15));
    Tensor<double> full({5, 5}, 1.0);
    CHECK(s_measure(gray, full) == doctest::Approx(0.3).epsilon(1e-15));

    // constant 0.5 prediction, 2x2 foreground block in a 4x4 map:
    // S_object = 0.8, every quadrant is constant so S_region = 1 -> 0.9
    Tensor<double> block(Shape{4, 4});
    block.at(0, 0) = block.at(0, 1) = block.at(1, 0) = block.at(1, 1) = 1.0;
    Tensor<double> half({4, 4}, 0.5);
    CHECK(s_measure(half, block) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("s-measure matches the reference-algorithm oracle") {
    std::mt19937_64 rng(46);
    const Shape shapes[] = {{8, 8}, {5, 7}, {9, 4}, {12, 12}};
    for (const Shape& sh : shapes) {
        for (int trial = 0; trial < 3; ++trial) {
            auto s = rand_map(sh, rng);
            auto g = rand_gt_mixed(sh, rng, 0.2 + 0.3 * trial);
            CHECK(s_measure(s, g) == doctest::Approx(oracle_s_measure(s, g)).epsilon(1e-12));
        }
        Tensor<double> half(sh, 0.5);
        auto g = rand_gt_mixed(sh, rng);
        CHECK(s_measure(half, g) == doctest::Approx(oracle_s_measure(half, g)).epsilon(1e-12));
    }
}

TEST_CASE("e-measure: perfect map, all-ones point, inverted map") {
    std::mt19937_64 rng(47);
    auto g = rand_gt_mixed({4, 4}, rng, 0.3); // mean < 0.5 so tau_a < 1
    auto e = e_measure(g, g);
    CHECK(e.e_max == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(e.e_adp == doctest::Approx(1.0).epsilon(1e-9));
    // threshold 0 binarizes everything to foreground: alignment is 0, the
    // enhancement maps it to 1/4 everywhere
    CHECK(e.curve[0] == doctest::Approx(0.25).epsilon(1e-12));
    for (int k = 1; k < 256; ++k)
        CHECK(e.curve[size_t(k)] == doctest::Approx(1.0).epsilon(1e-9));

    Tensor<double> inv(g.shape());
    for (int64_t i = 0; i < g.numel(); ++i) inv[i] = 1.0 - g[i];
    auto ei = e_measure(inv, g);
    CHECK(ei.e_max == doctest::Approx(0.25).epsilon(1e-12)); // the all-ones point
    for (int k = 1; k < 256; ++k) CHECK(ei.curve[size_t(k)] < 1e-12);
    CHECK(ei.e_adp < 1e-12);
}

TEST_CASE("e-measure matches the reference-algorithm oracle") {
    std::mt19937_64 rng(48);
    for (int trial = 0; trial < 3; ++trial) {
        auto s = rand_map({8, 8}, rng);
        s[5] = 128.0 / 255.0; // exact grid value stressing the >= tie
        auto g = rand_gt({8, 8}, rng, 0.4);
        auto e = e_measure(s, g);

        auto sn = oracle_normalize(s);
        double sum = 0, best = 0;
        for (int k = 0; k < 256; ++k) {
            const double want = oracle_e_at(sn, g, double(k) / 255.0);
            CHECK(e.curve[size_t(k)] == doctest::Approx(want).epsilon(1e-12));
            sum += want;
            best = std::max(best, want);
        }
        CHECK(e.e_max == doctest::Approx(best).epsilon(1e-12));
        CHECK(e.e_mean == doctest::Approx(sum / 256.0).epsilon(1e-12));
        CHECK(e.e_max >= e.e_mean);
    }
    // degenerate ground truths exercise the special branches at every threshold
    auto s = rand_map({6, 6}, rng);
    auto sn = oracle_normalize(s);
    Tensor<double> empty(Shape{6, 6});
    Tensor<double> full({6, 6}, 1.0);
    auto ee = e_measure(s, empty);
    auto ef = e_measure(s, full);
    for (int k = 0; k < 256; ++k) {
        CHECK(ee.curve[size_t(k)] ==
              doctest::Approx(oracle_e_at(sn, empty, double(k) / 255.0)).epsilon(1e-12));
        CHECK(ef.curve[size_t(k)] ==
              doctest::Approx(oracle_e_at(sn, full, double(k) / 255.0)).epsilon(1e-12));
    }
}

TEST_CASE("sweep maxima are invariant to strictly monotone rescaling") {
    std::mt19937_64 rng(49);
    for (int trial = 0; trial < 3; ++trial) {
        // values on the k/8 grid: squaring keeps neighboring order statistics
        // farther apart than the 1/255 threshold step, so both sweeps realize
        // exactly the same set of binarizations
        Tensor<double> s(Shape{8, 8});
        std::uniform_int_distribution<int> lvl(0, 8);
        for (int64_t i = 0; i < s.numel(); ++i) s[i] = double(lvl(rng)) / 8.0;
        s[0] = 0.0;
        s[1] = 1.0; // full range, so normalization is the identity
        Tensor<double> sq(s.shape());
        for (int64_t i = 0; i < s.numel(); ++i) sq[i] = s[i] * s[i];
        auto g = rand_gt_mixed({8, 8}, rng);

        CHECK(f_measure(s, g).f_max == f_measure(sq, g).f_max);
        CHECK(e_measure(s, g).e_max == e_measure(sq, g).e_max);
    }
}

TEST_CASE("evaluate_pair: bounds and invariants on random and perfect inputs") {
    std::mt19937_64 rng(50);
    const Shape shapes[] = {{8, 8}, {5, 7}, {1, 9}, {16, 3}, {1, 1}};
    for (const Shape& sh : shapes) {
        for (int trial = 0; trial < 3; ++trial) {
            auto s = rand_map(sh, rng);
            auto g = rand_gt(sh, rng); // may be empty or full, both legal
            auto rep = evaluate_pair(s, g);
            for (double v : {rep.s_alpha, rep.f_max, rep.f_mean, rep.f_adp, rep.e_max,
                             rep.e_mean, rep.e_adp, rep.mae}) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
            CHECK(rep.f_max >= rep.f_mean);
            CHECK(rep.e_max >= rep.e_mean);
        }
    }
    auto g = rand_gt_mixed({8, 8}, rng, 0.3);
    auto perfect = evaluate_pair(g, g);
    CHECK(perfect.mae == 0.0);
    CHECK(perfect.f_max == 1.0);
    CHECK(perfect.e_max == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(perfect.s_alpha == doctest::Approx(1.0).epsilon(1e-6));
}

// ------------------------------------------------------ folder evaluation

namespace {

namespace fs = std::filesystem;

struct EvalTempDir {
    fs::path path;
    EvalTempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("seanet_metrics_eval_" + std::to_string(::getpid()) +
                                            "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~EvalTempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

/// Save a double map in [0,1] as an 8-bit PNG (quantizing to k/255 exactly).
void save_map(const fs::path& file, const Tensor<double>& map) {
    const auto& sh = map.shape();
    Tensor<float> f(Shape{1, sh[0], sh[1]});
    for (int64_t i = 0; i < map.numel(); ++i) f[i] = static_cast<float>(map[i]);
    write_gray_png(file, f);
}

/// 8-bit grid map, quantized exactly the way the PNG decode path does
/// (single-precision k/255 widened to double) so round trips are lossless.
Tensor<double> rand_map_8bit(const Shape& sh, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> level(0, 255);
    Tensor<double> t(sh);
    for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<double>(static_cast<float>(level(rng)) / 255.0f);
    return t;
}

} // namespace

TEST_CASE("folder evaluation: perfect predictions score perfectly") {
    EvalTempDir dir;
    std::mt19937_64 rng(60);
    const Shape shapes[] = {{20, 20}, {16, 24}, {9, 33}};
    for (int i = 0; i < 3; ++i) {
        const auto g = rand_gt_mixed(shapes[i], rng, 0.4);
        const std::string name = "img" + std::to_string(i) + ".png";
        save_map(dir.path / "pred" / name, g);
        save_map(dir.path / "gt" / name, g);
    }

    const FolderEvalResult res = evaluate_folder(dir.path / "pred", dir.path / "gt");
    CHECK(res.evaluated() == 3);
    CHECK(res.warning_count() == 0);
    CHECK(res.per_image[0].first == "img0"); // stem-sorted
    CHECK(res.per_image[2].first == "img2");
    CHECK(res.mean.mae == 0.0);
    CHECK(res.mean.f_max == 1.0);
    CHECK(res.mean.e_max == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.mean.s_alpha == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("folder evaluation: predictions are scored at ground-truth resolution") {
    EvalTempDir dir;
    // constant-white prediction at a small foreign size: bilinear resize keeps
    // it constant, and against a full-white mask every measure is perfect
    save_map(dir.path / "pred" / "a.png", Tensor<double>(Shape{7, 5}, 1.0));
    save_map(dir.path / "gt" / "a.png", Tensor<double>(Shape{64, 48}, 1.0));

    const FolderEvalResult res = evaluate_folder(dir.path / "pred", dir.path / "gt");
    CHECK(res.evaluated() == 1);
    CHECK(res.mean.mae == 0.0);
    CHECK(res.mean.f_max == 1.0);
    CHECK(res.mean.e_max == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.mean.s_alpha == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("folder evaluation: averages match per-pair scoring and orphans only warn") {
    EvalTempDir dir;
    std::mt19937_64 rng(61);
    std::vector<Tensor<double>> preds, gts;
    for (int i = 0; i < 4; ++i) {
        preds.push_back(rand_map_8bit({12, 10}, rng));
        gts.push_back(rand_gt_mixed({12, 10}, rng, 0.35));
        const std::string name = "p" + std::to_string(i) + ".png";
        save_map(dir.path / "pred" / name, preds.back());
        save_map(dir.path / "gt" / name, gts.back());
    }
    save_map(dir.path / "pred" / "only_pred.png", preds[0]);
    save_map(dir.path / "gt" / "only_gt.png", gts[0]);

    const FolderEvalResult res = evaluate_folder(dir.path / "pred", dir.path / "gt");
    CHECK(res.evaluated() == 4);
    REQUIRE(res.skipped.size() == 2);
    CHECK(res.skipped[0] == "only_gt");
    CHECK(res.skipped[1] == "only_pred");

    // the folder path must agree exactly with direct per-pair evaluation
    MetricReport want;
    std::array<double, metric_detail::kThresholds> want_f{}, want_e{};
    for (int i = 0; i < 4; ++i) {
        const auto rep = evaluate_pair(preds[i], gts[i]);
        const auto stem = "p" + std::to_string(i);
        CHECK(res.per_image[static_cast<size_t>(i)].first == stem);
        CHECK(res.per_image[static_cast<size_t>(i)].second.f_max == rep.f_max);
        CHECK(res.per_image[static_cast<size_t>(i)].second.mae == rep.mae);
        want.s_alpha += rep.s_alpha / 4;
        want.f_max += rep.f_max / 4;
        want.f_mean += rep.f_mean / 4;
        want.f_adp += rep.f_adp / 4;
        want.e_max += rep.e_max / 4;
        want.e_mean += rep.e_mean / 4;
        want.e_adp += rep.e_adp / 4;
        want.mae += rep.mae / 4;
        const auto f = f_measure(preds[i], gts[i]);
        const auto e = e_measure(preds[i], gts[i]);
        for (int k = 0; k < metric_detail::kThresholds; ++k) {
            want_f[k] += f.curve[k] / 4;
            want_e[k] += e.curve[k] / 4;
        }
    }
    CHECK(res.mean.s_alpha == doctest::Approx(want.s_alpha).epsilon(1e-12));
    CHECK(res.mean.f_max == doctest::Approx(want.f_max).epsilon(1e-12));
    CHECK(res.mean.f_mean == doctest::Approx(want.f_mean).epsilon(1e-12));
    CHECK(res.mean.f_adp == doctest::Approx(want.f_adp).epsilon(1e-12));
    CHECK(res.mean.e_max == doctest::Approx(want.e_max).epsilon(1e-12));
    CHECK(res.mean.e_mean == doctest::Approx(want.e_mean).epsilon(1e-12));
    CHECK(res.mean.e_adp == doctest::Approx(want.e_adp).epsilon(1e-12));
    CHECK(res.mean.mae == doctest::Approx(want.mae).epsilon(1e-12));
    for (int k = 0; k < metric_detail::kThresholds; k += 17) {
        CHECK(res.mean_f_curve[k] == doctest::Approx(want_f[k]).epsilon(1e-12));
        CHECK(res.mean_e_curve[k] == doctest::Approx(want_e[k]).epsilon(1e-12));
    }
}

TEST_CASE("folder evaluation: gray masks binarize at half intensity") {
    EvalTempDir dir;
    // GT with anti-aliased-looking values 100 and 200: only 200 survives
    Tensor<double> gt_gray(Shape{6, 6}, 100.0 / 255.0);
    Tensor<double> gt_binary(Shape{6, 6}, 0.0);
    Tensor<double> pred(Shape{6, 6}, 0.0);
    for (int64_t y = 0; y < 6; ++y)
        for (int64_t x = 3; x < 6; ++x) {
            gt_gray.at(y, x) = 200.0 / 255.0;
            gt_binary.at(y, x) = 1.0;
            pred.at(y, x) = 0.9;
        }
    save_map(dir.path / "pred" / "m.png", pred);
    save_map(dir.path / "gt" / "m.png", gt_gray);

    const FolderEvalResult res = evaluate_folder(dir.path / "pred", dir.path / "gt");
    // 0.9 quantizes to 230/255 in the PNG (decoded in single precision), so
    // compare with the same quantization
    Tensor<double> pred_png = pred;
    for (int64_t i = 0; i < pred_png.numel(); ++i)
        pred_png[i] = static_cast<double>(
            static_cast<float>(std::lround(pred_png[i] * 255.0)) / 255.0f);
    const auto want = evaluate_pair(pred_png, gt_binary);
    CHECK(res.mean.mae == doctest::Approx(want.mae).epsilon(1e-12));
    CHECK(res.mean.f_max == doctest::Approx(want.f_max).epsilon(1e-12));
    CHECK(res.mean.s_alpha == doctest::Approx(want.s_alpha).epsilon(1e-12));
}

TEST_CASE("folder evaluation: unreadable files and empty overlap are errors") {
    EvalTempDir dir;
    fs::create_directories(dir.path / "pred");
    fs::create_directories(dir.path / "gt");
    CHECK_THROWS_AS(evaluate_folder(dir.path / "pred", dir.path / "gt"), Error);
    CHECK_THROWS_AS(evaluate_folder(dir.path / "pred", dir.path / "missing"), Error);

    save_map(dir.path / "gt" / "x.png", Tensor<double>(Shape{4, 4}, 1.0));
    std::ofstream(dir.path / "pred" / "x.png") << "not a png";
    CHECK_THROWS_AS(evaluate_folder(dir.path / "pred", dir.path / "gt"), Error);
}

TEST_SUITE_END();
