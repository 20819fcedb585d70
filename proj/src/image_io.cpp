#include "seanet/data.hpp"

#include "seanet/common.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>

namespace seanet {

namespace {

cv::Mat decode(const std::filesystem::path& file, int flags, const char* what) {
    SEANET_CHECK(std::filesystem::exists(file), "cannot read ", what, ": no such file: ",
                 file.string());
    cv::Mat m = cv::imread(file.string(), flags);
    SEANET_CHECK(!m.empty(), "cannot decode ", what, ": ", file.string());
    return m;
}

cv::Mat to_u8(const Tensor<float>& t, int64_t channels, const char* what) {
    const auto& s = t.shape();
    int64_t h = 0, w = 0;
    if (channels == 1 && s.size() == 2) {
        h = s[0];
        w = s[1];
    } else {
        SEANET_CHECK(s.size() == 3 && s[0] == channels, what, " expects a (", channels,
                     ", H, W) tensor, got ", shape_str(s));
        h = s[1];
        w = s[2];
    }
    SEANET_CHECK(h > 0 && w > 0, what, ": empty image ", shape_str(s));
    // CHW float in [0,1] -> HWC u8, clamped; OpenCV stores color as BGR
    cv::Mat m(static_cast<int>(h), static_cast<int>(w),
              channels == 1 ? CV_8UC1 : CV_8UC3);
    for (int64_t y = 0; y < h; ++y) {
        uchar* row = m.ptr<uchar>(static_cast<int>(y));
        for (int64_t x = 0; x < w; ++x) {
            for (int64_t c = 0; c < channels; ++c) {
                const float v = s.size() == 2 ? t.at(y, x) : t.at(c, y, x);
                const float clamped = std::min(1.0f, std::max(0.0f, v));
                row[x * channels + (channels - 1 - c)] =
                    static_cast<uchar>(std::lround(clamped * 255.0f));
            }
        }
    }
    return m;
}

void write_png(const std::filesystem::path& file, const cv::Mat& m) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    SEANET_CHECK(cv::imwrite(file.string(), m), "failed to write image: ", file.string());
}

} // namespace

Tensor<float> read_image_rgb(const std::filesystem::path& file) {
    cv::Mat bgr = decode(file, cv::IMREAD_COLOR, "image");
    Tensor<float> out(Shape{3, bgr.rows, bgr.cols});
    for (int y = 0; y < bgr.rows; ++y) {
        const uchar* row = bgr.ptr<uchar>(y);
        for (int x = 0; x < bgr.cols; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(c, y, x) = static_cast<float>(row[x * 3 + (2 - c)]) / 255.0f;
    }
    return out;
}

Tensor<float> read_mask_gray(const std::filesystem::path& file) {
    cv::Mat gray = decode(file, cv::IMREAD_GRAYSCALE, "mask");
    Tensor<float> out(Shape{1, gray.rows, gray.cols});
    for (int y = 0; y < gray.rows; ++y) {
        const uchar* row = gray.ptr<uchar>(y);
        for (int x = 0; x < gray.cols; ++x)
            out.at(0, y, x) = static_cast<float>(row[x]) / 255.0f;
    }
    return out;
}

void write_gray_png(const std::filesystem::path& file, const Tensor<float>& map) {
    write_png(file, to_u8(map, 1, "write_gray_png"));
}

void write_rgb_png(const std::filesystem::path& file, const Tensor<float>& image) {
    write_png(file, to_u8(image, 3, "write_rgb_png"));
}

Tensor<float> resize_map_bilinear(const Tensor<float>& map, int64_t out_h, int64_t out_w) {
    const auto& s = map.shape();
    SEANET_CHECK((s.size() == 2) || (s.size() == 3 && s[0] == 1),
                 "resize_map_bilinear expects (H, W) or (1, H, W), got ", shape_str(s));
    SEANET_CHECK(out_h > 0 && out_w > 0, "resize_map_bilinear: bad target size ", out_h, "x",
                 out_w);
    const int64_t h = s.size() == 2 ? s[0] : s[1];
    const int64_t w = s.size() == 2 ? s[1] : s[2];
    cv::Mat src(static_cast<int>(h), static_cast<int>(w), CV_32FC1,
                const_cast<float*>(map.data()));
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(static_cast<int>(out_w), static_cast<int>(out_h)), 0, 0,
               cv::INTER_LINEAR);
    Tensor<float> out(Shape{out_h, out_w});
    for (int64_t y = 0; y < out_h; ++y) {
        const float* row = dst.ptr<float>(static_cast<int>(y));
        std::copy(row, row + out_w, out.data() + y * out_w);
    }
    return out;
}

// ------------------------------------------------------------- preprocessing

Sample preprocess_image(const std::filesystem::path& image_file, int64_t input_size) {
    SEANET_CHECK(input_size > 0, "preprocess: input size must be positive, got ", input_size);
    cv::Mat bgr = decode(image_file, cv::IMREAD_COLOR, "image");
    Sample s;
    s.stem = image_file.stem().string();
    s.original_height = bgr.rows;
    s.original_width = bgr.cols;

    const auto size = cv::Size(static_cast<int>(input_size), static_cast<int>(input_size));
    cv::Mat resized;
    cv::resize(bgr, resized, size, 0, 0, cv::INTER_LINEAR);

    s.image = Tensor<float>(Shape{3, input_size, input_size});
    for (int64_t y = 0; y < input_size; ++y) {
        const uchar* row = resized.ptr<uchar>(static_cast<int>(y));
        for (int64_t x = 0; x < input_size; ++x)
            for (int64_t c = 0; c < 3; ++c) {
                const float v = static_cast<float>(row[x * 3 + (2 - c)]) / 255.0f;
                s.image.at(c, y, x) = (v - kNormMean[c]) / kNormStd[c];
            }
    }
    return s;
}

Sample preprocess(const std::filesystem::path& image_file,
                  const std::filesystem::path& mask_file, int64_t input_size) {
    Sample s = preprocess_image(image_file, input_size);
    cv::Mat gray = decode(mask_file, cv::IMREAD_GRAYSCALE, "mask");

    const auto size = cv::Size(static_cast<int>(input_size), static_cast<int>(input_size));
    cv::Mat resized;
    cv::resize(gray, resized, size, 0, 0, cv::INTER_NEAREST);

    s.gt = Tensor<float>(Shape{1, input_size, input_size});
    for (int64_t y = 0; y < input_size; ++y) {
        const uchar* row = resized.ptr<uchar>(static_cast<int>(y));
        for (int64_t x = 0; x < input_size; ++x)
            s.gt.at(0, y, x) = static_cast<float>(row[x]) / 255.0f > 0.5f ? 1.0f : 0.0f;
    }
    return s;
}

} // namespace seanet
