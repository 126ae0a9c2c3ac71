#include "cropforge/image_io.hpp"

#include <opencv2/imgcodecs.hpp>

#include "cropforge/error.hpp"

namespace cropforge {

namespace {

cv::Mat read_checked(const std::filesystem::path& path, int flags) {
    cv::Mat image = cv::imread(path.string(), flags);
    if (image.empty()) throw Error("cannot read image " + path.string());
    return image;
}

}  // namespace

cv::Mat read_color_png(const std::filesystem::path& path) { return read_checked(path, cv::IMREAD_COLOR); }

cv::Mat read_gray_png(const std::filesystem::path& path) { return read_checked(path, cv::IMREAD_GRAYSCALE); }

void write_png(const std::filesystem::path& path, const cv::Mat& image) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), image)) throw Error("cannot write image " + path.string());
}

bool is_binary_mask(const cv::Mat& mask) {
    if (mask.type() != CV_8UC1) return false;
    for (int y = 0; y < mask.rows; ++y) {
        const auto* row = mask.ptr<std::uint8_t>(y);
        for (int x = 0; x < mask.cols; ++x)
            if (row[x] != 0 && row[x] != 255) return false;
    }
    return true;
}

}  // namespace cropforge
