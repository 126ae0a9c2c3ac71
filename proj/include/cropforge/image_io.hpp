#pragma once

#include <filesystem>

#include <opencv2/core.hpp>

namespace cropforge {

// PNG helpers that throw cropforge::Error instead of returning empty mats.
cv::Mat read_color_png(const std::filesystem::path& path);  // CV_8UC3 BGR
cv::Mat read_gray_png(const std::filesystem::path& path);   // CV_8UC1
void write_png(const std::filesystem::path& path, const cv::Mat& image);

bool is_binary_mask(const cv::Mat& mask);

}  // namespace cropforge
