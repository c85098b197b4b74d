#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "mtx/image.hpp"
#include "mtx/tensor.hpp"

// PNG/JPEG bridge: files are 8-bit BGR on disk, images are real-valued RGB
// planes in memory.

namespace mtx {

// Interleaved RGB bytes after clamping and rounding — the canonical quantized
// form used both for writing and for content hashing.
template <typename T>
std::vector<uint8_t> quantize_rgb8(const ImageT<T>& img) {
    std::vector<uint8_t> out(static_cast<size_t>(img.height()) * img.width() * 3);
    size_t i = 0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c, ++i) {
                const double v = static_cast<double>(img.at(c, y, x));
                out[i] = static_cast<uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
            }
    return out;
}

template <typename T>
uint64_t image_content_hash(const ImageT<T>& img) {
    const auto bytes = quantize_rgb8(img);
    return fnv1a(bytes.data(), bytes.size());
}

inline Image load_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw Error("io-error", "cannot decode image " + path.string());
    Image img(bgr.rows, bgr.cols);
    for (int y = 0; y < bgr.rows; ++y) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            img.at(0, y, x) = static_cast<float>(row[x][2]);
            img.at(1, y, x) = static_cast<float>(row[x][1]);
            img.at(2, y, x) = static_cast<float>(row[x][0]);
        }
    }
    return img;
}

template <typename T>
void save_image(const ImageT<T>& img, const std::filesystem::path& path) {
    const auto rgb = quantize_rgb8(img);
    cv::Mat bgr(img.height(), img.width(), CV_8UC3);
    size_t i = 0;
    for (int y = 0; y < img.height(); ++y) {
        cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.width(); ++x, i += 3)
            row[x] = cv::Vec3b(rgb[i + 2], rgb[i + 1], rgb[i]);
    }
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), bgr))
        throw Error("io-error", "cannot write image " + path.string());
}

inline bool has_image_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

// Image files in a directory, sorted by filename for stable processing order.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw Error("io-error", "not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && has_image_extension(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace mtx
