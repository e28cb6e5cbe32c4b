#include "semstyle/image_io.hpp"

#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <stdexcept>

namespace semstyle {

ImageTensor load_image(const std::string& path) {
    cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
    if (bgr.empty()) throw std::runtime_error("cannot read image '" + path + "'");
    ImageTensor img(bgr.rows, bgr.cols);
    for (int y = 0; y < bgr.rows; ++y) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            img.at(0, y, x) = row[x][2] / 255.0;  // R
            img.at(1, y, x) = row[x][1] / 255.0;  // G
            img.at(2, y, x) = row[x][0] / 255.0;  // B
        }
    }
    return img;
}

void save_image(const std::string& path, const ImageTensor& image) {
    cv::Mat bgr(image.height, image.width, CV_8UC3);
    for (int y = 0; y < image.height; ++y) {
        cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.width; ++x) {
            auto q = [&](int c) {
                double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
                return static_cast<unsigned char>(std::lround(v * 255.0));
            };
            row[x] = cv::Vec3b(q(2), q(1), q(0));
        }
    }
    if (!cv::imwrite(path, bgr)) throw std::runtime_error("cannot write image '" + path + "'");
}

void save_mask_image(const std::string& path, const SemanticMask& mask) {
    cv::Mat gray(mask.height, mask.width, CV_8UC1);
    for (int y = 0; y < mask.height; ++y) {
        unsigned char* row = gray.ptr<unsigned char>(y);
        for (int x = 0; x < mask.width; ++x) row[x] = mask.at(y, x) ? 255 : 0;
    }
    if (!cv::imwrite(path, gray)) throw std::runtime_error("cannot write image '" + path + "'");
}

}  // namespace semstyle
