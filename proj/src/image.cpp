#include "gazebench/image.hpp"

#include <openssl/evp.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <stdexcept>

#include "gazebench/digest.hpp"
#include "gazebench/jsonl.hpp"

namespace gazebench::gateway {

Dims fit_pixel_cap(int width, int height, int64_t pixel_cap) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("non-positive image dimensions");
    if (pixel_cap <= 0) throw std::invalid_argument("non-positive pixel cap");
    const int64_t pixels = static_cast<int64_t>(width) * height;
    if (pixels <= pixel_cap) return {width, height};

    const double s = std::sqrt(static_cast<double>(pixel_cap) / static_cast<double>(pixels));
    int w, h;
    if (width <= height) {
        w = static_cast<int>(std::floor(width * s));
        if (w < 1) throw std::runtime_error("zero-dimension result after scaling");
        h = static_cast<int>(std::floor(static_cast<double>(height) * w / width));
    } else {
        h = static_cast<int>(std::floor(height * s));
        if (h < 1) throw std::runtime_error("zero-dimension result after scaling");
        w = static_cast<int>(std::floor(static_cast<double>(width) * h / height));
    }
    return {w, h};
}

Dims fit_longest_side(int width, int height, int longest) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("non-positive image dimensions");
    if (longest <= 0) throw std::invalid_argument("non-positive longest side");
    if (width >= height) {
        const int h = std::max(1, static_cast<int>(std::lround(
                                      static_cast<double>(height) * longest / width)));
        return {longest, h};
    }
    const int w =
        std::max(1, static_cast<int>(std::lround(static_cast<double>(width) * longest / height)));
    return {w, longest};
}

PreparedImage prepare_image(const std::string& source_bytes, int64_t pixel_cap, ResizeMode mode,
                            int longest_side) {
    const cv::Mat raw(1, static_cast<int>(source_bytes.size()), CV_8UC1,
                      const_cast<char*>(source_bytes.data()));
    cv::Mat img = cv::imdecode(raw, cv::IMREAD_COLOR);
    if (img.empty()) throw std::runtime_error("undecodable image");

    const Dims target = mode == ResizeMode::cap_total
                            ? fit_pixel_cap(img.cols, img.rows, pixel_cap)
                            : fit_longest_side(img.cols, img.rows, longest_side);
    if (target.width != img.cols || target.height != img.rows) {
        cv::Mat resized;
        const bool shrinking = target.width <= img.cols;
        cv::resize(img, resized, cv::Size(target.width, target.height), 0, 0,
                   shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
        img = resized;
    }

    std::vector<uchar> encoded;
    if (!cv::imencode(".png", img, encoded)) throw std::runtime_error("png encode failed");

    PreparedImage out;
    out.bytes.assign(encoded.begin(), encoded.end());
    out.width_px = img.cols;
    out.height_px = img.rows;
    out.source_hash = sha256_hex(source_bytes);
    return out;
}

PreparedImage prepare_image_file(const std::filesystem::path& path, int64_t pixel_cap,
                                 ResizeMode mode, int longest_side) {
    return prepare_image(read_file(path), pixel_cap, mode, longest_side);
}

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<size_t>(n));
    return out;
}

std::string to_data_uri(const PreparedImage& image) {
    return "data:" + image.media_type + ";base64," + base64_encode(image.bytes);
}

}  // namespace gazebench::gateway
