#include "dehaze/image_io.h"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace dehaze {
namespace {

std::uint8_t round_byte(double v) {
  if (std::isnan(v)) return 0;
  return static_cast<std::uint8_t>(std::round(std::clamp(v, 0.0, 255.0)));
}

}  // namespace

double to_unit_signed(double byte_value) { return byte_value / 127.5 - 1.0; }

std::uint8_t to_byte(double unit_value) { return round_byte((unit_value + 1.0) * 127.5); }

Tensor to_unit_signed(const Tensor& bytes) {
  Tensor out(bytes.shape());
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = to_unit_signed(bytes[i]);
  return out;
}

Tensor to_byte_scale(const Tensor& unit) {
  Tensor out(unit.shape());
  for (std::size_t i = 0; i < unit.size(); ++i) out[i] = to_byte(unit[i]);
  return out;
}

Tensor read_image_bytes(const std::string& path) {
  cv::Mat img = cv::imread(path, cv::IMREAD_COLOR);
  if (img.empty()) throw ImageIoError("cannot decode image " + path);
  if (img.depth() != CV_8U) throw ImageIoError("not an 8-bit image: " + path);
  Tensor t(3, img.rows, img.cols);
  for (int y = 0; y < img.rows; ++y) {
    const cv::Vec3b* row = img.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.cols; ++x) {
      // OpenCV stores BGR.
      t.at(0, y, x) = row[x][2];
      t.at(1, y, x) = row[x][1];
      t.at(2, y, x) = row[x][0];
    }
  }
  return t;
}

Tensor read_image_unit(const std::string& path) { return to_unit_signed(read_image_bytes(path)); }

void write_image_bytes(const std::string& path, const Tensor& bytes) {
  if (bytes.channels() != 1 && bytes.channels() != 3) {
    throw ImageIoError("cannot write a " + std::to_string(bytes.channels()) +
                       "-channel image to " + path);
  }
  cv::Mat img(bytes.height(), bytes.width(), bytes.channels() == 3 ? CV_8UC3 : CV_8UC1);
  for (int y = 0; y < bytes.height(); ++y) {
    std::uint8_t* row = img.ptr<std::uint8_t>(y);
    for (int x = 0; x < bytes.width(); ++x) {
      if (bytes.channels() == 1) {
        row[x] = round_byte(bytes.at(0, y, x));
      } else {
        row[3 * x + 0] = round_byte(bytes.at(2, y, x));
        row[3 * x + 1] = round_byte(bytes.at(1, y, x));
        row[3 * x + 2] = round_byte(bytes.at(0, y, x));
      }
    }
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path, img);
  } catch (const cv::Exception& e) {
    throw ImageIoError("cannot write image " + path + ": " + e.what());
  }
  if (!ok) throw ImageIoError("cannot write image " + path);
}

void write_image_unit(const std::string& path, const Tensor& unit) {
  write_image_bytes(path, to_byte_scale(unit));
}

}  // namespace dehaze
