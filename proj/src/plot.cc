#include "dehaze/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace dehaze {
namespace {

const cv::Scalar kColors[] = {{180, 119, 31}, {14, 127, 255}, {44, 160, 44},
                              {40, 39, 214},  {189, 103, 148}, {75, 86, 140}};

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::vector<PlotSeries>& series,
                     int width, int height) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("plot series length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) {
    x0 = 0;
    x1 = 1;
    y0 = 0;
    y1 = 1;
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  cv::Mat img(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
  const int left = 80, right = 20, top = 40, bottom = 60;
  const int pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + static_cast<int>(std::lround((x - x0) / (x1 - x0) * pw)); };
  auto py = [&](double y) { return top + ph - static_cast<int>(std::lround((y - y0) / (y1 - y0) * ph)); };

  const auto font = cv::FONT_HERSHEY_SIMPLEX;
  const cv::Scalar black(0, 0, 0), grid(225, 225, 225);
  for (int k = 0; k <= 5; ++k) {
    const double yv = y0 + (y1 - y0) * k / 5.0;
    const double xv = x0 + (x1 - x0) * k / 5.0;
    cv::line(img, {left, py(yv)}, {left + pw, py(yv)}, grid, 1);
    cv::line(img, {px(xv), top}, {px(xv), top + ph}, grid, 1);
    cv::putText(img, tick(yv), {5, py(yv) + 4}, font, 0.4, black, 1, cv::LINE_AA);
    cv::putText(img, tick(xv), {px(xv) - 12, top + ph + 18}, font, 0.4, black, 1, cv::LINE_AA);
  }
  cv::rectangle(img, {left, top}, {left + pw, top + ph}, black, 1);
  cv::putText(img, title, {left, 25}, font, 0.6, black, 1, cv::LINE_AA);
  cv::putText(img, x_label, {left + pw / 2 - 20, height - 15}, font, 0.5, black, 1, cv::LINE_AA);

  for (std::size_t k = 0; k < series.size(); ++k) {
    const cv::Scalar color = kColors[k % std::size(kColors)];
    std::vector<cv::Point> pts;
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      if (std::isfinite(series[k].x[i]) && std::isfinite(series[k].y[i])) {
        pts.emplace_back(px(series[k].x[i]), py(series[k].y[i]));
      }
    }
    if (pts.size() > 1) cv::polylines(img, pts, false, color, 2, cv::LINE_AA);
    for (const auto& p : pts) cv::circle(img, p, 3, color, cv::FILLED, cv::LINE_AA);
    const int ly = top + 18 + 18 * static_cast<int>(k);
    cv::line(img, {left + pw - 150, ly - 4}, {left + pw - 130, ly - 4}, color, 2);
    cv::putText(img, series[k].label, {left + pw - 125, ly}, font, 0.45, black, 1, cv::LINE_AA);
  }
  if (!cv::imwrite(path, img)) throw std::runtime_error("cannot write plot " + path);
}

}  // namespace dehaze
