#ifndef DEHAZE_PLOT_H_
#define DEHAZE_PLOT_H_

#include <string>
#include <vector>

namespace dehaze {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Renders the series as a PNG line chart with axes, tick labels and a legend.
// Non-finite points are left out.
void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::vector<PlotSeries>& series,
                     int width = 800, int height = 500);

}  // namespace dehaze

#endif  // DEHAZE_PLOT_H_
