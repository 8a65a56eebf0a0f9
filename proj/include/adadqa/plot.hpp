#pragma once

#include <string>
#include <vector>

namespace adadqa {

// 24-bit BMP writer; `rgb` is row-major top-to-bottom, 3 bytes per pixel.
void write_bmp(const std::string& path, int width, int height,
               const std::vector<unsigned char>& rgb);

struct PlotSeries {
    std::string name;
    std::vector<double> y;
};

// Minimal line plot: axes box, one polyline per series in a fixed palette,
// series names written to a sidecar <path>.legend.txt file.
void write_line_plot(const std::string& path, const std::vector<double>& x,
                     const std::vector<PlotSeries>& series, int width = 640, int height = 480);

}  // namespace adadqa
