#include "adadqa/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "adadqa/io.hpp"

namespace adadqa {

void write_bmp(const std::string& path, int width, int height,
               const std::vector<unsigned char>& rgb) {
    if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
        throw std::invalid_argument("write_bmp: buffer size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write image: " + path);

    const int row_bytes = (width * 3 + 3) / 4 * 4;
    const std::uint32_t data_size = static_cast<std::uint32_t>(row_bytes) * height;
    const std::uint32_t file_size = 54 + data_size;

    out.put('B').put('M');
    io::write_u32(out, file_size);
    io::write_u32(out, 0);
    io::write_u32(out, 54);  // pixel data offset
    io::write_u32(out, 40);  // BITMAPINFOHEADER
    io::write_u32(out, static_cast<std::uint32_t>(width));
    io::write_u32(out, static_cast<std::uint32_t>(height));
    out.put(1).put(0);    // planes
    out.put(24).put(0);   // bpp
    io::write_u32(out, 0);
    io::write_u32(out, data_size);
    io::write_u32(out, 2835);
    io::write_u32(out, 2835);
    io::write_u32(out, 0);
    io::write_u32(out, 0);

    std::vector<char> row(static_cast<std::size_t>(row_bytes), 0);
    for (int y = height - 1; y >= 0; --y) {  // bottom-up
        for (int x = 0; x < width; ++x) {
            const std::size_t src = (static_cast<std::size_t>(y) * width + x) * 3;
            row[static_cast<std::size_t>(x) * 3 + 0] = static_cast<char>(rgb[src + 2]);  // B
            row[static_cast<std::size_t>(x) * 3 + 1] = static_cast<char>(rgb[src + 1]);  // G
            row[static_cast<std::size_t>(x) * 3 + 2] = static_cast<char>(rgb[src + 0]);  // R
        }
        out.write(row.data(), row_bytes);
    }
    if (!out) throw std::runtime_error("image write failed: " + path);
}

namespace {

struct Canvas {
    int w, h;
    std::vector<unsigned char> px;

    Canvas(int w_, int h_) : w(w_), h(h_), px(static_cast<std::size_t>(w_) * h_ * 3, 255) {}

    void set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
        if (x < 0 || x >= w || y < 0 || y >= h) return;
        const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
        px[i] = r;
        px[i + 1] = g;
        px[i + 2] = b;
    }

    void line(int x0, int y0, int x1, int y1, unsigned char r, unsigned char g,
              unsigned char b) {
        const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            set(x0, y0, r, g, b);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }
};

constexpr unsigned char kPalette[][3] = {
    {214, 39, 40}, {31, 119, 180}, {44, 160, 44},  {255, 127, 14},
    {148, 103, 189}, {140, 86, 75}, {23, 190, 207}, {127, 127, 127},
};

}  // namespace

void write_line_plot(const std::string& path, const std::vector<double>& x,
                     const std::vector<PlotSeries>& series, int width, int height) {
    if (x.size() < 2) throw std::invalid_argument("write_line_plot: need at least two x values");
    Canvas canvas(width, height);

    const int margin = 40;
    const int x0 = margin, x1 = width - margin / 2;
    const int y0 = height - margin, y1 = margin / 2;

    double lo = 0.0, hi = 1.0;
    bool first = true;
    for (const PlotSeries& s : series)
        for (double v : s.y) {
            if (first) {
                lo = hi = v;
                first = false;
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (hi - lo < 1e-12) {
        hi += 1.0;
        lo -= 1.0;
    }
    const double x_lo = x.front(), x_hi = x.back();

    auto px_of = [&](double xv) {
        return x0 + static_cast<int>(std::lround((xv - x_lo) / (x_hi - x_lo) * (x1 - x0)));
    };
    auto py_of = [&](double yv) {
        return y0 - static_cast<int>(std::lround((yv - lo) / (hi - lo) * (y0 - y1)));
    };

    // axes box and x tick marks
    canvas.line(x0, y0, x1, y0, 0, 0, 0);
    canvas.line(x0, y0, x0, y1, 0, 0, 0);
    canvas.line(x0, y1, x1, y1, 200, 200, 200);
    canvas.line(x1, y0, x1, y1, 200, 200, 200);
    for (double xv : x) canvas.line(px_of(xv), y0, px_of(xv), y0 + 4, 0, 0, 0);

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& c = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        const PlotSeries& s = series[si];
        for (std::size_t i = 0; i + 1 < s.y.size() && i + 1 < x.size(); ++i)
            canvas.line(px_of(x[i]), py_of(s.y[i]), px_of(x[i + 1]), py_of(s.y[i + 1]), c[0],
                        c[1], c[2]);
        // series swatch along the top
        const int sw_x = x0 + 10 + static_cast<int>(si) * 18;
        for (int dy = 0; dy < 8; ++dy)
            canvas.line(sw_x, y1 + 6 + dy, sw_x + 12, y1 + 6 + dy, c[0], c[1], c[2]);
    }

    write_bmp(path, width, height, canvas.px);

    std::ofstream legend(path + ".legend.txt");
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& c = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        legend << series[si].name << " rgb(" << static_cast<int>(c[0]) << ","
               << static_cast<int>(c[1]) << "," << static_cast<int>(c[2]) << ")\n";
    }
}

}  // namespace adadqa
