#include "acl/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "acl/fileio.hpp"

namespace acl {
namespace {

// Per-kernel normalization: min -> 0, max -> 255, constant -> 128.
std::vector<uint8_t> normalize(const Mat& m) {
    const auto [lo_it, hi_it] = std::minmax_element(m.v.begin(), m.v.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<uint8_t> out(m.v.size());
    if (hi == lo) {
        std::fill(out.begin(), out.end(), static_cast<uint8_t>(128));
        return out;
    }
    for (size_t i = 0; i < m.v.size(); ++i)
        out[i] = static_cast<uint8_t>(
            std::lround((m.v[i] - lo) / (hi - lo) * 255.0));
    return out;
}

struct Canvas {
    int width = 0, height = 0, channels = 1;
    std::vector<uint8_t> px;  // height x width x channels, zero = black

    Canvas(int rows, int cols, int th, int tw, int ch)
        : width(cols * tw + cols - 1),
          height(rows * th + rows - 1),
          channels(ch),
          px(static_cast<size_t>(width) * height * ch, 0) {}

    void blit(int row, int col, int th, int tw, int channel,
              const std::vector<uint8_t>& tile) {
        const int y0 = row * (th + 1), x0 = col * (tw + 1);
        for (int i = 0; i < th; ++i)
            for (int j = 0; j < tw; ++j)
                px[(static_cast<size_t>(y0 + i) * width + (x0 + j)) * channels +
                   channel] = tile[static_cast<size_t>(i) * tw + j];
    }
};

}  // namespace

void render_kernels(const AclLayer& layer, const std::string& path, int rows,
                    int cols, RenderMode mode) {
    validate(layer);
    const Arrangement& a = layer.arrangement;
    const int th = a.kernel_size.h, tw = a.kernel_size.w;
    const std::vector<Mat> bank = materialize(layer);

    const int tiles = mode == RenderMode::Gray
                          ? a.in_channels * a.out_channels
                          : a.out_channels;
    if (mode == RenderMode::Rgb && a.in_channels != 3)
        throw std::invalid_argument(
            "render: RGB mode needs exactly 3 input channels, layer has " +
            std::to_string(a.in_channels));

    if (rows == 0 && cols == 0) {
        if (mode == RenderMode::Gray) {
            rows = a.out_channels;
            cols = a.in_channels;
        } else {
            cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(tiles))));
            rows = (tiles + cols - 1) / cols;
        }
    }
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("render: rows and cols must be positive");
    if (rows * cols < tiles)
        throw std::invalid_argument("render: layout " + std::to_string(rows) +
                                    "x" + std::to_string(cols) + " too small for " +
                                    std::to_string(tiles) + " tiles");

    const int channels = mode == RenderMode::Gray ? 1 : 3;
    Canvas canvas(rows, cols, th, tw, channels);
    if (mode == RenderMode::Gray) {
        for (int k = 0; k < tiles; ++k)
            canvas.blit(k / cols, k % cols, th, tw, 0,
                        normalize(bank[static_cast<size_t>(k)]));
    } else {
        for (int q = 0; q < tiles; ++q)
            for (int p = 0; p < 3; ++p)
                canvas.blit(q / cols, q % cols, th, tw, p,
                            normalize(bank[static_cast<size_t>(q) * 3 + p]));
    }

    std::string out = std::string(channels == 1 ? "P5" : "P6") + "\n" +
                      std::to_string(canvas.width) + " " +
                      std::to_string(canvas.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(canvas.px.data()), canvas.px.size());
    write_file_atomic(path, out);
}

}  // namespace acl
