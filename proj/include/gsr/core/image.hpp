#ifndef GSR_CORE_IMAGE_HPP
#define GSR_CORE_IMAGE_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gsr/core/tensor.hpp"

namespace gsr {

// RGB raster stored as 16-bit samples, planar (C,H,W). Intensity x in [0,1]
// maps to round(x * 65535); every raster on disk and in a dataset is exactly
// representable on this grid, which is what makes write/read round trips
// bitwise identities.
struct Raster {
    int channels = 3, h = 0, w = 0;
    std::vector<uint16_t> px;

    Raster() = default;
    Raster(int c, int h_, int w_) : channels(c), h(h_), w(w_) {
        px.assign(static_cast<size_t>(c) * h_ * w_, 0);
    }

    uint16_t& at(int c, int y, int x) {
        return px[(static_cast<size_t>(c) * h + y) * w + x];
    }
    uint16_t at(int c, int y, int x) const {
        return px[(static_cast<size_t>(c) * h + y) * w + x];
    }
    bool operator==(const Raster& o) const {
        return channels == o.channels && h == o.h && w == o.w && px == o.px;
    }

    template <typename S>
    Tensor<S> to_tensor() const {
        Tensor<S> t(Shape{channels, h, w});
        for (size_t i = 0; i < px.size(); ++i)
            t.data[static_cast<int64_t>(i)] = static_cast<S>(px[i]) / S(65535);
        return t;
    }
};

// round(clamp(x,0,1) * 65535) per sample
template <typename S>
Raster raster_from_tensor(const Tensor<S>& t) {
    Raster r(t.dim(0), t.dim(1), t.dim(2));
    for (int64_t i = 0; i < t.numel(); ++i) {
        double v = std::min(1.0, std::max(0.0, double(t.data[i])));
        r.px[static_cast<size_t>(i)] = static_cast<uint16_t>(std::lround(v * 65535.0));
    }
    return r;
}

// 16-bit RGB PNG I/O
void png_write(const std::filesystem::path& path, const Raster& r);
Raster png_read(const std::filesystem::path& path);

// ---- resampling (double accumulation, channel-planar float tensors) ----

// mean over non-overlapping f x f blocks; requires H, W divisible by f
template <typename S>
Tensor<S> area_downsample(const Tensor<S>& x, int f) {
    int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    if (H % f != 0 || W % f != 0) throw ShapeError("area_downsample: size not divisible");
    Tensor<S> y(Shape{C, H / f, W / f});
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < H / f; ++i)
            for (int j = 0; j < W / f; ++j) {
                double acc = 0;
                for (int a = 0; a < f; ++a)
                    for (int b = 0; b < f; ++b)
                        acc += double(x.data[(static_cast<int64_t>(c) * H + i * f + a) * W +
                                             j * f + b]);
                y.data[(static_cast<int64_t>(c) * H / f + i) * (W / f) + j] =
                    static_cast<S>(acc / (f * f));
            }
    return y;
}

// separable Gaussian, radius floor(3*sigma) (identity below sigma=1/3),
// replicated edges
template <typename S>
Tensor<S> gaussian_blur(const Tensor<S>& x, double sigma) {
    int radius = static_cast<int>(std::floor(3.0 * sigma));
    if (radius <= 0) return x;
    std::vector<double> kern(static_cast<size_t>(2 * radius + 1));
    double s = 0;
    for (int i = -radius; i <= radius; ++i) {
        kern[static_cast<size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
        s += kern[static_cast<size_t>(i + radius)];
    }
    for (auto& kv : kern) kv /= s;
    int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    Tensor<S> tmp(x.shape), y(x.shape);
    auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v >= hi ? hi - 1 : v); };
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                double acc = 0;
                for (int t = -radius; t <= radius; ++t)
                    acc += kern[static_cast<size_t>(t + radius)] *
                           double(x.data[(static_cast<int64_t>(c) * H + i) * W + clampi(j + t, W)]);
                tmp.data[(static_cast<int64_t>(c) * H + i) * W + j] = static_cast<S>(acc);
            }
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                double acc = 0;
                for (int t = -radius; t <= radius; ++t)
                    acc += kern[static_cast<size_t>(t + radius)] *
                           double(tmp.data[(static_cast<int64_t>(c) * H + clampi(i + t, H)) * W + j]);
                y.data[(static_cast<int64_t>(c) * H + i) * W + j] = static_cast<S>(acc);
            }
    return y;
}

// Catmull-Rom cubic resize (a = -0.5), clamped edges, output clamped to [0,1]
template <typename S>
Tensor<S> bicubic_resize(const Tensor<S>& x, int oh, int ow) {
    int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    if (oh == H && ow == W) return x;
    auto cubic = [](double t) {
        constexpr double a = -0.5;
        t = std::abs(t);
        if (t <= 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
        if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
        return 0.0;
    };
    auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v >= hi ? hi - 1 : v); };
    Tensor<S> y(Shape{C, oh, ow});
    const double sy = static_cast<double>(H) / oh, sx = static_cast<double>(W) / ow;
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < oh; ++i) {
            double fy = (i + 0.5) * sy - 0.5;
            int iy = static_cast<int>(std::floor(fy));
            for (int j = 0; j < ow; ++j) {
                double fx = (j + 0.5) * sx - 0.5;
                int ix = static_cast<int>(std::floor(fx));
                double acc = 0;
                for (int m = -1; m <= 2; ++m) {
                    double wy = cubic(fy - (iy + m));
                    for (int n = -1; n <= 2; ++n) {
                        double wx = cubic(fx - (ix + n));
                        acc += wy * wx *
                               double(x.data[(static_cast<int64_t>(c) * H + clampi(iy + m, H)) * W +
                                             clampi(ix + n, W)]);
                    }
                }
                y.data[(static_cast<int64_t>(c) * oh + i) * ow + j] =
                    static_cast<S>(std::min(1.0, std::max(0.0, acc)));
            }
        }
    return y;
}

// uniform quantization to `levels` intensity levels over [0,1]
template <typename S>
Tensor<S> quantize_levels(const Tensor<S>& x, int levels) {
    if (levels < 2) throw DomainError("quantize_levels: need >= 2 levels");
    Tensor<S> y = x;
    const double q = levels - 1;
    for (int64_t i = 0; i < y.numel(); ++i) {
        double v = std::min(1.0, std::max(0.0, double(y.data[i])));
        y.data[i] = static_cast<S>(std::lround(v * q) / q);
    }
    return y;
}

// nearest-neighbor integer upscale (display only)
Raster nearest_upscale(const Raster& r, int f);

// horizontal concatenation of equally sized tiles into rows of `cols`
Raster make_grid(const std::vector<Raster>& tiles, int cols, int pad = 2);

// tiny line-plot renderer for loss curves
Raster render_line_plot(const std::vector<double>& xs, const std::vector<double>& ys, int w, int h,
                        const std::string& title);

}  // namespace gsr

#endif
