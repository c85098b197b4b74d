#pragma once

#include <algorithm>
#include <cmath>

#include "mtx/tensor.hpp"

namespace mtx {

// RGB raster, values stored as reals in canonical range [0, 255], CHW layout.
template <typename T>
struct ImageT {
    TensorT<T> px;  // (1, 3, H, W)

    ImageT() = default;
    ImageT(int height, int width) : px(1, 3, height, width) {}
    explicit ImageT(TensorT<T> t) : px(std::move(t)) {
        if (px.n != 1 || px.c != 3) throw Error("shape-mismatch", "image must be 1x3xHxW");
    }

    int height() const { return px.h; }
    int width() const { return px.w; }

    T& at(int c, int y, int x) { return px.at(0, c, y, x); }
    T at(int c, int y, int x) const { return px.at(0, c, y, x); }

    bool valid() const { return px.h >= 1 && px.w >= 1 && px.all_finite(); }

    void clamp_range(T lo = T(0), T hi = T(255)) {
        for (auto& v : px.data) v = std::min(hi, std::max(lo, v));
    }
};

using Image = ImageT<float>;

template <typename T>
ImageT<T> constant_image(int height, int width, T r, T g, T b) {
    ImageT<T> img(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            img.at(0, y, x) = r;
            img.at(1, y, x) = g;
            img.at(2, y, x) = b;
        }
    return img;
}

// Bilinear sample with edge clamping; coordinates in pixel units.
template <typename T>
T sample_bilinear(const ImageT<T>& img, int c, double y, double x) {
    const int H = img.height(), W = img.width();
    y = std::min(std::max(y, 0.0), static_cast<double>(H - 1));
    x = std::min(std::max(x, 0.0), static_cast<double>(W - 1));
    const int y0 = static_cast<int>(std::floor(y)), x0 = static_cast<int>(std::floor(x));
    const int y1 = std::min(y0 + 1, H - 1), x1 = std::min(x0 + 1, W - 1);
    const double fy = y - y0, fx = x - x0;
    const double v00 = img.at(c, y0, x0), v01 = img.at(c, y0, x1);
    const double v10 = img.at(c, y1, x0), v11 = img.at(c, y1, x1);
    return static_cast<T>((1 - fy) * ((1 - fx) * v00 + fx * v01) +
                          fy * ((1 - fx) * v10 + fx * v11));
}

template <typename T>
ImageT<T> resize_bilinear(const ImageT<T>& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw Error("bad-argument", "resize target must be >= 1x1");
    if (out_h == img.height() && out_w == img.width()) return img;
    ImageT<T> out(out_h, out_w);
    const double sy = static_cast<double>(img.height()) / out_h;
    const double sx = static_cast<double>(img.width()) / out_w;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < out_h; ++y)
            for (int x = 0; x < out_w; ++x)
                out.at(c, y, x) = sample_bilinear(img, c, (y + 0.5) * sy - 0.5, (x + 0.5) * sx - 0.5);
    return out;
}

// Resize preserving aspect so max(H, W) == max_dim.
template <typename T>
ImageT<T> resize_max_dim(const ImageT<T>& img, int max_dim) {
    const double scale = static_cast<double>(max_dim) / std::max(img.height(), img.width());
    int oh = std::max(1, static_cast<int>(std::lround(img.height() * scale)));
    int ow = std::max(1, static_cast<int>(std::lround(img.width() * scale)));
    if (img.height() >= img.width())
        oh = max_dim;
    else
        ow = max_dim;
    return resize_bilinear(img, oh, ow);
}

// Largest axis-aligned rectangle inscribed in a w x h rectangle rotated by
// `angle` radians. Classic closed form; used to keep augmented crops free of
// out-of-bounds fill.
inline void rotated_interior_dims(double w, double h, double angle, double* out_w, double* out_h) {
    const double a = std::abs(std::fmod(angle, M_PI));
    const double sin_a = std::abs(std::sin(a)), cos_a = std::abs(std::cos(a));
    if (sin_a < 1e-12) {
        *out_w = w;
        *out_h = h;
        return;
    }
    const bool width_longer = w >= h;
    const double side_long = width_longer ? w : h;
    const double side_short = width_longer ? h : w;
    double wr, hr;
    if (side_short <= 2.0 * sin_a * cos_a * side_long || std::abs(sin_a - cos_a) < 1e-12) {
        const double x = 0.5 * side_short;
        if (width_longer) {
            wr = x / sin_a;
            hr = x / cos_a;
        } else {
            wr = x / cos_a;
            hr = x / sin_a;
        }
    } else {
        const double cos_2a = cos_a * cos_a - sin_a * sin_a;
        wr = (w * cos_a - h * sin_a) / cos_2a;
        hr = (h * cos_a - w * sin_a) / cos_2a;
    }
    *out_w = wr;
    *out_h = hr;
}

// Rotate by `angle` radians about the center and uniformly scale, then return
// the interior region guaranteed to contain only real source pixels.
template <typename T>
ImageT<T> rotate_scale_interior(const ImageT<T>& img, double angle, double scale) {
    if (scale <= 0) throw Error("bad-argument", "scale must be positive");
    const double sw = img.width() * scale, sh = img.height() * scale;
    double iw, ih;
    rotated_interior_dims(sw, sh, angle, &iw, &ih);
    const int out_w = std::max(1, static_cast<int>(std::floor(iw)) - 1);
    const int out_h = std::max(1, static_cast<int>(std::floor(ih)) - 1);
    if (std::abs(angle) < 1e-12 && std::abs(scale - 1.0) < 1e-12) return img;  // identity

    ImageT<T> out(out_h, out_w);
    const double cx = img.width() / 2.0 - 0.5, cy = img.height() / 2.0 - 0.5;
    const double ocx = out_w / 2.0 - 0.5, ocy = out_h / 2.0 - 0.5;
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            // inverse map: un-rotate, then un-scale about the source center
            const double dx = x - ocx, dy = y - ocy;
            const double rx = (ca * dx + sa * dy) / scale + cx;
            const double ry = (-sa * dx + ca * dy) / scale + cy;
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = sample_bilinear(img, c, ry, rx);
        }
    }
    return out;
}

template <typename T>
ImageT<T> crop(const ImageT<T>& img, int top, int left, int size_h, int size_w) {
    if (top < 0 || left < 0 || top + size_h > img.height() || left + size_w > img.width())
        throw Error("out-of-bounds", "crop window exceeds image bounds");
    ImageT<T> out(size_h, size_w);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < size_h; ++y)
            for (int x = 0; x < size_w; ++x) out.at(c, y, x) = img.at(c, top + y, left + x);
    return out;
}

template <typename T>
double image_mse(const ImageT<T>& a, const ImageT<T>& b) {
    if (!a.px.same_shape(b.px)) throw Error("shape-mismatch", "image mse on unequal shapes");
    double s = 0;
    for (size_t i = 0; i < a.px.size(); ++i) {
        const double d = static_cast<double>(a.px.data[i]) - static_cast<double>(b.px.data[i]);
        s += d * d;
    }
    return s / static_cast<double>(a.px.size());
}

template <typename T>
ImageT<T> random_uniform_image(int height, int width, Rng& rng, T lo = T(0), T hi = T(255)) {
    ImageT<T> img(height, width);
    fill_uniform(img.px, rng, lo, hi);
    return img;
}

}  // namespace mtx
