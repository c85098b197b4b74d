#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "mtx/image.hpp"
#include "mtx/tensor.hpp"

// Structured noise sources for unguided decoding: Perlin (gradient-lattice)
// noise and brown noise with a power spectrum decaying toward high
// frequencies. Both are pure functions of their spec.

namespace mtx {

enum class NoiseKind { Perlin, Brown };

inline NoiseKind parse_noise_kind(const std::string& s) {
    if (s == "perlin") return NoiseKind::Perlin;
    if (s == "brown") return NoiseKind::Brown;
    throw Error("bad-argument", "unknown noise kind '" + s + "' (want perlin or brown)");
}

struct NoiseSpec {
    NoiseKind kind = NoiseKind::Brown;
    int height = 256;
    int width = 256;
    int octaves = 4;                 // perlin
    double spectral_exponent = 2.0;  // brown: amplitude ~ 1/f^(exponent/2)
    double cell = 32.0;              // perlin base lattice cell, pixels
    uint64_t seed = 0;

    void validate() const {
        if (height < 8 || width < 8)
            throw Error("invalid-dims", "noise images must be at least 8x8");
        if (octaves < 1) throw Error("invalid-dims", "octaves must be >= 1");
        if (cell < 1.0) throw Error("invalid-dims", "lattice cell must be >= 1 pixel");
    }
};

namespace detail {

// Unit gradient at a lattice corner, fully determined by (seed, channel,
// octave, corner coords).
inline std::pair<double, double> lattice_gradient(uint64_t seed, int channel, int octave, int64_t ix,
                                                  int64_t iy) {
    uint64_t h = mix_seed(seed, 0x9E3779B97F4A7C15ULL + static_cast<uint64_t>(channel));
    h = mix_seed(h, static_cast<uint64_t>(octave) + 0x5851F42D4C957F2DULL);
    h = mix_seed(h, static_cast<uint64_t>(ix) * 0x100000001B3ULL + static_cast<uint64_t>(iy));
    constexpr double two_pi = 6.283185307179586476925;
    const double angle = two_pi * (static_cast<double>(h >> 11) / 9007199254740992.0);
    return {std::cos(angle), std::sin(angle)};
}

inline double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

inline double perlin_octave(uint64_t seed, int channel, int octave, double x, double y) {
    const int64_t x0 = static_cast<int64_t>(std::floor(x));
    const int64_t y0 = static_cast<int64_t>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    double dots[2][2];
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
            const auto [gx, gy] = lattice_gradient(seed, channel, octave, x0 + dx, y0 + dy);
            dots[dy][dx] = gx * (fx - dx) + gy * (fy - dy);
        }
    const double u = fade(fx), v = fade(fy);
    const double top = dots[0][0] + u * (dots[0][1] - dots[0][0]);
    const double bot = dots[1][0] + u * (dots[1][1] - dots[1][0]);
    return top + v * (bot - top);
}

template <typename T>
void fill_perlin_channel(ImageT<T>& img, const NoiseSpec& spec, int channel) {
    double norm = 0, amp = 1;
    for (int o = 0; o < spec.octaves; ++o, amp *= 0.5) norm += amp;
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            double v = 0;
            amp = 1;
            double freq = 1.0 / spec.cell;
            for (int o = 0; o < spec.octaves; ++o, amp *= 0.5, freq *= 2.0)
                v += amp * perlin_octave(spec.seed, channel, o, x * freq, y * freq);
            const double pixel = 127.5 + 120.0 * (v / norm);
            img.at(channel, y, x) = static_cast<T>(std::min(255.0, std::max(0.0, pixel)));
        }
    }
}

template <typename T>
void fill_brown_channel(ImageT<T>& img, const NoiseSpec& spec, int channel) {
    const int H = spec.height, W = spec.width;
    const size_t N = static_cast<size_t>(H) * W;
    std::vector<std::complex<double>> field(N), spectrum(N);
    Rng rng(mix_seed(spec.seed, 0xB0B0ULL + static_cast<uint64_t>(channel)));
    for (auto& v : field) v = {rng.normal(0.0, 1.0), 0.0};

    fftw_plan fwd = fftw_plan_dft_2d(H, W, reinterpret_cast<fftw_complex*>(field.data()),
                                     reinterpret_cast<fftw_complex*>(spectrum.data()),
                                     FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);

    for (int ky = 0; ky < H; ++ky) {
        const int fy = ky <= H / 2 ? ky : ky - H;
        for (int kx = 0; kx < W; ++kx) {
            const int fx = kx <= W / 2 ? kx : kx - W;
            const double f = std::sqrt(static_cast<double>(fy) * fy + static_cast<double>(fx) * fx);
            const double a = f == 0.0 ? 0.0 : std::pow(f, -spec.spectral_exponent / 2.0);
            spectrum[static_cast<size_t>(ky) * W + kx] *= a;
        }
    }

    fftw_plan bwd = fftw_plan_dft_2d(H, W, reinterpret_cast<fftw_complex*>(spectrum.data()),
                                     reinterpret_cast<fftw_complex*>(field.data()),
                                     FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(bwd);
    fftw_destroy_plan(bwd);

    double mu = 0;
    for (const auto& v : field) mu += v.real();
    mu /= static_cast<double>(N);
    double var = 0;
    for (const auto& v : field) var += (v.real() - mu) * (v.real() - mu);
    var /= static_cast<double>(N);
    const double inv_sd = var > 0 ? 1.0 / std::sqrt(var) : 0.0;

    size_t i = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x, ++i) {
            const double pixel = 127.5 + 40.0 * (field[i].real() - mu) * inv_sd;
            img.at(channel, y, x) = static_cast<T>(std::min(255.0, std::max(0.0, pixel)));
        }
}

}  // namespace detail

template <typename T = float>
ImageT<T> generate_noise(const NoiseSpec& spec) {
    spec.validate();
    ImageT<T> img(spec.height, spec.width);
    for (int c = 0; c < 3; ++c) {
        if (spec.kind == NoiseKind::Perlin)
            detail::fill_perlin_channel(img, spec, c);
        else
            detail::fill_brown_channel(img, spec, c);
    }
    return img;
}

// Radially averaged power in [f_lo, f_hi) of one channel — the measurement the
// spectral-decay property is defined against.
template <typename T>
double radial_band_power(const ImageT<T>& img, int channel, double f_lo, double f_hi) {
    const int H = img.height(), W = img.width();
    const size_t N = static_cast<size_t>(H) * W;
    std::vector<std::complex<double>> field(N), spectrum(N);
    double mu = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) mu += img.at(channel, y, x);
    mu /= static_cast<double>(N);
    size_t i = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x, ++i) field[i] = {img.at(channel, y, x) - mu, 0.0};

    fftw_plan fwd = fftw_plan_dft_2d(H, W, reinterpret_cast<fftw_complex*>(field.data()),
                                     reinterpret_cast<fftw_complex*>(spectrum.data()),
                                     FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);

    double power = 0;
    long count = 0;
    for (int ky = 0; ky < H; ++ky) {
        const int fy = ky <= H / 2 ? ky : ky - H;
        for (int kx = 0; kx < W; ++kx) {
            const int fx = kx <= W / 2 ? kx : kx - W;
            const double f = std::sqrt(static_cast<double>(fy) * fy + static_cast<double>(fx) * fx);
            if (f < f_lo || f >= f_hi) continue;
            power += std::norm(spectrum[static_cast<size_t>(ky) * W + kx]);
            ++count;
        }
    }
    return count > 0 ? power / count : 0.0;
}

}  // namespace mtx
