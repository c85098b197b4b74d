#pragma once

#include <utility>
#include <vector>

#include "mtx/encoder.hpp"
#include "mtx/tensor.hpp"

namespace mtx {

// Regularly sampled k x k neural patches with their source coordinates, in
// row-major origin order.
template <typename T>
struct PatchSetT {
    int k = 0;
    int stride = 0;
    TensorT<T> patches;  // (n, channels, k, k)
    std::vector<std::pair<int, int>> origins;  // (row, col) in feature coordinates

    int count() const { return patches.n; }
};

using PatchSet = PatchSetT<float>;

inline int patch_grid_count(int extent, int k, int stride) {
    return (extent - k) / stride + 1;
}

// Extracts patches from a single feature map (1, C, fh, fw).
template <typename T>
PatchSetT<T> extract_patches(const TensorT<T>& fm, int k, int stride) {
    if (fm.n != 1) throw Error("bad-argument", "extract_patches expects a single feature map");
    if (stride < 1) throw Error("bad-argument", "stride must be >= 1");
    if (k < 1 || k > fm.h || k > fm.w)
        throw Error("patch-too-large", "patch size " + std::to_string(k) +
                                           " exceeds feature map " + std::to_string(fm.h) + "x" +
                                           std::to_string(fm.w));
    const int nh = patch_grid_count(fm.h, k, stride);
    const int nw = patch_grid_count(fm.w, k, stride);
    PatchSetT<T> ps;
    ps.k = k;
    ps.stride = stride;
    ps.patches = TensorT<T>(nh * nw, fm.c, k, k);
    ps.origins.reserve(static_cast<size_t>(nh) * nw);
    int pi = 0;
    for (int oy = 0; oy < nh; ++oy) {
        for (int ox = 0; ox < nw; ++ox, ++pi) {
            const int r = oy * stride, c0 = ox * stride;
            ps.origins.emplace_back(r, c0);
            for (int c = 0; c < fm.c; ++c)
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx)
                        ps.patches.at(pi, c, ky, kx) = fm.at(0, c, r + ky, c0 + kx);
        }
    }
    return ps;
}

template <typename T>
PatchSetT<T> extract_patches(const FeatureMapT<T>& fm, int k, int stride) {
    return extract_patches(fm.data, k, stride);
}

// Scatter-adds per-patch gradients back onto the feature grid. With
// `normalize` set, each cell is divided by the number of patches covering it
// (the blending used for deconvolution steps); cells covered by no patch stay
// zero. Without it this is the exact adjoint of extract_patches.
template <typename T>
TensorT<T> fold_patch_gradients(const TensorT<T>& grads,
                                const std::vector<std::pair<int, int>>& origins, int fh, int fw,
                                bool normalize) {
    if (static_cast<size_t>(grads.n) != origins.size())
        throw Error("shape-mismatch", "gradient count does not match origin count");
    const int k = grads.h;
    TensorT<T> out(1, grads.c, fh, fw);
    std::vector<int> coverage;
    if (normalize) coverage.assign(static_cast<size_t>(fh) * fw, 0);
    for (int pi = 0; pi < grads.n; ++pi) {
        const auto [r, c0] = origins[static_cast<size_t>(pi)];
        if (r < 0 || c0 < 0 || r + k > fh || c0 + k > fw)
            throw Error("out-of-bounds", "patch origin (" + std::to_string(r) + "," +
                                             std::to_string(c0) + ") exceeds " +
                                             std::to_string(fh) + "x" + std::to_string(fw));
        for (int c = 0; c < grads.c; ++c)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx)
                    out.at(0, c, r + ky, c0 + kx) += grads.at(pi, c, ky, kx);
        if (normalize)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx)
                    ++coverage[static_cast<size_t>(r + ky) * fw + (c0 + kx)];
    }
    if (normalize) {
        for (int c = 0; c < grads.c; ++c)
            for (int y = 0; y < fh; ++y)
                for (int x = 0; x < fw; ++x) {
                    const int cov = coverage[static_cast<size_t>(y) * fw + x];
                    if (cov > 1) out.at(0, c, y, x) /= static_cast<T>(cov);
                }
    }
    return out;
}

template <typename T>
TensorT<T> fold_patch_gradients(const PatchSetT<T>& ps, int fh, int fw, bool normalize) {
    return fold_patch_gradients(ps.patches, ps.origins, fh, fw, normalize);
}

}  // namespace mtx
