#pragma once

#include <map>
#include <span>
#include <type_traits>
#include <vector>

#include "mtx/encoder.hpp"
#include "mtx/image.hpp"
#include "mtx/patches.hpp"
#include "mtx/tensor.hpp"

namespace mtx {

// Texture loss over patch classification scores: mean of max(0, 1 - s_i),
// labels fixed to one.
template <typename T>
T hinge_texture_loss(std::span<const T> scores) {
    if (scores.empty()) throw Error("empty-input", "no patch scores");
    T sum = 0;
    for (T s : scores) sum += std::max(T(0), T(1) - s);
    return sum / static_cast<T>(scores.size());
}

template <typename T>
T hinge_texture_loss(const std::vector<T>& scores) {
    return hinge_texture_loss(std::span<const T>(scores));
}

// d/ds_i; subgradient 0 at the hinge point.
template <typename T>
std::vector<T> hinge_texture_loss_grad(std::span<const T> scores) {
    if (scores.empty()) throw Error("empty-input", "no patch scores");
    std::vector<T> g(scores.size(), T(0));
    const T inv = T(1) / static_cast<T>(scores.size());
    for (size_t i = 0; i < scores.size(); ++i)
        if (scores[i] < T(1)) g[i] = -inv;
    return g;
}

// Two-sided margin loss for the discriminator: real patches pushed above +1,
// fake patches below -1.
template <typename T>
T discriminator_hinge_loss(std::span<const T> s_real, std::span<const T> s_fake) {
    if (s_real.empty() || s_fake.empty())
        throw Error("empty-input", "discriminator loss needs real and fake scores");
    T lr = 0, lf = 0;
    for (T s : s_real) lr += std::max(T(0), T(1) - s);
    for (T s : s_fake) lf += std::max(T(0), T(1) + s);
    return lr / static_cast<T>(s_real.size()) + lf / static_cast<T>(s_fake.size());
}

template <typename T>
T discriminator_hinge_loss(const std::vector<T>& r, const std::vector<T>& f) {
    return discriminator_hinge_loss(std::span<const T>(r), std::span<const T>(f));
}

template <typename T>
std::pair<std::vector<T>, std::vector<T>> discriminator_hinge_loss_grad(
    std::span<const T> s_real, std::span<const T> s_fake) {
    if (s_real.empty() || s_fake.empty())
        throw Error("empty-input", "discriminator loss needs real and fake scores");
    std::vector<T> gr(s_real.size(), T(0)), gf(s_fake.size(), T(0));
    const T inv_r = T(1) / static_cast<T>(s_real.size());
    const T inv_f = T(1) / static_cast<T>(s_fake.size());
    for (size_t i = 0; i < s_real.size(); ++i)
        if (s_real[i] < T(1)) gr[i] = -inv_r;
    for (size_t i = 0; i < s_fake.size(); ++i)
        if (s_fake[i] > T(-1)) gf[i] = inv_f;
    return {gr, gf};
}

// Mean squared error between two feature maps of identical layer and shape.
template <typename T>
T content_loss(const FeatureMapT<T>& a, const FeatureMapT<T>& b) {
    if (a.layer != b.layer) throw Error("shape-mismatch", "content loss across different layers");
    if (!a.data.same_shape(b.data))
        throw Error("shape-mismatch",
                    "content loss shapes " + a.data.shape_str() + " vs " + b.data.shape_str());
    T sum = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const T d = a.data.data[i] - b.data.data[i];
        sum += d * d;
    }
    return sum / static_cast<T>(a.data.size());
}

// d content_loss / d a
template <typename T>
TensorT<T> content_loss_grad(const FeatureMapT<T>& a, const FeatureMapT<T>& b) {
    if (a.layer != b.layer || !a.data.same_shape(b.data))
        throw Error("shape-mismatch", "content loss gradient on mismatched maps");
    TensorT<T> g(a.data.n, a.data.c, a.data.h, a.data.w);
    const T scale = T(2) / static_cast<T>(a.data.size());
    for (size_t i = 0; i < g.size(); ++i)
        g.data[i] = scale * (a.data.data[i] - b.data.data[i]);
    return g;
}

// Squared-difference smoothness prior over horizontally and vertically
// adjacent pixels, summed over channels, normalized by pixel count so the
// default weight is resolution independent.
template <typename T>
T smoothness_prior(const TensorT<T>& img) {
    if (img.n != 1) throw Error("bad-argument", "smoothness prior expects one image");
    if (img.h * img.w < 2)
        throw Error("image-too-small", "smoothness prior needs at least two pixels");
    T sum = 0;
    for (int c = 0; c < img.c; ++c) {
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x + 1 < img.w; ++x) {
                const T d = img.at(0, c, y, x + 1) - img.at(0, c, y, x);
                sum += d * d;
            }
        for (int y = 0; y + 1 < img.h; ++y)
            for (int x = 0; x < img.w; ++x) {
                const T d = img.at(0, c, y + 1, x) - img.at(0, c, y, x);
                sum += d * d;
            }
    }
    return sum / static_cast<T>(img.h * img.w);
}

template <typename T>
T smoothness_prior(const ImageT<T>& img) {
    return smoothness_prior(img.px);
}

template <typename T>
TensorT<T> smoothness_prior_grad(const TensorT<T>& img) {
    if (img.n != 1 || img.h * img.w < 2)
        throw Error("image-too-small", "smoothness prior gradient needs at least two pixels");
    TensorT<T> g(1, img.c, img.h, img.w);
    const T scale = T(2) / static_cast<T>(img.h * img.w);
    for (int c = 0; c < img.c; ++c) {
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x + 1 < img.w; ++x) {
                const T d = img.at(0, c, y, x + 1) - img.at(0, c, y, x);
                g.at(0, c, y, x + 1) += scale * d;
                g.at(0, c, y, x) -= scale * d;
            }
        for (int y = 0; y + 1 < img.h; ++y)
            for (int x = 0; x < img.w; ++x) {
                const T d = img.at(0, c, y + 1, x) - img.at(0, c, y, x);
                g.at(0, c, y + 1, x) += scale * d;
                g.at(0, c, y, x) -= scale * d;
            }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Total synthesis energy
// ---------------------------------------------------------------------------

template <typename T>
struct MDANWeightsT {
    T alpha1 = T(1);       // content weight
    T alpha2 = T(0.0001);  // smoothness weight
};

using MDANWeights = MDANWeightsT<float>;

template <typename T>
struct EnergyConfigT {
    MDANWeightsT<T> weights;
    LayerId texture_layer = LayerId::relu3_1;
    LayerId content_layer = LayerId::relu5_1;
    int patch_k = 8;
    int patch_stride = 1;
};

template <typename T>
struct EnergyBreakdownT {
    T texture = 0, content = 0, smooth = 0, total = 0;
};

// How per-patch texture gradients are combined on the feature grid.
// Adjoint is the exact derivative of the energy; Blended averages overlapping
// patches, which is what the deconvolution steps use.
enum class FoldMode { Adjoint, Blended };

template <typename T, typename Discriminator>
EnergyBreakdownT<T> total_energy(const EncoderModelT<T>& enc, Discriminator& d, const ImageT<T>& x,
                                 std::type_identity_t<const ImageT<T>*> x_content,
                                 const EnergyConfigT<T>& cfg) {
    EnergyBreakdownT<T> e;
    const auto fm = enc.encode(x, cfg.texture_layer);
    const auto ps = extract_patches(fm, cfg.patch_k, cfg.patch_stride);
    const std::vector<T> scores = d.score(ps.patches, Mode::Frozen);
    e.texture = hinge_texture_loss<T>(scores);
    if (x_content) {
        const auto a = enc.encode(x, cfg.content_layer);
        const auto b = enc.encode(*x_content, cfg.content_layer);
        e.content = content_loss(a, b);
    }
    e.smooth = smoothness_prior(x.px);
    e.total = e.texture + cfg.weights.alpha1 * e.content + cfg.weights.alpha2 * e.smooth;
    return e;
}

// Energy plus its gradient w.r.t. pixels. The texture term is folded per
// `fold_mode`; every term's contribution is checked for finiteness so a blown
// up optimization can name the culprit.
template <typename T, typename Discriminator>
std::pair<EnergyBreakdownT<T>, TensorT<T>> total_energy_with_grad(
    const EncoderModelT<T>& enc, Discriminator& d, const ImageT<T>& x,
    std::type_identity_t<const ImageT<T>*> x_content, const EnergyConfigT<T>& cfg,
    FoldMode fold_mode) {
    EnergyBreakdownT<T> e;
    const LayerId deepest =
        (x_content && cfg.content_layer > cfg.texture_layer) ? cfg.content_layer
                                                             : cfg.texture_layer;
    EncoderTraceT<T> trace;
    enc.forward(x.px, deepest, &trace);

    const TensorT<T>& fm_t = trace.feature(cfg.texture_layer);
    const auto ps = extract_patches(fm_t, cfg.patch_k, cfg.patch_stride);
    const std::vector<T> scores = d.score(ps.patches, Mode::Frozen);
    e.texture = hinge_texture_loss<T>(scores);
    const std::vector<T> dscores = hinge_texture_loss_grad<T>(scores);
    TensorT<T> dpatches = d.backward_scores(dscores);
    TensorT<T> dfm_t = fold_patch_gradients(dpatches, ps.origins, fm_t.h, fm_t.w,
                                            fold_mode == FoldMode::Blended);
    if (!dfm_t.all_finite())
        throw Error("non-finite-gradient", "texture term produced a non-finite gradient");

    std::map<LayerId, TensorT<T>> tap_grads;
    tap_grads.emplace(cfg.texture_layer, std::move(dfm_t));

    if (x_content) {
        FeatureMapT<T> a{cfg.content_layer, trace.feature(cfg.content_layer)};
        const auto b = enc.encode(*x_content, cfg.content_layer);
        e.content = content_loss(a, b);
        TensorT<T> dc = content_loss_grad(a, b);
        for (auto& v : dc.data) v *= cfg.weights.alpha1;
        if (!dc.all_finite())
            throw Error("non-finite-gradient", "content term produced a non-finite gradient");
        auto it = tap_grads.find(cfg.content_layer);
        if (it == tap_grads.end())
            tap_grads.emplace(cfg.content_layer, std::move(dc));
        else
            it->second.add_scaled(dc, T(1));
    }

    TensorT<T> dpix = trace.backward(tap_grads);

    e.smooth = smoothness_prior(x.px);
    TensorT<T> ds = smoothness_prior_grad(x.px);
    if (!ds.all_finite())
        throw Error("non-finite-gradient", "smoothness term produced a non-finite gradient");
    dpix.add_scaled(ds, cfg.weights.alpha2);
    if (!dpix.all_finite())
        throw Error("non-finite-gradient", "encoder backward produced a non-finite gradient");

    e.total = e.texture + cfg.weights.alpha1 * e.content + cfg.weights.alpha2 * e.smooth;
    return {e, std::move(dpix)};
}

}  // namespace mtx
