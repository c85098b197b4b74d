#pragma once

#include <functional>
#include <type_traits>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "mtx/discriminator.hpp"
#include "mtx/encoder.hpp"
#include "mtx/image.hpp"
#include "mtx/losses.hpp"
#include "mtx/patches.hpp"

// Markovian Deconvolutional Adversarial Networks: texture synthesis by
// iteratively optimizing image pixels against a patch discriminator that is
// itself retrained after every pixel update.

namespace mtx {

template <typename T>
struct MDANConfigT {
    MDANWeightsT<T> weights;
    LayerId layer = LayerId::relu3_1;          // neural-patch layer for the texture term
    LayerId content_layer = LayerId::relu5_1;  // guidance layer (when a content image is given)
    int patch_k = 8;
    int stride = 1;
    T lr = T(0.02);
    T beta1 = T(0.5);
    T beta2 = T(0.999);
    T eps = T(1e-8);
    // The discriminator reuses the deconvolution's optimizer settings; exposed
    // because nothing pins them independently.
    T d_lr = T(0.02);
    T d_beta1 = T(0.5);
    int d_channels = 64;
    int d_depth = 1;
    int iterations = 500;
    int d_updates_per_step = 1;
    uint64_t seed = 0;

    DiscriminatorConfig discriminator() const {
        DiscriminatorConfig d;
        d.input_layer = layer;
        d.patch_k = patch_k;
        d.channels = d_channels;
        d.depth = d_depth;
        return d;
    }
    EnergyConfigT<T> energy() const {
        EnergyConfigT<T> e;
        e.weights = weights;
        e.texture_layer = layer;
        e.content_layer = content_layer;
        e.patch_k = patch_k;
        e.patch_stride = stride;
        return e;
    }

    void validate() const {
        if (lr <= T(0)) throw Error("bad-argument", "learning rate must be positive");
        if (iterations < 0) throw Error("bad-argument", "iterations must be non-negative");
        if (d_updates_per_step < 0)
            throw Error("bad-argument", "d_updates_per_step must be non-negative");
    }
};

using MDANConfig = MDANConfigT<float>;

template <typename T>
struct StepReportT {
    EnergyBreakdownT<T> energy;  // evaluated at the pre-update pixels
    T d_loss = 0;                // after this step's discriminator updates (0 if none ran)
    T mean_real = 0;
    T mean_fake = 0;
};

template <typename T>
struct SynthesisStateT {
    ImageT<T> x;
    long step = 0;
    PatchDiscriminatorT<T> d;
    AdamT<T> pixel_opt;
    AdamT<T> d_opt;
    MDANConfigT<T> cfg;
    bool guided = false;

    // Real patches are a pure function of the texture exemplar; cached across
    // steps and refreshed whenever a different exemplar is passed in.
    uint64_t xt_fingerprint = 0;
    TensorT<T> real_patches;

    SynthesisStateT(ImageT<T> x0, PatchDiscriminatorT<T> d0, const MDANConfigT<T>& c)
        : x(std::move(x0)), d(std::move(d0)),
          pixel_opt(AdamConfigT<T>{c.lr, c.beta1, c.beta2, c.eps}),
          d_opt(AdamConfigT<T>{c.d_lr, c.d_beta1, c.beta2, c.eps}), cfg(c) {}
};

namespace detail {

template <typename T>
void refresh_real_patches(SynthesisStateT<T>& st, const EncoderModelT<T>& enc,
                          const ImageT<T>& x_t) {
    const uint64_t fp = tensor_fingerprint(x_t.px);
    if (fp == st.xt_fingerprint && st.real_patches.size() > 0) return;
    const auto fm = enc.encode(x_t, st.cfg.layer);
    st.real_patches = extract_patches(fm, st.cfg.patch_k, st.cfg.stride).patches;
    st.xt_fingerprint = fp;
}

// One hinge update of D on cached real patches vs. patches of the current x.
// Returns (loss, mean_real, mean_fake). Real and fake batches run as separate
// forward passes; the margin gradients decouple per side, so each side is
// back-propagated right after its own forward while the caches are live.
template <typename T>
std::tuple<T, T, T> update_discriminator(SynthesisStateT<T>& st, const TensorT<T>& fake_patches) {
    st.d.zero_grad();
    const std::vector<T> s_real = st.d.score(st.real_patches, Mode::Train);
    std::vector<T> gr(s_real.size(), T(0));
    for (size_t i = 0; i < s_real.size(); ++i)
        if (s_real[i] < T(1)) gr[i] = T(-1) / static_cast<T>(s_real.size());
    st.d.backward_scores(gr);

    const std::vector<T> s_fake = st.d.score(fake_patches, Mode::Train);
    std::vector<T> gf(s_fake.size(), T(0));
    for (size_t i = 0; i < s_fake.size(); ++i)
        if (s_fake[i] > T(-1)) gf[i] = T(1) / static_cast<T>(s_fake.size());
    st.d.backward_scores(gf);

    st.d_opt.step(st.d.net().params());
    if (!st.d.net().params_finite())
        throw Error("non-finite-state", "discriminator parameters left finite range");

    T mr = 0, mf = 0;
    for (T s : s_real) mr += s;
    for (T s : s_fake) mf += s;
    return {discriminator_hinge_loss<T>(s_real, s_fake),
            mr / static_cast<T>(s_real.size()), mf / static_cast<T>(s_fake.size())};
}

}  // namespace detail

// state.x = content copy when guided, else uniform noise at the exemplar's
// size; the discriminator starts from d_init when provided.
template <typename T>
SynthesisStateT<T> init_state(const EncoderModelT<T>& enc, const ImageT<T>& x_t,
                              std::type_identity_t<const ImageT<T>*> x_c,
                              const MDANConfigT<T>& cfg,
                              std::type_identity_t<const PatchDiscriminatorT<T>*> d_init =
                                  nullptr) {
    cfg.validate();
    enc.check_min_size(x_t.height(), x_t.width(), cfg.layer);
    const auto lc = layer_contract(cfg.layer);
    const int fh = x_t.height() / lc.downsample;
    const int fw = x_t.width() / lc.downsample;
    if (fh < cfg.patch_k || fw < cfg.patch_k)
        throw Error("texture-too-small",
                    "exemplar yields a " + std::to_string(fh) + "x" + std::to_string(fw) +
                        " feature map at " + layer_name(cfg.layer) + ", smaller than patch size " +
                        std::to_string(cfg.patch_k));
    ImageT<T> x0;
    if (x_c) {
        x0 = *x_c;
    } else {
        Rng rng(mix_seed(cfg.seed, 0x1217UL));
        x0 = random_uniform_image<T>(x_t.height(), x_t.width(), rng, T(0), T(255));
    }
    PatchDiscriminatorT<T> d0 =
        d_init ? *d_init : PatchDiscriminatorT<T>(cfg.discriminator(), mix_seed(cfg.seed, 0xDUL));
    SynthesisStateT<T> st(std::move(x0), std::move(d0), cfg);
    st.guided = (x_c != nullptr);
    return st;
}

// One synthesis iteration: blended-gradient pixel update, then
// cfg.d_updates_per_step hinge updates of the discriminator against the
// freshly moved pixels.
template <typename T>
StepReportT<T> step(SynthesisStateT<T>& st, const EncoderModelT<T>& enc, const ImageT<T>& x_t,
                    std::type_identity_t<const ImageT<T>*> x_c) {
    if (st.guided != (x_c != nullptr))
        throw Error("bad-argument", "guided state requires the content image on every step");
    detail::refresh_real_patches(st, enc, x_t);

    StepReportT<T> rep;
    auto [energy, grad] =
        total_energy_with_grad(enc, st.d, st.x, x_c, st.cfg.energy(), FoldMode::Blended);
    rep.energy = energy;

    std::vector<T> gdata = std::move(grad.data);
    ParamRefT<T> px{"x", &st.x.px.data, &gdata};
    st.pixel_opt.step({px});
    if (!st.x.px.all_finite())
        throw Error("non-finite-state", "pixel update left finite range");

    if (st.cfg.d_updates_per_step > 0) {
        const auto fm = enc.encode(st.x, st.cfg.layer);
        const TensorT<T> fake = extract_patches(fm, st.cfg.patch_k, st.cfg.stride).patches;
        for (int u = 0; u < st.cfg.d_updates_per_step; ++u) {
            auto [loss, mr, mf] = detail::update_discriminator(st, fake);
            rep.d_loss = loss;
            rep.mean_real = mr;
            rep.mean_fake = mf;
        }
    }
    ++st.step;
    return rep;
}

using StepCallback = std::function<void(long iteration, double energy, double d_loss)>;

// Full synthesis loop; the result is clamped to the canonical pixel range only
// at the end, so intermediate iterates can roam.
template <typename T>
ImageT<T> synthesize(const EncoderModelT<T>& enc, const ImageT<T>& x_t,
                     std::type_identity_t<const ImageT<T>*> x_c,
                     const MDANConfigT<T>& cfg, const StepCallback& on_step = {}) {
    SynthesisStateT<T> st = init_state(enc, x_t, x_c, cfg);
    for (int i = 0; i < cfg.iterations; ++i) {
        const StepReportT<T> rep = step(st, enc, x_t, x_c);
        if (on_step)
            on_step(st.step, static_cast<double>(rep.energy.total),
                    static_cast<double>(rep.d_loss));
    }
    st.x.clamp_range(T(0), T(255));
    return st.x;
}

// Stylizes each photo in turn; with reuse_d, every run's trained discriminator
// seeds the next run instead of a fresh random one.
template <typename T>
std::vector<ImageT<T>> transfer_batch(const EncoderModelT<T>& enc,
                                      const std::vector<ImageT<T>>& photos, const ImageT<T>& x_t,
                                      const MDANConfigT<T>& cfg, bool reuse_d,
                                      const StepCallback& on_step = {}) {
    if (photos.empty()) throw Error("empty-input", "transfer_batch needs at least one photo");
    std::vector<ImageT<T>> out;
    std::optional<PatchDiscriminatorT<T>> carry;
    for (const auto& photo : photos) {
        SynthesisStateT<T> st =
            init_state(enc, x_t, &photo, cfg, carry ? &*carry : nullptr);
        for (int i = 0; i < cfg.iterations; ++i) {
            const StepReportT<T> rep = step(st, enc, x_t, &photo);
            if (on_step)
                on_step(st.step, static_cast<double>(rep.energy.total),
                        static_cast<double>(rep.d_loss));
        }
        if (reuse_d) carry.emplace(st.d);
        st.x.clamp_range(T(0), T(255));
        out.push_back(std::move(st.x));
    }
    return out;
}

// Hinge loss of a given discriminator on (exemplar, candidate) — used to
// compare warm-started vs. fresh discriminators before any training.
template <typename T>
T measure_d_loss(const EncoderModelT<T>& enc, PatchDiscriminatorT<T>& d, const ImageT<T>& x_t,
                 const ImageT<T>& x, const MDANConfigT<T>& cfg) {
    const auto real = extract_patches(enc.encode(x_t, cfg.layer), cfg.patch_k, cfg.stride);
    const auto fake = extract_patches(enc.encode(x, cfg.layer), cfg.patch_k, cfg.stride);
    const auto s_real = d.score(real.patches, Mode::Frozen);
    const auto s_fake = d.score(fake.patches, Mode::Frozen);
    return discriminator_hinge_loss<T>(s_real, s_fake);
}

// Mean real/fake score gap under the current discriminator.
template <typename T>
T score_gap(SynthesisStateT<T>& st, const EncoderModelT<T>& enc, const ImageT<T>& x_t) {
    detail::refresh_real_patches(st, enc, x_t);
    const auto fm = enc.encode(st.x, st.cfg.layer);
    const auto fake = extract_patches(fm, st.cfg.patch_k, st.cfg.stride).patches;
    const auto s_real = st.d.score(st.real_patches, Mode::Frozen);
    const auto s_fake = st.d.score(fake, Mode::Frozen);
    T mr = 0, mf = 0;
    for (T s : s_real) mr += s;
    for (T s : s_fake) mf += s;
    return mr / static_cast<T>(s_real.size()) - mf / static_cast<T>(s_fake.size());
}

}  // namespace mtx
