#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "mtx/discriminator.hpp"
#include "mtx/encoder.hpp"
#include "mtx/generator.hpp"
#include "mtx/image.hpp"
#include "mtx/losses.hpp"
#include "mtx/patches.hpp"

// Markovian Generative Adversarial Networks: a feed-forward decoder from
// relu4_1 features to pixels, trained adversarially on neural patches against
// style pairs produced by the deconvolution path, plus the VAE baselines it is
// compared to.

namespace mtx {

template <typename T>
struct StylePairT {
    ImageT<T> photo;
    ImageT<T> target;  // stylized rendition of the same photo, same dimensions
};

using StylePair = StylePairT<float>;

template <typename T>
struct MGANConfigT {
    int epochs = 5;
    int batch_size = 16;
    T lr = T(0.02);
    T beta1 = T(0.5);
    T beta2 = T(0.999);
    T eps = T(1e-8);
    // Discriminator optimizer; exposed separately (nothing pins it to the
    // generator's) so the two sides' paces can be balanced. d_lr 0 freezes D.
    T d_lr = T(0.02);
    T d_beta1 = T(0.5);
    T adversarial_weight = T(1);
    // Optional feature-reconstruction term against the target's encoding at
    // patch_layer; 0 keeps the criterion purely adversarial.
    T feature_weight = T(0);
    LayerId patch_layer = LayerId::relu3_1;
    int patch_k = 8;
    int patch_stride = 4;
    uint64_t seed = 0;

    AdamConfigT<T> adam() const { return {lr, beta1, beta2, eps}; }
    AdamConfigT<T> d_adam() const { return {d_lr, d_beta1, beta2, eps}; }

    void validate() const {
        if (epochs < 1) throw Error("bad-argument", "epochs must be >= 1");
        if (batch_size < 1) throw Error("bad-argument", "batch size must be >= 1");
        if (patch_k < 1 || patch_stride < 1)
            throw Error("bad-argument", "patch size and stride must be >= 1");
        if (d_lr < T(0)) throw Error("bad-argument", "discriminator learning rate must be >= 0");
    }
};

using MGANConfig = MGANConfigT<float>;

template <typename T>
struct TrainLogT {
    std::vector<T> g_loss;  // one entry per batch
    std::vector<T> d_loss;
    long g_updates = 0;
    long d_updates = 0;
};

namespace detail {

// Corpus images must agree pairwise and across pairs, and divide evenly into
// the x8 decoder contract so outputs line up with targets.
template <typename T>
void validate_corpus(const std::vector<StylePairT<T>>& corpus) {
    if (corpus.empty()) throw Error("empty-corpus", "training needs at least one style pair");
    const int H = corpus.front().photo.height(), W = corpus.front().photo.width();
    for (const auto& p : corpus) {
        if (p.photo.height() != p.target.height() || p.photo.width() != p.target.width())
            throw Error("shape-mismatch", "style pair halves differ in size");
        if (p.photo.height() != H || p.photo.width() != W)
            throw Error("shape-mismatch", "corpus images must share one size");
    }
    if (H % 8 != 0 || W % 8 != 0)
        throw Error("shape-mismatch", "corpus images must have dimensions divisible by 8");
}

template <typename T, typename Pick>
TensorT<T> stack_images(int count, int H, int W, Pick pick) {
    TensorT<T> out(count, 3, H, W);
    for (int b = 0; b < count; ++b) {
        const ImageT<T>& img = pick(b);
        std::copy(img.px.data.begin(), img.px.data.end(), out.sample(b));
    }
    return out;
}

template <typename T>
TensorT<T> one_sample(const TensorT<T>& batch, int b) {
    TensorT<T> s(1, batch.c, batch.h, batch.w);
    std::copy(batch.sample(b), batch.sample(b) + s.size(), s.data.begin());
    return s;
}

// Extracts patches from every sample of a batched feature map and stacks them
// along N; all samples share one grid so counts are uniform.
template <typename T>
PatchSetT<T> batch_patches(const TensorT<T>& fm, int k, int stride) {
    PatchSetT<T> first = extract_patches(one_sample(fm, 0), k, stride);
    const int per = first.count();
    TensorT<T> all(per * fm.n, fm.c, k, k);
    std::copy(first.patches.data.begin(), first.patches.data.end(), all.data.begin());
    for (int b = 1; b < fm.n; ++b) {
        PatchSetT<T> ps = extract_patches(one_sample(fm, b), k, stride);
        std::copy(ps.patches.data.begin(), ps.patches.data.end(),
                  all.data.begin() + static_cast<size_t>(b) * per * all.c * k * k);
    }
    first.patches = std::move(all);
    return first;  // origins describe one sample's grid
}

// Scatters per-patch gradients back into a batched feature-map gradient using
// the exact adjoint fold (no overlap normalization).
template <typename T>
TensorT<T> batch_fold(const TensorT<T>& dpatches, const PatchSetT<T>& grid, int batch, int fh,
                      int fw) {
    // grid.patches is batched, so count() covers all samples; the per-sample
    // patch count is the origin list.
    const int per = static_cast<int>(grid.origins.size());
    TensorT<T> dfm(batch, dpatches.c, fh, fw);
    for (int b = 0; b < batch; ++b) {
        TensorT<T> slice(per, dpatches.c, dpatches.h, dpatches.w);
        std::copy(dpatches.data.begin() + static_cast<size_t>(b) * slice.size(),
                  dpatches.data.begin() + static_cast<size_t>(b + 1) * slice.size(),
                  slice.data.begin());
        TensorT<T> folded = fold_patch_gradients(slice, grid.origins, fh, fw, false);
        std::copy(folded.data.begin(), folded.data.end(), dfm.sample(b));
    }
    return dfm;
}

// One discriminator hinge update on already-extracted patch batches. The two
// margin sides decouple, so each side back-propagates straight after its own
// forward pass while layer caches are live.
template <typename T>
T discriminator_update(PatchDiscriminatorT<T>& d, AdamT<T>& opt, const TensorT<T>& real,
                       const TensorT<T>& fake) {
    d.zero_grad();
    const std::vector<T> s_real = d.score(real, Mode::Train);
    std::vector<T> gr(s_real.size(), T(0));
    for (size_t i = 0; i < s_real.size(); ++i)
        if (s_real[i] < T(1)) gr[i] = T(-1) / static_cast<T>(s_real.size());
    d.backward_scores(gr);
    const std::vector<T> s_fake = d.score(fake, Mode::Train);
    std::vector<T> gf(s_fake.size(), T(0));
    for (size_t i = 0; i < s_fake.size(); ++i)
        if (s_fake[i] > T(-1)) gf[i] = T(1) / static_cast<T>(s_fake.size());
    d.backward_scores(gf);
    opt.step(d.net().params());
    if (!d.net().params_finite())
        throw Error("non-finite-state", "discriminator parameters left finite range");
    return discriminator_hinge_loss<T>(s_real, s_fake);
}

}  // namespace detail

// Adversarial training: per batch, one hinge update of D (real patches from
// targets, fake from G's current output), then one update of G against the
// refreshed-but-frozen D. Epoch order is a seeded shuffle.
template <typename T>
TrainLogT<T> train(const EncoderModelT<T>& enc, GeneratorT<T>& g, PatchDiscriminatorT<T>& d,
                   const std::vector<StylePairT<T>>& corpus, const MGANConfigT<T>& cfg) {
    cfg.validate();
    detail::validate_corpus(corpus);
    if (d.config().input_layer != cfg.patch_layer || d.config().patch_k != cfg.patch_k)
        throw Error("bad-argument", "discriminator patch contract does not match the config");
    const int n = static_cast<int>(corpus.size());
    const int H = corpus.front().photo.height(), W = corpus.front().photo.width();

    AdamT<T> g_opt(cfg.adam()), d_opt(cfg.d_adam());
    TrainLogT<T> log;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0xE90C0 + static_cast<uint64_t>(epoch)));
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.index(static_cast<size_t>(i) + 1)]);

        for (int start = 0; start < n; start += cfg.batch_size) {
            const int B = std::min(cfg.batch_size, n - start);
            auto photos = detail::stack_images<T>(
                B, H, W, [&](int b) -> const ImageT<T>& { return corpus[order[start + b]].photo; });
            auto targets = detail::stack_images<T>(
                B, H, W,
                [&](int b) -> const ImageT<T>& { return corpus[order[start + b]].target; });

            const TensorT<T> feats = enc.forward(photos, LayerId::relu4_1, nullptr);
            const TensorT<T> fake_px = g.forward(feats, Mode::Train);

            // Discriminator phase (fake pixels treated as constants).
            const TensorT<T> real_fm = enc.forward(targets, cfg.patch_layer, nullptr);
            const TensorT<T> fake_fm = enc.forward(fake_px, cfg.patch_layer, nullptr);
            const auto real_ps = detail::batch_patches(real_fm, cfg.patch_k, cfg.patch_stride);
            const auto fake_ps = detail::batch_patches(fake_fm, cfg.patch_k, cfg.patch_stride);
            log.d_loss.push_back(
                detail::discriminator_update(d, d_opt, real_ps.patches, fake_ps.patches));
            ++log.d_updates;

            // Generator phase against the frozen, just-updated discriminator.
            g.zero_grad();
            d.zero_grad();
            EncoderTraceT<T> trace;
            enc.forward(fake_px, cfg.patch_layer, &trace);
            const TensorT<T>& fm = trace.feature(cfg.patch_layer);
            const auto ps = detail::batch_patches(fm, cfg.patch_k, cfg.patch_stride);
            const std::vector<T> scores = d.score(ps.patches, Mode::Frozen);
            T g_loss = cfg.adversarial_weight * hinge_texture_loss<T>(scores);
            std::vector<T> dscores = hinge_texture_loss_grad<T>(scores);
            for (auto& v : dscores) v *= cfg.adversarial_weight;
            const TensorT<T> dpatches = d.backward_scores(dscores);
            TensorT<T> dfm = detail::batch_fold(dpatches, ps, fm.n, fm.h, fm.w);

            if (cfg.feature_weight > T(0)) {
                T sq = 0;
                const T scale = T(2) / static_cast<T>(fm.size());
                for (size_t i = 0; i < fm.size(); ++i) {
                    const T diff = fm.data[i] - real_fm.data[i];
                    sq += diff * diff;
                    dfm.data[i] += cfg.feature_weight * scale * diff;
                }
                g_loss += cfg.feature_weight * sq / static_cast<T>(fm.size());
            }

            std::map<LayerId, TensorT<T>> taps;
            taps.emplace(cfg.patch_layer, std::move(dfm));
            const TensorT<T> dpix = trace.backward(taps);
            g.backward(dpix);
            g_opt.step(g.net().params());
            if (!g.net().params_finite())
                throw Error("non-finite-state", "generator parameters left finite range");
            log.g_loss.push_back(g_loss);
            ++log.g_updates;
        }
    }
    return log;
}

// Auto-encoder warm start: fit G so that decoding a photo's features
// reproduces the photo in pixel MSE. steps=0 leaves G untouched.
template <typename T>
std::vector<T> pretrain_autoencoder(const EncoderModelT<T>& enc, GeneratorT<T>& g,
                                    const std::vector<ImageT<T>>& photos, int steps,
                                    const MGANConfigT<T>& cfg) {
    if (photos.empty()) throw Error("empty-input", "pretraining needs at least one photo");
    const int H = photos.front().height(), W = photos.front().width();
    for (const auto& p : photos)
        if (p.height() != H || p.width() != W)
            throw Error("shape-mismatch", "pretraining photos must share one size");
    if (H % 8 != 0 || W % 8 != 0)
        throw Error("shape-mismatch", "pretraining photos must have dimensions divisible by 8");

    const int n = static_cast<int>(photos.size());
    AdamT<T> opt(cfg.adam());
    std::vector<T> losses;
    for (int s = 0; s < steps; ++s) {
        const int B = std::min(cfg.batch_size, n);
        auto batch = detail::stack_images<T>(B, H, W, [&](int b) -> const ImageT<T>& {
            return photos[(static_cast<size_t>(s) * B + b) % n];
        });
        const TensorT<T> feats = enc.forward(batch, LayerId::relu4_1, nullptr);
        const TensorT<T> out = g.forward(feats, Mode::Train);
        T mse = 0;
        TensorT<T> dout(out.n, out.c, out.h, out.w);
        const T scale = T(2) / static_cast<T>(out.size());
        for (size_t i = 0; i < out.size(); ++i) {
            const T diff = out.data[i] - batch.data[i];
            mse += diff * diff;
            dout.data[i] = scale * diff;
        }
        mse /= static_cast<T>(out.size());
        g.zero_grad();
        g.backward(dout);
        opt.step(g.net().params());
        if (!g.net().params_finite())
            throw Error("non-finite-state", "generator parameters left finite range");
        losses.push_back(mse);
    }
    return losses;
}

enum class VAEMode { Pixel, Neural };

inline VAEMode parse_vae_mode(const std::string& mode) {
    if (mode == "pixel") return VAEMode::Pixel;
    if (mode == "neural") return VAEMode::Neural;
    throw Error("bad-argument", "unknown baseline mode '" + mode + "' (want pixel or neural)");
}

// Reconstruction-only baselines: pixel-space MSE against the target, or MSE
// between the patch-layer encodings of output and target.
template <typename T>
TrainLogT<T> train_vae_baseline(const EncoderModelT<T>& enc, GeneratorT<T>& g,
                                const std::vector<StylePairT<T>>& corpus, VAEMode mode,
                                const MGANConfigT<T>& cfg) {
    cfg.validate();
    detail::validate_corpus(corpus);
    const int n = static_cast<int>(corpus.size());
    const int H = corpus.front().photo.height(), W = corpus.front().photo.width();

    AdamT<T> opt(cfg.adam());
    TrainLogT<T> log;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0xE90C0 + static_cast<uint64_t>(epoch)));
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.index(static_cast<size_t>(i) + 1)]);

        for (int start = 0; start < n; start += cfg.batch_size) {
            const int B = std::min(cfg.batch_size, n - start);
            auto photos = detail::stack_images<T>(
                B, H, W, [&](int b) -> const ImageT<T>& { return corpus[order[start + b]].photo; });
            auto targets = detail::stack_images<T>(
                B, H, W,
                [&](int b) -> const ImageT<T>& { return corpus[order[start + b]].target; });

            const TensorT<T> feats = enc.forward(photos, LayerId::relu4_1, nullptr);
            const TensorT<T> out = g.forward(feats, Mode::Train);

            T loss = 0;
            g.zero_grad();
            if (mode == VAEMode::Pixel) {
                TensorT<T> dout(out.n, out.c, out.h, out.w);
                const T scale = T(2) / static_cast<T>(out.size());
                for (size_t i = 0; i < out.size(); ++i) {
                    const T diff = out.data[i] - targets.data[i];
                    loss += diff * diff;
                    dout.data[i] = scale * diff;
                }
                loss /= static_cast<T>(out.size());
                g.backward(dout);
            } else {
                EncoderTraceT<T> trace;
                enc.forward(out, cfg.patch_layer, &trace);
                const TensorT<T>& fm = trace.feature(cfg.patch_layer);
                const TensorT<T> tgt_fm = enc.forward(targets, cfg.patch_layer, nullptr);
                TensorT<T> dfm(fm.n, fm.c, fm.h, fm.w);
                const T scale = T(2) / static_cast<T>(fm.size());
                for (size_t i = 0; i < fm.size(); ++i) {
                    const T diff = fm.data[i] - tgt_fm.data[i];
                    loss += diff * diff;
                    dfm.data[i] = scale * diff;
                }
                loss /= static_cast<T>(fm.size());
                std::map<LayerId, TensorT<T>> taps;
                taps.emplace(cfg.patch_layer, std::move(dfm));
                g.backward(trace.backward(taps));
            }
            opt.step(g.net().params());
            if (!g.net().params_finite())
                throw Error("non-finite-state", "generator parameters left finite range");
            log.g_loss.push_back(loss);
            ++log.g_updates;
        }
    }
    return log;
}

// Feed-forward stylization: encode to relu4_1, decode with G in evaluation
// mode. Output dims are 8*floor(input/8). An optional noise image is blended
// into the pixels before encoding.
template <typename T>
ImageT<T> decode(const EncoderModelT<T>& enc, GeneratorT<T>& g, const ImageT<T>& photo,
                 const ImageT<T>* noise = nullptr, T noise_blend = T(0.5)) {
    if (photo.height() < 8 || photo.width() < 8)
        throw Error("image-too-small", "decode needs at least an 8x8 input");
    TensorT<T> px = photo.px;
    if (noise) {
        if (noise->height() != photo.height() || noise->width() != photo.width())
            throw Error("shape-mismatch", "noise image must match the photo's size");
        if (noise_blend < T(0) || noise_blend > T(1))
            throw Error("bad-argument", "noise blend must lie in [0,1]");
        for (size_t i = 0; i < px.size(); ++i)
            px.data[i] = (T(1) - noise_blend) * px.data[i] + noise_blend * noise->px.data[i];
    }
    const TensorT<T> feats = enc.forward(px, LayerId::relu4_1, nullptr);
    TensorT<T> out = g.forward(feats, Mode::Eval);
    ImageT<T> img(std::move(out));
    img.clamp_range(T(0), T(255));
    return img;
}

// Decodes a one-hot relu4_1 activation (1 on `channel_index` everywhere, 0
// elsewhere) to see what image structure that feature channel paints.
template <typename T>
ImageT<T> visualize_decoder_features(GeneratorT<T>& g, int channel_index, int grid = 4) {
    if (channel_index < 0 || channel_index >= 512)
        throw Error("bad-argument", "channel index must lie in [0, 512)");
    if (grid < 1) throw Error("bad-argument", "grid must be >= 1");
    TensorT<T> feats(1, 512, grid, grid);
    for (int y = 0; y < grid; ++y)
        for (int x = 0; x < grid; ++x) feats.at(0, channel_index, y, x) = T(1);
    TensorT<T> out = g.forward(feats, Mode::Eval);
    ImageT<T> img(std::move(out));
    img.clamp_range(T(0), T(255));
    return img;
}

}  // namespace mtx
