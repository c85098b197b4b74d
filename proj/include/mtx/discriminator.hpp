#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mtx/encoder.hpp"
#include "mtx/net_io.hpp"
#include "mtx/nn.hpp"
#include "mtx/tensor.hpp"

namespace mtx {

struct DiscriminatorConfig {
    LayerId input_layer = LayerId::relu3_1;
    int patch_k = 8;
    int channels = 64;
    int depth = 1;  // hidden conv blocks before the linear score map

    int in_channels() const { return layer_contract(input_layer).channels; }
};

// Scores neural patches: `depth` conv+BN+LeakyReLU blocks that collapse the
// patch to 1x1 (the last hidden conv always consumes the remaining extent, so
// the receptive field covers the whole patch), then a 1x1 linear map to a
// single score. Operates on a batch of patches stacked along N.
template <typename T>
class PatchDiscriminatorT {
public:
    PatchDiscriminatorT(const DiscriminatorConfig& cfg, uint64_t seed) : cfg_(cfg) {
        if (cfg.patch_k < 1 || cfg.channels < 1 || cfg.depth < 1)
            throw Error("bad-argument", "discriminator needs patch_k, channels, depth >= 1");
        Rng rng(mix_seed(seed, 0xD15C0UL));
        int s = cfg.patch_k;
        int ch = cfg.in_channels();
        for (int i = 0; i < cfg.depth; ++i) {
            const bool last = (i == cfg.depth - 1);
            int k, stride, pad;
            if (last) {
                k = s, stride = 1, pad = 0;  // consume the remaining extent
            } else if (s >= 2) {
                k = 4, stride = 2, pad = 1;  // stride down
            } else {
                k = 1, stride = 1, pad = 0;
            }
            const std::string tag = std::to_string(i);
            net_.add(std::make_unique<Conv2dT<T>>("conv" + tag, ch, cfg.channels, k, stride, pad,
                                                  rng));
            net_.add(std::make_unique<BatchNorm2dT<T>>("bn" + tag, cfg.channels, rng));
            net_.add(std::make_unique<LeakyReLUT<T>>("lrelu" + tag, T(0.2)));
            ch = cfg.channels;
            s = conv_out_dim(s, k, stride, pad);
        }
        net_.add(std::make_unique<Conv2dT<T>>("score", ch, 1, 1, 1, 0, rng));
    }

    // patches: (n, in_channels, patch_k, patch_k) -> one score per patch.
    std::vector<T> score(const TensorT<T>& patches, Mode mode) {
        if (patches.c != cfg_.in_channels() || patches.h != cfg_.patch_k ||
            patches.w != cfg_.patch_k)
            throw Error("shape-mismatch", "discriminator built for " +
                                              std::to_string(cfg_.in_channels()) + "x" +
                                              std::to_string(cfg_.patch_k) + "x" +
                                              std::to_string(cfg_.patch_k) + " patches, got " +
                                              patches.shape_str());
        TensorT<T> y = net_.forward(patches, mode);
        last_batch_ = patches.n;
        cached_ = (mode != Mode::Eval);
        return std::vector<T>(y.data.begin(), y.data.end());
    }

    // d(scores)/d(patches) for the most recent non-Eval score() call. Parameter
    // gradients accumulate as a side effect; call zero_grad() first when those
    // matter.
    TensorT<T> backward_scores(const std::vector<T>& dscores) {
        if (!cached_) throw Error("bad-state", "backward_scores without a cached forward pass");
        if (static_cast<int>(dscores.size()) != last_batch_)
            throw Error("shape-mismatch", "score gradient count does not match last batch");
        TensorT<T> dy(last_batch_, 1, 1, 1);
        std::copy(dscores.begin(), dscores.end(), dy.data.begin());
        return net_.backward(dy);
    }

    NetT<T>& net() { return net_; }
    void zero_grad() { net_.zero_grad(); }
    const DiscriminatorConfig& config() const { return cfg_; }

    // Zeroes the final linear map so every patch scores exactly 0 regardless of
    // input — handy for constant-discriminator tests.
    void zero_output_layer() {
        for (auto& p : net_.params()) {
            if (p.name.rfind("score.", 0) == 0)
                std::fill(p.value->begin(), p.value->end(), T(0));
        }
    }

    void save(const std::filesystem::path& path) {
        Checkpoint ck;
        save_net_state(ck, "d.", net_);
        ck.write(path);
        nlohmann::json meta;
        meta["kind"] = "discriminator";
        meta["input_layer"] = layer_name(cfg_.input_layer);
        meta["patch_k"] = cfg_.patch_k;
        meta["channels"] = cfg_.channels;
        meta["depth"] = cfg_.depth;
        write_sidecar(path, meta);
    }

    static PatchDiscriminatorT load(const std::filesystem::path& path) {
        const Checkpoint ck = Checkpoint::read(path);
        const nlohmann::json meta = read_sidecar(path);
        DiscriminatorConfig cfg;
        if (meta.is_object()) {
            if (meta.contains("input_layer"))
                cfg.input_layer = parse_layer_id(meta["input_layer"].get<std::string>());
            if (meta.contains("patch_k")) cfg.patch_k = meta["patch_k"].get<int>();
            if (meta.contains("channels")) cfg.channels = meta["channels"].get<int>();
            if (meta.contains("depth")) cfg.depth = meta["depth"].get<int>();
        }
        PatchDiscriminatorT d(cfg, 0);
        load_net_state(ck, "d.", d.net_);
        return d;
    }

private:
    DiscriminatorConfig cfg_;
    NetT<T> net_;
    int last_batch_ = 0;
    bool cached_ = false;
};

using PatchDiscriminator = PatchDiscriminatorT<float>;

}  // namespace mtx
