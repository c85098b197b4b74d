#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtx/image.hpp"
#include "mtx/nn.hpp"
#include "mtx/persistence.hpp"
#include "mtx/tensor.hpp"

// Fixed pretrained classification network wrapped as a feature extractor.
// The encoder is immutable after construction: forward passes write all
// transient state into an EncoderTrace, so concurrent callers are safe and
// no training op can ever touch the weights.

namespace mtx {

enum class LayerId { relu2_1 = 0, relu3_1 = 1, relu4_1 = 2, relu5_1 = 3 };

struct LayerContract {
    int channels;
    int downsample;
};

inline LayerContract layer_contract(LayerId id) {
    switch (id) {
        case LayerId::relu2_1: return {128, 2};
        case LayerId::relu3_1: return {256, 4};
        case LayerId::relu4_1: return {512, 8};
        case LayerId::relu5_1: return {512, 16};
    }
    throw Error("bad-argument", "unknown layer id");
}

inline std::string layer_name(LayerId id) {
    switch (id) {
        case LayerId::relu2_1: return "relu2_1";
        case LayerId::relu3_1: return "relu3_1";
        case LayerId::relu4_1: return "relu4_1";
        case LayerId::relu5_1: return "relu5_1";
    }
    return "?";
}

inline LayerId parse_layer_id(const std::string& s) {
    if (s == "relu2_1") return LayerId::relu2_1;
    if (s == "relu3_1") return LayerId::relu3_1;
    if (s == "relu4_1") return LayerId::relu4_1;
    if (s == "relu5_1") return LayerId::relu5_1;
    throw Error("bad-argument", "unknown layer '" + s + "'");
}

constexpr std::array<LayerId, 4> kAllLayers = {LayerId::relu2_1, LayerId::relu3_1,
                                               LayerId::relu4_1, LayerId::relu5_1};

// Channel means subtracted before the first convolution (RGB order).
template <typename T>
constexpr std::array<T, 3> kChannelMeans = {T(123.68), T(116.779), T(103.939)};

template <typename T>
struct FeatureMapT {
    LayerId layer{};
    TensorT<T> data;  // (1, channels, fh, fw)

    int channels() const { return data.c; }
    int fh() const { return data.h; }
    int fw() const { return data.w; }
};

using FeatureMap = FeatureMapT<float>;

// ---------------------------------------------------------------------------
// Architecture description
// ---------------------------------------------------------------------------

struct EncoderOp {
    enum class Kind { Conv, Relu, Pool };
    Kind kind;
    std::string name;  // conv ops only
    int in_ch = 0, out_ch = 0;
};

struct EncoderArch {
    std::string id;  // "vgg19" or "tiny"
    std::vector<EncoderOp> ops;
    std::map<LayerId, int> taps;  // layer -> index of the op whose output is the tap

    int tap_index(LayerId layer) const {
        auto it = taps.find(layer);
        if (it == taps.end()) throw Error("bad-argument", "no tap for " + layer_name(layer));
        return it->second;
    }
};

namespace detail {
inline void push_conv(EncoderArch& a, const std::string& name, int in_ch, int out_ch,
                      bool tap = false, LayerId tap_id = LayerId::relu2_1) {
    a.ops.push_back({EncoderOp::Kind::Conv, name, in_ch, out_ch});
    a.ops.push_back({EncoderOp::Kind::Relu, "", 0, 0});
    if (tap) a.taps[tap_id] = static_cast<int>(a.ops.size()) - 1;
}
inline void push_pool(EncoderArch& a) { a.ops.push_back({EncoderOp::Kind::Pool, "", 0, 0}); }
}  // namespace detail

// VGG_19 prefix up to relu5_1. Only pooling changes resolution; convolutions
// are 3x3 stride 1 with same padding.
inline EncoderArch vgg19_arch() {
    EncoderArch a;
    a.id = "vgg19";
    using detail::push_conv;
    using detail::push_pool;
    push_conv(a, "conv1_1", 3, 64);
    push_conv(a, "conv1_2", 64, 64);
    push_pool(a);
    push_conv(a, "conv2_1", 64, 128, true, LayerId::relu2_1);
    push_conv(a, "conv2_2", 128, 128);
    push_pool(a);
    push_conv(a, "conv3_1", 128, 256, true, LayerId::relu3_1);
    push_conv(a, "conv3_2", 256, 256);
    push_conv(a, "conv3_3", 256, 256);
    push_conv(a, "conv3_4", 256, 256);
    push_pool(a);
    push_conv(a, "conv4_1", 256, 512, true, LayerId::relu4_1);
    push_conv(a, "conv4_2", 512, 512);
    push_conv(a, "conv4_3", 512, 512);
    push_conv(a, "conv4_4", 512, 512);
    push_pool(a);
    push_conv(a, "conv5_1", 512, 512, true, LayerId::relu5_1);
    return a;
}

// One convolution per block; honors the same (channels, downsample) contract
// as the full network so every op and test can run without pretrained weights.
inline EncoderArch tiny_arch() {
    EncoderArch a;
    a.id = "tiny";
    using detail::push_conv;
    using detail::push_pool;
    push_conv(a, "conv1", 3, 8);
    push_pool(a);
    push_conv(a, "conv2", 8, 128, true, LayerId::relu2_1);
    push_pool(a);
    push_conv(a, "conv3", 128, 256, true, LayerId::relu3_1);
    push_pool(a);
    push_conv(a, "conv4", 256, 512, true, LayerId::relu4_1);
    push_pool(a);
    push_conv(a, "conv5", 512, 512, true, LayerId::relu5_1);
    return a;
}

inline EncoderArch encoder_arch_by_id(const std::string& id) {
    if (id == "vgg19") return vgg19_arch();
    if (id == "tiny") return tiny_arch();
    throw Error("bad-argument", "unknown encoder architecture '" + id + "'");
}

// Parameter bytes of the conv stack up to (and including) the conv feeding a tap.
inline size_t encoder_param_bytes(const EncoderArch& arch, LayerId upto) {
    const int stop = arch.tap_index(upto);
    size_t total = 0;
    for (int i = 0; i <= stop; ++i) {
        const auto& op = arch.ops[static_cast<size_t>(i)];
        if (op.kind == EncoderOp::Kind::Conv)
            total += (static_cast<size_t>(op.out_ch) * op.in_ch * 9 + op.out_ch) * sizeof(float);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Model + trace
// ---------------------------------------------------------------------------

template <typename T>
class EncoderModelT;

// Activation record of one forward pass; owns everything backward needs.
template <typename T>
struct EncoderTraceT {
    const EncoderModelT<T>* enc = nullptr;
    LayerId upto{};
    int last_op = -1;
    std::vector<TensorT<T>> acts;  // acts[0] = preprocessed input, acts[i+1] = output of op i
    std::vector<std::vector<int64_t>> pool_argmax;  // parallel to ops (empty for non-pool)

    const TensorT<T>& feature(LayerId layer) const;
    TensorT<T> backward(const std::map<LayerId, TensorT<T>>& tap_grads) const;
};

template <typename T>
class EncoderModelT {
public:
    static EncoderModelT random(const EncoderArch& arch, uint64_t seed) {
        EncoderModelT m;
        m.arch_ = arch;
        Rng rng(mix_seed(seed, 0xecd));
        for (const auto& op : arch.ops) {
            if (op.kind != EncoderOp::Kind::Conv) continue;
            TensorT<T> w(op.out_ch, op.in_ch, 3, 3);
            // He-style scale keeps activation magnitudes stable through the stack
            fill_normal(w, rng, T(0), static_cast<T>(std::sqrt(2.0 / (op.in_ch * 9.0))));
            m.weights_.push_back(std::move(w));
            m.biases_.emplace_back(op.out_ch, T(0));
        }
        return m;
    }

    static EncoderModelT tiny(uint64_t seed) { return random(tiny_arch(), seed); }
    static EncoderModelT vgg19_random(uint64_t seed) { return random(vgg19_arch(), seed); }

    static EncoderModelT load(const std::filesystem::path& path) {
        Checkpoint ck = Checkpoint::read(path);
        std::string arch_id = "vgg19";
        const nlohmann::json side = read_sidecar(path);
        if (side.is_object() && side.contains("architecture"))
            arch_id = side["architecture"].get<std::string>();
        const EncoderArch arch = encoder_arch_by_id(arch_id);

        EncoderModelT m;
        m.arch_ = arch;
        for (const auto& op : arch.ops) {
            if (op.kind != EncoderOp::Kind::Conv) continue;
            const std::string wname = op.name + ".weight";
            const std::string bname = op.name + ".bias";
            if (!ck.has(wname) || !ck.has(bname))
                throw Error("corrupt-manifest", "checkpoint missing tensor " + wname);
            const auto& wshape = ck.shape(wname);
            const std::vector<int> expect = {op.out_ch, op.in_ch, 3, 3};
            if (wshape != expect)
                throw Error("shape-mismatch",
                            wname + " has wrong shape for layer contract (" +
                                std::to_string(wshape.empty() ? 0 : wshape[0]) + " channels where " +
                                std::to_string(op.out_ch) + " expected)");
            if (ck.shape(bname) != std::vector<int>{op.out_ch})
                throw Error("shape-mismatch", bname + " has wrong shape");
            TensorT<T> w(op.out_ch, op.in_ch, 3, 3);
            const auto& wd = ck.tensor(wname);
            for (size_t i = 0; i < wd.size(); ++i) w.data[i] = static_cast<T>(wd[i]);
            std::vector<T> b(op.out_ch);
            const auto& bd = ck.tensor(bname);
            for (size_t i = 0; i < bd.size(); ++i) b[i] = static_cast<T>(bd[i]);
            m.weights_.push_back(std::move(w));
            m.biases_.push_back(std::move(b));
        }
        return m;
    }

    void save(const std::filesystem::path& path) const {
        Checkpoint ck;
        size_t ci = 0;
        for (const auto& op : arch_.ops) {
            if (op.kind != EncoderOp::Kind::Conv) continue;
            ck.put_tensor(op.name + ".weight", weights_[ci]);
            std::vector<float> b(biases_[ci].size());
            for (size_t i = 0; i < b.size(); ++i) b[i] = static_cast<float>(biases_[ci][i]);
            const int blen = static_cast<int>(b.size());  // before the move; arg order is unspecified
            ck.put(op.name + ".bias", {blen}, std::move(b));
            ++ci;
        }
        ck.write(path);
        write_sidecar(path, {{"kind", "encoder"}, {"architecture", arch_.id}});
    }

    const EncoderArch& arch() const { return arch_; }

    void check_min_size(int h, int w, LayerId layer) const {
        const int ds = layer_contract(layer).downsample;
        if (h / ds < 1 || w / ds < 1)
            throw Error("image-too-small", std::to_string(h) + "x" + std::to_string(w) +
                                               " image has no complete feature cell at " +
                                               layer_name(layer));
    }

    // Batched forward on raw pixels (B,3,H,W). Stores activations in `trace`
    // when given; otherwise keeps only the running tensor.
    TensorT<T> forward(const TensorT<T>& pixels, LayerId upto, EncoderTraceT<T>* trace) const {
        if (pixels.c != 3) throw Error("shape-mismatch", "encoder input must have 3 channels");
        check_min_size(pixels.h, pixels.w, upto);
        TensorT<T> cur = pixels;
        for (int c = 0; c < 3; ++c) {
            const T mean = kChannelMeans<T>[static_cast<size_t>(c)];
            for (int in = 0; in < cur.n; ++in) {
                T* p = cur.data.data() + (static_cast<size_t>(in) * 3 + c) * cur.h * cur.w;
                for (int i = 0; i < cur.h * cur.w; ++i) p[i] -= mean;
            }
        }
        const int stop = arch_.tap_index(upto);
        if (trace) {
            trace->enc = this;
            trace->upto = upto;
            trace->last_op = stop;
            trace->acts.clear();
            trace->acts.reserve(static_cast<size_t>(stop) + 2);
            trace->pool_argmax.assign(static_cast<size_t>(stop) + 1, {});
            trace->acts.push_back(cur);
        }
        size_t ci = 0;
        for (int i = 0; i <= stop; ++i) {
            const auto& op = arch_.ops[static_cast<size_t>(i)];
            switch (op.kind) {
                case EncoderOp::Kind::Conv:
                    cur = conv2d_forward(cur, weights_[ci], biases_[ci], 1, 1);
                    ++ci;
                    break;
                case EncoderOp::Kind::Relu:
                    for (auto& v : cur.data) v = v > 0 ? v : T(0);
                    break;
                case EncoderOp::Kind::Pool: {
                    std::vector<int64_t> argmax;
                    cur = maxpool2_forward(cur, trace ? &argmax : nullptr);
                    if (trace) trace->pool_argmax[static_cast<size_t>(i)] = std::move(argmax);
                    break;
                }
            }
            if (trace) trace->acts.push_back(cur);
        }
        return cur;
    }

    FeatureMapT<T> encode(const ImageT<T>& img, LayerId layer) const {
        FeatureMapT<T> fm;
        fm.layer = layer;
        fm.data = forward(img.px, layer, nullptr);
        return fm;
    }

    size_t conv_count() const { return weights_.size(); }
    const TensorT<T>& conv_weight(size_t i) const { return weights_[i]; }

    size_t param_bytes(LayerId upto) const { return encoder_param_bytes(arch_, upto); }

private:
    EncoderArch arch_;
    std::vector<TensorT<T>> weights_;
    std::vector<std::vector<T>> biases_;

    friend struct EncoderTraceT<T>;
};

using EncoderModel = EncoderModelT<float>;

template <typename T>
const TensorT<T>& EncoderTraceT<T>::feature(LayerId layer) const {
    const int idx = enc->arch_.tap_index(layer);
    if (idx > last_op) throw Error("bad-argument", "trace does not reach " + layer_name(layer));
    return acts[static_cast<size_t>(idx) + 1];
}

// Back-propagates gradients w.r.t. one or more tap activations down to raw
// pixels. The preprocessing step is a constant shift, so no extra term.
template <typename T>
TensorT<T> EncoderTraceT<T>::backward(const std::map<LayerId, TensorT<T>>& tap_grads) const {
    if (tap_grads.empty()) throw Error("bad-argument", "no tap gradients given");
    int deepest = -1;
    for (auto& [layer, g] : tap_grads) {
        const int idx = enc->arch_.tap_index(layer);
        if (idx > last_op)
            throw Error("bad-argument", "trace does not reach " + layer_name(layer));
        if (!g.same_shape(acts[static_cast<size_t>(idx) + 1]))
            throw Error("shape-mismatch", "tap gradient shape " + g.shape_str() +
                                              " vs activation " +
                                              acts[static_cast<size_t>(idx) + 1].shape_str());
        deepest = std::max(deepest, idx);
    }
    const auto& dact = acts[static_cast<size_t>(deepest) + 1];
    TensorT<T> grad(dact.n, dact.c, dact.h, dact.w);
    // conv index of the conv op at or before position i
    std::vector<size_t> conv_before(enc->arch_.ops.size(), 0);
    size_t ci = 0;
    for (size_t i = 0; i < enc->arch_.ops.size(); ++i) {
        if (enc->arch_.ops[i].kind == EncoderOp::Kind::Conv) conv_before[i] = ci++;
    }
    for (int i = deepest; i >= 0; --i) {
        for (auto& [layer, g] : tap_grads)
            if (enc->arch_.tap_index(layer) == i) grad.add_scaled(g, T(1));
        const auto& op = enc->arch_.ops[static_cast<size_t>(i)];
        const auto& input = acts[static_cast<size_t>(i)];
        switch (op.kind) {
            case EncoderOp::Kind::Conv:
                grad = conv2d_backward_data(grad, enc->weights_[conv_before[static_cast<size_t>(i)]],
                                            1, 1, input.h, input.w);
                break;
            case EncoderOp::Kind::Relu: {
                const auto& out = acts[static_cast<size_t>(i) + 1];
                for (size_t j = 0; j < grad.size(); ++j)
                    if (out.data[j] <= 0) grad.data[j] = T(0);
                break;
            }
            case EncoderOp::Kind::Pool:
                grad = maxpool2_backward(grad, pool_argmax[static_cast<size_t>(i)], input.n,
                                         input.c, input.h, input.w);
                break;
        }
    }
    return grad;
}

}  // namespace mtx
