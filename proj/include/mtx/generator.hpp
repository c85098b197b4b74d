#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mtx/image.hpp"
#include "mtx/net_io.hpp"
#include "mtx/nn.hpp"
#include "mtx/tensor.hpp"

namespace mtx {

struct GeneratorConfig {
    // One ordinary convolution then three x2 upsampling stages; five entries
    // from the 512-channel feature input down to the 3-channel image.
    std::vector<int> schedule = {512, 256, 128, 64, 3};
};

// Fully-convolutional decoder from deep features to pixels: conv3x3 + BN +
// ReLU, then three fractional-strided convolutions (kernel 4, stride 2,
// padding 1), each but the last followed by BN + ReLU, ending in tanh mapped
// onto [0,255]. Output dims are exactly 8x the input feature dims.
template <typename T>
class GeneratorT {
public:
    explicit GeneratorT(const GeneratorConfig& cfg, uint64_t seed) : cfg_(cfg) {
        const auto& s = cfg.schedule;
        if (s.size() != 5 || s.front() != 512 || s.back() != 3)
            throw Error("invalid-schedule",
                        "generator schedule must run 512 -> ... -> 3 over five entries");
        for (int c : s)
            if (c < 1) throw Error("invalid-schedule", "generator schedule has a channel < 1");
        Rng rng(mix_seed(seed, 0x6E4E0UL));
        net_.add(std::make_unique<Conv2dT<T>>("conv0", s[0], s[1], 3, 1, 1, rng));
        net_.add(std::make_unique<BatchNorm2dT<T>>("bn0", s[1], rng));
        net_.add(std::make_unique<ReLUT<T>>("relu0"));
        for (int i = 1; i <= 3; ++i) {
            const std::string tag = std::to_string(i);
            net_.add(std::make_unique<ConvTranspose2dT<T>>("up" + tag, s[i], s[i + 1], 4, 2, 1,
                                                           rng));
            if (i < 3) {
                net_.add(std::make_unique<BatchNorm2dT<T>>("bn" + tag, s[i + 1], rng));
                net_.add(std::make_unique<ReLUT<T>>("relu" + tag));
            }
        }
        net_.add(std::make_unique<TanhT<T>>("tanh"));
    }

    // features: (B, 512, fh, fw) -> pixels (B, 3, 8*fh, 8*fw) in [0,255].
    TensorT<T> forward(const TensorT<T>& features, Mode mode) {
        if (features.c != cfg_.schedule.front())
            throw Error("shape-mismatch", "generator expects " +
                                              std::to_string(cfg_.schedule.front()) +
                                              " input channels, got " + features.shape_str());
        TensorT<T> y = net_.forward(features, mode);
        for (auto& v : y.data) v = (v + T(1)) * T(127.5);
        return y;
    }

    // d(pixels)/d(features); parameter gradients accumulate as a side effect.
    TensorT<T> backward(const TensorT<T>& dpixels) {
        TensorT<T> dy = dpixels;
        for (auto& v : dy.data) v *= T(127.5);
        return net_.backward(dy);
    }

    NetT<T>& net() { return net_; }
    void zero_grad() { net_.zero_grad(); }
    const GeneratorConfig& config() const { return cfg_; }
    size_t param_count() { return net_.param_count(); }
    size_t param_bytes() { return net_.param_count() * sizeof(float); }

    void save(const std::filesystem::path& path) {
        Checkpoint ck;
        save_net_state(ck, "g.", net_);
        ck.write(path);
        nlohmann::json meta;
        meta["kind"] = "generator";
        meta["schedule"] = cfg_.schedule;
        write_sidecar(path, meta);
    }

    static GeneratorT load(const std::filesystem::path& path) {
        const Checkpoint ck = Checkpoint::read(path);
        const nlohmann::json meta = read_sidecar(path);
        GeneratorConfig cfg;
        if (meta.is_object() && meta.contains("schedule"))
            cfg.schedule = meta["schedule"].get<std::vector<int>>();
        GeneratorT g(cfg, 0);
        load_net_state(ck, "g.", g.net_);
        return g;
    }

private:
    GeneratorConfig cfg_;
    NetT<T> net_;
};

using Generator = GeneratorT<float>;

}  // namespace mtx
