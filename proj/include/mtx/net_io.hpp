#pragma once

#include <string>

#include "mtx/nn.hpp"
#include "mtx/persistence.hpp"

namespace mtx {

// Flattened parameter/buffer state of a NetT keyed by "<prefix><layer>.<param>".
// Shapes are implied by the architecture config stored in the sidecar, so
// entries are written as flat arrays; a size mismatch on load means the
// checkpoint belongs to a different architecture.

template <typename T>
void save_net_state(Checkpoint& ck, const std::string& prefix, NetT<T>& net) {
    auto store = [&](const ParamRefT<T>& p) {
        std::vector<float> d(p.value->size());
        for (size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>((*p.value)[i]);
        const int dlen = static_cast<int>(d.size());  // before the move; arg order is unspecified
        ck.put(prefix + p.name, {dlen}, std::move(d));
    };
    for (auto& p : net.params()) store(p);
    for (auto& b : net.buffers()) store(b);
}

template <typename T>
void load_net_state(const Checkpoint& ck, const std::string& prefix, NetT<T>& net) {
    auto fill = [&](const ParamRefT<T>& p) {
        const std::string key = prefix + p.name;
        if (!ck.has(key)) throw Error("corrupt-manifest", "checkpoint is missing tensor " + key);
        const auto& d = ck.tensor(key);
        if (d.size() != p.value->size())
            throw Error("shape-mismatch", "tensor " + key + " has " + std::to_string(d.size()) +
                                              " values, expected " +
                                              std::to_string(p.value->size()));
        for (size_t i = 0; i < d.size(); ++i) (*p.value)[i] = static_cast<T>(d[i]);
    };
    for (auto& p : net.params()) fill(p);
    for (auto& b : net.buffers()) fill(b);
}

}  // namespace mtx
