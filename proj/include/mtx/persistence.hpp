#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtx/tensor.hpp"

// Named-tensor checkpoint file:
//   [8-byte little-endian manifest length L][L bytes UTF-8 JSON][raw f32 payload]
// The manifest maps tensor name -> {dtype, shape, offset, nbytes}. Keys are
// written sorted and offsets are assigned in key order, so identical tensor
// sets produce byte-identical files. Payload is little-endian float32 only.

namespace mtx {

class Checkpoint {
public:
    void put(const std::string& name, std::vector<int> shape, std::vector<float> data) {
        size_t count = 1;
        for (int d : shape) {
            if (d < 1) throw Error("bad-argument", "tensor dim < 1 in " + name);
            count *= static_cast<size_t>(d);
        }
        if (count != data.size())
            throw Error("shape-mismatch", "tensor " + name + " shape does not match data size");
        tensors_[name] = Entry{std::move(shape), std::move(data)};
    }

    template <typename T>
    void put_tensor(const std::string& name, const TensorT<T>& t) {
        std::vector<float> d(t.size());
        for (size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(t.data[i]);
        put(name, {t.n, t.c, t.h, t.w}, std::move(d));
    }

    bool has(const std::string& name) const { return tensors_.count(name) > 0; }

    const std::vector<int>& shape(const std::string& name) const { return entry(name).shape; }
    const std::vector<float>& tensor(const std::string& name) const { return entry(name).data; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (auto& [k, v] : tensors_) out.push_back(k);
        return out;
    }

    size_t payload_bytes() const {
        size_t s = 0;
        for (auto& [k, v] : tensors_) s += v.data.size() * sizeof(float);
        return s;
    }

    void write(const std::filesystem::path& path) const {
        nlohmann::json manifest = nlohmann::json::object();
        uint64_t offset = 0;
        for (auto& [name, e] : tensors_) {
            const uint64_t nbytes = e.data.size() * sizeof(float);
            manifest[name] = {{"dtype", "f32"}, {"shape", e.shape}, {"offset", offset},
                              {"nbytes", nbytes}};
            offset += nbytes;
        }
        const std::string mstr = manifest.dump();

        const auto tmp = path.string() + ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f) throw Error("io-error", "cannot open " + tmp + " for writing");
            const uint64_t len = mstr.size();
            char hdr[8];
            for (int i = 0; i < 8; ++i) hdr[i] = static_cast<char>((len >> (8 * i)) & 0xff);
            f.write(hdr, 8);
            f.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
            for (auto& [name, e] : tensors_)
                f.write(reinterpret_cast<const char*>(e.data.data()),
                        static_cast<std::streamsize>(e.data.size() * sizeof(float)));
            if (!f) throw Error("io-error", "write failed for " + tmp);
        }
        std::filesystem::rename(tmp, path);
    }

    static Checkpoint read(const std::filesystem::path& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw Error("io-error", "cannot open checkpoint " + path.string());
        f.seekg(0, std::ios::end);
        const uint64_t file_size = static_cast<uint64_t>(f.tellg());
        f.seekg(0);
        if (file_size < 8) throw Error("corrupt-manifest", "file shorter than header");
        char hdr[8];
        f.read(hdr, 8);
        uint64_t len = 0;
        for (int i = 0; i < 8; ++i)
            len |= static_cast<uint64_t>(static_cast<unsigned char>(hdr[i])) << (8 * i);
        if (len == 0 || len > file_size - 8)
            throw Error("corrupt-manifest", "manifest length out of range");
        std::string mstr(len, '\0');
        f.read(mstr.data(), static_cast<std::streamsize>(len));
        nlohmann::json manifest;
        try {
            manifest = nlohmann::json::parse(mstr);
        } catch (const nlohmann::json::exception&) {
            throw Error("corrupt-manifest", "manifest is not valid JSON");
        }
        if (!manifest.is_object()) throw Error("corrupt-manifest", "manifest is not an object");

        const uint64_t payload_size = file_size - 8 - len;
        Checkpoint ck;
        uint64_t covered = 0;
        std::map<uint64_t, uint64_t> ranges;  // offset -> nbytes, for overlap check
        for (auto& [name, meta] : manifest.items()) {
            if (!meta.contains("dtype") || !meta.contains("shape") || !meta.contains("offset") ||
                !meta.contains("nbytes"))
                throw Error("corrupt-manifest", "missing field in entry " + name);
            if (meta["dtype"] != "f32")
                throw Error("bad-dtype", "tensor " + name + " is not f32");
            std::vector<int> shape = meta["shape"].get<std::vector<int>>();
            const uint64_t offset = meta["offset"].get<uint64_t>();
            const uint64_t nbytes = meta["nbytes"].get<uint64_t>();
            uint64_t count = 1;
            for (int d : shape) {
                if (d < 1) throw Error("corrupt-manifest", "bad shape in entry " + name);
                count *= static_cast<uint64_t>(d);
            }
            if (nbytes != count * sizeof(float))
                throw Error("corrupt-manifest", "nbytes inconsistent with shape in " + name);
            if (offset + nbytes > payload_size)
                throw Error("corrupt-manifest", "entry " + name + " exceeds payload");
            auto [it, fresh] = ranges.emplace(offset, nbytes);
            if (!fresh) throw Error("corrupt-manifest", "overlapping offsets at " + name);
            covered += nbytes;

            std::vector<float> data(count);
            f.seekg(static_cast<std::streamoff>(8 + len + offset));
            f.read(reinterpret_cast<char*>(data.data()),
                   static_cast<std::streamsize>(nbytes));
            if (!f) throw Error("corrupt-manifest", "payload truncated at " + name);
            ck.put(name, std::move(shape), std::move(data));
        }
        if (covered != payload_size)
            throw Error("corrupt-manifest", "payload length does not match manifest total");
        uint64_t expected = 0;
        for (auto& [off, nb] : ranges) {
            if (off != expected) throw Error("corrupt-manifest", "overlapping or gapped offsets");
            expected = off + nb;
        }
        return ck;
    }

private:
    struct Entry {
        std::vector<int> shape;
        std::vector<float> data;
    };

    const Entry& entry(const std::string& name) const {
        auto it = tensors_.find(name);
        if (it == tensors_.end()) throw Error("missing-tensor", "no tensor named " + name);
        return it->second;
    }

    std::map<std::string, Entry> tensors_;  // sorted keys keep files canonical
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint) {
    return checkpoint.string() + ".json";
}

inline void write_sidecar(const std::filesystem::path& checkpoint, const nlohmann::json& config) {
    const auto path = sidecar_path(checkpoint);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw Error("io-error", "cannot open " + tmp);
        f << config.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
}

// Returns null json when no sidecar exists.
inline nlohmann::json read_sidecar(const std::filesystem::path& checkpoint) {
    const auto path = sidecar_path(checkpoint);
    std::ifstream f(path);
    if (!f) return nlohmann::json();
    try {
        nlohmann::json j;
        f >> j;
        return j;
    } catch (const nlohmann::json::exception&) {
        throw Error("corrupt-manifest", "sidecar is not valid JSON: " + path.string());
    }
}

}  // namespace mtx
