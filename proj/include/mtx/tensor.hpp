#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtx {

// Library-wide error with a stable machine-readable code (see README for the list).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// Dense 4-D tensor, NCHW, contiguous row-major.
template <typename T>
struct TensorT {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    TensorT() = default;
    TensorT(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<size_t>(n_) * c_ * h_ * w_, T(0)) {}

    TensorT(int n_, int c_, int h_, int w_, T value)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<size_t>(n_) * c_ * h_ * w_, value) {}

    static TensorT zeros(int n_, int c_, int h_, int w_) { return TensorT(n_, c_, h_, w_); }

    size_t size() const { return data.size(); }

    T& at(int in, int ic, int iy, int ix) {
        return data[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    T at(int in, int ic, int iy, int ix) const {
        return data[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }

    // Pointer to the start of sample `in` (resp. channel plane).
    T* sample(int in) { return data.data() + static_cast<size_t>(in) * c * h * w; }
    const T* sample(int in) const { return data.data() + static_cast<size_t>(in) * c * h * w; }

    bool same_shape(const TensorT& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    void add_scaled(const TensorT& o, T scale) {
        for (size_t i = 0; i < data.size(); ++i) data[i] += scale * o.data[i];
    }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    std::string shape_str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
               std::to_string(w);
    }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out(n, c, h, w);
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensor = TensorT<float>;

// splitmix64 step; used to derive independent seeds from one root seed.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Seeded RNG wrapper. All randomness in the library flows through explicit Rng
// instances so runs are reproducible for a fixed seed.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(gen_);
    }

    double normal(double mean, double stddev) {
        std::normal_distribution<double> d(mean, stddev);
        return d(gen_);
    }

    uint64_t next_u64() { return gen_(); }

    // Uniform integer in [0, n).
    size_t index(size_t count) {
        std::uniform_int_distribution<size_t> d(0, count - 1);
        return d(gen_);
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

template <typename T>
void fill_uniform(TensorT<T>& t, Rng& rng, T lo, T hi) {
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
}

template <typename T>
void fill_normal(TensorT<T>& t, Rng& rng, T mean, T stddev) {
    for (auto& v : t.data) v = static_cast<T>(rng.normal(mean, stddev));
}

// FNV-1a over raw bytes; stable across runs, used for corpus manifests and caching.
inline uint64_t fnv1a(const void* bytes, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

template <typename T>
uint64_t tensor_fingerprint(const TensorT<T>& t) {
    uint64_t h = fnv1a(&t.n, sizeof t.n);
    h = fnv1a(&t.c, sizeof t.c, h);
    h = fnv1a(&t.h, sizeof t.h, h);
    h = fnv1a(&t.w, sizeof t.w, h);
    if (!t.data.empty()) h = fnv1a(t.data.data(), t.data.size() * sizeof(T), h);
    return h;
}

}  // namespace mtx
