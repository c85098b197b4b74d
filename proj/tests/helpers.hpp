#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "mtx/image.hpp"
#include "mtx/tensor.hpp"

namespace testutil {

// Fresh scratch directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        path_ = base / (tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

template <typename T>
mtx::ImageT<T> random_image(int h, int w, uint64_t seed) {
    mtx::Rng rng(seed);
    return mtx::random_uniform_image<T>(h, w, rng, T(0), T(255));
}

template <typename T>
mtx::TensorT<T> random_tensor(int n, int c, int h, int w, uint64_t seed, T lo = T(-1),
                              T hi = T(1)) {
    mtx::TensorT<T> t(n, c, h, w);
    mtx::Rng rng(seed);
    mtx::fill_uniform(t, rng, lo, hi);
    return t;
}

template <typename T>
T dot(const mtx::TensorT<T>& a, const mtx::TensorT<T>& b) {
    T s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

template <typename T>
T max_abs_diff(const mtx::TensorT<T>& a, const mtx::TensorT<T>& b) {
    T m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

inline bool bitwise_equal(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    return sa == sb;
}

}  // namespace testutil
