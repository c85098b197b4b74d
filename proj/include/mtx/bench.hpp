#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mtx/tensor.hpp"

// Wall-clock benchmark records and the log-log scaling fit used to check that
// decode time grows about linearly with pixel count.

namespace mtx {

struct BenchmarkRecord {
    long resolution = 0;  // total pixel count of the decoded image
    int trials = 0;
    double median_ms = 0;
    std::string device;
};

template <typename F>
double median_wall_ms(F&& fn, int trials) {
    if (trials < 5) throw Error("bad-argument", "benchmark needs at least 5 trials");
    std::vector<double> ms;
    ms.reserve(trials);
    for (int i = 0; i < trials; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(ms.begin(), ms.end());
    const size_t mid = ms.size() / 2;
    const double med =
        ms.size() % 2 == 1 ? ms[mid] : 0.5 * (ms[mid - 1] + ms[mid]);
    return std::max(med, 1e-6);  // keep the >0 invariant even for trivial work
}

// Least-squares slope of log(median_ms) against log(resolution); 1.0 means
// time scales linearly with pixel count.
inline double scaling_exponent(const std::vector<BenchmarkRecord>& records) {
    if (records.size() < 2)
        throw Error("bad-argument", "scaling fit needs at least two resolutions");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(records.size());
    for (const auto& r : records) {
        if (r.resolution < 1 || r.median_ms <= 0)
            throw Error("bad-argument", "benchmark records must be positive");
        const double x = std::log(static_cast<double>(r.resolution));
        const double y = std::log(r.median_ms);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12)
        throw Error("bad-argument", "scaling fit needs distinct resolutions");
    return (n * sxy - sx * sy) / denom;
}

inline void write_benchmark_csv(const std::filesystem::path& path,
                                const std::vector<BenchmarkRecord>& records) {
    std::ofstream f(path);
    if (!f) throw Error("io-error", "cannot write " + path.string());
    f << "resolution,trials,median_ms,device\n";
    for (const auto& r : records)
        f << r.resolution << "," << r.trials << "," << r.median_ms << "," << r.device << "\n";
}

}  // namespace mtx
