#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtx/image.hpp"
#include "mtx/image_io.hpp"
#include "mtx/mdan.hpp"
#include "mtx/mgan.hpp"

// Corpus pipeline: photo ingestion, the rotation/scale augmentation grid,
// regular cropping, and deconvolution-driven style-pair generation.

namespace mtx {

struct CorpusSpec {
    std::filesystem::path photo_dir;
    int max_dim = 384;
    int augment_copies = 9;
    int crop_size = 128;
    int crop_stride = 64;  // the source material gives no stride; 64 overlaps crops 2x
    uint64_t seed = 0;

    void validate() const {
        if (max_dim < 1 || crop_size < 1 || crop_stride < 1)
            throw Error("bad-argument", "corpus dimensions must be positive");
        if (crop_size > max_dim)
            throw Error("bad-argument", "crop size cannot exceed the ingest max dimension");
        if (augment_copies < 1) throw Error("bad-argument", "augment copies must be >= 1");
    }
};

// The deterministic augmentation grid: identity first, then the remaining
// rotation x scale combinations. `copies` beyond the 3x3 grid cycle through it.
inline std::vector<std::pair<double, double>> augment_grid(int copies) {
    static const double rotations[] = {0.0, -15.0, 15.0};
    static const double scales[] = {1.0, 0.85, 1.15};
    std::vector<std::pair<double, double>> grid;
    for (double r : rotations)
        for (double s : scales) grid.emplace_back(r, s);
    std::vector<std::pair<double, double>> out;
    for (int i = 0; i < copies; ++i) out.push_back(grid[i % grid.size()]);
    return out;
}

template <typename T>
std::vector<ImageT<T>> augment(const ImageT<T>& img, int copies = 9, uint64_t seed = 0) {
    (void)seed;  // the grid is fixed; seed reserved for future jitter
    if (copies < 1) throw Error("bad-argument", "augment copies must be >= 1");
    constexpr double deg = 3.14159265358979323846 / 180.0;
    std::vector<ImageT<T>> out;
    for (const auto& [rot, scale] : augment_grid(copies))
        out.push_back(rotate_scale_interior(img, rot * deg, scale));
    return out;
}

// Resizes every decodable photo so its larger side equals max_dim. Undecodable
// files are skipped with a warning; an empty yield is an error.
inline std::vector<Image> ingest(const CorpusSpec& spec) {
    spec.validate();
    const auto files = list_images(spec.photo_dir);
    std::vector<Image> out;
    for (const auto& f : files) {
        try {
            out.push_back(resize_max_dim(load_image(f), spec.max_dim));
        } catch (const Error& e) {
            std::cerr << "warning: skipping " << f.string() << ": " << e.what() << "\n";
        }
    }
    if (out.empty())
        throw Error("empty-input", "no decodable images in " + spec.photo_dir.string());
    return out;
}

inline std::vector<std::pair<int, int>> crop_origins(int H, int W, int size, int stride) {
    std::vector<std::pair<int, int>> out;
    for (int y = 0; y + size <= H; y += stride)
        for (int x = 0; x + size <= W; x += stride) out.emplace_back(y, x);
    return out;
}

// Row-major grid of size x size crops; count is
// (floor((H-size)/stride)+1) * (floor((W-size)/stride)+1).
template <typename T>
std::vector<ImageT<T>> crop_regular(const ImageT<T>& img, int size = 128, int stride = 64) {
    if (size < 1 || stride < 1) throw Error("bad-argument", "crop size and stride must be >= 1");
    if (img.height() < size || img.width() < size)
        throw Error("image-too-small", "image " + std::to_string(img.height()) + "x" +
                                           std::to_string(img.width()) +
                                           " is smaller than the crop size " +
                                           std::to_string(size));
    std::vector<ImageT<T>> out;
    for (const auto& [y, x] : crop_origins(img.height(), img.width(), size, stride))
        out.push_back(crop(img, y, x, size, size));
    return out;
}

// Guided synthesis per augmented photo, then co-located crops from photo and
// stylized target form the training pairs.
template <typename T>
std::vector<StylePairT<T>> build_style_corpus(const EncoderModelT<T>& enc,
                                              const std::vector<ImageT<T>>& photos,
                                              const ImageT<T>& x_t, const MDANConfigT<T>& mdan_cfg,
                                              const CorpusSpec& spec,
                                              const StepCallback& on_step = {}) {
    spec.validate();
    if (photos.empty()) throw Error("empty-input", "corpus needs at least one photo");
    std::vector<StylePairT<T>> pairs;
    for (const auto& photo : photos) {
        for (const auto& variant : augment(photo, spec.augment_copies, spec.seed)) {
            if (variant.height() < spec.crop_size || variant.width() < spec.crop_size) continue;
            const ImageT<T> target = synthesize(enc, x_t, &variant, mdan_cfg, on_step);
            for (const auto& [y, x] :
                 crop_origins(variant.height(), variant.width(), spec.crop_size,
                              spec.crop_stride)) {
                pairs.push_back({crop(variant, y, x, spec.crop_size, spec.crop_size),
                                 crop(target, y, x, spec.crop_size, spec.crop_size)});
            }
        }
    }
    if (pairs.empty())
        throw Error("image-too-small", "no augmented photo admits a single crop");
    return pairs;
}

// On-disk layout: pairs/{index}_photo.png, pairs/{index}_target.png and a
// manifest recording the spec and per-file content hashes.
template <typename T>
nlohmann::json save_corpus(const std::vector<StylePairT<T>>& pairs,
                           const std::filesystem::path& dir, const CorpusSpec& spec) {
    if (pairs.empty()) throw Error("empty-corpus", "refusing to write an empty corpus");
    std::filesystem::create_directories(dir / "pairs");
    nlohmann::json manifest;
    manifest["max_dim"] = spec.max_dim;
    manifest["augment_copies"] = spec.augment_copies;
    manifest["crop_size"] = spec.crop_size;
    manifest["crop_stride"] = spec.crop_stride;
    manifest["seed"] = spec.seed;
    manifest["rotations"] = {0.0, -15.0, 15.0};
    manifest["scales"] = {1.0, 0.85, 1.15};
    manifest["count"] = pairs.size();
    auto& files = manifest["pairs"] = nlohmann::json::array();
    for (size_t i = 0; i < pairs.size(); ++i) {
        const std::string photo_rel = "pairs/" + std::to_string(i) + "_photo.png";
        const std::string target_rel = "pairs/" + std::to_string(i) + "_target.png";
        save_image(pairs[i].photo, dir / photo_rel);
        save_image(pairs[i].target, dir / target_rel);
        std::ostringstream ph, th;
        ph << std::hex << image_content_hash(pairs[i].photo);
        th << std::hex << image_content_hash(pairs[i].target);
        files.push_back({{"photo", photo_rel},
                         {"target", target_rel},
                         {"photo_fnv", ph.str()},
                         {"target_fnv", th.str()}});
    }
    std::ofstream f(dir / "manifest.json");
    if (!f) throw Error("io-error", "cannot write " + (dir / "manifest.json").string());
    f << manifest.dump(2) << "\n";
    return manifest;
}

inline nlohmann::json read_corpus_manifest(const std::filesystem::path& dir) {
    std::ifstream f(dir / "manifest.json");
    if (!f) throw Error("io-error", "missing corpus manifest in " + dir.string());
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw Error("corrupt-manifest", "corpus manifest does not parse: " + std::string(e.what()));
    }
}

inline std::vector<StylePair> load_corpus(const std::filesystem::path& dir) {
    const nlohmann::json manifest = read_corpus_manifest(dir);
    if (!manifest.contains("pairs") || !manifest["pairs"].is_array())
        throw Error("corrupt-manifest", "corpus manifest lacks a pair list");
    std::vector<StylePair> out;
    for (const auto& e : manifest["pairs"]) {
        StylePair p;
        p.photo = load_image(dir / e.at("photo").get<std::string>());
        p.target = load_image(dir / e.at("target").get<std::string>());
        out.push_back(std::move(p));
    }
    if (out.empty()) throw Error("empty-corpus", "corpus manifest lists no pairs");
    return out;
}

}  // namespace mtx
