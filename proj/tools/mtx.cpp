// Command-line surface for the synthesis pipeline: deconvolution-based
// stylization, corpus building, feed-forward generator training, decoding,
// benchmarking, and bookkeeping.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtx/mtx.hpp"

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kFallbackEncoderSeed = 0x7E57;

// Encoder resolution order: --encoder flag, then MTX_ENCODER_WEIGHTS, then the
// built-in tiny test encoder (random but fixed weights; lets every command run
// without a pretrained checkpoint).
mtx::EncoderModelT<float> resolve_encoder(const std::string& flag_path) {
    std::string path = flag_path;
    if (path.empty())
        if (const char* env = std::getenv("MTX_ENCODER_WEIGHTS")) path = env;
    if (!path.empty()) return mtx::EncoderModelT<float>::load(path);
    return mtx::EncoderModelT<float>::tiny(kFallbackEncoderSeed);
}

void write_manifest(const fs::path& path, const nlohmann::json& j) {
    std::ofstream f(path);
    if (!f) throw mtx::Error("io-error", "cannot write " + path.string());
    f << j.dump(2) << "\n";
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Expands `--config FILE` into explicit flags appended to the argument list,
// so precedence is CLI flag > config file > built-in default. Keys use the
// flag spelling without the leading dashes (`patch-k=2`); keys whose flag is
// already on the command line are skipped, comma-separated values become
// repeated flags. Done by hand because the argument parser only loads config
// files for the top-level command, not for subcommands.
std::vector<std::string> expand_config_args(std::vector<std::string> args) {
    std::string file;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) file = args[i].substr(9);
    }
    if (file.empty()) return args;

    std::ifstream in(file);
    if (!in) throw mtx::Error("io-error", "cannot read config file " + file);
    auto flag_given = [&](const std::string& flag) {
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw mtx::Error("bad-argument", "config line is not key=value: " + line);
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
            value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        const std::string flag = "--" + key;
        if (key.empty() || flag_given(flag)) continue;
        std::istringstream vs(value);
        std::string piece;
        while (std::getline(vs, piece, ',')) {
            args.push_back(flag);
            args.push_back(trim(piece));
        }
    }
    return args;
}

// Flags shared by every command that runs the deconvolution loop.
struct MdanFlags {
    std::string texture;
    std::string content;
    std::string layer = "relu3_1";
    std::string content_layer = "relu5_1";
    int patch_k = 8;
    int stride = 1;
    double alpha1 = 1.0;
    double alpha2 = 0.0001;
    double lr = 0.02;
    double beta1 = 0.5;
    int iterations = 500;
    int d_updates = 1;
    int d_channels = 64;
    int d_depth = 1;

    void bind(CLI::App* cmd, bool content_flag = true) {
        cmd->add_option("--texture", texture, "texture exemplar image")->required();
        if (content_flag) cmd->add_option("--content", content, "content image (guided synthesis)");
        cmd->add_option("--layer", layer, "neural-patch layer (default relu3_1)");
        cmd->add_option("--content-layer", content_layer, "guidance layer (default relu5_1)");
        cmd->add_option("--patch-k", patch_k, "patch side in feature cells (default 8)");
        cmd->add_option("--stride", stride, "patch stride in feature cells (default 1)");
        cmd->add_option("--alpha1", alpha1, "content weight (default 1)");
        cmd->add_option("--alpha2", alpha2, "smoothness weight (default 0.0001)");
        cmd->add_option("--lr", lr, "pixel ADAM learning rate (default 0.02)");
        cmd->add_option("--beta1", beta1, "pixel ADAM beta1 (default 0.5)");
        cmd->add_option("--iterations", iterations, "deconvolution iterations (default 500)");
        cmd->add_option("--d-updates", d_updates, "discriminator updates per step (default 1)");
        cmd->add_option("--d-channels", d_channels, "discriminator hidden channels (default 64)");
        cmd->add_option("--d-depth", d_depth, "discriminator hidden conv blocks (default 1)");
    }

    mtx::MDANConfigT<float> to_config(uint64_t seed) const {
        mtx::MDANConfigT<float> cfg;
        cfg.weights.alpha1 = static_cast<float>(alpha1);
        cfg.weights.alpha2 = static_cast<float>(alpha2);
        cfg.layer = mtx::parse_layer_id(layer);
        cfg.content_layer = mtx::parse_layer_id(content_layer);
        cfg.patch_k = patch_k;
        cfg.stride = stride;
        cfg.lr = static_cast<float>(lr);
        cfg.beta1 = static_cast<float>(beta1);
        cfg.iterations = iterations;
        cfg.d_updates_per_step = d_updates;
        cfg.d_channels = d_channels;
        cfg.d_depth = d_depth;
        cfg.seed = seed;
        return cfg;
    }

    nlohmann::json to_json(uint64_t seed) const {
        return {{"texture", texture},   {"content", content},
                {"layer", layer},       {"content_layer", content_layer},
                {"patch_k", patch_k},   {"stride", stride},
                {"alpha1", alpha1},     {"alpha2", alpha2},
                {"lr", lr},             {"beta1", beta1},
                {"iterations", iterations}, {"d_updates", d_updates},
                {"d_channels", d_channels}, {"d_depth", d_depth},
                {"seed", seed}};
    }
};

int run(int argc, char** argv) {
    CLI::App app{"Markovian adversarial texture synthesis pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    uint64_t seed = 0;
    std::string encoder_path;
    std::string config_file;  // consumed below; file contents are merged into argv before parsing
    app.add_option("--seed", seed, "root random seed (default 0)");
    app.add_option("--encoder", encoder_path,
                   "encoder checkpoint (default: $MTX_ENCODER_WEIGHTS, else built-in test encoder)");

    // ---- train-mdan -------------------------------------------------------
    auto* mdan_cmd = app.add_subcommand("train-mdan", "deconvolution synthesis (pixel optimization)");
    mdan_cmd->fallthrough();
    mdan_cmd->add_option("--config", config_file, "key=value config file (flags take precedence)");
    MdanFlags mdan_flags;
    mdan_flags.bind(mdan_cmd);
    std::string mdan_out = "out.png";
    std::string mdan_save_d, mdan_init_d;
    mdan_cmd->add_option("--out", mdan_out, "output image path (default out.png)");
    mdan_cmd->add_option("--save-d", mdan_save_d, "write the trained discriminator here");
    mdan_cmd->add_option("--d-init", mdan_init_d, "warm-start discriminator checkpoint");
    mdan_cmd->callback([&]() {
        const auto enc = resolve_encoder(encoder_path);
        const mtx::Image x_t = mtx::load_image(mdan_flags.texture);
        const mtx::MDANConfigT<float> cfg = mdan_flags.to_config(seed);
        const bool guided = !mdan_flags.content.empty();
        mtx::Image x_c = guided ? mtx::load_image(mdan_flags.content) : mtx::Image(1, 1);
        auto st = [&]() {
            if (mdan_init_d.empty())
                return mtx::init_state(enc, x_t, guided ? &x_c : nullptr, cfg);
            auto d0 = mtx::PatchDiscriminatorT<float>::load(mdan_init_d);
            return mtx::init_state(enc, x_t, guided ? &x_c : nullptr, cfg, &d0);
        }();
        for (int i = 0; i < cfg.iterations; ++i) {
            const auto rep = mtx::step(st, enc, x_t, guided ? &x_c : nullptr);
            if (st.step % 25 == 0 || i + 1 == cfg.iterations)
                std::cout << "iter " << st.step << " energy " << rep.energy.total << " d_loss "
                          << rep.d_loss << "\n";
        }
        st.x.clamp_range(0.0f, 255.0f);
        mtx::save_image(st.x, mdan_out);
        if (!mdan_save_d.empty()) st.d.save(mdan_save_d);
        nlohmann::json manifest = mdan_flags.to_json(seed);
        manifest["out"] = mdan_out;
        manifest["d_init"] = mdan_init_d;
        manifest["save_d"] = mdan_save_d;
        write_manifest(mdan_out + ".json", manifest);
    });

    // ---- build-corpus -----------------------------------------------------
    auto* corpus_cmd = app.add_subcommand("build-corpus", "augment photos and build style pairs");
    corpus_cmd->fallthrough();
    corpus_cmd->add_option("--config", config_file, "key=value config file (flags take precedence)");
    MdanFlags corpus_mdan;
    corpus_mdan.bind(corpus_cmd, /*content_flag=*/false);
    std::string corpus_photos, corpus_out = "corpus";
    mtx::CorpusSpec corpus_spec;
    corpus_cmd->add_option("--photos", corpus_photos, "directory of input photos")->required();
    corpus_cmd->add_option("--out", corpus_out, "corpus output directory (default corpus)");
    corpus_cmd->add_option("--max-dim", corpus_spec.max_dim, "ingest resize target (default 384)");
    corpus_cmd->add_option("--copies", corpus_spec.augment_copies,
                           "augmentation copies per photo (default 9)");
    corpus_cmd->add_option("--crop-size", corpus_spec.crop_size, "crop side (default 128)");
    corpus_cmd->add_option("--crop-stride", corpus_spec.crop_stride, "crop stride (default 64)");
    corpus_cmd->callback([&]() {
        const auto enc = resolve_encoder(encoder_path);
        corpus_spec.photo_dir = corpus_photos;
        corpus_spec.seed = seed;
        const mtx::Image x_t = mtx::load_image(corpus_mdan.texture);
        const auto photos = mtx::ingest(corpus_spec);
        const auto pairs = mtx::build_style_corpus(enc, photos, x_t,
                                                   corpus_mdan.to_config(seed), corpus_spec);
        nlohmann::json manifest = mtx::save_corpus(pairs, corpus_out, corpus_spec);
        nlohmann::json config = corpus_mdan.to_json(seed);
        config["photos"] = corpus_photos;
        config["out"] = corpus_out;
        write_manifest(fs::path(corpus_out) / "config.json", config);
        std::cout << "wrote " << pairs.size() << " pairs to " << corpus_out << "\n";
    });

    // ---- train-mgan -------------------------------------------------------
    auto* mgan_cmd = app.add_subcommand("train-mgan", "train the feed-forward generator");
    mgan_cmd->fallthrough();
    mgan_cmd->add_option("--config", config_file, "key=value config file (flags take precedence)");
    std::string mgan_corpus, mgan_out = "generator.ckpt", mgan_save_d, mgan_baseline = "none";
    mtx::MGANConfigT<float> mgan_cfg;
    int pretrain_steps = 0;
    std::string mgan_patch_layer = "relu3_1";
    mgan_cmd->add_option("--corpus", mgan_corpus, "corpus directory from build-corpus")->required();
    mgan_cmd->add_option("--out", mgan_out, "generator checkpoint path (default generator.ckpt)");
    mgan_cmd->add_option("--save-d", mgan_save_d, "write the trained discriminator here");
    mgan_cmd->add_option("--epochs", mgan_cfg.epochs, "training epochs (default 5)");
    mgan_cmd->add_option("--batch", mgan_cfg.batch_size, "batch size (default 16)");
    mgan_cmd->add_option("--lr", mgan_cfg.lr, "generator ADAM learning rate (default 0.02)");
    mgan_cmd->add_option("--beta1", mgan_cfg.beta1, "generator ADAM beta1 (default 0.5)");
    mgan_cmd->add_option("--d-lr", mgan_cfg.d_lr,
                         "discriminator ADAM learning rate (default 0.02; 0 freezes it)");
    mgan_cmd->add_option("--d-beta1", mgan_cfg.d_beta1, "discriminator ADAM beta1 (default 0.5)");
    mgan_cmd->add_option("--adversarial-weight", mgan_cfg.adversarial_weight,
                         "weight of the hinge texture term (default 1)");
    mgan_cmd->add_option("--feature-weight", mgan_cfg.feature_weight,
                         "optional feature-reconstruction weight (default 0)");
    mgan_cmd->add_option("--patch-layer", mgan_patch_layer, "patch layer (default relu3_1)");
    mgan_cmd->add_option("--patch-k", mgan_cfg.patch_k, "patch side (default 8)");
    mgan_cmd->add_option("--patch-stride", mgan_cfg.patch_stride, "patch stride (default 4)");
    mgan_cmd->add_option("--baseline", mgan_baseline,
                         "none|pixel|neural - train a VAE baseline instead (default none)");
    mgan_cmd->add_option("--pretrain-steps", pretrain_steps,
                         "auto-encoder warm-start steps before training (default 0)");
    mgan_cmd->callback([&]() {
        const auto enc = resolve_encoder(encoder_path);
        mgan_cfg.patch_layer = mtx::parse_layer_id(mgan_patch_layer);
        mgan_cfg.seed = seed;
        const auto corpus = mtx::load_corpus(mgan_corpus);
        mtx::GeneratorT<float> g(mtx::GeneratorConfig{}, mtx::mix_seed(seed, 0x6UL));
        if (pretrain_steps > 0) {
            std::vector<mtx::Image> photos;
            for (const auto& p : corpus) photos.push_back(p.photo);
            const auto mses = mtx::pretrain_autoencoder(enc, g, photos, pretrain_steps, mgan_cfg);
            if (!mses.empty())
                std::cout << "pretrain mse " << mses.front() << " -> " << mses.back() << "\n";
        }
        mtx::TrainLogT<float> log;
        if (mgan_baseline == "none") {
            mtx::DiscriminatorConfig dc;
            dc.input_layer = mgan_cfg.patch_layer;
            dc.patch_k = mgan_cfg.patch_k;
            mtx::PatchDiscriminatorT<float> d(dc, mtx::mix_seed(seed, 0xDUL));
            log = mtx::train(enc, g, d, corpus, mgan_cfg);
            if (!mgan_save_d.empty()) d.save(mgan_save_d);
        } else {
            log = mtx::train_vae_baseline(enc, g, corpus, mtx::parse_vae_mode(mgan_baseline),
                                          mgan_cfg);
        }
        g.save(mgan_out);
        std::ofstream losses(mgan_out + ".losses.csv");
        losses << "batch,g_loss,d_loss\n";
        for (size_t i = 0; i < log.g_loss.size(); ++i)
            losses << i << "," << log.g_loss[i] << ","
                   << (i < log.d_loss.size() ? std::to_string(log.d_loss[i]) : std::string())
                   << "\n";
        nlohmann::json manifest{{"corpus", mgan_corpus},
                                {"out", mgan_out},
                                {"epochs", mgan_cfg.epochs},
                                {"batch", mgan_cfg.batch_size},
                                {"lr", mgan_cfg.lr},
                                {"beta1", mgan_cfg.beta1},
                                {"d_lr", mgan_cfg.d_lr},
                                {"d_beta1", mgan_cfg.d_beta1},
                                {"adversarial_weight", mgan_cfg.adversarial_weight},
                                {"feature_weight", mgan_cfg.feature_weight},
                                {"patch_layer", mgan_patch_layer},
                                {"patch_k", mgan_cfg.patch_k},
                                {"patch_stride", mgan_cfg.patch_stride},
                                {"baseline", mgan_baseline},
                                {"pretrain_steps", pretrain_steps},
                                {"g_updates", log.g_updates},
                                {"d_updates", log.d_updates},
                                {"seed", seed}};
        write_manifest(mgan_out + ".run.json", manifest);
        std::cout << "wrote " << mgan_out << " after " << log.g_updates << " generator updates\n";
    });

    // ---- decode -----------------------------------------------------------
    auto* decode_cmd = app.add_subcommand("decode", "feed-forward stylization of one image");
    decode_cmd->fallthrough();
    decode_cmd->add_option("--config", config_file, "key=value config file (flags take precedence)");
    std::string dec_input, dec_gen, dec_out = "decoded.png", dec_noise = "none";
    double dec_blend = 0.5;
    int dec_noise_h = 256, dec_noise_w = 256, dec_octaves = 4;
    double dec_exponent = 2.0;
    decode_cmd->add_option("--input", dec_input, "input photo (omit to decode pure noise)");
    decode_cmd->add_option("--generator", dec_gen, "generator checkpoint")->required();
    decode_cmd->add_option("--out", dec_out, "output image path (default decoded.png)");
    decode_cmd->add_option("--noise", dec_noise, "none|perlin|brown noise source (default none)");
    decode_cmd->add_option("--noise-blend", dec_blend,
                           "blend weight of noise into the input photo (default 0.5)");
    decode_cmd->add_option("--height", dec_noise_h, "noise height when no input (default 256)");
    decode_cmd->add_option("--width", dec_noise_w, "noise width when no input (default 256)");
    decode_cmd->add_option("--octaves", dec_octaves, "perlin octaves (default 4)");
    decode_cmd->add_option("--exponent", dec_exponent, "brown spectral exponent (default 2)");
    decode_cmd->callback([&]() {
        const auto enc = resolve_encoder(encoder_path);
        auto g = mtx::GeneratorT<float>::load(dec_gen);
        mtx::Image out(1, 1);
        if (dec_input.empty() && dec_noise == "none")
            throw mtx::Error("bad-argument", "decode needs --input or --noise");
        if (dec_input.empty()) {
            mtx::NoiseSpec spec;
            spec.kind = mtx::parse_noise_kind(dec_noise);
            spec.height = dec_noise_h;
            spec.width = dec_noise_w;
            spec.octaves = dec_octaves;
            spec.spectral_exponent = dec_exponent;
            spec.seed = seed;
            const mtx::Image noise = mtx::generate_noise<float>(spec);
            out = mtx::decode(enc, g, noise);
        } else {
            const mtx::Image photo = mtx::load_image(dec_input);
            if (dec_noise == "none") {
                out = mtx::decode(enc, g, photo);
            } else {
                mtx::NoiseSpec spec;
                spec.kind = mtx::parse_noise_kind(dec_noise);
                spec.height = photo.height();
                spec.width = photo.width();
                spec.octaves = dec_octaves;
                spec.spectral_exponent = dec_exponent;
                spec.seed = seed;
                const mtx::Image noise = mtx::generate_noise<float>(spec);
                out = mtx::decode(enc, g, photo, &noise, static_cast<float>(dec_blend));
            }
        }
        mtx::save_image(out, dec_out);
        write_manifest(dec_out + ".json",
                       {{"input", dec_input},
                        {"generator", dec_gen},
                        {"noise", dec_noise},
                        {"noise_blend", dec_blend},
                        {"seed", seed},
                        {"out", dec_out}});
    });

    // ---- decode-video -----------------------------------------------------
    auto* video_cmd = app.add_subcommand("decode-video", "decode a directory of frames");
    video_cmd->fallthrough();
    video_cmd->add_option("--config", config_file, "key=value config file (flags take precedence)");
    std::string vid_frames, vid_gen, vid_out = "decoded_frames";
    video_cmd->add_option("--frames", vid_frames, "directory of input frames")->required();
    video_cmd->add_option("--generator", vid_gen, "generator checkpoint")->required();
    video_cmd->add_option("--out", vid_out, "output directory (default decoded_frames)");
    video_cmd->callback([&]() {
        const auto enc = resolve_encoder(encoder_path);
        auto g = mtx::GeneratorT<float>::load(vid_gen);
        fs::create_directories(vid_out);
        int written = 0;
        if (!fs::is_directory(vid_frames))
            throw mtx::Error("io-error", "not a directory: " + vid_frames);
        std::vector<fs::path> entries;
        for (const auto& e : fs::directory_iterator(vid_frames))
            if (e.is_regular_file()) entries.push_back(e.path());
        std::sort(entries.begin(), entries.end());
        for (const auto& p : entries) {
            if (!mtx::has_image_extension(p)) {
                std::cerr << "warning: skipping non-image file " << p.string() << "\n";
                continue;
            }
            const mtx::Image frame = mtx::load_image(p);
            const mtx::Image out = mtx::decode(enc, g, frame);
            mtx::save_image(out, fs::path(vid_out) / p.filename());
            ++written;
        }
        if (written == 0) throw mtx::Error("empty-input", "no frames decoded from " + vid_frames);
        write_manifest(fs::path(vid_out) / "config.json",
                       {{"frames", vid_frames}, {"generator", vid_gen}, {"count", written}});
        std::cout << "decoded " << written << " frames to " << vid_out << "\n";
    });

    // ---- benchmark --------------------------------------------------------
    auto* bench_cmd = app.add_subcommand("benchmark", "decode timing vs resolution");
    bench_cmd->fallthrough();
    bench_cmd->add_option("--config", config_file, "key=value config file (flags take precedence)");
    std::string bench_gen, bench_out = "benchmark.csv";
    std::vector<int> bench_sizes{128, 256, 512};
    int bench_trials = 7;
    bench_cmd->add_option("--generator", bench_gen,
                          "generator checkpoint (default: random generator)");
    bench_cmd->add_option("--out", bench_out, "CSV output path (default benchmark.csv)");
    bench_cmd->add_option("--sizes", bench_sizes, "square sizes to decode (default 128 256 512)");
    bench_cmd->add_option("--trials", bench_trials, "trials per size, >= 5 (default 7)");
    bench_cmd->callback([&]() {
        const auto enc = resolve_encoder(encoder_path);
        mtx::GeneratorT<float> g = bench_gen.empty()
                                       ? mtx::GeneratorT<float>(mtx::GeneratorConfig{}, 1)
                                       : mtx::GeneratorT<float>::load(bench_gen);
        std::vector<mtx::BenchmarkRecord> records;
        for (int s : bench_sizes) {
            mtx::Rng rng(mtx::mix_seed(seed, static_cast<uint64_t>(s)));
            const mtx::Image input = mtx::random_uniform_image<float>(s, s, rng);
            const double ms = mtx::median_wall_ms(
                [&]() {
                    const mtx::Image out = mtx::decode(enc, g, input);
                    (void)out;
                },
                bench_trials);
            records.push_back({static_cast<long>(s) * s, bench_trials, ms, "cpu"});
            std::cout << s << "x" << s << ": " << ms << " ms median of " << bench_trials << "\n";
        }
        mtx::write_benchmark_csv(bench_out, records);
        const double exponent = mtx::scaling_exponent(records);
        std::cout << "scaling exponent " << exponent << "\n";
        write_manifest(bench_out + ".json",
                       {{"sizes", bench_sizes},
                        {"trials", bench_trials},
                        {"device", "cpu"},
                        {"exponent", exponent},
                        {"reference_gpu_anchors_ms", {{"256x256", 10}, {"512x512", 40}, {"1024x1024", 160}}},
                        {"seed", seed}});
    });

    // ---- visualize-features ----------------------------------------------
    auto* vis_cmd = app.add_subcommand("visualize-features", "decode one-hot feature channels");
    vis_cmd->fallthrough();
    vis_cmd->add_option("--config", config_file, "key=value config file (flags take precedence)");
    std::string vis_gen, vis_out = "features.png";
    std::vector<int> vis_channels{0};
    int vis_grid = 4;
    vis_cmd->add_option("--generator", vis_gen, "generator checkpoint")->required();
    vis_cmd->add_option("--out", vis_out, "output image path (default features.png)");
    vis_cmd->add_option("--channels", vis_channels, "feature channels to decode (default 0)");
    vis_cmd->add_option("--grid", vis_grid, "spatial cells of the one-hot input (default 4)");
    vis_cmd->callback([&]() {
        auto g = mtx::GeneratorT<float>::load(vis_gen);
        std::vector<mtx::Image> tiles;
        for (int c : vis_channels) tiles.push_back(mtx::visualize_decoder_features(g, c, vis_grid));
        const int th = tiles.front().height(), tw = tiles.front().width(), gap = 2;
        mtx::Image strip = mtx::constant_image<float>(
            th, static_cast<int>(tiles.size()) * (tw + gap) - gap, 0, 0, 0);
        for (size_t i = 0; i < tiles.size(); ++i)
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < th; ++y)
                    for (int x = 0; x < tw; ++x)
                        strip.at(c, y, static_cast<int>(i) * (tw + gap) + x) = tiles[i].at(c, y, x);
        mtx::save_image(strip, vis_out);
        write_manifest(vis_out + ".json",
                       {{"generator", vis_gen}, {"channels", vis_channels}, {"grid", vis_grid}});
    });

    // ---- info -------------------------------------------------------------
    auto* info_cmd = app.add_subcommand("info", "parameter accounting for the default stack");
    info_cmd->fallthrough();
    std::string info_gen, info_out;
    info_cmd->add_option("--generator", info_gen, "generator checkpoint (default: default arch)");
    info_cmd->add_option("--out", info_out, "also write the report here");
    info_cmd->callback([&]() {
        mtx::GeneratorT<float> g = info_gen.empty()
                                       ? mtx::GeneratorT<float>(mtx::GeneratorConfig{}, 0)
                                       : mtx::GeneratorT<float>::load(info_gen);
        const auto arch = mtx::vgg19_arch();
        const size_t enc_bytes = mtx::encoder_param_bytes(arch, mtx::LayerId::relu4_1);
        const size_t gen_bytes = g.param_bytes();
        const double total_mb = static_cast<double>(enc_bytes + gen_bytes) / (1024.0 * 1024.0);
        nlohmann::json report{
            {"encoder_bytes_to_relu4_1", enc_bytes},
            {"generator_bytes", gen_bytes},
            {"total_bytes", enc_bytes + gen_bytes},
            {"total_mb", total_mb},
            {"note", "reference implementation reports on the order of 70 MB for its parameters"}};
        std::cout << report.dump(2) << "\n";
        if (!info_out.empty()) write_manifest(info_out, report);
    });

    try {
        std::vector<std::string> args = expand_config_args({argv + 1, argv + argc});
        std::reverse(args.begin(), args.end());  // the vector overload wants them reversed
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() != 0) {
            std::cerr << "error: usage: " << e.what() << "\n";
            return 1;
        }
        return app.exit(e);  // --help and friends
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const mtx::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}
