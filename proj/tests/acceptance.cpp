// Acceptance harness for the synthesis stack. Each numbered criterion prints
// exactly one PASS or FAIL line with the measured evidence; the ctest wrapper
// treats any FAIL token as a failure. Criteria with a runtime budget count a
// budget overrun as a failure even when the property itself holds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "mtx/mtx.hpp"

using namespace mtx;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_failures = 0;

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(4);
    ss << v;
    return ss.str();
}

void run_criterion(const std::string& id, double budget_s, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("threw: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0 && secs > budget_s) {
        o.pass = false;
        o.detail += " [exceeded the " + fmt(budget_s) + "s budget]";
    }
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(1);
    line << id << " " << (o.pass ? "PASS" : "FAIL") << " (" << secs << "s) " << o.detail;
    std::cout << line.str() << "\n" << std::flush;
    if (!o.pass) ++g_failures;
}

// C1: the four loss functions reproduce their hand-computed examples.
Outcome c1() {
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-6; };
    bool ok = true;

    ok &= near(hinge_texture_loss<float>(std::vector<float>{1, 2, 5}), 0.0);
    ok &= near(hinge_texture_loss<float>(std::vector<float>{-1}), 2.0);
    ok &= near(hinge_texture_loss<float>(std::vector<float>{0.5f, -0.5f, 1.5f}), 2.0 / 3.0);

    ok &= near(discriminator_hinge_loss<float>({1}, {-1}), 0.0);
    ok &= near(discriminator_hinge_loss<float>({0}, {0}), 2.0);
    ok &= near(discriminator_hinge_loss<float>({2, 0}, {-2}), 0.5);

    TensorT<float> ta(1, 1, 1, 2), tb(1, 1, 1, 2);
    ta.data = {1, 3};
    tb.data = {0, 1};
    ok &= near(content_loss(FeatureMapT<float>{LayerId::relu3_1, ta},
                            FeatureMapT<float>{LayerId::relu3_1, tb}),
               2.5);
    ok &= near(content_loss(FeatureMapT<float>{LayerId::relu3_1, ta},
                            FeatureMapT<float>{LayerId::relu3_1, ta}),
               0.0);

    TensorT<float> flat(1, 3, 4, 4, 7.0f);
    ok &= near(smoothness_prior(flat), 0.0);
    TensorT<float> pair(1, 1, 1, 2);
    pair.data = {0, 1};
    ok &= near(smoothness_prior(pair), 0.5);

    return {ok, "hinge, margin, content, and smoothness examples all within 1e-6"};
}

// C2: analytic energy gradients match central finite differences, for pixels
// and for generator parameters, all in double precision with adjoint folding.
Outcome c2() {
    const auto enc = EncoderModelT<double>::tiny(0x7E57);

    const auto x = testutil::random_image<double>(8, 8, 11);
    const auto xc = testutil::random_image<double>(8, 8, 12);
    EnergyConfigT<double> cfg;
    cfg.texture_layer = LayerId::relu2_1;
    cfg.content_layer = LayerId::relu3_1;
    cfg.patch_k = 2;
    cfg.patch_stride = 1;
    DiscriminatorConfig dc;
    dc.input_layer = LayerId::relu2_1;
    dc.patch_k = 2;
    dc.channels = 8;
    PatchDiscriminatorT<double> d(dc, 13);

    const auto [e0, grad] = total_energy_with_grad(enc, d, x, &xc, cfg, FoldMode::Adjoint);
    (void)e0;
    Rng rng(14);
    double worst_px = 0;
    const double h = 1e-3;
    for (int t = 0; t < 100; ++t) {
        const size_t i = rng.index(x.px.size());
        ImageT<double> xp = x, xm = x;
        xp.px.data[i] += h;
        xm.px.data[i] -= h;
        const double fd = (total_energy(enc, d, xp, &xc, cfg).total -
                           total_energy(enc, d, xm, &xc, cfg).total) /
                          (2 * h);
        const double an = grad.data[i];
        worst_px = std::max(worst_px,
                            std::abs(fd - an) / std::max({1e-4, std::abs(fd), std::abs(an)}));
    }

    GeneratorT<double> g(GeneratorConfig{}, 15);
    const auto f = testutil::random_tensor<double>(1, 512, 2, 2, 16, -0.5, 0.5);
    EnergyConfigT<double> gcfg;
    gcfg.texture_layer = LayerId::relu3_1;
    gcfg.patch_k = 2;
    gcfg.patch_stride = 1;
    DiscriminatorConfig gdc;
    gdc.input_layer = LayerId::relu3_1;
    gdc.patch_k = 2;
    gdc.channels = 8;
    PatchDiscriminatorT<double> gd(gdc, 17);

    auto energy_of = [&]() {
        const ImageT<double> img(g.forward(f, Mode::Frozen));
        return static_cast<double>(total_energy(enc, gd, img, nullptr, gcfg).total);
    };
    {
        const ImageT<double> img(g.forward(f, Mode::Frozen));
        const auto [ge, dpix] = total_energy_with_grad(enc, gd, img, nullptr, gcfg,
                                                       FoldMode::Adjoint);
        (void)ge;
        g.zero_grad();
        g.backward(dpix);
    }
    auto params = g.net().params();
    double worst_theta = 0;
    for (int t = 0; t < 10; ++t) {
        auto& blk = params[rng.index(params.size())];
        const size_t j = rng.index(blk.value->size());
        const double orig = (*blk.value)[j];
        const double hp = 1e-4 * (1.0 + std::abs(orig));
        (*blk.value)[j] = orig + hp;
        const double ep = energy_of();
        (*blk.value)[j] = orig - hp;
        const double em = energy_of();
        (*blk.value)[j] = orig;
        const double fd = (ep - em) / (2 * hp);
        const double an = (*blk.grad)[j];
        worst_theta = std::max(worst_theta,
                               std::abs(fd - an) / std::max({1e-4, std::abs(fd), std::abs(an)}));
    }

    const bool ok = worst_px < 1e-3 && worst_theta < 1e-3;
    return {ok, "max rel err " + fmt(worst_px) + " over 100 pixel coords, " + fmt(worst_theta) +
                    " over 10 generator parameters (tol 1e-3)"};
}

// C3: fold/extract adjointness and normalized-fold reconstruction vs.
// brute-force window enumeration, over 50 random configurations.
Outcome c3() {
    Rng rng(21);
    double worst_adj = 0, worst_rec = 0;
    for (int t = 0; t < 50; ++t) {
        const int h = 3 + static_cast<int>(rng.index(10));
        const int w = 3 + static_cast<int>(rng.index(10));
        const int c = 1 + static_cast<int>(rng.index(4));
        const int k = 1 + static_cast<int>(rng.index(static_cast<size_t>(std::min(h, w))));
        const int stride = 1 + static_cast<int>(rng.index(3));

        TensorT<double> fm(1, c, h, w);
        fill_uniform(fm, rng, -2.0, 2.0);
        const auto ps = extract_patches(fm, k, stride);

        std::vector<std::pair<int, int>> oracle;
        for (int y = 0; y + k <= h; y += stride)
            for (int x = 0; x + k <= w; x += stride) oracle.emplace_back(y, x);
        if (oracle != ps.origins)
            return {false, "window enumeration mismatch at trial " + std::to_string(t)};
        for (size_t p = 0; p < oracle.size(); ++p)
            for (int cc = 0; cc < c; ++cc)
                for (int y = 0; y < k; ++y)
                    for (int x = 0; x < k; ++x)
                        if (ps.patches.at(static_cast<int>(p), cc, y, x) !=
                            fm.at(0, cc, oracle[p].first + y, oracle[p].second + x))
                            return {false, "patch content mismatch at trial " + std::to_string(t)};

        TensorT<double> G(ps.patches.n, ps.patches.c, ps.patches.h, ps.patches.w);
        fill_uniform(G, rng, -1.0, 1.0);
        TensorT<double> X(1, c, h, w);
        fill_uniform(X, rng, -1.0, 1.0);
        const double lhs = testutil::dot(extract_patches(X, k, stride).patches, G);
        const double rhs = testutil::dot(X, fold_patch_gradients(G, ps.origins, h, w, false));
        worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));

        const auto rec = fold_patch_gradients(ps.patches, ps.origins, h, w, true);
        TensorT<double> ones(ps.patches.n, ps.patches.c, ps.patches.h, ps.patches.w);
        ones.fill(1.0);
        const auto cover = fold_patch_gradients(ones, ps.origins, h, w, false);
        for (size_t i = 0; i < rec.size(); ++i)
            if (cover.data[i] > 0)
                worst_rec = std::max(worst_rec, std::abs(rec.data[i] - fm.data[i]));
    }
    const bool ok = worst_adj < 1e-10 && worst_rec < 1e-10;
    return {ok, "50 random configs: adjointness err " + fmt(worst_adj) +
                    ", normalized-fold reconstruction err " + fmt(worst_rec)};
}

// C4: unguided 64x64 deconvolution makes progress: the texture term of the
// final image is below that of the initial image on at least 9/10 seeds, and
// the discriminator separates real from fake after 100 steps. The energy is
// parameterized by the adversary, so both images are scored under one fixed
// discriminator — the final one, which was trained to reject exactly the
// final image's patches and is therefore the harshest available judge.
Outcome c4() {
    const auto enc = EncoderModelT<float>::tiny(0x7E57);
    int dropped = 0, gap_positive = 0;
    for (int s = 0; s < 10; ++s) {
        NoiseSpec nz;
        nz.kind = NoiseKind::Perlin;
        nz.height = nz.width = 64;
        nz.cell = 16;
        nz.octaves = 3;
        nz.seed = 4000 + static_cast<uint64_t>(s);
        const Image x_t = generate_noise<float>(nz);

        MDANConfig cfg;
        cfg.patch_k = 4;
        cfg.stride = 4;
        cfg.d_channels = 8;
        cfg.lr = 2.0f;  // pixel side must move at a pace comparable to the adversary's
        cfg.seed = 4100 + static_cast<uint64_t>(s);
        auto st = init_state(enc, x_t, nullptr, cfg);
        const Image x0 = st.x;
        float gap100 = 0;
        for (int i = 0; i < 200; ++i) {
            step(st, enc, x_t, nullptr);
            if (i == 99) gap100 = score_gap(st, enc, x_t);
        }
        const float e_init = total_energy(enc, st.d, x0, nullptr, cfg.energy()).texture;
        const float e_final = total_energy(enc, st.d, st.x, nullptr, cfg.energy()).texture;
        if (e_final < e_init) ++dropped;
        if (gap100 > 0) ++gap_positive;
    }
    const bool ok = dropped >= 9 && gap_positive >= 9;
    return {ok, "200 unguided iterations at 64x64: texture energy below the initial image's "
                "(both under the final discriminator) on " + std::to_string(dropped) +
                "/10 seeds, positive real-fake score gap after 100 steps on " +
                std::to_string(gap_positive) + "/10"};
}

// C5: a discriminator trained while stylizing photo one starts with a hinge
// loss on photo two no worse than a freshly initialized one.
Outcome c5() {
    const auto enc = EncoderModelT<float>::tiny(0x7E57);
    NoiseSpec nz;
    nz.kind = NoiseKind::Perlin;
    nz.height = nz.width = 48;
    nz.cell = 12;
    nz.octaves = 3;
    nz.seed = 500;
    const Image x_t = generate_noise<float>(nz);
    nz.seed = 501;
    const Image photo1 = generate_noise<float>(nz);
    nz.seed = 502;
    const Image photo2 = generate_noise<float>(nz);

    MDANConfig cfg;
    cfg.patch_k = 4;
    cfg.stride = 2;
    cfg.d_channels = 8;
    cfg.seed = 9;
    auto st = init_state(enc, x_t, &photo1, cfg);
    for (int i = 0; i < 60; ++i) step(st, enc, x_t, &photo1);

    PatchDiscriminatorT<float> fresh(cfg.discriminator(), mix_seed(cfg.seed, 0xDUL));
    const float reused = measure_d_loss(enc, st.d, x_t, photo2, cfg);
    const float random_init = measure_d_loss(enc, fresh, x_t, photo2, cfg);
    return {reused <= random_init, "initial hinge on the second photo: warm-started " +
                                       fmt(reused) + " vs freshly initialized " +
                                       fmt(random_init)};
}

// C6: a generator trained only on 128x128 pairs decodes larger inputs,
// with output dims exactly 8*floor(input/8).
Outcome c6() {
    const auto enc = EncoderModelT<float>::tiny(0x7E57);
    std::vector<StylePair> corpus;
    for (int i = 0; i < 2; ++i)
        corpus.push_back({testutil::random_image<float>(128, 128, 6000 + 2 * i),
                          testutil::random_image<float>(128, 128, 6001 + 2 * i)});
    MGANConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 2;
    cfg.patch_k = 4;
    cfg.patch_stride = 4;
    cfg.seed = 61;
    GeneratorT<float> g(GeneratorConfig{}, 62);
    DiscriminatorConfig dc;
    dc.input_layer = cfg.patch_layer;
    dc.patch_k = cfg.patch_k;
    dc.channels = 16;
    PatchDiscriminatorT<float> d(dc, 63);
    train(enc, g, d, corpus, cfg);

    const auto a = decode(enc, g, testutil::random_image<float>(256, 256, 64));
    const auto b = decode(enc, g, testutil::random_image<float>(384, 256, 65));
    const auto c = decode(enc, g, testutil::random_image<float>(250, 190, 66));
    const bool ok = a.height() == 256 && a.width() == 256 && b.height() == 384 &&
                    b.width() == 256 && c.height() == 248 && c.width() == 184;
    return {ok, "trained at 128x128 only; decoded 256x256 -> " + std::to_string(a.height()) +
                    "x" + std::to_string(a.width()) + ", 384x256 -> " + std::to_string(b.height()) +
                    "x" + std::to_string(b.width()) + ", 250x190 -> " + std::to_string(c.height()) +
                    "x" + std::to_string(c.width())};
}

// C7: with equal generator-update budgets on one corpus, the pixel-MSE
// baseline wins on pixel MSE while the adversarial generator wins on hinge
// texture loss under the trained discriminator.
Outcome c7() {
    const auto enc = EncoderModelT<float>::tiny(0x7E57);
    std::vector<StylePair> corpus;
    for (int i = 0; i < 8; ++i) {
        NoiseSpec ph;
        ph.kind = NoiseKind::Perlin;
        ph.height = ph.width = 32;
        ph.cell = 8;
        ph.octaves = 2;
        ph.seed = 700 + static_cast<uint64_t>(i);
        NoiseSpec tg;
        tg.kind = NoiseKind::Brown;
        tg.height = tg.width = 32;
        tg.seed = 720 + static_cast<uint64_t>(i);
        corpus.push_back({generate_noise<float>(ph), generate_noise<float>(tg)});
    }

    MGANConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 4;
    cfg.patch_k = 4;
    cfg.patch_stride = 4;
    cfg.seed = 71;
    GeneratorT<float> g_adv(GeneratorConfig{}, 72);
    GeneratorT<float> g_vae(GeneratorConfig{}, 72);  // identical initialization
    DiscriminatorConfig dc;
    dc.input_layer = cfg.patch_layer;
    dc.patch_k = cfg.patch_k;
    dc.channels = 16;
    PatchDiscriminatorT<float> d(dc, 73);

    const auto adv_log = train(enc, g_adv, d, corpus, cfg);
    const auto vae_log = train_vae_baseline(enc, g_vae, corpus, VAEMode::Pixel, cfg);

    double mse_adv = 0, mse_vae = 0, hinge_adv = 0, hinge_vae = 0;
    auto patch_hinge = [&](const Image& img) {
        const auto fm = enc.encode(img, cfg.patch_layer);
        const auto ps = extract_patches(fm, cfg.patch_k, cfg.patch_stride);
        return static_cast<double>(hinge_texture_loss<float>(d.score(ps.patches, Mode::Frozen)));
    };
    for (const auto& p : corpus) {
        const Image o_adv = decode(enc, g_adv, p.photo);
        const Image o_vae = decode(enc, g_vae, p.photo);
        mse_adv += image_mse(o_adv, p.target);
        mse_vae += image_mse(o_vae, p.target);
        hinge_adv += patch_hinge(o_adv);
        hinge_vae += patch_hinge(o_vae);
    }
    const double n = static_cast<double>(corpus.size());
    mse_adv /= n, mse_vae /= n, hinge_adv /= n, hinge_vae /= n;

    const bool ok = adv_log.g_updates == vae_log.g_updates && mse_vae < mse_adv &&
                    hinge_adv < hinge_vae;
    return {ok, "after " + std::to_string(adv_log.g_updates) +
                    " generator updates each: pixel mse baseline " + fmt(mse_vae) +
                    " < adversarial " + fmt(mse_adv) + "; hinge texture loss adversarial " +
                    fmt(hinge_adv) + " < baseline " + fmt(hinge_vae)};
}

// C8: decode wall time scales about linearly with pixel count.
Outcome c8() {
    const auto enc = EncoderModelT<float>::tiny(0x7E57);
    GeneratorT<float> g(GeneratorConfig{}, 81);
    std::vector<BenchmarkRecord> recs;
    std::ostringstream times;
    for (int s : {128, 256, 512}) {
        Rng rng(mix_seed(80, static_cast<uint64_t>(s)));
        const Image input = random_uniform_image<float>(s, s, rng);
        const double ms = median_wall_ms([&]() { (void)decode(enc, g, input); }, 5);
        recs.push_back({static_cast<long>(s) * s, 5, ms, "cpu"});
        times << s << "px:" << fmt(ms) << "ms ";
    }
    const double exponent = scaling_exponent(recs);
    const bool ok = exponent >= 0.7 && exponent <= 1.3;
    return {ok, "scaling exponent " + fmt(exponent) + " (target [0.7,1.3]) from " + times.str() +
                    "- reference GPU anchors 10/40/160 ms at 256/512/1024 px recorded, "
                    "not asserted"};
}

// C9: bitwise checkpoint round-trips for every model type, and deterministic
// corpus manifests under a fixed seed.
Outcome c9() {
    testutil::TempDir td("acceptance-persist");
    bool ok = true;
    {
        auto enc = EncoderModelT<float>::tiny(0x7E57);
        enc.save(td.path() / "e1.ckpt");
        EncoderModelT<float>::load(td.path() / "e1.ckpt").save(td.path() / "e2.ckpt");
        ok &= testutil::bitwise_equal(td.path() / "e1.ckpt", td.path() / "e2.ckpt");
    }
    {
        GeneratorT<float> g(GeneratorConfig{}, 91);
        g.save(td.path() / "g1.ckpt");
        GeneratorT<float>::load(td.path() / "g1.ckpt").save(td.path() / "g2.ckpt");
        ok &= testutil::bitwise_equal(td.path() / "g1.ckpt", td.path() / "g2.ckpt");
        ok &= testutil::bitwise_equal(td.path() / "g1.ckpt.json", td.path() / "g2.ckpt.json");
    }
    {
        DiscriminatorConfig dc;
        dc.channels = 16;
        dc.depth = 2;
        PatchDiscriminatorT<float> d(dc, 92);
        d.save(td.path() / "d1.ckpt");
        PatchDiscriminatorT<float>::load(td.path() / "d1.ckpt").save(td.path() / "d2.ckpt");
        ok &= testutil::bitwise_equal(td.path() / "d1.ckpt", td.path() / "d2.ckpt");
    }
    {
        std::vector<StylePair> pairs;
        for (int i = 0; i < 3; ++i)
            pairs.push_back({testutil::random_image<float>(16, 16, 900 + 2 * i),
                             testutil::random_image<float>(16, 16, 901 + 2 * i)});
        CorpusSpec spec;
        spec.seed = 42;
        save_corpus(pairs, td.path() / "corpusA", spec);
        save_corpus(pairs, td.path() / "corpusB", spec);
        ok &= testutil::bitwise_equal(td.path() / "corpusA" / "manifest.json",
                                      td.path() / "corpusB" / "manifest.json");
    }
    return {ok, "bitwise round-trips for encoder, generator, and discriminator checkpoints; "
                "identical corpus manifests for a fixed seed"};
}

// C10: crop and pair counts match brute-force enumeration; the reference
// corpus-size figure is treated as order-of-magnitude guidance only.
Outcome c10() {
    bool ok = true;
    struct Case {
        int H, W, size, stride;
    };
    for (const Case& cs : {Case{384, 256, 128, 64}, Case{128, 128, 128, 64},
                           Case{48, 48, 24, 24}, Case{100, 70, 32, 16}}) {
        size_t brute = 0;
        for (int y = 0; y + cs.size <= cs.H; y += cs.stride)
            for (int x = 0; x + cs.size <= cs.W; x += cs.stride) ++brute;
        const size_t formula = (static_cast<size_t>((cs.H - cs.size) / cs.stride) + 1) *
                               (static_cast<size_t>((cs.W - cs.size) / cs.stride) + 1);
        ok &= crop_origins(cs.H, cs.W, cs.size, cs.stride).size() == brute;
        ok &= brute == formula;
    }

    const auto enc = EncoderModelT<float>::tiny(0x7E57);
    std::vector<Image> photos = {testutil::random_image<float>(48, 48, 101),
                                 testutil::random_image<float>(48, 48, 102)};
    NoiseSpec nz;
    nz.kind = NoiseKind::Perlin;
    nz.height = nz.width = 24;
    nz.cell = 8;
    nz.octaves = 2;
    nz.seed = 103;
    const Image x_t = generate_noise<float>(nz);
    MDANConfig mcfg;
    mcfg.patch_k = 2;
    mcfg.stride = 2;
    mcfg.d_channels = 4;
    mcfg.iterations = 1;
    mcfg.seed = 104;
    CorpusSpec spec;
    spec.max_dim = 48;
    spec.augment_copies = 2;
    spec.crop_size = 24;
    spec.crop_stride = 24;
    spec.seed = 105;

    size_t expected = 0;
    for (const auto& ph : photos)
        for (const auto& variant : augment(ph, spec.augment_copies, spec.seed)) {
            if (variant.height() < spec.crop_size || variant.width() < spec.crop_size) continue;
            for (int y = 0; y + spec.crop_size <= variant.height(); y += spec.crop_stride)
                for (int x = 0; x + spec.crop_size <= variant.width(); x += spec.crop_stride)
                    ++expected;
        }
    const auto pairs = build_style_corpus(enc, photos, x_t, mcfg, spec);
    ok &= pairs.size() == expected;

    return {ok, "crop origins match enumeration on 4 sizes; corpus build produced " +
                    std::to_string(pairs.size()) + " pairs vs " + std::to_string(expected) +
                    " enumerated; the reference figure of 24506 training examples is treated "
                    "as order-of-magnitude guidance (its crop stride is unpublished)"};
}

}  // namespace

int main() {
    std::cout << "acceptance criteria for the adversarial texture synthesis stack\n";
    run_criterion("C1", 1.0, c1);
    run_criterion("C2", 120.0, c2);
    run_criterion("C3", 60.0, c3);
    run_criterion("C4", 600.0, c4);
    run_criterion("C5", 600.0, c5);
    run_criterion("C6", 0.0, c6);
    run_criterion("C7", 1800.0, c7);
    run_criterion("C8", 0.0, c8);
    run_criterion("C9", 0.0, c9);
    run_criterion("C10", 0.0, c10);
    std::cout << "criteria passed: " << (10 - g_failures) << "/10\n";
    return g_failures == 0 ? 0 : 1;
}
