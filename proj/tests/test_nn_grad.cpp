#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include "helpers.hpp"
#include "mtx/discriminator.hpp"
#include "mtx/generator.hpp"
#include "mtx/nn.hpp"

using namespace mtx;
using testutil::random_tensor;

namespace {

// Projection loss L = <f(x), R> so every output element contributes.
double project(const TensorT<double>& y, const TensorT<double>& r) {
    return testutil::dot(y, r);
}

// Central finite difference through an arbitrary scalar functional, compared
// elementwise against the analytic gradient at a strided coordinate sample.
void check_grad(const std::function<double(const std::vector<double>&)>& f,
                std::vector<double> x, const std::vector<double>& analytic, size_t stride_hint,
                double h = 1e-6, double tol = 1e-6) {
    REQUIRE(x.size() == analytic.size());
    for (size_t i = 0; i < x.size(); i += stride_hint) {
        const double keep = x[i];
        x[i] = keep + h;
        const double fp = f(x);
        x[i] = keep - h;
        const double fm = f(x);
        x[i] = keep;
        const double fd = (fp - fm) / (2 * h);
        CHECK(analytic[i] == Catch::Approx(fd).margin(tol).epsilon(1e-5));
    }
}

}  // namespace

TEST_CASE("conv2d gradients match finite differences") {
    const int stride = 1, pad = 1, k = 3;
    auto x = random_tensor<double>(2, 2, 5, 5, 1);
    auto w = random_tensor<double>(3, 2, k, k, 2);
    std::vector<double> b = {0.1, -0.2, 0.3};
    auto y0 = conv2d_forward(x, w, b, stride, pad);
    auto r = random_tensor<double>(y0.n, y0.c, y0.h, y0.w, 3);

    auto dx = conv2d_backward_data(r, w, stride, pad, x.h, x.w);
    TensorT<double> dw(w.n, w.c, k, k, 0.0);
    std::vector<double> db(b.size(), 0.0);
    conv2d_backward_param(r, x, k, stride, pad, dw, db);

    check_grad(
        [&](const std::vector<double>& v) {
            auto xt = x;
            xt.data = v;
            return project(conv2d_forward(xt, w, b, stride, pad), r);
        },
        x.data, dx.data, 7);
    check_grad(
        [&](const std::vector<double>& v) {
            auto wt = w;
            wt.data = v;
            return project(conv2d_forward(x, wt, b, stride, pad), r);
        },
        w.data, dw.data, 5);
    check_grad(
        [&](const std::vector<double>& v) {
            return project(conv2d_forward(x, w, v, stride, pad), r);
        },
        b, db, 1);
}

TEST_CASE("strided conv2d gradients match finite differences") {
    const int stride = 2, pad = 1, k = 4;
    auto x = random_tensor<double>(1, 3, 8, 8, 4);
    auto w = random_tensor<double>(2, 3, k, k, 5);
    std::vector<double> b = {0.0, 0.5};
    auto y0 = conv2d_forward(x, w, b, stride, pad);
    REQUIRE(y0.h == 4);
    auto r = random_tensor<double>(y0.n, y0.c, y0.h, y0.w, 6);

    auto dx = conv2d_backward_data(r, w, stride, pad, x.h, x.w);
    TensorT<double> dw(w.n, w.c, k, k, 0.0);
    std::vector<double> db(b.size(), 0.0);
    conv2d_backward_param(r, x, k, stride, pad, dw, db);

    check_grad(
        [&](const std::vector<double>& v) {
            auto xt = x;
            xt.data = v;
            return project(conv2d_forward(xt, w, b, stride, pad), r);
        },
        x.data, dx.data, 11);
    check_grad(
        [&](const std::vector<double>& v) {
            auto wt = w;
            wt.data = v;
            return project(conv2d_forward(x, wt, b, stride, pad), r);
        },
        w.data, dw.data, 9);
}

TEST_CASE("transposed conv gradients match finite differences") {
    const int stride = 2, pad = 1, k = 4;
    auto x = random_tensor<double>(2, 3, 4, 4, 7);
    auto w = random_tensor<double>(3, 2, k, k, 8);  // (IC, OC, k, k)
    std::vector<double> b = {0.2, -0.1};
    auto y0 = convtr2d_forward(x, w, b, stride, pad);
    REQUIRE(y0.h == 8);  // (4-1)*2 - 2 + 4
    REQUIRE(y0.c == 2);
    auto r = random_tensor<double>(y0.n, y0.c, y0.h, y0.w, 9);

    auto dx = convtr2d_backward_data(r, w, stride, pad, x.h, x.w);
    TensorT<double> dw(w.n, w.c, k, k, 0.0);
    std::vector<double> db(b.size(), 0.0);
    convtr2d_backward_param(r, x, k, stride, pad, dw, db);

    check_grad(
        [&](const std::vector<double>& v) {
            auto xt = x;
            xt.data = v;
            return project(convtr2d_forward(xt, w, b, stride, pad), r);
        },
        x.data, dx.data, 7);
    check_grad(
        [&](const std::vector<double>& v) {
            auto wt = w;
            wt.data = v;
            return project(convtr2d_forward(x, wt, b, stride, pad), r);
        },
        w.data, dw.data, 13);
    check_grad(
        [&](const std::vector<double>& v) {
            return project(convtr2d_forward(x, w, v, stride, pad), r);
        },
        b, db, 1);
}

TEST_CASE("maxpool routes gradients to the argmax") {
    auto x = random_tensor<double>(1, 2, 6, 6, 10);
    std::vector<int64_t> argmax;
    auto y0 = maxpool2_forward(x, &argmax);
    REQUIRE(y0.h == 3);
    auto r = random_tensor<double>(y0.n, y0.c, y0.h, y0.w, 11);
    auto dx = maxpool2_backward(r, argmax, x.n, x.c, x.h, x.w);

    check_grad(
        [&](const std::vector<double>& v) {
            auto xt = x;
            xt.data = v;
            return project(maxpool2_forward(xt, nullptr), r);
        },
        x.data, dx.data, 5);
}

TEST_CASE("batchnorm training-mode gradient matches finite differences") {
    Rng rng(12);
    BatchNorm2dT<double> bn("bn", 3, rng);
    auto x = random_tensor<double>(2, 3, 3, 3, 13);
    auto y0 = bn.forward(x, Mode::Frozen);
    auto r = random_tensor<double>(y0.n, y0.c, y0.h, y0.w, 14);
    auto dx = bn.backward(r);

    check_grad(
        [&](const std::vector<double>& v) {
            auto xt = x;
            xt.data = v;
            return project(bn.forward(xt, Mode::Frozen), r);
        },
        x.data, dx.data, 3, 1e-6, 1e-5);

    // gamma/beta grads accumulated by that backward call.
    auto params = bn.params();
    for (auto& p : params) {
        const std::vector<double> analytic = *p.grad;
        const std::vector<double> original = *p.value;
        check_grad(
            [&](const std::vector<double>& v) {
                *p.value = v;
                auto out = project(bn.forward(x, Mode::Frozen), r);
                return out;
            },
            *p.value, analytic, 1, 1e-6, 1e-5);
        *p.value = original;
    }
}

TEST_CASE("batchnorm backward without a cached forward is an error") {
    Rng rng(15);
    BatchNorm2dT<double> bn("bn", 2, rng);
    TensorT<double> dy(1, 2, 2, 2, 1.0);
    CHECK_THROWS_AS(bn.backward(dy), Error);
    // Eval mode must not populate the cache either.
    auto x = random_tensor<double>(1, 2, 2, 2, 16);
    bn.forward(x, Mode::Eval);
    CHECK_THROWS_AS(bn.backward(dy), Error);
}

TEST_CASE("batchnorm running statistics update only in train mode") {
    Rng rng(17);
    BatchNorm2dT<double> bn("bn", 2, rng);
    auto x = random_tensor<double>(2, 2, 4, 4, 18, -3.0, 3.0);

    auto before = bn.buffers();
    std::vector<double> mean0 = *before[0].value, var0 = *before[1].value;

    bn.forward(x, Mode::Frozen);
    CHECK(*bn.buffers()[0].value == mean0);
    CHECK(*bn.buffers()[1].value == var0);

    bn.forward(x, Mode::Train);
    CHECK(*bn.buffers()[0].value != mean0);
    CHECK(*bn.buffers()[1].value != var0);
}

TEST_CASE("activation gradients match finite differences") {
    auto x = random_tensor<double>(1, 2, 4, 4, 19, -2.0, 2.0);
    auto r = random_tensor<double>(1, 2, 4, 4, 20);

    SECTION("leaky relu") {
        LeakyReLUT<double> act("l", 0.2);
        act.forward(x, Mode::Frozen);
        auto dx = act.backward(r);
        check_grad(
            [&](const std::vector<double>& v) {
                auto xt = x;
                xt.data = v;
                return project(act.forward(xt, Mode::Frozen), r);
            },
            x.data, dx.data, 3);
    }
    SECTION("relu") {
        ReLUT<double> act("r");
        act.forward(x, Mode::Frozen);
        auto dx = act.backward(r);
        check_grad(
            [&](const std::vector<double>& v) {
                auto xt = x;
                xt.data = v;
                return project(act.forward(xt, Mode::Frozen), r);
            },
            x.data, dx.data, 3);
    }
    SECTION("tanh") {
        TanhT<double> act("t");
        act.forward(x, Mode::Frozen);
        auto dx = act.backward(r);
        check_grad(
            [&](const std::vector<double>& v) {
                auto xt = x;
                xt.data = v;
                return project(act.forward(xt, Mode::Frozen), r);
            },
            x.data, dx.data, 3);
    }
}

TEST_CASE("discriminator patch gradient matches finite differences") {
    DiscriminatorConfig cfg;
    cfg.input_layer = LayerId::relu2_1;  // 128 input channels keeps this quick
    cfg.patch_k = 3;
    cfg.channels = 8;
    PatchDiscriminatorT<double> d(cfg, 21);

    auto patches = random_tensor<double>(4, 128, 3, 3, 22);
    auto s0 = d.score(patches, Mode::Frozen);
    std::vector<double> rs(s0.size());
    Rng rng(23);
    for (auto& v : rs) v = rng.uniform(-1, 1);
    auto dpatches = d.backward_scores(rs);

    check_grad(
        [&](const std::vector<double>& v) {
            auto pt = patches;
            pt.data = v;
            const auto s = d.score(pt, Mode::Frozen);
            double l = 0;
            for (size_t i = 0; i < s.size(); ++i) l += s[i] * rs[i];
            return l;
        },
        patches.data, dpatches.data, 101, 1e-6, 1e-5);
}

TEST_CASE("generator parameter gradients match finite differences") {
    GeneratorT<double> g(GeneratorConfig{}, 24);
    auto f = random_tensor<double>(1, 512, 2, 2, 25, -0.5, 0.5);
    auto y0 = g.forward(f, Mode::Frozen);
    REQUIRE(y0.h == 16);
    auto r = random_tensor<double>(y0.n, y0.c, y0.h, y0.w, 26);

    g.zero_grad();
    g.forward(f, Mode::Frozen);
    g.backward(r);

    // Spot-check a handful of coordinates in every parameter block.
    auto params = g.net().params();
    Rng rng(27);
    for (auto& p : params) {
        for (int probe = 0; probe < 2; ++probe) {
            const size_t i = rng.index(p.value->size());
            const double keep = (*p.value)[i];
            const double h = 1e-6;
            (*p.value)[i] = keep + h;
            const double fp = project(g.forward(f, Mode::Frozen), r);
            (*p.value)[i] = keep - h;
            const double fm = project(g.forward(f, Mode::Frozen), r);
            (*p.value)[i] = keep;
            const double fd = (fp - fm) / (2 * h);
            CHECK((*p.grad)[i] == Catch::Approx(fd).margin(1e-4).epsilon(1e-4));
        }
    }
}

TEST_CASE("adam converges on a quadratic") {
    std::vector<double> x = {5.0, -3.0};
    std::vector<double> g(2, 0.0);
    AdamT<double> opt(AdamConfigT<double>{0.1, 0.9, 0.999, 1e-8});
    for (int i = 0; i < 500; ++i) {
        g[0] = 2 * x[0];
        g[1] = 2 * x[1];
        opt.step({{"x", &x, &g}});
    }
    CHECK(std::abs(x[0]) < 1e-2);
    CHECK(std::abs(x[1]) < 1e-2);
    CHECK(opt.step_count() == 500);
}
