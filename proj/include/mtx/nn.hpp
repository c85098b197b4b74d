#pragma once

#include <cblas.h>

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mtx/tensor.hpp"

// Minimal CPU conv-net machinery: im2col/col2im convolutions backed by BLAS
// GEMM, a handful of layer classes with explicit forward/backward, and ADAM.
// Everything is templated on the scalar type so gradient checks can run the
// same code in double precision.

namespace mtx {

template <typename T>
inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
                 const T* b, int ldb, T beta, T* c, int ldc) {
    if constexpr (std::is_same_v<T, float>) {
        cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                    trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c,
                    ldc);
    } else {
        cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                    trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c,
                    ldc);
    }
}

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// x: one sample (C,H,W) -> cols (C*k*k, Ho*Wo). Out-of-bounds taps read as zero.
template <typename T>
void im2col(const T* x, int C, int H, int W, int k, int stride, int pad, T* cols) {
    const int Ho = conv_out_dim(H, k, stride, pad);
    const int Wo = conv_out_dim(W, k, stride, pad);
    const int span = Ho * Wo;
    for (int c = 0; c < C; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                T* row = cols + (static_cast<size_t>(c) * k * k + ki * k + kj) * span;
                for (int ho = 0; ho < Ho; ++ho) {
                    const int iy = ho * stride - pad + ki;
                    if (iy < 0 || iy >= H) {
                        std::fill(row + ho * Wo, row + (ho + 1) * Wo, T(0));
                        continue;
                    }
                    const T* src = x + (static_cast<size_t>(c) * H + iy) * W;
                    for (int wo = 0; wo < Wo; ++wo) {
                        const int ix = wo * stride - pad + kj;
                        row[ho * Wo + wo] = (ix >= 0 && ix < W) ? src[ix] : T(0);
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-adds cols back into the (C,H,W) image.
template <typename T>
void col2im(const T* cols, int C, int H, int W, int k, int stride, int pad, T* x) {
    const int Ho = conv_out_dim(H, k, stride, pad);
    const int Wo = conv_out_dim(W, k, stride, pad);
    const int span = Ho * Wo;
    for (int c = 0; c < C; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                const T* row = cols + (static_cast<size_t>(c) * k * k + ki * k + kj) * span;
                for (int ho = 0; ho < Ho; ++ho) {
                    const int iy = ho * stride - pad + ki;
                    if (iy < 0 || iy >= H) continue;
                    T* dst = x + (static_cast<size_t>(c) * H + iy) * W;
                    for (int wo = 0; wo < Wo; ++wo) {
                        const int ix = wo * stride - pad + kj;
                        if (ix >= 0 && ix < W) dst[ix] += row[ho * Wo + wo];
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Stateless conv primitives. w: (OC, IC, k, k); bias may be empty.
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& x, const TensorT<T>& w, const std::vector<T>& b,
                          int stride, int pad) {
    if (x.c != w.c)
        throw Error("shape-mismatch", "conv input channels " + std::to_string(x.c) +
                                          " vs weight " + std::to_string(w.c));
    const int k = w.h;
    const int Ho = conv_out_dim(x.h, k, stride, pad);
    const int Wo = conv_out_dim(x.w, k, stride, pad);
    if (Ho < 1 || Wo < 1)
        throw Error("image-too-small", "conv output would be empty for input " + x.shape_str());
    TensorT<T> y(x.n, w.n, Ho, Wo);
    const int ckk = x.c * k * k;
    std::vector<T> cols(static_cast<size_t>(ckk) * Ho * Wo);
    for (int in = 0; in < x.n; ++in) {
        im2col(x.sample(in), x.c, x.h, x.w, k, stride, pad, cols.data());
        gemm<T>(false, false, w.n, Ho * Wo, ckk, T(1), w.data.data(), ckk, cols.data(), Ho * Wo,
                T(0), y.sample(in), Ho * Wo);
        if (!b.empty()) {
            for (int oc = 0; oc < w.n; ++oc) {
                T* plane = y.sample(in) + static_cast<size_t>(oc) * Ho * Wo;
                for (int i = 0; i < Ho * Wo; ++i) plane[i] += b[oc];
            }
        }
    }
    return y;
}

template <typename T>
TensorT<T> conv2d_backward_data(const TensorT<T>& dy, const TensorT<T>& w, int stride, int pad,
                                int in_h, int in_w) {
    const int k = w.h;
    const int ckk = w.c * k * k;
    TensorT<T> dx(dy.n, w.c, in_h, in_w);
    std::vector<T> cols(static_cast<size_t>(ckk) * dy.h * dy.w);
    for (int in = 0; in < dy.n; ++in) {
        gemm<T>(true, false, ckk, dy.h * dy.w, w.n, T(1), w.data.data(), ckk, dy.sample(in),
                dy.h * dy.w, T(0), cols.data(), dy.h * dy.w);
        col2im(cols.data(), w.c, in_h, in_w, k, stride, pad, dx.sample(in));
    }
    return dx;
}

template <typename T>
void conv2d_backward_param(const TensorT<T>& dy, const TensorT<T>& x, int k, int stride, int pad,
                           TensorT<T>& dw, std::vector<T>& db) {
    const int ckk = x.c * k * k;
    std::vector<T> cols(static_cast<size_t>(ckk) * dy.h * dy.w);
    for (int in = 0; in < x.n; ++in) {
        im2col(x.sample(in), x.c, x.h, x.w, k, stride, pad, cols.data());
        gemm<T>(false, true, dy.c, ckk, dy.h * dy.w, T(1), dy.sample(in), dy.h * dy.w, cols.data(),
                dy.h * dy.w, T(1), dw.data.data(), ckk);
        if (!db.empty()) {
            for (int oc = 0; oc < dy.c; ++oc) {
                const T* plane = dy.sample(in) + static_cast<size_t>(oc) * dy.h * dy.w;
                T s = 0;
                for (int i = 0; i < dy.h * dy.w; ++i) s += plane[i];
                db[oc] += s;
            }
        }
    }
}

// Fractional-stride ("transposed") convolution. w: (IC, OC, k, k).
// Output spatial dims: (in-1)*stride - 2*pad + k.

template <typename T>
TensorT<T> convtr2d_forward(const TensorT<T>& x, const TensorT<T>& w, const std::vector<T>& b,
                            int stride, int pad) {
    if (x.c != w.n)
        throw Error("shape-mismatch", "convtr input channels " + std::to_string(x.c) +
                                          " vs weight " + std::to_string(w.n));
    const int k = w.h;
    const int OC = w.c;
    const int Ho = (x.h - 1) * stride - 2 * pad + k;
    const int Wo = (x.w - 1) * stride - 2 * pad + k;
    const int ockk = OC * k * k;
    TensorT<T> y(x.n, OC, Ho, Wo);
    std::vector<T> cols(static_cast<size_t>(ockk) * x.h * x.w);
    for (int in = 0; in < x.n; ++in) {
        gemm<T>(true, false, ockk, x.h * x.w, x.c, T(1), w.data.data(), ockk, x.sample(in),
                x.h * x.w, T(0), cols.data(), x.h * x.w);
        col2im(cols.data(), OC, Ho, Wo, k, stride, pad, y.sample(in));
        if (!b.empty()) {
            for (int oc = 0; oc < OC; ++oc) {
                T* plane = y.sample(in) + static_cast<size_t>(oc) * Ho * Wo;
                for (int i = 0; i < Ho * Wo; ++i) plane[i] += b[oc];
            }
        }
    }
    return y;
}

template <typename T>
TensorT<T> convtr2d_backward_data(const TensorT<T>& dy, const TensorT<T>& w, int stride, int pad,
                                  int in_h, int in_w) {
    const int k = w.h;
    const int ockk = w.c * k * k;
    TensorT<T> dx(dy.n, w.n, in_h, in_w);
    std::vector<T> cols(static_cast<size_t>(ockk) * in_h * in_w);
    for (int in = 0; in < dy.n; ++in) {
        im2col(dy.sample(in), w.c, dy.h, dy.w, k, stride, pad, cols.data());
        gemm<T>(false, false, w.n, in_h * in_w, ockk, T(1), w.data.data(), ockk, cols.data(),
                in_h * in_w, T(0), dx.sample(in), in_h * in_w);
    }
    return dx;
}

template <typename T>
void convtr2d_backward_param(const TensorT<T>& dy, const TensorT<T>& x, int k, int stride, int pad,
                             TensorT<T>& dw, std::vector<T>& db) {
    const int ockk = dy.c * k * k;
    std::vector<T> cols(static_cast<size_t>(ockk) * x.h * x.w);
    for (int in = 0; in < x.n; ++in) {
        im2col(dy.sample(in), dy.c, dy.h, dy.w, k, stride, pad, cols.data());
        gemm<T>(false, true, x.c, ockk, x.h * x.w, T(1), x.sample(in), x.h * x.w, cols.data(),
                x.h * x.w, T(1), dw.data.data(), ockk);
        if (!db.empty()) {
            for (int oc = 0; oc < dy.c; ++oc) {
                const T* plane = dy.sample(in) + static_cast<size_t>(oc) * dy.h * dy.w;
                T s = 0;
                for (int i = 0; i < dy.h * dy.w; ++i) s += plane[i];
                db[oc] += s;
            }
        }
    }
}

// 2x2/2 max pooling with floor semantics; ties resolve to the first element
// scanned so backward routing is deterministic.
template <typename T>
TensorT<T> maxpool2_forward(const TensorT<T>& x, std::vector<int64_t>* argmax) {
    const int Ho = x.h / 2, Wo = x.w / 2;
    if (Ho < 1 || Wo < 1)
        throw Error("image-too-small", "maxpool input " + x.shape_str());
    TensorT<T> y(x.n, x.c, Ho, Wo);
    if (argmax) argmax->assign(y.size(), 0);
    size_t oi = 0;
    for (int in = 0; in < x.n; ++in) {
        for (int c = 0; c < x.c; ++c) {
            for (int ho = 0; ho < Ho; ++ho) {
                for (int wo = 0; wo < Wo; ++wo, ++oi) {
                    T best = x.at(in, c, 2 * ho, 2 * wo);
                    int bi = 2 * ho, bj = 2 * wo;
                    for (int di = 0; di < 2; ++di)
                        for (int dj = 0; dj < 2; ++dj) {
                            T v = x.at(in, c, 2 * ho + di, 2 * wo + dj);
                            if (v > best) {
                                best = v;
                                bi = 2 * ho + di;
                                bj = 2 * wo + dj;
                            }
                        }
                    y.data[oi] = best;
                    if (argmax)
                        (*argmax)[oi] =
                            ((static_cast<int64_t>(in) * x.c + c) * x.h + bi) * x.w + bj;
                }
            }
        }
    }
    return y;
}

template <typename T>
TensorT<T> maxpool2_backward(const TensorT<T>& dy, const std::vector<int64_t>& argmax, int in_n,
                             int in_c, int in_h, int in_w) {
    TensorT<T> dx(in_n, in_c, in_h, in_w);
    for (size_t i = 0; i < dy.size(); ++i) dx.data[argmax[i]] += dy.data[i];
    return dx;
}

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

// Train: caches for backward, uses batch statistics, updates running stats.
// Frozen: caches for backward, uses batch statistics, leaves running stats alone.
// Eval: no caches, uses running statistics (deterministic inference).
enum class Mode { Train, Frozen, Eval };

template <typename T>
struct ParamRefT {
    std::string name;
    std::vector<T>* value;
    std::vector<T>* grad;  // null for non-trainable buffers
};

template <typename T>
class LayerT {
public:
    explicit LayerT(std::string name) : name_(std::move(name)) {}
    virtual ~LayerT() = default;

    virtual TensorT<T> forward(const TensorT<T>& x, Mode mode) = 0;
    virtual TensorT<T> backward(const TensorT<T>& dy) = 0;
    virtual std::vector<ParamRefT<T>> params() { return {}; }
    virtual std::vector<ParamRefT<T>> buffers() { return {}; }
    virtual std::unique_ptr<LayerT<T>> clone() const = 0;

    const std::string& name() const { return name_; }

protected:
    std::string name_;
};

template <typename T>
class Conv2dT : public LayerT<T> {
public:
    Conv2dT(std::string name, int in_ch, int out_ch, int k, int stride, int pad, Rng& rng,
            T weight_std = T(0.02))
        : LayerT<T>(std::move(name)), k_(k), stride_(stride), pad_(pad), w_(out_ch, in_ch, k, k),
          dw_(out_ch, in_ch, k, k), b_(out_ch, T(0)), db_(out_ch, T(0)) {
        fill_normal(w_, rng, T(0), weight_std);
    }

    TensorT<T> forward(const TensorT<T>& x, Mode mode) override {
        if (mode != Mode::Eval) x_ = x;
        return conv2d_forward(x, w_, b_, stride_, pad_);
    }

    TensorT<T> backward(const TensorT<T>& dy) override {
        conv2d_backward_param(dy, x_, k_, stride_, pad_, dw_, db_);
        return conv2d_backward_data(dy, w_, stride_, pad_, x_.h, x_.w);
    }

    std::vector<ParamRefT<T>> params() override {
        return {{this->name_ + ".weight", &w_.data, &dw_.data},
                {this->name_ + ".bias", &b_, &db_}};
    }

    TensorT<T>& weight() { return w_; }
    std::vector<T>& bias() { return b_; }
    int kernel() const { return k_; }

    std::unique_ptr<LayerT<T>> clone() const override {
        return std::make_unique<Conv2dT<T>>(*this);
    }

private:
    int k_, stride_, pad_;
    TensorT<T> w_, dw_;
    std::vector<T> b_, db_;
    TensorT<T> x_;
};

template <typename T>
class ConvTranspose2dT : public LayerT<T> {
public:
    ConvTranspose2dT(std::string name, int in_ch, int out_ch, int k, int stride, int pad, Rng& rng,
                     T weight_std = T(0.02))
        : LayerT<T>(std::move(name)), k_(k), stride_(stride), pad_(pad), w_(in_ch, out_ch, k, k),
          dw_(in_ch, out_ch, k, k), b_(out_ch, T(0)), db_(out_ch, T(0)) {
        fill_normal(w_, rng, T(0), weight_std);
    }

    TensorT<T> forward(const TensorT<T>& x, Mode mode) override {
        if (mode != Mode::Eval) x_ = x;
        return convtr2d_forward(x, w_, b_, stride_, pad_);
    }

    TensorT<T> backward(const TensorT<T>& dy) override {
        convtr2d_backward_param(dy, x_, k_, stride_, pad_, dw_, db_);
        return convtr2d_backward_data(dy, w_, stride_, pad_, x_.h, x_.w);
    }

    std::vector<ParamRefT<T>> params() override {
        return {{this->name_ + ".weight", &w_.data, &dw_.data},
                {this->name_ + ".bias", &b_, &db_}};
    }

    std::unique_ptr<LayerT<T>> clone() const override {
        return std::make_unique<ConvTranspose2dT<T>>(*this);
    }

private:
    int k_, stride_, pad_;
    TensorT<T> w_, dw_;
    std::vector<T> b_, db_;
    TensorT<T> x_;
};

template <typename T>
class BatchNorm2dT : public LayerT<T> {
public:
    BatchNorm2dT(std::string name, int channels, Rng& rng, T momentum = T(0.1), T eps = T(1e-5))
        : LayerT<T>(std::move(name)), ch_(channels), momentum_(momentum), eps_(eps),
          gamma_(channels), beta_(channels, T(0)), dgamma_(channels, T(0)),
          dbeta_(channels, T(0)), run_mean_(channels, T(0)), run_var_(channels, T(1)) {
        for (auto& g : gamma_) g = static_cast<T>(rng.normal(1.0, 0.02));
    }

    TensorT<T> forward(const TensorT<T>& x, Mode mode) override {
        TensorT<T> y(x.n, x.c, x.h, x.w);
        const int m = x.n * x.h * x.w;
        if (mode == Mode::Eval) {
            for (int c = 0; c < ch_; ++c) {
                const T inv = T(1) / std::sqrt(run_var_[c] + eps_);
                apply_channel(x, y, c, run_mean_[c], inv);
            }
            return y;
        }
        x_ = x;
        mean_.assign(ch_, T(0));
        inv_std_.assign(ch_, T(0));
        xhat_ = TensorT<T>(x.n, x.c, x.h, x.w);
        for (int c = 0; c < ch_; ++c) {
            T mu = 0;
            for (int in = 0; in < x.n; ++in) {
                const T* p = plane(x, in, c);
                for (int i = 0; i < x.h * x.w; ++i) mu += p[i];
            }
            mu /= m;
            T var = 0;
            for (int in = 0; in < x.n; ++in) {
                const T* p = plane(x, in, c);
                for (int i = 0; i < x.h * x.w; ++i) var += (p[i] - mu) * (p[i] - mu);
            }
            var /= m;
            mean_[c] = mu;
            inv_std_[c] = T(1) / std::sqrt(var + eps_);
            for (int in = 0; in < x.n; ++in) {
                const T* p = plane(x, in, c);
                T* xh = plane(xhat_, in, c);
                T* py = plane(y, in, c);
                for (int i = 0; i < x.h * x.w; ++i) {
                    xh[i] = (p[i] - mu) * inv_std_[c];
                    py[i] = gamma_[c] * xh[i] + beta_[c];
                }
            }
            if (mode == Mode::Train) {
                const T unbiased = m > 1 ? var * T(m) / T(m - 1) : var;
                run_mean_[c] = (T(1) - momentum_) * run_mean_[c] + momentum_ * mu;
                run_var_[c] = (T(1) - momentum_) * run_var_[c] + momentum_ * unbiased;
            }
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) override {
        if (xhat_.size() == 0) throw Error("bad-state", "batchnorm backward without cached forward");
        const int m = dy.n * dy.h * dy.w;
        TensorT<T> dx(dy.n, dy.c, dy.h, dy.w);
        for (int c = 0; c < ch_; ++c) {
            T sum_dy = 0, sum_dy_xhat = 0;
            for (int in = 0; in < dy.n; ++in) {
                const T* pdy = plane(dy, in, c);
                const T* xh = plane(xhat_, in, c);
                for (int i = 0; i < dy.h * dy.w; ++i) {
                    sum_dy += pdy[i];
                    sum_dy_xhat += pdy[i] * xh[i];
                }
            }
            dgamma_[c] += sum_dy_xhat;
            dbeta_[c] += sum_dy;
            const T scale = gamma_[c] * inv_std_[c] / T(m);
            for (int in = 0; in < dy.n; ++in) {
                const T* pdy = plane(dy, in, c);
                const T* xh = plane(xhat_, in, c);
                T* pdx = plane(dx, in, c);
                for (int i = 0; i < dy.h * dy.w; ++i)
                    pdx[i] = scale * (T(m) * pdy[i] - sum_dy - xh[i] * sum_dy_xhat);
            }
        }
        return dx;
    }

    std::vector<ParamRefT<T>> params() override {
        return {{this->name_ + ".gamma", &gamma_, &dgamma_},
                {this->name_ + ".beta", &beta_, &dbeta_}};
    }
    std::vector<ParamRefT<T>> buffers() override {
        return {{this->name_ + ".running_mean", &run_mean_, nullptr},
                {this->name_ + ".running_var", &run_var_, nullptr}};
    }

    std::unique_ptr<LayerT<T>> clone() const override {
        return std::make_unique<BatchNorm2dT<T>>(*this);
    }

private:
    static T* plane(TensorT<T>& t, int in, int c) {
        return t.data.data() + (static_cast<size_t>(in) * t.c + c) * t.h * t.w;
    }
    static const T* plane(const TensorT<T>& t, int in, int c) {
        return t.data.data() + (static_cast<size_t>(in) * t.c + c) * t.h * t.w;
    }
    void apply_channel(const TensorT<T>& x, TensorT<T>& y, int c, T mu, T inv) const {
        for (int in = 0; in < x.n; ++in) {
            const T* p = plane(x, in, c);
            T* py = plane(y, in, c);
            for (int i = 0; i < x.h * x.w; ++i) py[i] = gamma_[c] * (p[i] - mu) * inv + beta_[c];
        }
    }

    int ch_;
    T momentum_, eps_;
    std::vector<T> gamma_, beta_, dgamma_, dbeta_, run_mean_, run_var_;
    std::vector<T> mean_, inv_std_;
    TensorT<T> x_, xhat_;
};

template <typename T>
class LeakyReLUT : public LayerT<T> {
public:
    LeakyReLUT(std::string name, T slope = T(0.2)) : LayerT<T>(std::move(name)), slope_(slope) {}

    TensorT<T> forward(const TensorT<T>& x, Mode mode) override {
        TensorT<T> y = x;
        for (auto& v : y.data) v = v > 0 ? v : slope_ * v;
        if (mode != Mode::Eval) x_ = x;
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) override {
        TensorT<T> dx = dy;
        for (size_t i = 0; i < dx.size(); ++i)
            if (x_.data[i] <= 0) dx.data[i] *= slope_;
        return dx;
    }

    std::unique_ptr<LayerT<T>> clone() const override {
        return std::make_unique<LeakyReLUT<T>>(*this);
    }

private:
    T slope_;
    TensorT<T> x_;
};

template <typename T>
class ReLUT : public LayerT<T> {
public:
    explicit ReLUT(std::string name) : LayerT<T>(std::move(name)) {}

    TensorT<T> forward(const TensorT<T>& x, Mode mode) override {
        TensorT<T> y = x;
        for (auto& v : y.data) v = v > 0 ? v : T(0);
        if (mode != Mode::Eval) x_ = x;
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) override {
        TensorT<T> dx = dy;
        for (size_t i = 0; i < dx.size(); ++i)
            if (x_.data[i] <= 0) dx.data[i] = T(0);
        return dx;
    }

    std::unique_ptr<LayerT<T>> clone() const override {
        return std::make_unique<ReLUT<T>>(*this);
    }

private:
    TensorT<T> x_;
};

template <typename T>
class TanhT : public LayerT<T> {
public:
    explicit TanhT(std::string name) : LayerT<T>(std::move(name)) {}

    TensorT<T> forward(const TensorT<T>& x, Mode mode) override {
        TensorT<T> y = x;
        for (auto& v : y.data) v = std::tanh(v);
        if (mode != Mode::Eval) y_ = y;
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) override {
        TensorT<T> dx = dy;
        for (size_t i = 0; i < dx.size(); ++i) dx.data[i] *= (T(1) - y_.data[i] * y_.data[i]);
        return dx;
    }

    std::unique_ptr<LayerT<T>> clone() const override {
        return std::make_unique<TanhT<T>>(*this);
    }

private:
    TensorT<T> y_;
};

template <typename T>
class NetT {
public:
    NetT() = default;
    NetT(NetT&&) noexcept = default;
    NetT& operator=(NetT&&) noexcept = default;
    NetT(const NetT& other) {
        layers_.reserve(other.layers_.size());
        for (const auto& l : other.layers_) layers_.push_back(l->clone());
    }
    NetT& operator=(const NetT& other) {
        if (this != &other) {
            NetT tmp(other);
            layers_ = std::move(tmp.layers_);
        }
        return *this;
    }

    void add(std::unique_ptr<LayerT<T>> layer) { layers_.push_back(std::move(layer)); }

    TensorT<T> forward(const TensorT<T>& x, Mode mode) {
        TensorT<T> cur = x;
        for (auto& l : layers_) cur = l->forward(cur, mode);
        return cur;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        TensorT<T> cur = dy;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
        return cur;
    }

    std::vector<ParamRefT<T>> params() {
        std::vector<ParamRefT<T>> out;
        for (auto& l : layers_)
            for (auto& p : l->params()) out.push_back(p);
        return out;
    }

    std::vector<ParamRefT<T>> buffers() {
        std::vector<ParamRefT<T>> out;
        for (auto& l : layers_)
            for (auto& p : l->buffers()) out.push_back(p);
        return out;
    }

    void zero_grad() {
        for (auto& p : params())
            if (p.grad) std::fill(p.grad->begin(), p.grad->end(), T(0));
    }

    size_t param_count() {
        size_t s = 0;
        for (auto& p : params()) s += p.value->size();
        return s;
    }

    bool params_finite() {
        for (auto& p : params())
            for (T v : *p.value)
                if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    size_t layer_count() const { return layers_.size(); }
    LayerT<T>& layer(size_t i) { return *layers_[i]; }

private:
    std::vector<std::unique_ptr<LayerT<T>>> layers_;
};

// ---------------------------------------------------------------------------
// ADAM
// ---------------------------------------------------------------------------

template <typename T>
struct AdamConfigT {
    T lr = T(0.02);
    T beta1 = T(0.5);
    T beta2 = T(0.999);
    T eps = T(1e-8);
};

template <typename T>
class AdamT {
public:
    AdamT() = default;
    explicit AdamT(AdamConfigT<T> cfg) : cfg_(cfg) {}

    // Applies one update using the grads currently stored in `ps`.
    void step(const std::vector<ParamRefT<T>>& ps) {
        if (m_.empty()) {
            for (auto& p : ps) {
                m_.emplace_back(p.value->size(), T(0));
                v_.emplace_back(p.value->size(), T(0));
            }
        }
        ++t_;
        const T bc1 = T(1) - std::pow(cfg_.beta1, static_cast<T>(t_));
        const T bc2 = T(1) - std::pow(cfg_.beta2, static_cast<T>(t_));
        for (size_t pi = 0; pi < ps.size(); ++pi) {
            auto& val = *ps[pi].value;
            auto& grd = *ps[pi].grad;
            auto& m = m_[pi];
            auto& v = v_[pi];
            for (size_t i = 0; i < val.size(); ++i) {
                m[i] = cfg_.beta1 * m[i] + (T(1) - cfg_.beta1) * grd[i];
                v[i] = cfg_.beta2 * v[i] + (T(1) - cfg_.beta2) * grd[i] * grd[i];
                const T mhat = m[i] / bc1;
                const T vhat = v[i] / bc2;
                val[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    long step_count() const { return t_; }
    const AdamConfigT<T>& config() const { return cfg_; }

private:
    AdamConfigT<T> cfg_;
    long t_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

}  // namespace mtx
