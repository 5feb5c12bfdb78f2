#include "discnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace discnn::num {

namespace {

void check_rank4(const Tensor& t, const char* what) {
    if (t.rank() != 4) {
        throw ShapeError(std::string(what) + ": expected rank-4 tensor, got shape " + shape_str(t.shape()));
    }
}

}  // namespace

// ---------------------------------------------------------------- conv2d --

namespace {

void conv2d_check(const Tensor& input, const Tensor& weight, std::size_t bias_size, int padding, int stride) {
    check_rank4(input, "conv2d");
    check_rank4(weight, "conv2d weight");
    if (weight.dim(2) != 3 || weight.dim(3) != 3) {
        throw ShapeError("conv2d: only 3x3 kernels are supported, weight spatial axes (2,3) are " +
                         std::to_string(weight.dim(2)) + "x" + std::to_string(weight.dim(3)));
    }
    if (input.dim(1) != weight.dim(1)) {
        throw ShapeError("conv2d: input channel axis (dim 1) is " + std::to_string(input.dim(1)) +
                         " but weight expects " + std::to_string(weight.dim(1)));
    }
    if (bias_size != static_cast<std::size_t>(weight.dim(0))) {
        throw ShapeError("conv2d: bias length " + std::to_string(bias_size) + " does not match output channels " +
                         std::to_string(weight.dim(0)));
    }
    if (stride != 1) throw ConfigError("conv2d: stride " + std::to_string(stride) + " not supported (stride must be 1)");
    if (padding < 0) throw ConfigError("conv2d: padding must be non-negative");
    if (input.dim(2) + 2 * padding < 3 || input.dim(3) + 2 * padding < 3) {
        throw ShapeError("conv2d: spatial size " + std::to_string(input.dim(2)) + "x" + std::to_string(input.dim(3)) +
                         " with padding " + std::to_string(padding) + " is smaller than the 3x3 kernel");
    }
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const std::vector<double>& bias,
                      int padding, int stride) {
    conv2d_check(input, weight, bias.size(), padding, stride);
    const int n_batch = input.dim(0), channels = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int out_ch = weight.dim(0);
    const int oh = h + 2 * padding - 2, ow = w + 2 * padding - 2;

    Tensor output({n_batch, out_ch, oh, ow});
    const double* in = input.data();
    const double* wt = weight.data();
    double* out = output.values.data();

    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;

    parallel_for(static_cast<std::int64_t>(n_batch) * out_ch, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t job = lo; job < hi; ++job) {
            const int n = static_cast<int>(job / out_ch);
            const int o = static_cast<int>(job % out_ch);
            double* out_base = out + (static_cast<std::size_t>(n) * out_ch + o) * out_plane;
            std::fill(out_base, out_base + out_plane, bias[static_cast<std::size_t>(o)]);
            for (int c = 0; c < channels; ++c) {
                const double* in_base = in + (static_cast<std::size_t>(n) * channels + c) * in_plane;
                const double* w_base = wt + (static_cast<std::size_t>(o) * channels + c) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    const int y0 = std::max(0, padding - ky);
                    const int y1 = std::min(oh, h + padding - ky);
                    for (int kx = 0; kx < 3; ++kx) {
                        const double wv = w_base[ky * 3 + kx];
                        const int x0 = std::max(0, padding - kx);
                        const int x1 = std::min(ow, w + padding - kx);
                        if (wv == 0.0 || x0 >= x1) continue;
                        for (int y = y0; y < y1; ++y) {
                            double* out_row = out_base + static_cast<std::size_t>(y) * ow;
                            const double* in_row =
                                in_base + static_cast<std::size_t>(y + ky - padding) * w + (kx - padding);
                            for (int x = x0; x < x1; ++x) out_row[x] += wv * in_row[x];
                        }
                    }
                }
            }
        }
    });
    return output;
}

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight,
                            int padding, int stride) {
    conv2d_check(input, weight, static_cast<std::size_t>(weight.dim(0)), padding, stride);
    check_rank4(grad_out, "conv2d grad_out");
    const int n_batch = input.dim(0), channels = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int out_ch = weight.dim(0);
    const int oh = h + 2 * padding - 2, ow = w + 2 * padding - 2;
    if (grad_out.dim(0) != n_batch || grad_out.dim(1) != out_ch || grad_out.dim(2) != oh || grad_out.dim(3) != ow) {
        throw ShapeError("conv2d backward: grad_out shape " + shape_str(grad_out.shape()) +
                         " does not match forward output (" + std::to_string(n_batch) + "," +
                         std::to_string(out_ch) + "," + std::to_string(oh) + "," + std::to_string(ow) + ")");
    }

    Conv2dGrads grads;
    grads.grad_input = Tensor(input.shape());
    grads.grad_weight = Tensor(weight.shape());
    grads.grad_bias.assign(static_cast<std::size_t>(out_ch), 0.0);

    const double* gout = grad_out.data();
    const double* in = input.data();
    const double* wt = weight.data();
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;

    // grad_bias and grad_weight: each output channel owned by one worker;
    // the batch reduction order inside stays fixed.
    parallel_for(out_ch, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t o = lo; o < hi; ++o) {
            double bsum = 0.0;
            for (int n = 0; n < n_batch; ++n) {
                const double* g_base = gout + (static_cast<std::size_t>(n) * out_ch + o) * out_plane;
                for (std::size_t i = 0; i < out_plane; ++i) bsum += g_base[i];
            }
            grads.grad_bias[static_cast<std::size_t>(o)] = bsum;

            for (int c = 0; c < channels; ++c) {
                double* gw_base = grads.grad_weight.values.data() + (static_cast<std::size_t>(o) * channels + c) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    const int y0 = std::max(0, padding - ky);
                    const int y1 = std::min(oh, h + padding - ky);
                    for (int kx = 0; kx < 3; ++kx) {
                        const int x0 = std::max(0, padding - kx);
                        const int x1 = std::min(ow, w + padding - kx);
                        if (x0 >= x1 || y0 >= y1) continue;
                        double acc = 0.0;
                        for (int n = 0; n < n_batch; ++n) {
                            const double* g_base = gout + (static_cast<std::size_t>(n) * out_ch + o) * out_plane;
                            const double* in_base = in + (static_cast<std::size_t>(n) * channels + c) * in_plane;
                            for (int y = y0; y < y1; ++y) {
                                const double* g_row = g_base + static_cast<std::size_t>(y) * ow;
                                const double* in_row =
                                    in_base + static_cast<std::size_t>(y + ky - padding) * w + (kx - padding);
                                double row_acc = 0.0;
                                for (int x = x0; x < x1; ++x) row_acc += g_row[x] * in_row[x];
                                acc += row_acc;
                            }
                        }
                        gw_base[ky * 3 + kx] = acc;
                    }
                }
            }
        }
    });

    // grad_input: each (n, c) plane owned by one worker.
    parallel_for(static_cast<std::int64_t>(n_batch) * channels, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t job = lo; job < hi; ++job) {
            const int n = static_cast<int>(job / channels);
            const int c = static_cast<int>(job % channels);
            double* gi_base = grads.grad_input.values.data() + (static_cast<std::size_t>(n) * channels + c) * in_plane;
            for (int o = 0; o < out_ch; ++o) {
                const double* g_base = gout + (static_cast<std::size_t>(n) * out_ch + o) * out_plane;
                const double* w_base = wt + (static_cast<std::size_t>(o) * channels + c) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    const int y0 = std::max(0, padding - ky);
                    const int y1 = std::min(oh, h + padding - ky);
                    for (int kx = 0; kx < 3; ++kx) {
                        const double wv = w_base[ky * 3 + kx];
                        const int x0 = std::max(0, padding - kx);
                        const int x1 = std::min(ow, w + padding - kx);
                        if (wv == 0.0 || x0 >= x1) continue;
                        for (int y = y0; y < y1; ++y) {
                            const double* g_row = g_base + static_cast<std::size_t>(y) * ow;
                            double* gi_row =
                                gi_base + static_cast<std::size_t>(y + ky - padding) * w + (kx - padding);
                            for (int x = x0; x < x1; ++x) gi_row[x] += wv * g_row[x];
                        }
                    }
                }
            }
        }
    });

    return grads;
}

// -------------------------------------------------------------- max pool --

MaxPoolResult maxpool2x2_forward(const Tensor& input) {
    check_rank4(input, "maxpool2x2");
    const int n_batch = input.dim(0), channels = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (h % 2 != 0 || w % 2 != 0) {
        throw ShapeError("maxpool2x2: spatial axes (2,3) must be even, got " + std::to_string(h) + "x" +
                         std::to_string(w));
    }
    if (input.size() > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
        throw ShapeError("maxpool2x2: tensor too large for 32-bit argmax indices");
    }
    const int oh = h / 2, ow = w / 2;
    MaxPoolResult result;
    result.output = Tensor({n_batch, channels, oh, ow});
    result.argmax.assign(result.output.size(), 0);

    const double* in = input.data();
    double* out = result.output.values.data();
    std::int32_t* arg = result.argmax.data();
    const std::size_t planes = static_cast<std::size_t>(n_batch) * channels;
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;

    parallel_for(static_cast<std::int64_t>(planes), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t p = lo; p < hi; ++p) {
            const double* in_base = in + static_cast<std::size_t>(p) * in_plane;
            double* out_base = out + static_cast<std::size_t>(p) * out_plane;
            std::int32_t* arg_base = arg + static_cast<std::size_t>(p) * out_plane;
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x) {
                    const std::size_t i00 = static_cast<std::size_t>(2 * y) * w + 2 * x;
                    std::size_t best = i00;
                    double best_v = in_base[i00];
                    const std::size_t cands[3] = {i00 + 1, i00 + w, i00 + w + 1};
                    for (std::size_t cand : cands) {
                        if (in_base[cand] > best_v) {  // strict: first position wins ties
                            best_v = in_base[cand];
                            best = cand;
                        }
                    }
                    out_base[static_cast<std::size_t>(y) * ow + x] = best_v;
                    arg_base[static_cast<std::size_t>(y) * ow + x] =
                        static_cast<std::int32_t>(static_cast<std::size_t>(p) * in_plane + best);
                }
            }
        }
    });
    return result;
}

Tensor maxpool2x2_backward(const Tensor& grad_out, const std::vector<std::int32_t>& argmax,
                           const std::vector<int>& input_shape) {
    if (grad_out.size() != argmax.size()) {
        throw ShapeError("maxpool2x2 backward: grad_out size " + std::to_string(grad_out.size()) +
                         " does not match saved argmax size " + std::to_string(argmax.size()));
    }
    Tensor grad_input(input_shape);
    const double* g = grad_out.data();
    double* gi = grad_input.values.data();
    for (std::size_t i = 0; i < argmax.size(); ++i) gi[argmax[i]] += g[i];
    return grad_input;
}

// ------------------------------------------------------------- batchnorm --

BatchNormState BatchNormState::make(int channels, double momentum, double epsilon) {
    if (channels <= 0) throw ConfigError("batchnorm: channel count must be positive");
    BatchNormState s;
    s.gamma.assign(static_cast<std::size_t>(channels), 1.0);
    s.beta.assign(static_cast<std::size_t>(channels), 0.0);
    s.running_mean.assign(static_cast<std::size_t>(channels), 0.0);
    s.running_var.assign(static_cast<std::size_t>(channels), 1.0);
    s.momentum = momentum;
    s.epsilon = epsilon;
    return s;
}

void BatchNormState::validate() const {
    const std::size_t c = gamma.size();
    if (c == 0 || beta.size() != c || running_mean.size() != c || running_var.size() != c) {
        throw ShapeError("batchnorm: gamma/beta/running stats must all have the channel length");
    }
    if (!(momentum > 0.0 && momentum < 1.0)) throw ConfigError("batchnorm: momentum must be in (0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("batchnorm: epsilon must be positive");
    for (double v : running_var) {
        if (v < 0.0) throw DataError("batchnorm: running_var has a negative entry");
    }
}

Tensor batchnorm2d(const Tensor& input, BatchNormState& state, BnContext* ctx) {
    check_rank4(input, "batchnorm2d");
    state.validate();
    const int n_batch = input.dim(0), channels = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (channels != state.channels()) {
        throw ShapeError("batchnorm2d: input channel axis (dim 1) is " + std::to_string(channels) +
                         " but state has " + std::to_string(state.channels()) + " channels");
    }
    const std::size_t spatial = static_cast<std::size_t>(h) * w;
    const std::size_t m = static_cast<std::size_t>(n_batch) * spatial;
    const bool train = state.mode == BnMode::Train;
    if (train && m < 2) {
        throw ShapeError("batchnorm2d: degenerate batch, train mode needs batch*spatial size >= 2 (got 1)");
    }

    Tensor output(input.shape());
    Tensor xhat_store;
    const bool save = ctx != nullptr;
    if (save) xhat_store = Tensor(input.shape());
    std::vector<double> inv_std(static_cast<std::size_t>(channels), 0.0);

    const double* in = input.data();
    double* out = output.values.data();
    double* xh = save ? xhat_store.values.data() : nullptr;
    const std::size_t ch_stride = static_cast<std::size_t>(channels) * spatial;

    parallel_for(channels, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t c = lo; c < hi; ++c) {
            double mean, var;
            if (train) {
                double sum = 0.0;
                for (int n = 0; n < n_batch; ++n) {
                    const double* p = in + static_cast<std::size_t>(n) * ch_stride + static_cast<std::size_t>(c) * spatial;
                    for (std::size_t i = 0; i < spatial; ++i) sum += p[i];
                }
                mean = sum / static_cast<double>(m);
                double sq = 0.0;
                for (int n = 0; n < n_batch; ++n) {
                    const double* p = in + static_cast<std::size_t>(n) * ch_stride + static_cast<std::size_t>(c) * spatial;
                    for (std::size_t i = 0; i < spatial; ++i) {
                        const double d = p[i] - mean;
                        sq += d * d;
                    }
                }
                var = sq / static_cast<double>(m);  // biased, used for normalization
                const double unbiased = sq / static_cast<double>(m - 1);
                state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean;
                state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] + state.momentum * unbiased;
            } else {
                mean = state.running_mean[c];
                var = state.running_var[c];
            }
            const double istd = 1.0 / std::sqrt(var + state.epsilon);
            inv_std[static_cast<std::size_t>(c)] = istd;
            const double g = state.gamma[static_cast<std::size_t>(c)];
            const double b = state.beta[static_cast<std::size_t>(c)];
            for (int n = 0; n < n_batch; ++n) {
                const std::size_t base = static_cast<std::size_t>(n) * ch_stride + static_cast<std::size_t>(c) * spatial;
                for (std::size_t i = 0; i < spatial; ++i) {
                    const double normalized = (in[base + i] - mean) * istd;
                    if (xh) xh[base + i] = normalized;
                    out[base + i] = g * normalized + b;
                }
            }
        }
    });

    if (ctx) {
        ctx->xhat = std::move(xhat_store);
        ctx->inv_std = std::move(inv_std);
        ctx->mode = state.mode;
    }
    return output;
}

BnGrads batchnorm2d_backward(const Tensor& grad_out, const BatchNormState& state, const BnContext& ctx) {
    check_rank4(grad_out, "batchnorm2d backward");
    if (!grad_out.same_shape(ctx.xhat)) {
        throw ShapeError("batchnorm2d backward: grad_out shape " + shape_str(grad_out.shape()) +
                         " does not match saved context shape " + shape_str(ctx.xhat.shape()));
    }
    const int n_batch = grad_out.dim(0), channels = grad_out.dim(1), h = grad_out.dim(2), w = grad_out.dim(3);
    const std::size_t spatial = static_cast<std::size_t>(h) * w;
    const std::size_t m = static_cast<std::size_t>(n_batch) * spatial;
    const std::size_t ch_stride = static_cast<std::size_t>(channels) * spatial;

    BnGrads grads;
    grads.grad_input = Tensor(grad_out.shape());
    grads.grad_gamma.assign(static_cast<std::size_t>(channels), 0.0);
    grads.grad_beta.assign(static_cast<std::size_t>(channels), 0.0);

    const double* g = grad_out.data();
    const double* xh = ctx.xhat.data();
    double* gi = grads.grad_input.values.data();

    parallel_for(channels, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t c = lo; c < hi; ++c) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (int n = 0; n < n_batch; ++n) {
                const std::size_t base = static_cast<std::size_t>(n) * ch_stride + static_cast<std::size_t>(c) * spatial;
                for (std::size_t i = 0; i < spatial; ++i) {
                    sum_g += g[base + i];
                    sum_gx += g[base + i] * xh[base + i];
                }
            }
            grads.grad_beta[static_cast<std::size_t>(c)] = sum_g;
            grads.grad_gamma[static_cast<std::size_t>(c)] = sum_gx;

            const double gamma_istd = state.gamma[static_cast<std::size_t>(c)] * ctx.inv_std[static_cast<std::size_t>(c)];
            if (ctx.mode == BnMode::Train) {
                const double mean_g = sum_g / static_cast<double>(m);
                const double mean_gx = sum_gx / static_cast<double>(m);
                for (int n = 0; n < n_batch; ++n) {
                    const std::size_t base =
                        static_cast<std::size_t>(n) * ch_stride + static_cast<std::size_t>(c) * spatial;
                    for (std::size_t i = 0; i < spatial; ++i) {
                        gi[base + i] = gamma_istd * (g[base + i] - mean_g - xh[base + i] * mean_gx);
                    }
                }
            } else {
                for (int n = 0; n < n_batch; ++n) {
                    const std::size_t base =
                        static_cast<std::size_t>(n) * ch_stride + static_cast<std::size_t>(c) * spatial;
                    for (std::size_t i = 0; i < spatial; ++i) gi[base + i] = gamma_istd * g[base + i];
                }
            }
        }
    });
    return grads;
}

// ------------------------------------------------------------------ relu --

Tensor relu(const Tensor& input) {
    Tensor out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) out.values[i] = input.values[i] > 0.0 ? input.values[i] : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& input) {
    if (!grad_out.same_shape(input)) {
        throw ShapeError("relu backward: grad_out shape " + shape_str(grad_out.shape()) +
                         " does not match input shape " + shape_str(input.shape()));
    }
    Tensor gi(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) gi.values[i] = input.values[i] > 0.0 ? grad_out.values[i] : 0.0;
    return gi;
}

// ---------------------------------------------------------------- linear --

namespace {

void linear_check(const Tensor& input, const Tensor& weight, std::size_t bias_size) {
    if (input.rank() != 2) {
        throw ShapeError("linear: expected rank-2 input [batch, features], got " + shape_str(input.shape()));
    }
    if (weight.rank() != 2) {
        throw ShapeError("linear: expected rank-2 weight [out, in], got " + shape_str(weight.shape()));
    }
    if (input.dim(1) != weight.dim(1)) {
        throw ShapeError("linear: input feature axis (dim 1) is " + std::to_string(input.dim(1)) +
                         " but weight expects " + std::to_string(weight.dim(1)));
    }
    if (bias_size != static_cast<std::size_t>(weight.dim(0))) {
        throw ShapeError("linear: bias length " + std::to_string(bias_size) + " does not match output features " +
                         std::to_string(weight.dim(0)));
    }
}

}  // namespace

Tensor linear_forward(const Tensor& input, const Tensor& weight, const std::vector<double>& bias) {
    linear_check(input, weight, bias.size());
    const int n_batch = input.dim(0), in_f = input.dim(1), out_f = weight.dim(0);
    Tensor out({n_batch, out_f});
    const double* in = input.data();
    const double* wt = weight.data();
    double* o = out.values.data();

    parallel_for(n_batch, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t n = lo; n < hi; ++n) {
            const double* in_row = in + static_cast<std::size_t>(n) * in_f;
            double* out_row = o + static_cast<std::size_t>(n) * out_f;
            for (int j = 0; j < out_f; ++j) {
                const double* w_row = wt + static_cast<std::size_t>(j) * in_f;
                double acc = bias[static_cast<std::size_t>(j)];
                for (int i = 0; i < in_f; ++i) acc += in_row[i] * w_row[i];
                out_row[j] = acc;
            }
        }
    });
    return out;
}

LinearGrads linear_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight) {
    linear_check(input, weight, static_cast<std::size_t>(weight.dim(0)));
    const int n_batch = input.dim(0), in_f = input.dim(1), out_f = weight.dim(0);
    if (grad_out.rank() != 2 || grad_out.dim(0) != n_batch || grad_out.dim(1) != out_f) {
        throw ShapeError("linear backward: grad_out shape " + shape_str(grad_out.shape()) + " does not match (" +
                         std::to_string(n_batch) + "," + std::to_string(out_f) + ")");
    }

    LinearGrads grads;
    grads.grad_input = Tensor({n_batch, in_f});
    grads.grad_weight = Tensor({out_f, in_f});
    grads.grad_bias.assign(static_cast<std::size_t>(out_f), 0.0);

    const double* g = grad_out.data();
    const double* in = input.data();
    const double* wt = weight.data();

    parallel_for(n_batch, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t n = lo; n < hi; ++n) {
            const double* g_row = g + static_cast<std::size_t>(n) * out_f;
            double* gi_row = grads.grad_input.values.data() + static_cast<std::size_t>(n) * in_f;
            for (int j = 0; j < out_f; ++j) {
                const double gv = g_row[j];
                if (gv == 0.0) continue;
                const double* w_row = wt + static_cast<std::size_t>(j) * in_f;
                for (int i = 0; i < in_f; ++i) gi_row[i] += gv * w_row[i];
            }
        }
    });

    parallel_for(out_f, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t j = lo; j < hi; ++j) {
            double* gw_row = grads.grad_weight.values.data() + static_cast<std::size_t>(j) * in_f;
            double bsum = 0.0;
            for (int n = 0; n < n_batch; ++n) {
                const double gv = g[static_cast<std::size_t>(n) * out_f + static_cast<std::size_t>(j)];
                bsum += gv;
                if (gv == 0.0) continue;
                const double* in_row = in + static_cast<std::size_t>(n) * in_f;
                for (int i = 0; i < in_f; ++i) gw_row[i] += gv * in_row[i];
            }
            grads.grad_bias[static_cast<std::size_t>(j)] = bsum;
        }
    });
    return grads;
}

// --------------------------------------------------- softmax cross entropy --

SoftmaxXentResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) {
        throw ShapeError("softmax_cross_entropy: expected rank-2 logits [batch, classes], got " +
                         shape_str(logits.shape()));
    }
    const int n_batch = logits.dim(0), k = logits.dim(1);
    if (labels.size() != static_cast<std::size_t>(n_batch)) {
        throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                         std::to_string(n_batch));
    }

    SoftmaxXentResult result;
    result.grad_logits = Tensor(logits.shape());
    result.predictions.assign(static_cast<std::size_t>(n_batch), 0);

    const double* lg = logits.data();
    double* grad = result.grad_logits.values.data();
    double loss_sum = 0.0;

    for (int n = 0; n < n_batch; ++n) {
        const int label = labels[static_cast<std::size_t>(n)];
        if (label < 0 || label >= k) {
            throw DataError("softmax_cross_entropy: label " + std::to_string(label) + " at row " + std::to_string(n) +
                            " outside [0," + std::to_string(k) + ")");
        }
        const double* row = lg + static_cast<std::size_t>(n) * k;
        double max_v = row[0];
        int arg = 0;
        for (int j = 1; j < k; ++j) {
            if (row[j] > max_v) {
                max_v = row[j];
                arg = j;
            }
        }
        result.predictions[static_cast<std::size_t>(n)] = arg;
        double denom = 0.0;
        for (int j = 0; j < k; ++j) denom += std::exp(row[j] - max_v);
        const double log_denom = std::log(denom);
        loss_sum += log_denom - (row[label] - max_v);
        double* g_row = grad + static_cast<std::size_t>(n) * k;
        for (int j = 0; j < k; ++j) {
            const double p = std::exp(row[j] - max_v) / denom;
            g_row[j] = (p - (j == label ? 1.0 : 0.0)) / static_cast<double>(n_batch);
        }
    }
    result.loss = loss_sum / static_cast<double>(n_batch);
    return result;
}

}  // namespace discnn::num
