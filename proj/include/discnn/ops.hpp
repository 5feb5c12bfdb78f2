#pragma once

#include <cstdint>
#include <vector>

#include "discnn/tensor.hpp"

namespace discnn::num {

// -------------------------------------------------------------------------
// 2-D convolution, 3x3 kernels only, stride 1.
// input [N,C,H,W], weight [O,C,3,3], bias [O] -> output [N,O,H+2p-2,W+2p-2].
// Zero padding outside bounds.
// -------------------------------------------------------------------------

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const std::vector<double>& bias,
                      int padding = 1, int stride = 1);

struct Conv2dGrads {
    Tensor grad_input;
    Tensor grad_weight;
    std::vector<double> grad_bias;
};

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight,
                            int padding = 1, int stride = 1);

// -------------------------------------------------------------------------
// 2x2 max pooling, stride 2. H and W must be even. Ties break to the first
// position in row-major scan order. argmax holds the flat index of the
// winning input element per output cell, for the backward scatter.
// -------------------------------------------------------------------------

struct MaxPoolResult {
    Tensor output;
    std::vector<std::int32_t> argmax;
};

MaxPoolResult maxpool2x2_forward(const Tensor& input);
Tensor maxpool2x2_backward(const Tensor& grad_out, const std::vector<std::int32_t>& argmax,
                           const std::vector<int>& input_shape);

// -------------------------------------------------------------------------
// Batch normalization over N,H,W per channel.
// -------------------------------------------------------------------------

enum class BnMode { Train, Eval };

struct BatchNormState {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double epsilon = 1e-5;
    BnMode mode = BnMode::Train;

    static BatchNormState make(int channels, double momentum = 0.1, double epsilon = 1e-5);
    int channels() const { return static_cast<int>(gamma.size()); }
    void validate() const;
};

// Saved forward context for the backward pass. xhat is the normalized
// pre-affine activation; inv_std is 1/sqrt(var+eps) per channel.
struct BnContext {
    Tensor xhat;
    std::vector<double> inv_std;
    BnMode mode = BnMode::Train;
};

// Train mode normalizes with batch statistics (biased variance) and updates
// running stats: running <- (1-momentum)*running + momentum*batch, where the
// running variance uses the unbiased estimate. Eval mode uses running stats
// only and is deterministic per sample. Train mode requires N*H*W >= 2.
Tensor batchnorm2d(const Tensor& input, BatchNormState& state, BnContext* ctx = nullptr);

struct BnGrads {
    Tensor grad_input;
    std::vector<double> grad_gamma;
    std::vector<double> grad_beta;
};

BnGrads batchnorm2d_backward(const Tensor& grad_out, const BatchNormState& state, const BnContext& ctx);

// -------------------------------------------------------------------------
// ReLU. Derivative at exactly 0 is taken as 0.
// -------------------------------------------------------------------------

Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& grad_out, const Tensor& input);

// -------------------------------------------------------------------------
// Fully connected: input [N,I], weight [O,I], bias [O] -> [N,O].
// -------------------------------------------------------------------------

Tensor linear_forward(const Tensor& input, const Tensor& weight, const std::vector<double>& bias);

struct LinearGrads {
    Tensor grad_input;
    Tensor grad_weight;
    std::vector<double> grad_bias;
};

LinearGrads linear_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight);

// -------------------------------------------------------------------------
// Softmax + cross entropy over logits [N,K] with integer class labels.
// Loss is the mean negative log-likelihood; grad_logits = (softmax - onehot)/N.
// -------------------------------------------------------------------------

struct SoftmaxXentResult {
    double loss = 0.0;
    Tensor grad_logits;
    std::vector<int> predictions;  // per-row argmax, first index on ties
};

SoftmaxXentResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace discnn::num
