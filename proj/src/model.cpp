#include "discnn/model.hpp"

#include <cmath>
#include <cstring>

namespace discnn::models {

// ------------------------------------------------------------------ conv --

Conv3Layer::Conv3Layer(int in_channels, int out_channels)
    : weight({out_channels, in_channels, 3, 3}),
      bias(static_cast<std::size_t>(out_channels), 0.0),
      weight_grad(weight.size(), 0.0),
      bias_grad(bias.size(), 0.0) {}

num::Tensor Conv3Layer::forward(const num::Tensor& input, bool save_ctx) {
    num::Tensor out = num::conv2d_forward(input, weight, bias);
    if (save_ctx) {
        saved_input_ = input;
        has_ctx_ = true;
    }
    return out;
}

num::Tensor Conv3Layer::backward(const num::Tensor& grad_out) {
    if (!has_ctx_) throw ConfigError("conv3 backward called without a saved forward context");
    num::Conv2dGrads grads = num::conv2d_backward(grad_out, saved_input_, weight);
    for (std::size_t i = 0; i < weight_grad.size(); ++i) weight_grad[i] += grads.grad_weight.values[i];
    for (std::size_t i = 0; i < bias_grad.size(); ++i) bias_grad[i] += grads.grad_bias[i];
    saved_input_ = num::Tensor();
    has_ctx_ = false;
    return std::move(grads.grad_input);
}

void Conv3Layer::collect_params(int layer_index, std::vector<ParamRef>& out) {
    out.push_back({layer_index, "weight", &weight.values, &weight_grad, true, frozen});
    out.push_back({layer_index, "bias", &bias, &bias_grad, true, frozen});
}

// ------------------------------------------------------------- batchnorm --

BatchNormLayer::BatchNormLayer(int channels)
    : state(num::BatchNormState::make(channels)),
      gamma_grad(static_cast<std::size_t>(channels), 0.0),
      beta_grad(static_cast<std::size_t>(channels), 0.0) {}

num::Tensor BatchNormLayer::forward(const num::Tensor& input, bool save_ctx) {
    num::Tensor out = num::batchnorm2d(input, state, save_ctx ? &ctx_ : nullptr);
    has_ctx_ = save_ctx;
    return out;
}

num::Tensor BatchNormLayer::backward(const num::Tensor& grad_out) {
    if (!has_ctx_) throw ConfigError("batchnorm backward called without a saved forward context");
    num::BnGrads grads = num::batchnorm2d_backward(grad_out, state, ctx_);
    for (std::size_t i = 0; i < gamma_grad.size(); ++i) gamma_grad[i] += grads.grad_gamma[i];
    for (std::size_t i = 0; i < beta_grad.size(); ++i) beta_grad[i] += grads.grad_beta[i];
    ctx_ = num::BnContext();
    has_ctx_ = false;
    return std::move(grads.grad_input);
}

void BatchNormLayer::collect_params(int layer_index, std::vector<ParamRef>& out) {
    out.push_back({layer_index, "gamma", &state.gamma, &gamma_grad, true, frozen});
    out.push_back({layer_index, "beta", &state.beta, &beta_grad, true, frozen});
    out.push_back({layer_index, "running_mean", &state.running_mean, nullptr, false, frozen});
    out.push_back({layer_index, "running_var", &state.running_var, nullptr, false, frozen});
}

// ------------------------------------------------------------------ relu --

num::Tensor ReLULayer::forward(const num::Tensor& input, bool save_ctx) {
    num::Tensor out = num::relu(input);
    if (save_ctx) {
        mask_.resize(input.size());
        for (std::size_t i = 0; i < input.size(); ++i) mask_[i] = input.values[i] > 0.0 ? 1 : 0;
        saved_shape_ = input.shape();
    }
    return out;
}

num::Tensor ReLULayer::backward(const num::Tensor& grad_out) {
    if (mask_.size() != grad_out.size()) throw ConfigError("relu backward called without a saved forward context");
    num::Tensor gi(saved_shape_);
    for (std::size_t i = 0; i < mask_.size(); ++i) gi.values[i] = mask_[i] ? grad_out.values[i] : 0.0;
    mask_.clear();
    return gi;
}

// ------------------------------------------------------------------ pool --

num::Tensor MaxPool2Layer::forward(const num::Tensor& input, bool save_ctx) {
    num::MaxPoolResult result = num::maxpool2x2_forward(input);
    if (save_ctx) {
        argmax_ = std::move(result.argmax);
        input_shape_ = input.shape();
    }
    return std::move(result.output);
}

num::Tensor MaxPool2Layer::backward(const num::Tensor& grad_out) {
    if (argmax_.empty()) throw ConfigError("maxpool backward called without a saved forward context");
    num::Tensor gi = num::maxpool2x2_backward(grad_out, argmax_, input_shape_);
    argmax_.clear();
    return gi;
}

// --------------------------------------------------------------- flatten --

num::Tensor FlattenLayer::forward(const num::Tensor& input, bool save_ctx) {
    const int n = input.dim(0);
    const int features = static_cast<int>(input.size() / static_cast<std::size_t>(n));
    if (save_ctx) input_shape_ = input.shape();
    return input.reshaped({n, features});
}

num::Tensor FlattenLayer::backward(const num::Tensor& grad_out) {
    if (input_shape_.empty()) throw ConfigError("flatten backward called without a saved forward context");
    num::Tensor gi = grad_out.reshaped(input_shape_);
    input_shape_.clear();
    return gi;
}

// -------------------------------------------------------------------- fc --

FCLayer::FCLayer(int in_features, int out_features)
    : weight({out_features, in_features}),
      bias(static_cast<std::size_t>(out_features), 0.0),
      weight_grad(weight.size(), 0.0),
      bias_grad(bias.size(), 0.0) {}

num::Tensor FCLayer::forward(const num::Tensor& input, bool save_ctx) {
    num::Tensor out = num::linear_forward(input, weight, bias);
    if (save_ctx) {
        saved_input_ = input;
        has_ctx_ = true;
    }
    return out;
}

num::Tensor FCLayer::backward(const num::Tensor& grad_out) {
    if (!has_ctx_) throw ConfigError("fc backward called without a saved forward context");
    num::LinearGrads grads = num::linear_backward(grad_out, saved_input_, weight);
    for (std::size_t i = 0; i < weight_grad.size(); ++i) weight_grad[i] += grads.grad_weight.values[i];
    for (std::size_t i = 0; i < bias_grad.size(); ++i) bias_grad[i] += grads.grad_bias[i];
    saved_input_ = num::Tensor();
    has_ctx_ = false;
    return std::move(grads.grad_input);
}

void FCLayer::collect_params(int layer_index, std::vector<ParamRef>& out) {
    out.push_back({layer_index, "weight", &weight.values, &weight_grad, true, frozen});
    out.push_back({layer_index, "bias", &bias, &bias_grad, true, frozen});
}

// ----------------------------------------------------------------- model --

Model Model::build(const ArchitectureSpec& spec, num::RngStream& rng) {
    const ShapeTrace trace = validate(spec);
    Model model;
    model.spec_ = spec;
    model.embedding_width_ = trace.embedding_width;
    model.head_classes_ = spec.head.kind == Head::Kind::Softmax ? spec.head.classes : 0;

    int channels = spec.input.channels;
    int features = 0;
    auto he_fill = [&rng](std::vector<double>& values, int fan_in) {
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (double& v : values) v = rng.normal() * stddev;
    };

    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        switch (layer.kind) {
            case LayerSpec::Kind::Conv3: {
                auto conv = std::make_unique<Conv3Layer>(channels, layer.width);
                he_fill(conv->weight.values, channels * 9);
                channels = layer.width;
                model.layers_.push_back(std::move(conv));
                break;
            }
            case LayerSpec::Kind::BatchNorm:
                model.layers_.push_back(std::make_unique<BatchNormLayer>(channels));
                break;
            case LayerSpec::Kind::ReLU:
                model.layers_.push_back(std::make_unique<ReLULayer>());
                break;
            case LayerSpec::Kind::MaxPool2:
                model.layers_.push_back(std::make_unique<MaxPool2Layer>());
                break;
            case LayerSpec::Kind::Flatten:
                features = trace.after_layer[i].features;
                model.layers_.push_back(std::make_unique<FlattenLayer>());
                break;
            case LayerSpec::Kind::FC: {
                auto fc = std::make_unique<FCLayer>(features, layer.width);
                he_fill(fc->weight.values, features);
                features = layer.width;
                model.layers_.push_back(std::move(fc));
                break;
            }
        }
    }
    if (spec.head.kind == Head::Kind::Softmax) {
        // zero-initialized head: logits start at 0, so the loss baseline sits
        // exactly at chance level ln(classes), which the probe decision rule
        // measures convergence against
        model.layers_.push_back(std::make_unique<FCLayer>(trace.embedding_width, spec.head.classes));
    }
    return model;
}

std::size_t Model::conv_stack_end() const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i]->kind() == LayerSpec::Kind::FC) return i;
    }
    return layers_.size();
}

num::Tensor Model::forward_range(const num::Tensor& input, std::size_t begin, std::size_t end, bool save_ctx) {
    if (begin > end || end > layers_.size()) throw ConfigError("forward_range: bad layer range");
    if (begin == 0) {
        if (input.rank() != 4 || input.dim(1) != spec_.input.channels || input.dim(2) != spec_.input.height ||
            input.dim(3) != spec_.input.width) {
            throw ShapeError("model forward: batch shape " + num::shape_str(input.shape()) +
                             " does not match architecture input (N," + std::to_string(spec_.input.channels) + "," +
                             std::to_string(spec_.input.height) + "," + std::to_string(spec_.input.width) + ")");
        }
    }
    num::Tensor x = input;
    for (std::size_t i = begin; i < end; ++i) x = layers_[i]->forward(x, save_ctx);
    return x;
}

num::Tensor Model::backward_range(const num::Tensor& grad_out, std::size_t begin, std::size_t end) {
    if (begin > end || end > layers_.size()) throw ConfigError("backward_range: bad layer range");
    num::Tensor g = grad_out;
    for (std::size_t i = end; i-- > begin;) g = layers_[i]->backward(g);
    return g;
}

num::Tensor Model::forward_embed(const num::Tensor& batch, num::BnMode mode) {
    set_bn_mode(mode);
    return forward_range(batch, 0, head_begin(), false);
}

num::Tensor Model::forward_logits(const num::Tensor& batch, num::BnMode mode, bool save_ctx) {
    if (!has_head()) throw ConfigError("forward_logits: model '" + spec_.name + "' has no classification head");
    set_bn_mode(mode);
    return forward_range(batch, 0, layers_.size(), save_ctx);
}

void Model::set_bn_mode(num::BnMode mode) {
    for (auto& layer : layers_) {
        if (layer->kind() == LayerSpec::Kind::BatchNorm) {
            layer->set_bn_mode(layer->frozen ? num::BnMode::Eval : mode);
        }
    }
}

void Model::freeze_conv_stack() {
    const std::size_t end = conv_stack_end();
    for (std::size_t i = 0; i < end; ++i) {
        Layer& layer = *layers_[i];
        if (layer.kind() == LayerSpec::Kind::Conv3 || layer.kind() == LayerSpec::Kind::BatchNorm) {
            layer.frozen = true;
            layer.set_bn_mode(num::BnMode::Eval);
        }
    }
}

bool Model::conv_stack_frozen() const {
    const std::size_t end = conv_stack_end();
    bool any = false;
    for (std::size_t i = 0; i < end; ++i) {
        const Layer& layer = *layers_[i];
        if (layer.kind() == LayerSpec::Kind::Conv3 || layer.kind() == LayerSpec::Kind::BatchNorm) {
            if (!layer.frozen) return false;
            any = true;
        }
    }
    return any;
}

std::vector<ParamRef> Model::params() {
    std::vector<ParamRef> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->collect_params(static_cast<int>(i), out);
    return out;
}

std::vector<ParamRef> Model::trainable_params() {
    std::vector<ParamRef> out;
    for (ParamRef& ref : params()) {
        if (ref.trainable) out.push_back(ref);
    }
    return out;
}

long long Model::trainable_scalar_count() {
    long long total = 0;
    for (const ParamRef& ref : trainable_params()) total += static_cast<long long>(ref.value->size());
    return total;
}

void Model::zero_grads() {
    for (ParamRef& ref : params()) {
        if (ref.grad) std::fill(ref.grad->begin(), ref.grad->end(), 0.0);
    }
}

void Model::clear_ctx() {
    for (auto& layer : layers_) layer->clear_ctx();
}

std::uint64_t Model::conv_stack_checksum() {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    auto mix = [&hash](const std::vector<double>& values) {
        for (double v : values) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            for (int b = 0; b < 8; ++b) {
                hash ^= (bits >> (8 * b)) & 0xff;
                hash *= 0x100000001b3ULL;
            }
        }
    };
    const std::size_t end = conv_stack_end();
    std::vector<ParamRef> refs;
    for (std::size_t i = 0; i < end; ++i) layers_[i]->collect_params(static_cast<int>(i), refs);
    for (const ParamRef& ref : refs) mix(*ref.value);
    return hash;
}

}  // namespace discnn::models
