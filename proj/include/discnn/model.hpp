#pragma once

#include <memory>
#include <string>
#include <vector>

#include "discnn/arch.hpp"
#include "discnn/ops.hpp"
#include "discnn/tensor.hpp"

namespace discnn::models {

// Reference to one named parameter vector of a layer, used by the optimizer
// and the checkpoint writer. Ordering is stable: layers in model order, roles
// in the order each layer lists them.
struct ParamRef {
    int layer_index = 0;
    const char* role = "";  // weight | bias | gamma | beta | running_mean | running_var
    std::vector<double>* value = nullptr;
    std::vector<double>* grad = nullptr;  // null for non-trainable buffers
    bool trainable = true;
    bool frozen = false;
};

class Layer {
public:
    virtual ~Layer() = default;

    virtual LayerSpec::Kind kind() const = 0;

    // Runs the layer; when save_ctx is set, keeps whatever backward needs.
    virtual num::Tensor forward(const num::Tensor& input, bool save_ctx) = 0;

    // Consumes the saved context and accumulates parameter gradients.
    virtual num::Tensor backward(const num::Tensor& grad_out) = 0;

    virtual void collect_params(int /*layer_index*/, std::vector<ParamRef>& /*out*/) {}
    virtual void clear_ctx() {}
    virtual void set_bn_mode(num::BnMode) {}

    bool frozen = false;
};

class Conv3Layer : public Layer {
public:
    Conv3Layer(int in_channels, int out_channels);

    LayerSpec::Kind kind() const override { return LayerSpec::Kind::Conv3; }
    num::Tensor forward(const num::Tensor& input, bool save_ctx) override;
    num::Tensor backward(const num::Tensor& grad_out) override;
    void collect_params(int layer_index, std::vector<ParamRef>& out) override;
    void clear_ctx() override { saved_input_ = num::Tensor(); }

    int in_channels() const { return weight.dim(1); }
    int out_channels() const { return weight.dim(0); }

    num::Tensor weight;  // [O, C, 3, 3]
    std::vector<double> bias;
    std::vector<double> weight_grad;
    std::vector<double> bias_grad;

private:
    num::Tensor saved_input_;
    bool has_ctx_ = false;
};

class BatchNormLayer : public Layer {
public:
    explicit BatchNormLayer(int channels);

    LayerSpec::Kind kind() const override { return LayerSpec::Kind::BatchNorm; }
    num::Tensor forward(const num::Tensor& input, bool save_ctx) override;
    num::Tensor backward(const num::Tensor& grad_out) override;
    void collect_params(int layer_index, std::vector<ParamRef>& out) override;
    void clear_ctx() override { ctx_ = num::BnContext(); }
    void set_bn_mode(num::BnMode mode) override { state.mode = mode; }

    num::BatchNormState state;
    std::vector<double> gamma_grad;
    std::vector<double> beta_grad;

private:
    num::BnContext ctx_;
    bool has_ctx_ = false;
};

class ReLULayer : public Layer {
public:
    LayerSpec::Kind kind() const override { return LayerSpec::Kind::ReLU; }
    num::Tensor forward(const num::Tensor& input, bool save_ctx) override;
    num::Tensor backward(const num::Tensor& grad_out) override;
    void clear_ctx() override { mask_.clear(); }

private:
    std::vector<unsigned char> mask_;
    std::vector<int> saved_shape_;
};

class MaxPool2Layer : public Layer {
public:
    LayerSpec::Kind kind() const override { return LayerSpec::Kind::MaxPool2; }
    num::Tensor forward(const num::Tensor& input, bool save_ctx) override;
    num::Tensor backward(const num::Tensor& grad_out) override;
    void clear_ctx() override { argmax_.clear(); }

private:
    std::vector<std::int32_t> argmax_;
    std::vector<int> input_shape_;
};

class FlattenLayer : public Layer {
public:
    LayerSpec::Kind kind() const override { return LayerSpec::Kind::Flatten; }
    num::Tensor forward(const num::Tensor& input, bool save_ctx) override;
    num::Tensor backward(const num::Tensor& grad_out) override;
    void clear_ctx() override { input_shape_.clear(); }

private:
    std::vector<int> input_shape_;
};

class FCLayer : public Layer {
public:
    FCLayer(int in_features, int out_features);

    LayerSpec::Kind kind() const override { return LayerSpec::Kind::FC; }
    num::Tensor forward(const num::Tensor& input, bool save_ctx) override;
    num::Tensor backward(const num::Tensor& grad_out) override;
    void collect_params(int layer_index, std::vector<ParamRef>& out) override;
    void clear_ctx() override { saved_input_ = num::Tensor(); }

    int in_features() const { return weight.dim(1); }
    int out_features() const { return weight.dim(0); }

    num::Tensor weight;  // [O, I]
    std::vector<double> bias;
    std::vector<double> weight_grad;
    std::vector<double> bias_grad;

private:
    num::Tensor saved_input_;
    bool has_ctx_ = false;
};

// A built network: the layer stack from the architecture spec, plus the head
// FC as the final layer when the spec declares a softmax head.
class Model {
public:
    Model() = default;

    const ArchitectureSpec& spec() const { return spec_; }
    int embedding_width() const { return embedding_width_; }
    bool has_head() const { return head_classes_ > 0; }
    int head_classes() const { return head_classes_; }

    std::size_t layer_count() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }

    // Index of the first layer past the embedding stack (the head FC), or
    // layer_count() when there is no head.
    std::size_t head_begin() const { return has_head() ? layers_.size() - 1 : layers_.size(); }

    // Index of the first FC layer; everything before it is the conv stack.
    std::size_t conv_stack_end() const;

    // Forward through layers [begin, end).
    num::Tensor forward_range(const num::Tensor& input, std::size_t begin, std::size_t end, bool save_ctx);

    // Backward through layers [begin, end) in reverse; returns grad wrt the
    // range input. Parameter gradients accumulate in the layers.
    num::Tensor backward_range(const num::Tensor& grad_out, std::size_t begin, std::size_t end);

    // Embedding of a batch (head excluded). Eval mode is per-sample
    // deterministic; batch composition does not change a sample's embedding.
    num::Tensor forward_embed(const num::Tensor& batch, num::BnMode mode);

    // Embedding plus head logits; requires a head.
    num::Tensor forward_logits(const num::Tensor& batch, num::BnMode mode, bool save_ctx = false);

    // Sets the mode of every non-frozen batchnorm layer. Frozen layers stay
    // in eval mode with frozen statistics.
    void set_bn_mode(num::BnMode mode);

    // Marks every Conv3/BatchNorm layer before the first FC as frozen.
    void freeze_conv_stack();
    bool conv_stack_frozen() const;

    std::vector<ParamRef> params();              // all, trainable and buffers
    std::vector<ParamRef> trainable_params();    // optimizer view
    long long trainable_scalar_count();

    void zero_grads();
    void clear_ctx();

    // FNV hash over all conv-stack parameters and running stats; used by
    // freeze and graft contracts.
    std::uint64_t conv_stack_checksum();

    static Model build(const ArchitectureSpec& spec, num::RngStream& rng);

private:
    ArchitectureSpec spec_;
    std::vector<std::unique_ptr<Layer>> layers_;
    int embedding_width_ = 0;
    int head_classes_ = 0;
};

// Convenience wrappers matching the operation names used elsewhere.
inline Model build(const ArchitectureSpec& spec, num::RngStream& rng) { return Model::build(spec, rng); }
inline num::Tensor forward_embed(Model& model, const num::Tensor& batch, num::BnMode mode) {
    return model.forward_embed(batch, mode);
}

}  // namespace discnn::models
