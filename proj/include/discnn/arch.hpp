#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "discnn/common.hpp"

namespace discnn::models {

// One layer in an architecture description. width is the output channel
// count for Conv3 and the output feature count for FC; other kinds ignore it.
struct LayerSpec {
    enum class Kind { Conv3, BatchNorm, ReLU, MaxPool2, FC, Flatten };

    Kind kind = Kind::ReLU;
    int width = 0;

    static LayerSpec conv3(int out_channels) { return {Kind::Conv3, out_channels}; }
    static LayerSpec batchnorm() { return {Kind::BatchNorm, 0}; }
    static LayerSpec relu() { return {Kind::ReLU, 0}; }
    static LayerSpec maxpool2() { return {Kind::MaxPool2, 0}; }
    static LayerSpec fc(int out_features) { return {Kind::FC, out_features}; }
    static LayerSpec flatten() { return {Kind::Flatten, 0}; }
};

const char* layer_kind_name(LayerSpec::Kind kind);

struct InputSpec {
    int channels = 3;
    int height = 96;
    int width = 96;
};

// Optional classification head. Softmax appends a trainable FC mapping the
// embedding to `classes` logits; the embedding itself is the output of the
// last FC in `layers`.
struct Head {
    enum class Kind { None, Softmax };
    Kind kind = Kind::None;
    int classes = 0;

    static Head none() { return {Kind::None, 0}; }
    static Head softmax(int classes) { return {Kind::Softmax, classes}; }
};

struct ArchitectureSpec {
    std::string name;
    InputSpec input;
    std::vector<LayerSpec> layers;
    Head head;
};

// Shape bookkeeping produced by validate(): per-layer output sizes plus the
// final embedding width.
struct ShapeTrace {
    struct Entry {
        int channels = 0;
        int height = 0;
        int width = 0;
        int features = 0;  // set once flattened
        bool flat = false;
    };
    std::vector<Entry> after_layer;
    int embedding_width = 0;
};

// Walks the layer list checking spatial arithmetic; throws ConfigError or
// ShapeError naming the first invalid layer.
ShapeTrace validate(const ArchitectureSpec& spec);

// Named builders: discnn8, discnn1, vgg_ref, probe1.
ArchitectureSpec builtin_arch(const std::string& name);
std::vector<std::string> builtin_arch_names();

// Strips BatchNorm layers; used by the normalization ablation experiment.
ArchitectureSpec without_batchnorm(const ArchitectureSpec& spec);

// Trainable scalar count: conv 9*Cin*Cout + Cout, batchnorm 2*C,
// fc in*out + out, plus the head FC when present. Running statistics are
// not trainable and are excluded.
long long param_count(const ArchitectureSpec& spec);

// Stable textual form used for fingerprinting and checkpoint headers.
std::string canonical_string(const ArchitectureSpec& spec);
ArchitectureSpec parse_canonical(const std::string& text);

// FNV-1a 64 over the canonical string.
std::uint64_t fingerprint(const ArchitectureSpec& spec);
std::uint64_t fnv1a64(const std::string& text);

}  // namespace discnn::models
