#include "discnn/arch.hpp"

#include <sstream>

namespace discnn::models {

const char* layer_kind_name(LayerSpec::Kind kind) {
    switch (kind) {
        case LayerSpec::Kind::Conv3: return "conv3";
        case LayerSpec::Kind::BatchNorm: return "bn";
        case LayerSpec::Kind::ReLU: return "relu";
        case LayerSpec::Kind::MaxPool2: return "pool2";
        case LayerSpec::Kind::FC: return "fc";
        case LayerSpec::Kind::Flatten: return "flatten";
    }
    return "?";
}

ShapeTrace validate(const ArchitectureSpec& spec) {
    if (spec.input.channels <= 0 || spec.input.height <= 0 || spec.input.width <= 0) {
        throw ConfigError("architecture '" + spec.name + "': input dimensions must be positive");
    }
    ShapeTrace trace;
    ShapeTrace::Entry cur;
    cur.channels = spec.input.channels;
    cur.height = spec.input.height;
    cur.width = spec.input.width;

    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        const std::string where = "architecture '" + spec.name + "' layer " + std::to_string(i) + " (" +
                                  layer_kind_name(layer.kind) + ")";
        switch (layer.kind) {
            case LayerSpec::Kind::Conv3:
                if (cur.flat) throw ConfigError(where + ": conv after flatten");
                if (layer.width < 1) throw ConfigError(where + ": out_channels must be >= 1");
                if (cur.height < 1 || cur.width < 1) throw ShapeError(where + ": empty spatial extent");
                cur.channels = layer.width;  // 3x3, padding 1: spatial size preserved
                break;
            case LayerSpec::Kind::BatchNorm:
            case LayerSpec::Kind::ReLU:
                break;
            case LayerSpec::Kind::MaxPool2:
                if (cur.flat) throw ConfigError(where + ": pooling after flatten");
                if (cur.height % 2 != 0 || cur.width % 2 != 0) {
                    throw ShapeError(where + ": spatial size " + std::to_string(cur.height) + "x" +
                                     std::to_string(cur.width) + " not divisible by 2");
                }
                cur.height /= 2;
                cur.width /= 2;
                if (cur.height < 1 || cur.width < 1) throw ShapeError(where + ": pooled away to nothing");
                break;
            case LayerSpec::Kind::Flatten:
                if (cur.flat) throw ConfigError(where + ": flatten applied twice");
                cur.features = cur.channels * cur.height * cur.width;
                cur.flat = true;
                break;
            case LayerSpec::Kind::FC:
                if (!cur.flat) throw ConfigError(where + ": fc requires a preceding flatten");
                if (layer.width < 1) throw ConfigError(where + ": out_features must be >= 1");
                cur.features = layer.width;
                break;
        }
        trace.after_layer.push_back(cur);
    }

    if (spec.head.kind == Head::Kind::Softmax) {
        if (spec.head.classes < 2) {
            throw ConfigError("architecture '" + spec.name + "': softmax head needs at least 2 classes");
        }
        if (!cur.flat) {
            throw ConfigError("architecture '" + spec.name + "': softmax head requires flattened features");
        }
    }
    trace.embedding_width = cur.flat ? cur.features : cur.channels * cur.height * cur.width;
    return trace;
}

namespace {

void push_conv_block(std::vector<LayerSpec>& layers, int channels) {
    layers.push_back(LayerSpec::conv3(channels));
    layers.push_back(LayerSpec::batchnorm());
    layers.push_back(LayerSpec::relu());
    layers.push_back(LayerSpec::maxpool2());
}

ArchitectureSpec make_discnn(const std::string& name, int last_conv, int fc1, int fc2, int fc3) {
    ArchitectureSpec spec;
    spec.name = name;
    for (int ch : {64, 32, 16, last_conv}) push_conv_block(spec.layers, ch);
    spec.layers.push_back(LayerSpec::flatten());
    spec.layers.push_back(LayerSpec::fc(fc1));
    spec.layers.push_back(LayerSpec::fc(fc2));
    spec.layers.push_back(LayerSpec::fc(fc3));
    return spec;
}

}  // namespace

ArchitectureSpec builtin_arch(const std::string& name) {
    if (name == "discnn8") return make_discnn("discnn8", 8, 288, 128, 16);
    if (name == "discnn1") return make_discnn("discnn1", 1, 36, 32, 16);
    if (name == "probe1") {
        ArchitectureSpec spec = make_discnn("probe1", 1, 36, 32, 16);
        spec.head = Head::softmax(2);
        return spec;
    }
    if (name == "vgg_ref") {
        ArchitectureSpec spec;
        spec.name = "vgg_ref";
        for (int ch : {64, 128, 128, 128}) push_conv_block(spec.layers, ch);
        spec.layers.push_back(LayerSpec::flatten());
        spec.layers.push_back(LayerSpec::fc(4096));
        spec.layers.push_back(LayerSpec::fc(2048));
        spec.head = Head::softmax(1000);
        return spec;
    }
    std::string known;
    for (const auto& n : builtin_arch_names()) {
        if (!known.empty()) known += ", ";
        known += n;
    }
    throw ConfigError("unknown architecture '" + name + "' (valid: " + known + ")");
}

std::vector<std::string> builtin_arch_names() { return {"discnn8", "discnn1", "vgg_ref", "probe1"}; }

ArchitectureSpec without_batchnorm(const ArchitectureSpec& spec) {
    ArchitectureSpec out = spec;
    out.name = spec.name + "_nobn";
    out.layers.clear();
    for (const LayerSpec& layer : spec.layers) {
        if (layer.kind != LayerSpec::Kind::BatchNorm) out.layers.push_back(layer);
    }
    return out;
}

long long param_count(const ArchitectureSpec& spec) {
    const ShapeTrace trace = validate(spec);
    long long total = 0;
    int channels = spec.input.channels;
    int features = 0;
    bool flat = false;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        switch (layer.kind) {
            case LayerSpec::Kind::Conv3:
                total += 9LL * channels * layer.width + layer.width;
                channels = layer.width;
                break;
            case LayerSpec::Kind::BatchNorm:
                total += 2LL * (flat ? features : channels);
                break;
            case LayerSpec::Kind::FC:
                total += static_cast<long long>(features) * layer.width + layer.width;
                features = layer.width;
                break;
            case LayerSpec::Kind::Flatten:
                features = trace.after_layer[i].features;
                flat = true;
                break;
            default:
                break;
        }
    }
    if (spec.head.kind == Head::Kind::Softmax) {
        total += static_cast<long long>(trace.embedding_width) * spec.head.classes + spec.head.classes;
    }
    return total;
}

std::string canonical_string(const ArchitectureSpec& spec) {
    std::ostringstream os;
    os << "name=" << spec.name << ";in=" << spec.input.channels << "x" << spec.input.height << "x"
       << spec.input.width << ";layers=";
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (i) os << ',';
        const LayerSpec& layer = spec.layers[i];
        os << layer_kind_name(layer.kind);
        if (layer.kind == LayerSpec::Kind::Conv3 || layer.kind == LayerSpec::Kind::FC) os << ':' << layer.width;
    }
    os << ";head=";
    if (spec.head.kind == Head::Kind::None) {
        os << "none";
    } else {
        os << "softmax:" << spec.head.classes;
    }
    return os.str();
}

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : text) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    return parts;
}

int parse_int(const std::string& text, const char* what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw DataError(std::string("architecture string: bad integer for ") + what + ": '" + text + "'");
    }
}

}  // namespace

ArchitectureSpec parse_canonical(const std::string& text) {
    ArchitectureSpec spec;
    bool saw_name = false, saw_in = false, saw_layers = false, saw_head = false;
    for (const std::string& field : split(text, ';')) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw DataError("architecture string: malformed field '" + field + "'");
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "name") {
            spec.name = value;
            saw_name = true;
        } else if (key == "in") {
            const auto dims = split(value, 'x');
            if (dims.size() != 3) throw DataError("architecture string: input must be CxHxW, got '" + value + "'");
            spec.input.channels = parse_int(dims[0], "input channels");
            spec.input.height = parse_int(dims[1], "input height");
            spec.input.width = parse_int(dims[2], "input width");
            saw_in = true;
        } else if (key == "layers") {
            if (!value.empty()) {
                for (const std::string& item : split(value, ',')) {
                    const auto colon = item.find(':');
                    const std::string kind = colon == std::string::npos ? item : item.substr(0, colon);
                    const int width = colon == std::string::npos ? 0 : parse_int(item.substr(colon + 1), "layer width");
                    if (kind == "conv3") {
                        spec.layers.push_back(LayerSpec::conv3(width));
                    } else if (kind == "bn") {
                        spec.layers.push_back(LayerSpec::batchnorm());
                    } else if (kind == "relu") {
                        spec.layers.push_back(LayerSpec::relu());
                    } else if (kind == "pool2") {
                        spec.layers.push_back(LayerSpec::maxpool2());
                    } else if (kind == "fc") {
                        spec.layers.push_back(LayerSpec::fc(width));
                    } else if (kind == "flatten") {
                        spec.layers.push_back(LayerSpec::flatten());
                    } else {
                        throw DataError("architecture string: unknown layer kind '" + kind + "'");
                    }
                }
            }
            saw_layers = true;
        } else if (key == "head") {
            if (value == "none") {
                spec.head = Head::none();
            } else {
                const auto colon = value.find(':');
                if (colon == std::string::npos || value.substr(0, colon) != "softmax") {
                    throw DataError("architecture string: unknown head '" + value + "'");
                }
                spec.head = Head::softmax(parse_int(value.substr(colon + 1), "head classes"));
            }
            saw_head = true;
        } else {
            throw DataError("architecture string: unknown field '" + key + "'");
        }
    }
    if (!saw_name || !saw_in || !saw_layers || !saw_head) {
        throw DataError("architecture string: missing required fields");
    }
    validate(spec);
    return spec;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::uint64_t fingerprint(const ArchitectureSpec& spec) { return fnv1a64(canonical_string(spec)); }

}  // namespace discnn::models
