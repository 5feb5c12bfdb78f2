#include "discnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace discnn::train {

void OptimConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("optim: learning rate must be positive");
    if (batch_size < 2) throw ConfigError("optim: batch_size must be >= 2 (train-mode batchnorm needs it)");
    if (epochs < 0) throw ConfigError("optim: epochs must be non-negative");
    if (algorithm == Algo::SGD && momentum < 0.0) throw ConfigError("optim: momentum must be non-negative");
    if (algorithm == Algo::Adam) {
        if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
            throw ConfigError("optim: adam betas must be in (0,1)");
        }
        if (!(eps > 0.0)) throw ConfigError("optim: adam eps must be positive");
    }
}

const char* algo_name(Algo a) { return a == Algo::SGD ? "sgd" : "adam"; }

Algo algo_from_name(const std::string& name) {
    if (name == "sgd") return Algo::SGD;
    if (name == "adam") return Algo::Adam;
    throw ConfigError("optim: unknown algorithm '" + name + "' (expected sgd|adam)");
}

double LrSchedule::lr_at(int epoch, double base_lr) const {
    if (!(base_lr > 0.0)) throw ConfigError("schedule: base learning rate must be positive");
    switch (kind) {
        case Kind::Constant: return base_lr;
        case Kind::StepDecay: return epoch >= at_epoch ? base_lr * factor : base_lr;
    }
    return base_lr;
}

std::string LrSchedule::to_string() const {
    if (kind == Kind::Constant) return "constant";
    std::ostringstream os;
    os << "step:" << factor << '@' << at_epoch;
    return os.str();
}

LrSchedule LrSchedule::parse(const std::string& text) {
    LrSchedule s;
    if (text == "constant") return s;
    if (text.rfind("step:", 0) == 0) {
        const auto at = text.find('@');
        if (at == std::string::npos) throw ConfigError("schedule: expected step:<factor>@<epoch>, got '" + text + "'");
        try {
            s.kind = Kind::StepDecay;
            s.factor = std::stod(text.substr(5, at - 5));
            s.at_epoch = std::stoi(text.substr(at + 1));
        } catch (const std::exception&) {
            throw ConfigError("schedule: cannot parse '" + text + "'");
        }
        if (!(s.factor > 0.0)) throw ConfigError("schedule: decay factor must be positive");
        return s;
    }
    throw ConfigError("schedule: unknown schedule '" + text + "' (expected constant|step:<factor>@<epoch>)");
}

std::vector<std::string> class_names_sorted(const std::vector<data::LabeledImage>& dataset) {
    std::set<std::string> names;
    for (const auto& img : dataset) names.insert(img.class_name);
    return std::vector<std::string>(names.begin(), names.end());
}

namespace {

class Optimizer {
public:
    explicit Optimizer(const OptimConfig& cfg) : cfg_(cfg) {}

    void step(std::vector<models::ParamRef>& params, double lr) {
        if (slots_.empty()) {
            slots_.resize(params.size());
            for (std::size_t i = 0; i < params.size(); ++i) {
                slots_[i].m.assign(params[i].value->size(), 0.0);
                if (cfg_.algorithm == Algo::Adam) slots_[i].v.assign(params[i].value->size(), 0.0);
            }
        }
        ++t_;
        for (std::size_t i = 0; i < params.size(); ++i) {
            models::ParamRef& p = params[i];
            if (p.frozen || !p.grad) continue;
            std::vector<double>& value = *p.value;
            std::vector<double>& grad = *p.grad;
            Slot& slot = slots_[i];
            if (cfg_.algorithm == Algo::SGD) {
                for (std::size_t j = 0; j < value.size(); ++j) {
                    slot.m[j] = cfg_.momentum * slot.m[j] + grad[j];
                    value[j] -= lr * slot.m[j];
                }
            } else {
                const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
                const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
                for (std::size_t j = 0; j < value.size(); ++j) {
                    slot.m[j] = cfg_.beta1 * slot.m[j] + (1.0 - cfg_.beta1) * grad[j];
                    slot.v[j] = cfg_.beta2 * slot.v[j] + (1.0 - cfg_.beta2) * grad[j] * grad[j];
                    const double m_hat = slot.m[j] / bc1;
                    const double v_hat = slot.v[j] / bc2;
                    value[j] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
                }
            }
        }
    }

private:
    struct Slot {
        std::vector<double> m;
        std::vector<double> v;
    };

    OptimConfig cfg_;
    std::vector<Slot> slots_;
    long long t_ = 0;
};

struct Labeling {
    std::vector<int> class_index;     // CrossEntropy
    std::vector<bool> is_positive;    // N2O
};

Labeling build_labels(const std::vector<data::LabeledImage>& dataset, const TrainOptions& options,
                      const models::Model& model) {
    Labeling lab;
    if (options.loss_kind == LossKind::CrossEntropy) {
        if (!model.has_head()) {
            throw ConfigError("train: cross-entropy requires a model with a softmax head");
        }
        const std::vector<std::string> classes = class_names_sorted(dataset);
        if (static_cast<int>(classes.size()) != model.head_classes()) {
            throw ConfigError("train: dataset has " + std::to_string(classes.size()) + " classes but the head has " +
                              std::to_string(model.head_classes()) + " nodes");
        }
        lab.class_index.reserve(dataset.size());
        for (const auto& img : dataset) {
            const auto it = std::lower_bound(classes.begin(), classes.end(), img.class_name);
            lab.class_index.push_back(static_cast<int>(it - classes.begin()));
        }
    } else {
        lab.is_positive.reserve(dataset.size());
        for (const auto& img : dataset) {
            if (img.role == Role::Unseen) {
                throw ConfigError("train: sample '" + img.id + "' has no positive/negative role; n2o training "
                                  "needs role-labeled data");
            }
            lab.is_positive.push_back(img.role == Role::Positive);
        }
    }
    return lab;
}

// Gathers dataset samples (or cached feature rows) into one batch tensor.
num::Tensor gather_batch(const std::vector<data::LabeledImage>& dataset, const num::Tensor* features,
                         const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
    const std::size_t count = end - begin;
    if (features) {
        const int width = features->dim(1);
        num::Tensor batch({static_cast<int>(count), width});
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t row = order[begin + i];
            std::copy_n(features->data() + row * static_cast<std::size_t>(width), static_cast<std::size_t>(width),
                        batch.values.data() + i * static_cast<std::size_t>(width));
        }
        return batch;
    }
    const auto& shape = dataset[order[begin]].pixels.shape();
    num::Tensor batch({static_cast<int>(count), shape[0], shape[1], shape[2]});
    const std::size_t sample = dataset[order[begin]].pixels.size();
    for (std::size_t i = 0; i < count; ++i) {
        const auto& pixels = dataset[order[begin + i]].pixels;
        if (pixels.size() != sample) {
            throw ShapeError("train: sample '" + dataset[order[begin + i]].id + "' shape " +
                             num::shape_str(pixels.shape()) + " differs from the batch shape");
        }
        std::copy_n(pixels.data(), sample, batch.values.data() + i * sample);
    }
    return batch;
}

struct PassResult {
    double loss = 0.0;
    int correct = 0;
};

}  // namespace

TrainHistory train(models::Model& model, const std::vector<data::LabeledImage>& dataset, const TrainOptions& options) {
    options.optim.validate();
    if (dataset.empty()) throw ConfigError("train: dataset is empty");
    if (options.loss_kind == LossKind::N2O) options.n2o.validate(model.embedding_width());

    const Labeling labels = build_labels(dataset, options, model);
    num::RngStream rng(options.optim.seed);

    // With a frozen conv stack the extractor is a fixed function, so its
    // output per sample is computed once and the epochs run on the FC suffix.
    std::size_t suffix_begin = 0;
    num::Tensor features;
    const num::Tensor* feature_ptr = nullptr;
    if (options.optim.freeze_conv) {
        model.freeze_conv_stack();
        suffix_begin = model.conv_stack_end();
        if (suffix_begin == 0) throw ConfigError("train: freeze_conv on a model with no convolution stack");
        model.set_bn_mode(num::BnMode::Eval);

        const int width = [&] {
            std::vector<std::size_t> probe_order = {0};
            num::Tensor first = gather_batch(dataset, nullptr, probe_order, 0, 1);
            return model.forward_range(first, 0, suffix_begin, false).dim(1);
        }();
        features = num::Tensor({static_cast<int>(dataset.size()), width});
        const std::size_t chunk = 32;
        std::vector<std::size_t> ident(dataset.size());
        for (std::size_t i = 0; i < ident.size(); ++i) ident[i] = i;
        for (std::size_t begin = 0; begin < dataset.size(); begin += chunk) {
            const std::size_t end = std::min(dataset.size(), begin + chunk);
            num::Tensor batch = gather_batch(dataset, nullptr, ident, begin, end);
            num::Tensor out = model.forward_range(batch, 0, suffix_begin, false);
            std::copy_n(out.data(), out.size(), features.values.data() + begin * static_cast<std::size_t>(width));
        }
        feature_ptr = &features;
    }

    const std::size_t layers_end = model.layer_count();

    auto evaluate_pass = [&](const std::vector<std::size_t>& order, std::size_t begin, std::size_t end,
                             bool save_ctx) -> std::pair<PassResult, num::Tensor> {
        num::Tensor batch = gather_batch(dataset, feature_ptr, order, begin, end);
        num::Tensor out = model.forward_range(batch, suffix_begin, layers_end, save_ctx);
        PassResult pass;
        num::Tensor grad;
        if (options.loss_kind == LossKind::CrossEntropy) {
            std::vector<int> batch_labels(end - begin);
            for (std::size_t i = begin; i < end; ++i) batch_labels[i - begin] = labels.class_index[order[i]];
            num::SoftmaxXentResult sx = num::softmax_cross_entropy(out, batch_labels);
            pass.loss = sx.loss;
            for (std::size_t i = 0; i < batch_labels.size(); ++i) {
                if (sx.predictions[i] == batch_labels[i]) ++pass.correct;
            }
            grad = std::move(sx.grad_logits);
        } else {
            std::vector<bool> batch_pos(end - begin);
            for (std::size_t i = begin; i < end; ++i) batch_pos[i - begin] = labels.is_positive[order[i]];
            loss::N2OResult n2o = loss::n2o_loss(out, batch_pos, options.n2o);
            pass.loss = n2o.loss;
            grad = std::move(n2o.grad);
        }
        return {pass, std::move(grad)};
    };

    std::vector<std::size_t> ident(dataset.size());
    for (std::size_t i = 0; i < ident.size(); ++i) ident[i] = i;

    // Baseline at the initial parameters, evaluated without updates.
    TrainHistory history;
    {
        model.set_bn_mode(num::BnMode::Eval);
        double loss_sum = 0.0;
        int correct = 0;
        const std::size_t chunk = 64;
        for (std::size_t begin = 0; begin < ident.size(); begin += chunk) {
            const std::size_t end = std::min(ident.size(), begin + chunk);
            auto [pass, grad] = evaluate_pass(ident, begin, end, false);
            loss_sum += pass.loss * static_cast<double>(end - begin);
            correct += pass.correct;
        }
        history.initial_loss = loss_sum / static_cast<double>(ident.size());
        if (options.loss_kind == LossKind::CrossEntropy) {
            history.initial_accuracy = static_cast<double>(correct) / static_cast<double>(ident.size());
        }
    }

    Optimizer optimizer(options.optim);
    int last_finite_epoch = 0;
    double last_finite_loss = history.initial_loss;

    for (int epoch = 1; epoch <= options.optim.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        const double lr = options.schedule.lr_at(epoch, options.optim.lr);

        std::vector<std::size_t> order = ident;
        rng.shuffle(order);

        double loss_sum = 0.0;
        int correct = 0;
        const std::size_t batch_size = static_cast<std::size_t>(options.optim.batch_size);
        std::size_t begin = 0;
        while (begin < order.size()) {
            std::size_t end = std::min(order.size(), begin + batch_size);
            // a trailing single sample joins the preceding batch instead of
            // forming a degenerate train-mode batchnorm batch
            if (order.size() - end == 1) end = order.size();

            model.set_bn_mode(num::BnMode::Train);
            auto [pass, grad] = evaluate_pass(order, begin, end, true);
            if (!std::isfinite(pass.loss)) {
                model.clear_ctx();
                throw DivergenceError("train: non-finite loss " + std::to_string(pass.loss) + " in epoch " +
                                          std::to_string(epoch) + "; last finite epoch " +
                                          std::to_string(last_finite_epoch) + " had loss " +
                                          std::to_string(last_finite_loss),
                                      last_finite_epoch, last_finite_loss);
            }
            last_finite_loss = pass.loss;
            model.backward_range(grad, suffix_begin, layers_end);
            std::vector<models::ParamRef> params = model.trainable_params();
            optimizer.step(params, lr);
            model.zero_grads();

            loss_sum += pass.loss * static_cast<double>(end - begin);
            correct += pass.correct;
            begin = end;
        }

        EpochRecord record;
        record.epoch = epoch;
        record.loss = loss_sum / static_cast<double>(order.size());
        if (options.loss_kind == LossKind::CrossEntropy) {
            record.accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
        }
        record.lr = lr;
        record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        history.epochs.push_back(record);
        last_finite_epoch = epoch;
    }

    model.set_bn_mode(num::BnMode::Eval);
    return history;
}

std::string history_to_csv(const TrainHistory& history) {
    std::ostringstream os;
    os.precision(17);
    os << "# initial_loss=" << history.initial_loss << '\n';
    if (history.initial_accuracy) os << "# initial_accuracy=" << *history.initial_accuracy << '\n';
    os << "epoch,loss,accuracy,lr,seconds\n";
    for (const EpochRecord& r : history.epochs) {
        os << r.epoch << ',' << r.loss << ',';
        if (r.accuracy) os << *r.accuracy;
        os << ',' << r.lr << ',' << r.seconds << '\n';
    }
    return os.str();
}

void write_history_csv(const TrainHistory& history, const std::string& path) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw DataError("cannot open '" + path + "' for writing");
    file << history_to_csv(history);
    if (!file) throw DataError("short write to '" + path + "'");
}

}  // namespace discnn::train
