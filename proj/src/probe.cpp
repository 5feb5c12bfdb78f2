#include "discnn/probe.hpp"

#include <cmath>
#include <sstream>

namespace discnn::probe {

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Present: return "present";
        case Verdict::Absent: return "absent";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

std::string describe_layer(const models::Layer& layer) {
    switch (layer.kind()) {
        case models::LayerSpec::Kind::Conv3: {
            const auto& conv = static_cast<const models::Conv3Layer&>(layer);
            return "conv3 " + std::to_string(conv.in_channels()) + "->" + std::to_string(conv.out_channels());
        }
        case models::LayerSpec::Kind::BatchNorm: {
            const auto& bn = static_cast<const models::BatchNormLayer&>(layer);
            return "bn " + std::to_string(bn.state.channels()) + "ch";
        }
        default:
            return models::layer_kind_name(layer.kind());
    }
}

}  // namespace

void graft(const models::Model& source, models::Model& target) {
    const std::size_t src_end = source.conv_stack_end();
    const std::size_t dst_end = target.conv_stack_end();
    if (src_end != dst_end) {
        throw ConfigError("graft: conv stacks differ in length (" + std::to_string(src_end) + " vs " +
                          std::to_string(dst_end) + " layers)");
    }
    for (std::size_t i = 0; i < src_end; ++i) {
        const models::Layer& src = source.layer(i);
        models::Layer& dst = target.layer(i);
        if (src.kind() != dst.kind()) {
            throw ConfigError("graft: layer " + std::to_string(i) + " mismatch: " + describe_layer(src) + " vs " +
                              describe_layer(dst));
        }
        switch (src.kind()) {
            case models::LayerSpec::Kind::Conv3: {
                const auto& s = static_cast<const models::Conv3Layer&>(src);
                auto& d = static_cast<models::Conv3Layer&>(dst);
                if (!s.weight.same_shape(d.weight)) {
                    throw ConfigError("graft: layer " + std::to_string(i) + " mismatch: " + describe_layer(src) +
                                      " vs " + describe_layer(dst));
                }
                d.weight.values = s.weight.values;
                d.bias = s.bias;
                d.frozen = true;
                break;
            }
            case models::LayerSpec::Kind::BatchNorm: {
                const auto& s = static_cast<const models::BatchNormLayer&>(src);
                auto& d = static_cast<models::BatchNormLayer&>(dst);
                if (s.state.channels() != d.state.channels()) {
                    throw ConfigError("graft: layer " + std::to_string(i) + " mismatch: " + describe_layer(src) +
                                      " vs " + describe_layer(dst));
                }
                d.state.gamma = s.state.gamma;
                d.state.beta = s.state.beta;
                d.state.running_mean = s.state.running_mean;
                d.state.running_var = s.state.running_var;
                d.state.momentum = s.state.momentum;
                d.state.epsilon = s.state.epsilon;
                d.state.mode = num::BnMode::Eval;
                d.frozen = true;
                break;
            }
            default:
                break;  // relu/pool/flatten carry no parameters
        }
    }
}

ProbeOutcome decide(const train::TrainHistory& history, const DecisionRule& rule) {
    ProbeOutcome outcome;
    outcome.rule = rule;
    outcome.initial_loss = history.initial_loss;
    outcome.epochs_run = static_cast<int>(history.epochs.size());
    if (history.epochs.empty()) {
        outcome.final_loss = history.initial_loss;
        outcome.final_accuracy = history.initial_accuracy.value_or(std::nan(""));
        outcome.verdict = Verdict::Inconclusive;
        return outcome;
    }
    const train::EpochRecord& last = history.epochs.back();
    outcome.final_loss = last.loss;
    if (!last.accuracy) {
        outcome.final_accuracy = std::nan("");
        outcome.verdict = Verdict::Inconclusive;
        return outcome;
    }
    outcome.final_accuracy = *last.accuracy;
    if (outcome.final_accuracy >= rule.present_accuracy) {
        outcome.verdict = Verdict::Present;
    } else if (outcome.final_loss >= rule.absent_loss_ratio * history.initial_loss &&
               outcome.final_accuracy <= rule.absent_accuracy) {
        outcome.verdict = Verdict::Absent;
    } else {
        outcome.verdict = Verdict::Inconclusive;
    }
    return outcome;
}

ProbeResult run_probe(models::Model& grafted, const std::vector<data::LabeledImage>& two_class_dataset,
                      const train::OptimConfig& optim, const DecisionRule& rule) {
    const std::vector<std::string> classes = train::class_names_sorted(two_class_dataset);
    if (classes.size() != 2) {
        throw ConfigError("probe: dataset must contain exactly 2 classes, found " + std::to_string(classes.size()));
    }
    if (!grafted.has_head() || grafted.head_classes() != 2) {
        throw ConfigError("probe: model needs a two-node softmax head");
    }
    if (!grafted.conv_stack_frozen()) {
        throw ConfigError("probe: unfrozen convolution stack detected; graft the source model first");
    }

    train::TrainOptions options;
    options.loss_kind = train::LossKind::CrossEntropy;
    options.optim = optim;
    options.optim.freeze_conv = true;

    ProbeResult result;
    result.history = train::train(grafted, two_class_dataset, options);
    result.outcome = decide(result.history, rule);
    return result;
}

std::string verdict_record_csv_header() {
    return "pair,verdict,final_loss,final_accuracy,initial_loss,epochs,present_accuracy,absent_loss_ratio,"
           "absent_accuracy\n";
}

std::string verdict_record_csv(const std::string& pair_name, const ProbeOutcome& outcome) {
    std::ostringstream os;
    os.precision(17);
    os << pair_name << ',' << verdict_name(outcome.verdict) << ',' << outcome.final_loss << ','
       << outcome.final_accuracy << ',' << outcome.initial_loss << ',' << outcome.epochs_run << ','
       << outcome.rule.present_accuracy << ',' << outcome.rule.absent_loss_ratio << ',' << outcome.rule.absent_accuracy
       << '\n';
    return os.str();
}

}  // namespace discnn::probe
