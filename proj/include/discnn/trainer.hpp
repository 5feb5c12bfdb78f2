#pragma once

#include <optional>
#include <string>
#include <vector>

#include "discnn/dataset.hpp"
#include "discnn/loss.hpp"
#include "discnn/model.hpp"

namespace discnn::train {

enum class Algo { SGD, Adam };

struct OptimConfig {
    Algo algorithm = Algo::Adam;
    double lr = 1e-3;
    double momentum = 0.0;  // SGD only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch_size = 32;
    int epochs = 60;
    std::uint64_t seed = 0;
    bool freeze_conv = false;

    void validate() const;
};

const char* algo_name(Algo a);
Algo algo_from_name(const std::string& name);

// Pure function epoch -> learning rate. StepDecay multiplies the base rate
// by `factor` from `at_epoch` onward.
struct LrSchedule {
    enum class Kind { Constant, StepDecay };
    Kind kind = Kind::Constant;
    double factor = 0.1;
    int at_epoch = 30;

    double lr_at(int epoch, double base_lr) const;
    std::string to_string() const;
    static LrSchedule parse(const std::string& text);
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    std::optional<double> accuracy;  // defined for cross-entropy training
    double lr = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    double initial_loss = 0.0;
    std::optional<double> initial_accuracy;
    std::vector<EpochRecord> epochs;

    double final_loss() const { return epochs.empty() ? initial_loss : epochs.back().loss; }
};

enum class LossKind { N2O, CrossEntropy };

struct TrainOptions {
    LossKind loss_kind = LossKind::N2O;
    loss::N2OConfig n2o;
    OptimConfig optim;
    LrSchedule schedule;
};

// Deterministic mini-batch training. N2O uses the positive/negative roles of
// the dataset; CrossEntropy maps the sorted distinct class names to label
// indices and requires a matching softmax head. With freeze_conv set, the
// frozen stack (including batchnorm statistics) is bit-identical before and
// after, and its output is computed once per sample since the frozen
// extractor is a fixed function. Aborts with DivergenceError on non-finite
// loss. Identical (seed, config, data) gives bit-identical parameters.
TrainHistory train(models::Model& model, const std::vector<data::LabeledImage>& dataset, const TrainOptions& options);

// Per-epoch history as CSV: epoch, loss, accuracy, lr, seconds. The
// initial-loss baseline rides in `#` comment lines.
std::string history_to_csv(const TrainHistory& history);
void write_history_csv(const TrainHistory& history, const std::string& path);

std::vector<std::string> class_names_sorted(const std::vector<data::LabeledImage>& dataset);

}  // namespace discnn::train
