#pragma once

#include <string>

#include "discnn/trainer.hpp"

namespace discnn::probe {

// Quantitative form of the probe's convergence call. Present needs the final
// training accuracy at or above present_accuracy. Absent needs the final
// loss to sit at or above absent_loss_ratio times the initial loss AND the
// accuracy at or below absent_accuracy. Anything in between is Inconclusive.
struct DecisionRule {
    double present_accuracy = 0.90;
    double absent_loss_ratio = 0.9;
    double absent_accuracy = 0.60;
};

enum class Verdict { Present, Absent, Inconclusive };

const char* verdict_name(Verdict v);

struct ProbeOutcome {
    Verdict verdict = Verdict::Inconclusive;
    double final_loss = 0.0;
    double initial_loss = 0.0;
    double final_accuracy = 0.0;
    int epochs_run = 0;
    DecisionRule rule;
};

// Copies the convolution-stack parameters (conv weights/biases, batchnorm
// gamma/beta and running statistics) of `source` into `target` and marks the
// copied layers frozen. The two stacks must match layer for layer; the error
// names the first mismatched layer. FC and head parameters are untouched.
void graft(const models::Model& source, models::Model& target);

// Pure function of the history: same history, same verdict.
ProbeOutcome decide(const train::TrainHistory& history, const DecisionRule& rule = {});

struct ProbeResult {
    train::TrainHistory history;
    ProbeOutcome outcome;
};

// Trains only the FC stack of a grafted two-class model with cross entropy
// and applies the decision rule. Requires a frozen conv stack, a two-node
// head, and a dataset of exactly two classes.
ProbeResult run_probe(models::Model& grafted, const std::vector<data::LabeledImage>& two_class_dataset,
                      const train::OptimConfig& optim, const DecisionRule& rule = {});

// One-line record: pair, verdict, losses, accuracy, thresholds used.
std::string verdict_record_csv_header();
std::string verdict_record_csv(const std::string& pair_name, const ProbeOutcome& outcome);

}  // namespace discnn::probe
