#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "discnn/dataset.hpp"
#include "discnn/loss.hpp"
#include "discnn/model.hpp"

namespace discnn::evaluate {

// Standard convention: tp = true positives predicted Positive, fp = true
// negatives predicted Positive, fn = true positives predicted Negative,
// tn = true negatives predicted Negative. Every report header restates this.
struct ConfusionMatrix {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long tn = 0;
};

// Division-by-zero metrics are reported as undefined, never silently zero.
struct ClassMetrics {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

struct MetricsPair {
    ClassMetrics positive;
    ClassMetrics negative;  // computed with the class roles swapped
};

MetricsPair metrics(const ConfusionMatrix& cm);

// One embedding record per sample, in dataset order; batchnorm in eval mode.
std::vector<loss::EmbeddingRecord> encode_dataset(models::Model& model,
                                                  const std::vector<data::LabeledImage>& dataset);

// Counts under classify(modulus, tau). Records must carry Positive/Negative
// labels; Unseen labels must be mapped via unseen_eval first.
ConfusionMatrix confusion(const std::vector<loss::EmbeddingRecord>& records, double tau);

struct ThresholdRow {
    double tau = 0.0;
    ConfusionMatrix cm;
    MetricsPair m;
};

struct ThresholdReport {
    std::vector<ThresholdRow> rows;
};

// One row per threshold; taus must be non-empty and sorted ascending.
ThresholdReport threshold_sweep(const std::vector<loss::EmbeddingRecord>& records, const std::vector<double>& taus);

std::vector<double> default_tau_grid();  // {0, 1, 2}

// Even grid from 0 to the max modulus, for ROC-style sweeps.
std::vector<double> fine_tau_grid(const std::vector<loss::EmbeddingRecord>& records, int steps = 50);

// Best positive F1 over a sweep; returns the row index, or nullopt when no
// row has a defined positive F1.
std::optional<std::size_t> best_positive_f1_row(const ThresholdReport& report);

struct ClassModulusSummary {
    std::string class_name;
    Role expected = Role::Negative;
    int count = 0;
    double mean = 0.0;
    double median = 0.0;
    double min_value = 0.0;
    double max_value = 0.0;
};

struct UnseenEvalResult {
    ThresholdReport report;
    std::vector<ClassModulusSummary> summaries;
};

// Maps each unseen class to its expected side (Role::Positive for
// positive-like, Role::Negative for negative-like), then computes standard
// metrics plus per-class modulus summaries. Every class present in the
// dataset must be mapped.
UnseenEvalResult unseen_eval(models::Model& model, const std::vector<data::LabeledImage>& unseen_dataset,
                             const std::map<std::string, Role>& expected, const std::vector<double>& taus);

// ------------------------------------------------------------ serialization --

std::string report_to_csv(const ThresholdReport& report);
ThresholdReport report_from_csv(const std::string& text);
std::string report_to_table(const ThresholdReport& report);

std::string records_to_csv(const std::vector<loss::EmbeddingRecord>& records);

// Per-class modulus histogram rows: class,bin_lo,bin_hi,count.
std::string histogram_csv(const std::vector<loss::EmbeddingRecord>& records, int bins = 20);

std::string summaries_to_csv(const std::vector<ClassModulusSummary>& summaries);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace discnn::evaluate
