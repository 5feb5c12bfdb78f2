#pragma once

#include <string>
#include <vector>

#include "discnn/common.hpp"
#include "discnn/tensor.hpp"

namespace discnn::loss {

// Margin loss family for single-positive-class embeddings. Negatives are
// always pulled to the origin (squared norm); positives are either pushed
// past a margin radius (HingeNorm) or pulled toward a fixed non-origin
// center (CenterPull). Per-class means keep unbalanced batches from
// weighting one side more than the other.
enum class PosVariant { HingeNorm, CenterPull };
enum class NegVariant { SquaredNorm };

struct N2OConfig {
    double margin = 10.0;
    double neg_weight = 1.0;
    PosVariant positive_variant = PosVariant::HingeNorm;
    NegVariant neg_variant = NegVariant::SquaredNorm;
    std::vector<double> center;  // CenterPull only; length E, nonzero modulus

    void validate(int embedding_width) const;
};

const char* pos_variant_name(PosVariant v);
PosVariant pos_variant_from_name(const std::string& name);

struct N2OResult {
    double loss = 0.0;
    num::Tensor grad;  // [N, E], d loss / d embeddings
    double mean_positive_modulus = 0.0;
    double mean_negative_modulus = 0.0;
    int positives = 0;
    int negatives = 0;
};

// HingeNorm: loss = mean_pos max(0, m - |z|)^2 + w * mean_neg |z|^2.
// CenterPull: the positive term becomes mean_pos |z - center|^2.
// A batch lacking one class simply drops that term. Throws on empty batches.
N2OResult n2o_loss(const num::Tensor& embeddings, const std::vector<bool>& is_positive, const N2OConfig& cfg);

// Euclidean norm.
double modulus(const std::vector<double>& embedding);
double modulus(const double* data, std::size_t n);

enum class Predicted { Positive, Negative };

// Strict threshold rule: Positive iff modulus > tau. tau = 0 classifies any
// nonzero embedding as positive. Throws on negative tau.
Predicted classify(double modulus_value, double tau);

// One evaluated sample: the unit of evaluation and detection.
struct EmbeddingRecord {
    std::string sample_id;
    Role label = Role::Unseen;
    std::string class_name;
    std::vector<double> embedding;
    double modulus = 0.0;
};

}  // namespace discnn::loss
