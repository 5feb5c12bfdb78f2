#include "discnn/loss.hpp"

#include <cmath>

namespace discnn::loss {

void N2OConfig::validate(int embedding_width) const {
    if (!(margin > 0.0)) throw ConfigError("n2o: margin must be positive");
    if (!(neg_weight > 0.0)) throw ConfigError("n2o: neg_weight must be positive");
    if (positive_variant == PosVariant::CenterPull) {
        if (center.size() != static_cast<std::size_t>(embedding_width)) {
            throw ConfigError("n2o: center length " + std::to_string(center.size()) +
                              " does not match embedding width " + std::to_string(embedding_width));
        }
        if (!(modulus(center) > 0.0)) throw ConfigError("n2o: center must have nonzero modulus");
    }
}

const char* pos_variant_name(PosVariant v) {
    return v == PosVariant::HingeNorm ? "hinge_norm" : "center_pull";
}

PosVariant pos_variant_from_name(const std::string& name) {
    if (name == "hinge_norm") return PosVariant::HingeNorm;
    if (name == "center_pull") return PosVariant::CenterPull;
    throw ConfigError("n2o: unknown positive variant '" + name + "' (expected hinge_norm|center_pull)");
}

double modulus(const double* data, std::size_t n) {
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) sq += data[i] * data[i];
    return std::sqrt(sq);
}

double modulus(const std::vector<double>& embedding) { return modulus(embedding.data(), embedding.size()); }

N2OResult n2o_loss(const num::Tensor& embeddings, const std::vector<bool>& is_positive, const N2OConfig& cfg) {
    if (embeddings.rank() != 2) {
        throw ShapeError("n2o: expected rank-2 embeddings [batch, width], got " + num::shape_str(embeddings.shape()));
    }
    const int n = embeddings.dim(0), e = embeddings.dim(1);
    if (n == 0) throw ConfigError("n2o: empty batch");
    if (is_positive.size() != static_cast<std::size_t>(n)) {
        throw ShapeError("n2o: " + std::to_string(is_positive.size()) + " flags for batch of " + std::to_string(n));
    }
    cfg.validate(e);

    N2OResult result;
    result.grad = num::Tensor(embeddings.shape());
    for (int i = 0; i < n; ++i) {
        if (is_positive[static_cast<std::size_t>(i)]) {
            ++result.positives;
        } else {
            ++result.negatives;
        }
    }

    double pos_term = 0.0, neg_term = 0.0;
    const double* z = embeddings.data();
    double* g = result.grad.values.data();

    for (int i = 0; i < n; ++i) {
        const double* zi = z + static_cast<std::size_t>(i) * e;
        double* gi = g + static_cast<std::size_t>(i) * e;
        const double norm = modulus(zi, static_cast<std::size_t>(e));
        if (is_positive[static_cast<std::size_t>(i)]) {
            result.mean_positive_modulus += norm;
            if (cfg.positive_variant == PosVariant::HingeNorm) {
                const double gap = cfg.margin - norm;
                if (gap > 0.0) {
                    pos_term += gap * gap;
                    // d/dz (m - |z|)^2 = -2 (m - |z|) z / |z|; at the origin the
                    // direction is undefined and the subgradient 0 is used.
                    if (norm > 0.0) {
                        const double scale = -2.0 * gap / norm / result.positives;
                        for (int j = 0; j < e; ++j) gi[j] += scale * zi[j];
                    }
                }
            } else {  // CenterPull
                double dist_sq = 0.0;
                for (int j = 0; j < e; ++j) {
                    const double d = zi[j] - cfg.center[static_cast<std::size_t>(j)];
                    dist_sq += d * d;
                    gi[j] += 2.0 * d / result.positives;
                }
                pos_term += dist_sq;
            }
        } else {
            result.mean_negative_modulus += norm;
            neg_term += norm * norm;
            const double scale = 2.0 * cfg.neg_weight / result.negatives;
            for (int j = 0; j < e; ++j) gi[j] += scale * zi[j];
        }
    }

    if (result.positives > 0) {
        result.loss += pos_term / result.positives;
        result.mean_positive_modulus /= result.positives;
    }
    if (result.negatives > 0) {
        result.loss += cfg.neg_weight * neg_term / result.negatives;
        result.mean_negative_modulus /= result.negatives;
    }
    return result;
}

Predicted classify(double modulus_value, double tau) {
    if (tau < 0.0) throw ConfigError("classify: threshold must be non-negative, got " + std::to_string(tau));
    return modulus_value > tau ? Predicted::Positive : Predicted::Negative;
}

}  // namespace discnn::loss
