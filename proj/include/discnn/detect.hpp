#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "discnn/model.hpp"
#include "discnn/tensor.hpp"

namespace discnn::detect {

// Non-overlapping tiling of an image into patch_px x patch_px cells,
// row-major. Pixel extraction is exact; reassemble() inverts it.
struct PatchGrid {
    int rows = 0;
    int cols = 0;
    int patch_px = 0;
    std::vector<num::Tensor> patches;               // row-major
    std::vector<std::pair<int, int>> offsets;       // (y, x) of each patch origin
};

// Image must be [3,H,W] with H and W exact multiples of patch_px; the error
// names the crop that would fit. center_crop below is the helper for that.
PatchGrid partition(const num::Tensor& image, int patch_px = 96);

num::Tensor reassemble(const PatchGrid& grid);

// Largest centered crop whose sides are multiples of patch_px.
num::Tensor center_crop(const num::Tensor& image, int patch_px);

struct DetectionResult {
    int rows = 0;
    int cols = 0;
    std::vector<double> scores;                     // per-patch modulus, row-major
    std::vector<int> ranking;                       // patch indices by descending score
    std::vector<std::pair<int, int>> selected;      // (row, col) with score > tau
    std::optional<double> tau;
};

// One embedding modulus per patch; deterministic per patch (eval mode).
DetectionResult score_grid(models::Model& model, const PatchGrid& grid);

// Sorts descending (ties by row-major index) and selects scores > tau.
void rank_and_select(DetectionResult& result, double tau);

// Largest-gap heuristic: tau at the midpoint of the biggest gap in the
// sorted scores, reported with the gap size so operators can override.
// All-equal scores yield no tau (no-gap signal).
struct ThresholdSuggestion {
    std::optional<double> tau;
    double gap = 0.0;
};

ThresholdSuggestion suggest_threshold(const std::vector<double>& scores);

// Copy of the image with selected patches outlined.
num::Tensor annotate(const num::Tensor& image, const DetectionResult& result, int patch_px);

// row,col,modulus,rank,selected
std::string detection_csv(const DetectionResult& result);

}  // namespace discnn::detect
