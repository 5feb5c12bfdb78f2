#include "discnn/detect.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "discnn/loss.hpp"

namespace discnn::detect {

PatchGrid partition(const num::Tensor& image, int patch_px) {
    if (image.rank() != 3 || image.dim(0) != 3) {
        throw ShapeError("partition: expected [3,H,W] image, got " + num::shape_str(image.shape()));
    }
    if (patch_px < 1) throw ConfigError("partition: patch size must be positive");
    const int h = image.dim(1), w = image.dim(2);
    if (h % patch_px != 0 || w % patch_px != 0) {
        throw ShapeError("partition: image " + std::to_string(h) + "x" + std::to_string(w) +
                         " is not a multiple of patch size " + std::to_string(patch_px) + "; crop to " +
                         std::to_string(h - h % patch_px) + "x" + std::to_string(w - w % patch_px) + " first");
    }

    PatchGrid grid;
    grid.rows = h / patch_px;
    grid.cols = w / patch_px;
    grid.patch_px = patch_px;
    grid.patches.reserve(static_cast<std::size_t>(grid.rows) * grid.cols);
    grid.offsets.reserve(grid.patches.capacity());

    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            num::Tensor patch({3, patch_px, patch_px});
            for (int ch = 0; ch < 3; ++ch) {
                for (int y = 0; y < patch_px; ++y) {
                    const std::size_t src =
                        (static_cast<std::size_t>(ch) * h + static_cast<std::size_t>(r) * patch_px + y) *
                            static_cast<std::size_t>(w) +
                        static_cast<std::size_t>(c) * patch_px;
                    std::copy_n(image.values.data() + src, static_cast<std::size_t>(patch_px),
                                patch.values.data() +
                                    (static_cast<std::size_t>(ch) * patch_px + y) * static_cast<std::size_t>(patch_px));
                }
            }
            grid.patches.push_back(std::move(patch));
            grid.offsets.emplace_back(r * patch_px, c * patch_px);
        }
    }
    return grid;
}

num::Tensor reassemble(const PatchGrid& grid) {
    if (grid.patches.size() != static_cast<std::size_t>(grid.rows) * grid.cols) {
        throw ShapeError("reassemble: patch count " + std::to_string(grid.patches.size()) + " does not equal rows*cols");
    }
    const int h = grid.rows * grid.patch_px, w = grid.cols * grid.patch_px;
    num::Tensor image({3, h, w});
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            const num::Tensor& patch = grid.patches[static_cast<std::size_t>(r) * grid.cols + c];
            for (int ch = 0; ch < 3; ++ch) {
                for (int y = 0; y < grid.patch_px; ++y) {
                    const std::size_t dst =
                        (static_cast<std::size_t>(ch) * h + static_cast<std::size_t>(r) * grid.patch_px + y) *
                            static_cast<std::size_t>(w) +
                        static_cast<std::size_t>(c) * grid.patch_px;
                    std::copy_n(patch.values.data() + (static_cast<std::size_t>(ch) * grid.patch_px + y) *
                                                          static_cast<std::size_t>(grid.patch_px),
                                static_cast<std::size_t>(grid.patch_px), image.values.data() + dst);
                }
            }
        }
    }
    return image;
}

num::Tensor center_crop(const num::Tensor& image, int patch_px) {
    if (image.rank() != 3 || image.dim(0) != 3) {
        throw ShapeError("center_crop: expected [3,H,W] image, got " + num::shape_str(image.shape()));
    }
    if (patch_px < 1) throw ConfigError("center_crop: patch size must be positive");
    const int h = image.dim(1), w = image.dim(2);
    const int ch_ = h - h % patch_px, cw = w - w % patch_px;
    if (ch_ < patch_px || cw < patch_px) {
        throw ShapeError("center_crop: image " + std::to_string(h) + "x" + std::to_string(w) +
                         " is smaller than one patch of " + std::to_string(patch_px));
    }
    if (ch_ == h && cw == w) return image;
    const int y0 = (h - ch_) / 2, x0 = (w - cw) / 2;
    num::Tensor out({3, ch_, cw});
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < ch_; ++y) {
            const std::size_t src = (static_cast<std::size_t>(c) * h + y0 + y) * static_cast<std::size_t>(w) + x0;
            std::copy_n(image.values.data() + src, static_cast<std::size_t>(cw),
                        out.values.data() + (static_cast<std::size_t>(c) * ch_ + y) * static_cast<std::size_t>(cw));
        }
    }
    return out;
}

DetectionResult score_grid(models::Model& model, const PatchGrid& grid) {
    if (grid.patches.empty()) throw ConfigError("score_grid: empty grid");
    if (grid.patch_px != model.spec().input.height || grid.patch_px != model.spec().input.width) {
        throw ShapeError("score_grid: patch size " + std::to_string(grid.patch_px) +
                         " does not match model input " + std::to_string(model.spec().input.height) + "x" +
                         std::to_string(model.spec().input.width));
    }
    DetectionResult result;
    result.rows = grid.rows;
    result.cols = grid.cols;
    result.scores.reserve(grid.patches.size());

    const std::size_t chunk = 16;
    for (std::size_t begin = 0; begin < grid.patches.size(); begin += chunk) {
        const std::size_t end = std::min(grid.patches.size(), begin + chunk);
        num::Tensor batch({static_cast<int>(end - begin), 3, grid.patch_px, grid.patch_px});
        const std::size_t sample = grid.patches[0].size();
        for (std::size_t i = begin; i < end; ++i) {
            std::copy_n(grid.patches[i].values.data(), sample, batch.values.data() + (i - begin) * sample);
        }
        const num::Tensor embeddings = model.forward_embed(batch, num::BnMode::Eval);
        const int width = embeddings.dim(1);
        for (std::size_t i = begin; i < end; ++i) {
            result.scores.push_back(
                loss::modulus(embeddings.data() + (i - begin) * static_cast<std::size_t>(width),
                              static_cast<std::size_t>(width)));
        }
    }
    return result;
}

void rank_and_select(DetectionResult& result, double tau) {
    if (tau < 0.0) throw ConfigError("rank_and_select: threshold must be non-negative");
    result.ranking.resize(result.scores.size());
    for (std::size_t i = 0; i < result.ranking.size(); ++i) result.ranking[i] = static_cast<int>(i);
    std::stable_sort(result.ranking.begin(), result.ranking.end(), [&](int a, int b) {
        return result.scores[static_cast<std::size_t>(a)] > result.scores[static_cast<std::size_t>(b)];
    });
    result.selected.clear();
    for (int idx : result.ranking) {
        if (result.scores[static_cast<std::size_t>(idx)] > tau) {
            result.selected.emplace_back(idx / result.cols, idx % result.cols);
        }
    }
    std::sort(result.selected.begin(), result.selected.end());
    result.tau = tau;
}

ThresholdSuggestion suggest_threshold(const std::vector<double>& scores) {
    if (scores.size() < 2) throw ConfigError("suggest_threshold: need at least 2 patch scores");
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    ThresholdSuggestion suggestion;
    double best_gap = 0.0;
    double best_mid = 0.0;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const double gap = sorted[i] - sorted[i + 1];
        if (gap > best_gap) {
            best_gap = gap;
            best_mid = 0.5 * (sorted[i] + sorted[i + 1]);
        }
    }
    if (best_gap == 0.0) return suggestion;  // all scores equal: no gap to cut
    suggestion.tau = best_mid;
    suggestion.gap = best_gap;
    return suggestion;
}

num::Tensor annotate(const num::Tensor& image, const DetectionResult& result, int patch_px) {
    num::Tensor out = image;
    const int h = image.dim(1), w = image.dim(2);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    auto paint = [&](int y, int x) {
        if (y < 0 || y >= h || x < 0 || x >= w) return;
        const std::size_t at = static_cast<std::size_t>(y) * w + x;
        out.values[at] = 1.0;              // red outline
        out.values[plane + at] = 0.05;
        out.values[2 * plane + at] = 0.05;
    };
    const int border = 2;
    for (const auto& [row, col] : result.selected) {
        const int y0 = row * patch_px, x0 = col * patch_px;
        for (int b = 0; b < border; ++b) {
            for (int x = x0; x < x0 + patch_px; ++x) {
                paint(y0 + b, x);
                paint(y0 + patch_px - 1 - b, x);
            }
            for (int y = y0; y < y0 + patch_px; ++y) {
                paint(y, x0 + b);
                paint(y, x0 + patch_px - 1 - b);
            }
        }
    }
    return out;
}

std::string detection_csv(const DetectionResult& result) {
    std::ostringstream os;
    os.precision(17);
    os << "row,col,modulus,rank,selected\n";
    std::vector<int> rank_of(result.scores.size(), -1);
    for (std::size_t r = 0; r < result.ranking.size(); ++r) {
        rank_of[static_cast<std::size_t>(result.ranking[r])] = static_cast<int>(r);
    }
    for (std::size_t i = 0; i < result.scores.size(); ++i) {
        const int row = static_cast<int>(i) / result.cols;
        const int col = static_cast<int>(i) % result.cols;
        const bool selected =
            std::find(result.selected.begin(), result.selected.end(), std::make_pair(row, col)) !=
            result.selected.end();
        os << row << ',' << col << ',' << result.scores[i] << ',' << rank_of[i] << ',' << (selected ? 1 : 0) << '\n';
    }
    return os.str();
}

}  // namespace discnn::detect
