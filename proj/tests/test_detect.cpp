#include "doctest.h"

#include "discnn/dataset.hpp"
#include "discnn/detect.hpp"
#include "test_support.hpp"

using namespace discnn;
using namespace discnn::detect;
using models::ArchitectureSpec;
using models::LayerSpec;
using models::Model;
using num::RngStream;
using num::Tensor;

namespace {

ArchitectureSpec flat96_arch() {
    ArchitectureSpec spec;
    spec.name = "flat96";
    spec.input = {3, 96, 96};
    spec.layers.push_back(LayerSpec::flatten());
    spec.layers.push_back(LayerSpec::fc(4));
    return spec;
}

Tensor random_image(int h, int w, std::uint64_t seed) {
    RngStream rng(seed);
    Tensor img({3, h, w});
    testsupport::fill_uniform(img.values, rng, 0.0, 1.0);
    return img;
}

}  // namespace

TEST_CASE("partition of a single patch equals the image") {
    const Tensor img = random_image(96, 96, 1);
    const PatchGrid grid = partition(img, 96);
    CHECK(grid.rows == 1);
    CHECK(grid.cols == 1);
    REQUIRE(grid.patches.size() == 1);
    CHECK(grid.patches[0].values == img.values);
    CHECK(grid.offsets[0] == std::pair<int, int>{0, 0});
}

TEST_CASE("a 288x480 image partitions into a 3x5 grid of 15 patches") {
    const Tensor img = random_image(288, 480, 2);
    const PatchGrid grid = partition(img, 96);
    CHECK(grid.rows == 3);
    CHECK(grid.cols == 5);
    CHECK(grid.patches.size() == 15);
    // row-major offsets
    CHECK(grid.offsets[0] == std::pair<int, int>{0, 0});
    CHECK(grid.offsets[4] == std::pair<int, int>{0, 384});
    CHECK(grid.offsets[5] == std::pair<int, int>{96, 0});
}

TEST_CASE("reassembling the grid reproduces the image exactly") {
    const Tensor img = random_image(192, 288, 3);
    const PatchGrid grid = partition(img, 96);
    const Tensor back = reassemble(grid);
    REQUIRE(back.shape() == img.shape());
    CHECK(back.values == img.values);
}

TEST_CASE("partition rejects non-multiple dimensions naming the crop") {
    const Tensor img = random_image(300, 480, 4);
    CHECK_THROWS_WITH_AS(partition(img, 96), doctest::Contains("288x480"), ShapeError);
}

TEST_CASE("center_crop produces the largest multiple-sized interior") {
    const Tensor img = random_image(300, 485, 5);
    const Tensor cropped = center_crop(img, 96);
    CHECK(cropped.shape() == std::vector<int>{3, 288, 480});
    // interior pixel correspondence: offset (6, 2)
    CHECK(cropped.at3(0, 0, 0) == img.at3(0, 6, 2));
    CHECK_NOTHROW(partition(cropped, 96));
    CHECK_THROWS_AS(center_crop(random_image(50, 50, 6), 96), ShapeError);
}

TEST_CASE("score_grid gives one shared score on an all-black image") {
    RngStream rng(7);
    Model model = Model::build(flat96_arch(), rng);
    const Tensor img({3, 192, 288});  // zeros
    const PatchGrid grid = partition(img, 96);
    DetectionResult result = score_grid(model, grid);
    REQUIRE(result.scores.size() == 6);
    for (double s : result.scores) CHECK(s == result.scores[0]);
}

TEST_CASE("score_grid rejects a patch size that differs from the model input") {
    RngStream rng(8);
    Model model = Model::build(flat96_arch(), rng);
    const Tensor img = random_image(96, 96, 9);
    const PatchGrid grid = partition(img, 48);
    CHECK_THROWS_AS(score_grid(model, grid), ShapeError);
}

TEST_CASE("rank_and_select sorts descending with row-major tie-break") {
    DetectionResult result;
    result.rows = 2;
    result.cols = 2;
    result.scores = {5.0, 7.0, 7.0, 1.0};
    rank_and_select(result, 4.0);
    CHECK(result.ranking == std::vector<int>{1, 2, 0, 3});
    CHECK(result.selected == std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 0}});
    CHECK(result.tau == 4.0);

    // strict rule: a tau equal to the top score silences everything
    rank_and_select(result, 6.0);
    CHECK(result.selected == std::vector<std::pair<int, int>>{{0, 1}, {1, 0}});
    rank_and_select(result, 7.0);
    CHECK(result.selected.empty());
    rank_and_select(result, 100.0);
    CHECK(result.selected.empty());

    DetectionResult zeros;
    zeros.rows = 1;
    zeros.cols = 3;
    zeros.scores = {0.0, 0.0, 0.0};
    rank_and_select(zeros, 0.0);
    CHECK(zeros.selected.empty());
}

TEST_CASE("selected set shrinks monotonically as tau grows") {
    RngStream rng(10);
    DetectionResult result;
    result.rows = 4;
    result.cols = 5;
    result.scores.resize(20);
    for (double& s : result.scores) s = rng.uniform(0.0, 10.0);

    std::size_t previous = 21;
    for (double tau = 0.0; tau <= 10.0; tau += 0.5) {
        rank_and_select(result, tau);
        CHECK(result.selected.size() <= previous);
        previous = result.selected.size();
    }
}

TEST_CASE("suggest_threshold finds the midpoint of the largest gap") {
    const ThresholdSuggestion s = suggest_threshold({12.0, 11.0, 0.5, 0.3, 0.1});
    REQUIRE(s.tau.has_value());
    CHECK(*s.tau == doctest::Approx(5.75));
    CHECK(s.gap == doctest::Approx(10.5));

    const ThresholdSuggestion no_gap = suggest_threshold({1.0, 1.0});
    CHECK(!no_gap.tau.has_value());

    CHECK_THROWS_AS(suggest_threshold({1.0}), ConfigError);
}

TEST_CASE("annotate outlines selected patches in red") {
    const Tensor img({3, 192, 192});  // black
    DetectionResult result;
    result.rows = 2;
    result.cols = 2;
    result.scores = {1.0, 0.0, 0.0, 0.0};
    rank_and_select(result, 0.5);
    REQUIRE(result.selected == std::vector<std::pair<int, int>>{{0, 0}});

    const Tensor marked = annotate(img, result, 96);
    CHECK(marked.shape() == img.shape());
    CHECK(marked.at3(0, 0, 10) == 1.0);    // top border of patch (0,0) painted red
    CHECK(marked.at3(0, 95, 10) == 1.0);   // bottom border
    CHECK(marked.at3(0, 100, 10) == 0.0);  // outside the selected patch untouched
}

TEST_CASE("detection csv lists every cell with rank and selection flags") {
    DetectionResult result;
    result.rows = 1;
    result.cols = 3;
    result.scores = {0.5, 9.0, 2.0};
    rank_and_select(result, 1.0);
    const std::string csv = detection_csv(result);
    CHECK(csv.find("row,col,modulus,rank,selected") == 0);
    CHECK(csv.find("0,0,0.5,2,0") != std::string::npos);
    CHECK(csv.find("0,1,9,0,1") != std::string::npos);
    CHECK(csv.find("0,2,2,1,1") != std::string::npos);
}
