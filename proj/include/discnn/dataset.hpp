#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "discnn/common.hpp"
#include "discnn/tensor.hpp"

namespace discnn::data {

// One 96x96 RGB sample with pixel values in [0,1].
struct LabeledImage {
    std::string id;
    num::Tensor pixels;  // [3, H, W]
    std::string class_name;
    Role role = Role::Unseen;
};

struct ClassCounts {
    int train = 0;
    int test = 0;
    int unseen = 0;
};

// A composite detection scene: rows x cols tiling of patch-sized cells with
// exactly one planted positive patch.
struct Scene {
    std::string id;
    num::Tensor image;  // [3, rows*patch, cols*patch]
    int rows = 0;
    int cols = 0;
    int planted_row = 0;
    int planted_col = 0;
};

struct DatasetSplit {
    std::vector<LabeledImage> train;
    std::vector<LabeledImage> test;
    std::vector<LabeledImage> unseen;  // held-out classes, evaluation only
    std::map<std::string, ClassCounts> manifest;
    std::vector<Scene> scenes;
    std::vector<std::string> warnings;
};

// ------------------------------------------------------------------ STL-10 --

// Class list in label order; byte label k (1-10) maps to kStl10Classes[k-1].
extern const std::vector<std::string> kStl10Classes;

// STL-10 binary layout: per image 3 channel planes of 96x96 unsigned bytes,
// each plane stored column-major (byte index x*96+y within the plane).
// Pixel values are scaled to [0,1]. Labels are one byte per image in 1..10.
std::vector<LabeledImage> load_stl10(const std::string& data_path, const std::string& label_path);

// Inverse of the loader, for round-trip checks and fixture generation.
void write_stl10(const std::vector<LabeledImage>& images, const std::string& data_path,
                 const std::string& label_path);

// Assigns roles from class names and assembles the experiment split.
// Positive/negative classes populate train and test; unseen classes are
// drawn from the test pool only. Zero negative classes is an error; a single
// one is allowed with a recorded warning (two or more separate the positive
// features more reliably).
DatasetSplit subset(const std::vector<LabeledImage>& train_pool, const std::vector<LabeledImage>& test_pool,
                    const std::string& positive, const std::set<std::string>& negatives,
                    const std::set<std::string>& unseen);

// Optional augmentation: the originals plus a horizontally mirrored copy of
// each image (ids suffixed "-flip"). Off by default everywhere.
std::vector<LabeledImage> with_hflip(const std::vector<LabeledImage>& images);

// --------------------------------------------------------------- synthetic --

// Deterministic synthetic-shapes generator. The positive class renders a
// vehicle-like motif (body rectangle, two dark wheel discs, window); the
// negative families are blob clusters and branch strokes that share no
// positive sub-motif. Unseen families: vehicle_variant keeps the body+wheels
// motif, spots and curves are disjoint from the positive motif.
struct SyntheticSpec {
    std::uint64_t seed = 1;
    int canvas = 96;
    int train_per_class = 50;
    int test_per_class = 50;
    int unseen_per_class = 50;
    double noise = 0.05;
    int scene_count = 10;
    int scene_rows = 3;
    int scene_cols = 5;

    void validate() const;
};

extern const std::string kSyntheticPositiveClass;           // "vehicle"
extern const std::vector<std::string> kSyntheticNegatives;  // blobs, branches
extern const std::string kSyntheticSimilarUnseen;           // "vehicle_variant"
extern const std::vector<std::string> kSyntheticDisjointUnseen;  // spots, curves

DatasetSplit generate_synthetic(const SyntheticSpec& spec);

// Renders a single image of the named family (used for scenes and tests).
num::Tensor render_family(const std::string& family, num::RngStream& rng, int canvas, double noise);

// FNV-1a over class names, roles and pixel bits of every sample; a pure
// function of the generating spec.
std::uint64_t dataset_hash(const DatasetSplit& split);

// ------------------------------------------------------------------- PPM ----

// Binary PPM (P6, maxval 255). Values are quantized by round(v*255).
void write_ppm(const std::string& path, const num::Tensor& image);
num::Tensor read_ppm(const std::string& path);

// Writes train/test/unseen images as PPM plus manifest.csv and scenes.
void write_dataset(const DatasetSplit& split, const std::string& dir);

}  // namespace discnn::data
