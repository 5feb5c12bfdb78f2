#include "discnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace discnn::data {

namespace fs = std::filesystem;

// ------------------------------------------------------------------ STL-10 --

const std::vector<std::string> kStl10Classes = {"airplane", "bird", "car",    "cat",  "deer",
                                                "dog",      "horse", "monkey", "ship", "truck"};

namespace {

constexpr int kStlSide = 96;
constexpr std::size_t kStlPlane = static_cast<std::size_t>(kStlSide) * kStlSide;   // 9216
constexpr std::size_t kStlRecord = 3 * kStlPlane;                                  // 27648

std::string read_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot open '" + path + "' for reading");
    return std::string((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError("cannot open '" + path + "' for writing");
    file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!file) throw DataError("short write to '" + path + "'");
}

}  // namespace

std::vector<LabeledImage> with_hflip(const std::vector<LabeledImage>& images) {
    std::vector<LabeledImage> out;
    out.reserve(images.size() * 2);
    for (const LabeledImage& img : images) {
        out.push_back(img);
        LabeledImage flipped = img;
        flipped.id += "-flip";
        const int h = img.pixels.dim(1), w = img.pixels.dim(2);
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    flipped.pixels.at3(c, y, x) = img.pixels.at3(c, y, w - 1 - x);
                }
            }
        }
        out.push_back(std::move(flipped));
    }
    return out;
}

std::vector<LabeledImage> load_stl10(const std::string& data_path, const std::string& label_path) {
    const std::string data = read_file(data_path);
    const std::string labels = read_file(label_path);

    if (data.size() % kStlRecord != 0) {
        throw DataError("stl10 data '" + data_path + "': size " + std::to_string(data.size()) +
                        " bytes is not a multiple of the " + std::to_string(kStlRecord) + "-byte image record");
    }
    const std::size_t count = data.size() / kStlRecord;
    if (labels.size() != count) {
        throw DataError("stl10 labels '" + label_path + "': " + std::to_string(labels.size()) + " bytes for " +
                        std::to_string(count) + " images");
    }

    // ids carry the file stem so train- and test-pool ids never collide
    std::string stem = fs::path(data_path).stem().string();
    if (stem.empty()) stem = "stl10";

    std::vector<LabeledImage> images;
    images.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned char label = static_cast<unsigned char>(labels[i]);
        if (label < 1 || label > 10) {
            throw DataError("stl10 labels '" + label_path + "': label byte " + std::to_string(label) +
                            " at offset " + std::to_string(i) + " outside 1..10");
        }
        LabeledImage img;
        img.id = stem + "-" + std::to_string(i);
        img.class_name = kStl10Classes[label - 1];
        img.pixels = num::Tensor({3, kStlSide, kStlSide});
        const unsigned char* rec = reinterpret_cast<const unsigned char*>(data.data()) + i * kStlRecord;
        for (int c = 0; c < 3; ++c) {
            // planes are column-major: byte x*96+y holds pixel (y, x)
            for (int x = 0; x < kStlSide; ++x) {
                for (int y = 0; y < kStlSide; ++y) {
                    img.pixels.at3(c, y, x) = rec[c * kStlPlane + static_cast<std::size_t>(x) * kStlSide + y] / 255.0;
                }
            }
        }
        images.push_back(std::move(img));
    }
    return images;
}

void write_stl10(const std::vector<LabeledImage>& images, const std::string& data_path,
                 const std::string& label_path) {
    std::string data, labels;
    data.reserve(images.size() * kStlRecord);
    labels.reserve(images.size());
    for (const LabeledImage& img : images) {
        const auto it = std::find(kStl10Classes.begin(), kStl10Classes.end(), img.class_name);
        if (it == kStl10Classes.end()) {
            throw ConfigError("write_stl10: class '" + img.class_name + "' is not an stl10 class");
        }
        labels.push_back(static_cast<char>(1 + (it - kStl10Classes.begin())));
        for (int c = 0; c < 3; ++c) {
            for (int x = 0; x < kStlSide; ++x) {
                for (int y = 0; y < kStlSide; ++y) {
                    const double v = img.pixels.at3(c, y, x);
                    const int byte = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
                    data.push_back(static_cast<char>(byte));
                }
            }
        }
    }
    write_file(data_path, data);
    write_file(label_path, labels);
}

DatasetSplit subset(const std::vector<LabeledImage>& train_pool, const std::vector<LabeledImage>& test_pool,
                    const std::string& positive, const std::set<std::string>& negatives,
                    const std::set<std::string>& unseen) {
    std::set<std::string> known;
    for (const auto& img : train_pool) known.insert(img.class_name);
    for (const auto& img : test_pool) known.insert(img.class_name);

    if (negatives.empty()) {
        throw ConfigError(
            "subset: at least one negative class is required; training with two or more negative "
            "classes separates the positive features more reliably");
    }
    auto require_known = [&known](const std::string& name) {
        if (!known.count(name)) throw ConfigError("subset: class '" + name + "' not present in the dataset");
    };
    require_known(positive);
    for (const auto& name : negatives) require_known(name);
    for (const auto& name : unseen) require_known(name);
    if (negatives.count(positive) || unseen.count(positive)) {
        throw ConfigError("subset: positive class '" + positive + "' also listed as negative or unseen");
    }
    for (const auto& name : negatives) {
        if (unseen.count(name)) throw ConfigError("subset: class '" + name + "' listed as both negative and unseen");
    }

    DatasetSplit split;
    if (negatives.size() == 1) {
        split.warnings.push_back(
            "subset: a single negative class was requested; two or more negative classes "
            "separate the positive features more reliably");
    }

    auto role_of = [&](const std::string& name, bool* take) -> Role {
        *take = true;
        if (name == positive) return Role::Positive;
        if (negatives.count(name)) return Role::Negative;
        *take = false;
        return Role::Unseen;
    };

    for (const LabeledImage& img : train_pool) {
        bool take = false;
        const Role role = role_of(img.class_name, &take);
        if (!take) continue;
        LabeledImage copy = img;
        copy.role = role;
        split.manifest[img.class_name].train += 1;
        split.train.push_back(std::move(copy));
    }
    for (const LabeledImage& img : test_pool) {
        bool take = false;
        const Role role = role_of(img.class_name, &take);
        if (take) {
            LabeledImage copy = img;
            copy.role = role;
            split.manifest[img.class_name].test += 1;
            split.test.push_back(std::move(copy));
        } else if (unseen.count(img.class_name)) {
            LabeledImage copy = img;
            copy.role = Role::Unseen;
            split.manifest[img.class_name].unseen += 1;
            split.unseen.push_back(std::move(copy));
        }
    }
    return split;
}

// --------------------------------------------------------------- synthetic --

const std::string kSyntheticPositiveClass = "vehicle";
const std::vector<std::string> kSyntheticNegatives = {"blobs", "branches"};
const std::string kSyntheticSimilarUnseen = "vehicle_variant";
const std::vector<std::string> kSyntheticDisjointUnseen = {"spots", "curves"};

void SyntheticSpec::validate() const {
    if (canvas < 32 || canvas % 2 != 0) throw ConfigError("synthetic: canvas must be even and >= 32");
    if (train_per_class < 0 || test_per_class < 0 || unseen_per_class < 0) {
        throw ConfigError("synthetic: per-class counts must be non-negative");
    }
    if (noise < 0.0 || noise > 0.5) throw ConfigError("synthetic: noise level must be in [0, 0.5]");
    if (scene_count < 0 || scene_rows < 1 || scene_cols < 1) throw ConfigError("synthetic: bad scene geometry");
}

namespace {

struct Rgb {
    double r = 0, g = 0, b = 0;
};

class Painter {
public:
    explicit Painter(int side) : side_(side), img_({3, side, side}) {}

    void fill(Rgb c) {
        for (int y = 0; y < side_; ++y) {
            for (int x = 0; x < side_; ++x) set(x, y, c);
        }
    }

    void rect(double x0, double y0, double x1, double y1, Rgb c) {
        const int ax = std::max(0, static_cast<int>(std::floor(std::min(x0, x1))));
        const int bx = std::min(side_ - 1, static_cast<int>(std::ceil(std::max(x0, x1))));
        const int ay = std::max(0, static_cast<int>(std::floor(std::min(y0, y1))));
        const int by = std::min(side_ - 1, static_cast<int>(std::ceil(std::max(y0, y1))));
        for (int y = ay; y <= by; ++y) {
            for (int x = ax; x <= bx; ++x) set(x, y, c);
        }
    }

    void ellipse(double cx, double cy, double rx, double ry, Rgb c) {
        const int ax = std::max(0, static_cast<int>(std::floor(cx - rx)));
        const int bx = std::min(side_ - 1, static_cast<int>(std::ceil(cx + rx)));
        const int ay = std::max(0, static_cast<int>(std::floor(cy - ry)));
        const int by = std::min(side_ - 1, static_cast<int>(std::ceil(cy + ry)));
        for (int y = ay; y <= by; ++y) {
            for (int x = ax; x <= bx; ++x) {
                const double dx = (x - cx) / rx, dy = (y - cy) / ry;
                if (dx * dx + dy * dy <= 1.0) set(x, y, c);
            }
        }
    }

    // edgeless mass: color fades quadratically into the background
    void soft_ellipse(double cx, double cy, double rx, double ry, Rgb c) {
        const int ax = std::max(0, static_cast<int>(std::floor(cx - rx)));
        const int bx = std::min(side_ - 1, static_cast<int>(std::ceil(cx + rx)));
        const int ay = std::max(0, static_cast<int>(std::floor(cy - ry)));
        const int by = std::min(side_ - 1, static_cast<int>(std::ceil(cy + ry)));
        for (int y = ay; y <= by; ++y) {
            for (int x = ax; x <= bx; ++x) {
                const double dx = (x - cx) / rx, dy = (y - cy) / ry;
                const double t = dx * dx + dy * dy;
                if (t >= 1.0) continue;
                const double alpha = (1.0 - t) * (1.0 - t);
                blend(x, y, c, alpha);
            }
        }
    }

    void disc(double cx, double cy, double radius, Rgb c) { ellipse(cx, cy, radius, radius, c); }

    void line(double x0, double y0, double x1, double y1, double thick, Rgb c) {
        const double half = thick / 2.0;
        const int ax = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - half)));
        const int bx = std::min(side_ - 1, static_cast<int>(std::ceil(std::max(x0, x1) + half)));
        const int ay = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - half)));
        const int by = std::min(side_ - 1, static_cast<int>(std::ceil(std::max(y0, y1) + half)));
        const double dx = x1 - x0, dy = y1 - y0;
        const double len_sq = dx * dx + dy * dy;
        for (int y = ay; y <= by; ++y) {
            for (int x = ax; x <= bx; ++x) {
                double t = len_sq > 0.0 ? ((x - x0) * dx + (y - y0) * dy) / len_sq : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                const double px = x0 + t * dx, py = y0 + t * dy;
                const double dist_sq = (x - px) * (x - px) + (y - py) * (y - py);
                if (dist_sq <= half * half) set(x, y, c);
            }
        }
    }

    void add_noise(num::RngStream& rng, double level) {
        if (level <= 0.0) return;
        for (double& v : img_.values) v += rng.uniform(-level, level);
    }

    void clamp() {
        for (double& v : img_.values) v = std::clamp(v, 0.0, 1.0);
    }

    num::Tensor take() { return std::move(img_); }

private:
    void set(int x, int y, Rgb c) {
        const std::size_t plane = static_cast<std::size_t>(side_) * side_;
        const std::size_t at = static_cast<std::size_t>(y) * side_ + x;
        img_.values[at] = c.r;
        img_.values[plane + at] = c.g;
        img_.values[2 * plane + at] = c.b;
    }

    void blend(int x, int y, Rgb c, double alpha) {
        const std::size_t plane = static_cast<std::size_t>(side_) * side_;
        const std::size_t at = static_cast<std::size_t>(y) * side_ + x;
        img_.values[at] = alpha * c.r + (1.0 - alpha) * img_.values[at];
        img_.values[plane + at] = alpha * c.g + (1.0 - alpha) * img_.values[plane + at];
        img_.values[2 * plane + at] = alpha * c.b + (1.0 - alpha) * img_.values[2 * plane + at];
    }

    int side_;
    num::Tensor img_;
};

Rgb background_color(num::RngStream& rng) {
    const double base = rng.uniform(0.58, 0.85);
    return {std::clamp(base + rng.uniform(-0.03, 0.03), 0.0, 1.0),
            std::clamp(base + rng.uniform(-0.03, 0.03), 0.0, 1.0),
            std::clamp(base + rng.uniform(-0.03, 0.03), 0.0, 1.0)};
}

Rgb motif_color(num::RngStream& rng) { return {rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5)}; }

// Shared body + wheels sub-motif of the vehicle-like classes.
struct VehicleFrame {
    double cx, cy, w, h, wheel_r;
};

VehicleFrame draw_vehicle_base(Painter& p, num::RngStream& rng, double scale) {
    VehicleFrame f;
    f.w = rng.uniform(44, 62) * scale;
    f.h = rng.uniform(18, 26) * scale;
    f.cx = 48 * scale + rng.uniform(-6, 6) * scale;
    f.cy = 52 * scale + rng.uniform(-5, 5) * scale;
    f.wheel_r = rng.uniform(6, 9) * scale;

    const Rgb body = motif_color(rng);
    p.rect(f.cx - f.w / 2, f.cy - f.h / 2, f.cx + f.w / 2, f.cy + f.h / 2, body);

    const Rgb wheel = {rng.uniform(0.02, 0.16), rng.uniform(0.02, 0.16), rng.uniform(0.02, 0.16)};
    const double wheel_dx = f.w / 2 - f.wheel_r - 2 * scale;
    const double wheel_y = f.cy + f.h / 2;
    p.disc(f.cx - wheel_dx, wheel_y, f.wheel_r, wheel);
    p.disc(f.cx + wheel_dx, wheel_y, f.wheel_r, wheel);
    return f;
}

void draw_vehicle(Painter& p, num::RngStream& rng, double scale) {
    const VehicleFrame f = draw_vehicle_base(p, rng, scale);
    const Rgb window = {rng.uniform(0.78, 0.96), rng.uniform(0.78, 0.96), rng.uniform(0.78, 0.96)};
    const double ww = f.w * rng.uniform(0.3, 0.45);
    const double wh = f.h * rng.uniform(0.35, 0.5);
    const double wx = f.cx + f.w * rng.uniform(-0.18, 0.18);
    const double wy = f.cy - f.h / 2 + wh / 2 + 2 * scale;
    p.rect(wx - ww / 2, wy - wh / 2, wx + ww / 2, wy + wh / 2, window);
}

void draw_vehicle_variant(Painter& p, num::RngStream& rng, double scale) {
    const VehicleFrame f = draw_vehicle_base(p, rng, scale);
    // cargo block above the body instead of a window
    const Rgb cargo = motif_color(rng);
    const double cw = f.w * rng.uniform(0.5, 0.7);
    const double ch = rng.uniform(6, 10) * scale;
    const double cx = f.cx + f.w * rng.uniform(-0.1, 0.1);
    p.rect(cx - cw / 2, f.cy - f.h / 2 - ch, cx + cw / 2, f.cy - f.h / 2, cargo);
}

void draw_blobs(Painter& p, num::RngStream& rng, double scale) {
    // soft amorphous masses: no sharp edges, nothing at wheel or body scale
    const int count = 4 + static_cast<int>(rng.uniform_int(3));
    for (int i = 0; i < count; ++i) {
        const Rgb color = {rng.uniform(0.1, 0.55), rng.uniform(0.1, 0.55), rng.uniform(0.1, 0.55)};
        p.soft_ellipse(rng.uniform(14, 82) * scale, rng.uniform(14, 82) * scale, rng.uniform(10, 16) * scale,
                       rng.uniform(10, 16) * scale, color);
    }
}

void draw_branches(Painter& p, num::RngStream& rng, double scale) {
    const int count = 5 + static_cast<int>(rng.uniform_int(2));
    double x = rng.uniform(14, 82) * scale;
    double y = rng.uniform(14, 82) * scale;
    double angle = rng.uniform(0, 2 * 3.14159265358979323846);
    for (int i = 0; i < count; ++i) {
        const double len = rng.uniform(22, 34) * scale;
        const double nx = std::clamp(x + len * std::cos(angle), 4.0 * scale, 92.0 * scale);
        const double ny = std::clamp(y + len * std::sin(angle), 4.0 * scale, 92.0 * scale);
        p.line(x, y, nx, ny, rng.uniform(2.2, 3.2) * scale, motif_color(rng));
        x = nx;
        y = ny;
        angle += rng.uniform(-1.1, 1.1);
    }
}

void draw_spots(Painter& p, num::RngStream& rng, double scale) {
    // small bright discs, distinct in size and brightness from the dark wheels
    const int count = 10 + static_cast<int>(rng.uniform_int(3));
    for (int i = 0; i < count; ++i) {
        const Rgb bright = {rng.uniform(0.2, 0.5), rng.uniform(0.2, 0.5), rng.uniform(0.2, 0.5)};
        p.disc(rng.uniform(8, 88) * scale, rng.uniform(8, 88) * scale, rng.uniform(2, 3) * scale, bright);
    }
}

void draw_curves(Painter& p, num::RngStream& rng, double scale) {
    // light meandering strokes: no long straight edges, no mass, and no dark
    // curved material that could read as a wheel fragment
    const int strokes = 1 + static_cast<int>(rng.uniform_int(2));
    for (int s = 0; s < strokes; ++s) {
        double x = rng.uniform(12, 84) * scale;
        double y = rng.uniform(12, 84) * scale;
        double angle = rng.uniform(0, 2 * 3.14159265358979323846);
        const double thick = rng.uniform(2.0, 2.8) * scale;
        const Rgb color = {rng.uniform(0.25, 0.5), rng.uniform(0.25, 0.5), rng.uniform(0.25, 0.5)};
        const int segments = 7 + static_cast<int>(rng.uniform_int(3));
        for (int i = 0; i < segments; ++i) {
            const double len = rng.uniform(7, 11) * scale;
            const double nx = std::clamp(x + len * std::cos(angle), 4.0 * scale, 92.0 * scale);
            const double ny = std::clamp(y + len * std::sin(angle), 4.0 * scale, 92.0 * scale);
            p.line(x, y, nx, ny, thick, color);
            x = nx;
            y = ny;
            angle += rng.uniform(-0.45, 0.45) + 0.25;  // steady drift keeps it curving
        }
    }
}

}  // namespace

num::Tensor render_family(const std::string& family, num::RngStream& rng, int canvas, double noise) {
    Painter painter(canvas);
    painter.fill(background_color(rng));
    const double scale = canvas / 96.0;
    if (family == "vehicle") {
        draw_vehicle(painter, rng, scale);
    } else if (family == "vehicle_variant") {
        draw_vehicle_variant(painter, rng, scale);
    } else if (family == "blobs") {
        draw_blobs(painter, rng, scale);
    } else if (family == "branches") {
        draw_branches(painter, rng, scale);
    } else if (family == "spots") {
        draw_spots(painter, rng, scale);
    } else if (family == "curves") {
        draw_curves(painter, rng, scale);
    } else {
        throw ConfigError("render_family: unknown family '" + family + "'");
    }
    painter.add_noise(rng, noise);
    painter.clamp();
    return painter.take();
}

namespace {

Role synthetic_role(const std::string& family) {
    if (family == kSyntheticPositiveClass) return Role::Positive;
    for (const auto& n : kSyntheticNegatives) {
        if (family == n) return Role::Negative;
    }
    return Role::Unseen;
}

}  // namespace

DatasetSplit generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const num::RngStream root(spec.seed);

    DatasetSplit split;
    const std::vector<std::string> train_families = {kSyntheticPositiveClass, kSyntheticNegatives[0],
                                                     kSyntheticNegatives[1]};
    std::vector<std::string> unseen_families = {kSyntheticSimilarUnseen};
    for (const auto& f : kSyntheticDisjointUnseen) unseen_families.push_back(f);

    // stream ids: class slot in bits 40+, split slot in bits 32+, index below
    auto stream_id = [](std::uint64_t class_slot, std::uint64_t split_slot, std::uint64_t index) {
        return (class_slot << 40) | (split_slot << 32) | index;
    };

    for (std::size_t ci = 0; ci < train_families.size(); ++ci) {
        const std::string& family = train_families[ci];
        const Role role = synthetic_role(family);
        for (int i = 0; i < spec.train_per_class; ++i) {
            num::RngStream rng = root.fork(stream_id(ci, 0, static_cast<std::uint64_t>(i)));
            LabeledImage img;
            img.id = family + "-train-" + std::to_string(i);
            img.class_name = family;
            img.role = role;
            img.pixels = render_family(family, rng, spec.canvas, spec.noise);
            split.manifest[family].train += 1;
            split.train.push_back(std::move(img));
        }
        for (int i = 0; i < spec.test_per_class; ++i) {
            num::RngStream rng = root.fork(stream_id(ci, 1, static_cast<std::uint64_t>(i)));
            LabeledImage img;
            img.id = family + "-test-" + std::to_string(i);
            img.class_name = family;
            img.role = role;
            img.pixels = render_family(family, rng, spec.canvas, spec.noise);
            split.manifest[family].test += 1;
            split.test.push_back(std::move(img));
        }
    }

    for (std::size_t ui = 0; ui < unseen_families.size(); ++ui) {
        const std::string& family = unseen_families[ui];
        for (int i = 0; i < spec.unseen_per_class; ++i) {
            num::RngStream rng = root.fork(stream_id(8 + ui, 2, static_cast<std::uint64_t>(i)));
            LabeledImage img;
            img.id = family + "-unseen-" + std::to_string(i);
            img.class_name = family;
            img.role = Role::Unseen;
            img.pixels = render_family(family, rng, spec.canvas, spec.noise);
            split.manifest[family].unseen += 1;
            split.unseen.push_back(std::move(img));
        }
    }

    // composite scenes with one planted positive patch
    const std::vector<std::string> background = {"blobs", "branches", "spots", "curves"};
    for (int s = 0; s < spec.scene_count; ++s) {
        num::RngStream rng = root.fork(stream_id(16, 3, static_cast<std::uint64_t>(s)));
        Scene scene;
        scene.id = "scene-" + std::to_string(s);
        scene.rows = spec.scene_rows;
        scene.cols = spec.scene_cols;
        scene.planted_row = static_cast<int>(rng.uniform_int(spec.scene_rows));
        scene.planted_col = static_cast<int>(rng.uniform_int(spec.scene_cols));
        scene.image = num::Tensor({3, spec.scene_rows * spec.canvas, spec.scene_cols * spec.canvas});
        const int big_h = spec.scene_rows * spec.canvas;
        const int big_w = spec.scene_cols * spec.canvas;
        for (int r = 0; r < spec.scene_rows; ++r) {
            for (int c = 0; c < spec.scene_cols; ++c) {
                num::RngStream cell_rng = rng.fork(static_cast<std::uint64_t>(r) * 64 + c);
                const bool planted = r == scene.planted_row && c == scene.planted_col;
                const std::string family =
                    planted ? kSyntheticPositiveClass
                            : background[static_cast<std::size_t>(cell_rng.uniform_int(
                                  static_cast<std::int64_t>(background.size())))];
                const num::Tensor patch = render_family(family, cell_rng, spec.canvas, spec.noise);
                for (int ch = 0; ch < 3; ++ch) {
                    for (int y = 0; y < spec.canvas; ++y) {
                        const std::size_t dst = (static_cast<std::size_t>(ch) * big_h + r * spec.canvas + y) *
                                                    static_cast<std::size_t>(big_w) +
                                                static_cast<std::size_t>(c) * spec.canvas;
                        const std::size_t src = (static_cast<std::size_t>(ch) * spec.canvas + y) *
                                                static_cast<std::size_t>(spec.canvas);
                        std::memcpy(scene.image.values.data() + dst, patch.values.data() + src,
                                    static_cast<std::size_t>(spec.canvas) * sizeof(double));
                    }
                }
            }
        }
        split.scenes.push_back(std::move(scene));
    }
    return split;
}

std::uint64_t dataset_hash(const DatasetSplit& split) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    auto mix_byte = [&hash](unsigned char byte) {
        hash ^= byte;
        hash *= 0x100000001b3ULL;
    };
    auto mix_string = [&](const std::string& s) {
        for (unsigned char ch : s) mix_byte(ch);
        mix_byte(0);
    };
    auto mix_image = [&](const LabeledImage& img) {
        mix_string(img.id);
        mix_string(img.class_name);
        mix_string(role_name(img.role));
        for (double v : img.pixels.values) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            for (int b = 0; b < 8; ++b) mix_byte(static_cast<unsigned char>((bits >> (8 * b)) & 0xff));
        }
    };
    for (const auto& img : split.train) mix_image(img);
    for (const auto& img : split.test) mix_image(img);
    for (const auto& img : split.unseen) mix_image(img);
    for (const auto& scene : split.scenes) {
        mix_string(scene.id);
        for (double v : scene.image.values) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            for (int b = 0; b < 8; ++b) mix_byte(static_cast<unsigned char>((bits >> (8 * b)) & 0xff));
        }
    }
    return hash;
}

// ------------------------------------------------------------------- PPM ----

void write_ppm(const std::string& path, const num::Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 3) {
        throw ShapeError("write_ppm: expected [3,H,W] image, got " + num::shape_str(image.shape()));
    }
    const int h = image.dim(1), w = image.dim(2);
    std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.reserve(out.size() + static_cast<std::size_t>(3) * h * w);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (std::size_t i = 0; i < plane; ++i) {
        for (int c = 0; c < 3; ++c) {
            const double v = image.values[static_cast<std::size_t>(c) * plane + i];
            out.push_back(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
        }
    }
    write_file(path, out);
}

num::Tensor read_ppm(const std::string& path) {
    const std::string bytes = read_file(path);
    std::size_t pos = 0;
    auto token = [&]() -> std::string {
        while (pos < bytes.size()) {
            if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (start == pos) throw DataError("ppm '" + path + "': truncated header");
        return bytes.substr(start, pos - start);
    };

    if (token() != "P6") throw DataError("ppm '" + path + "': not a binary P6 file");
    const int w = std::stoi(token());
    const int h = std::stoi(token());
    const int maxval = std::stoi(token());
    if (w <= 0 || h <= 0) throw DataError("ppm '" + path + "': bad dimensions");
    if (maxval != 255) throw DataError("ppm '" + path + "': only maxval 255 is supported");
    ++pos;  // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(3) * w * h;
    if (bytes.size() - pos < need) {
        throw DataError("ppm '" + path + "': expected " + std::to_string(need) + " pixel bytes, have " +
                        std::to_string(bytes.size() - pos));
    }
    num::Tensor image({3, h, w});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (std::size_t i = 0; i < plane; ++i) {
        for (int c = 0; c < 3; ++c) {
            image.values[static_cast<std::size_t>(c) * plane + i] =
                static_cast<unsigned char>(bytes[pos + i * 3 + static_cast<std::size_t>(c)]) / 255.0;
        }
    }
    return image;
}

void write_dataset(const DatasetSplit& split, const std::string& dir) {
    fs::create_directories(dir);
    std::ostringstream manifest;
    manifest << "class,role,train,test,unseen\n";
    std::map<std::string, Role> roles;
    for (const auto& img : split.train) roles[img.class_name] = img.role;
    for (const auto& img : split.unseen) roles.emplace(img.class_name, Role::Unseen);
    for (const auto& [name, counts] : split.manifest) {
        const auto it = roles.find(name);
        manifest << name << ',' << (it == roles.end() ? "unseen" : role_name(it->second)) << ',' << counts.train
                 << ',' << counts.test << ',' << counts.unseen << '\n';
    }
    write_file((fs::path(dir) / "manifest.csv").string(), manifest.str());

    auto dump = [&](const std::vector<LabeledImage>& images, const char* subdir) {
        if (images.empty()) return;
        fs::create_directories(fs::path(dir) / subdir);
        for (const auto& img : images) {
            write_ppm((fs::path(dir) / subdir / (img.id + ".ppm")).string(), img.pixels);
        }
    };
    dump(split.train, "train");
    dump(split.test, "test");
    dump(split.unseen, "unseen");

    if (!split.scenes.empty()) {
        fs::create_directories(fs::path(dir) / "scenes");
        std::ostringstream scenes_csv;
        scenes_csv << "id,rows,cols,planted_row,planted_col\n";
        for (const auto& scene : split.scenes) {
            write_ppm((fs::path(dir) / "scenes" / (scene.id + ".ppm")).string(), scene.image);
            scenes_csv << scene.id << ',' << scene.rows << ',' << scene.cols << ',' << scene.planted_row << ','
                       << scene.planted_col << '\n';
        }
        write_file((fs::path(dir) / "scenes" / "scenes.csv").string(), scenes_csv.str());
    }
}

}  // namespace discnn::data
