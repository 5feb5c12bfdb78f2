// discnn: train, probe, evaluate and run detection with single-positive-class
// CNNs, driven by a JSON config plus command-line overrides.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "discnn/checkpoint.hpp"
#include "discnn/dataset.hpp"
#include "discnn/detect.hpp"
#include "discnn/evaluate.hpp"
#include "discnn/probe.hpp"
#include "discnn/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace discnn;

namespace {

// ------------------------------------------------------------ run config ----

json default_config() {
    return json{
        {"seed", 1},
        {"output_dir", "run"},
        {"data",
         {{"source", "synthetic"},
          {"synthetic",
           {{"seed", 42},
            {"canvas", 96},
            {"train_per_class", 50},
            {"test_per_class", 50},
            {"unseen_per_class", 50},
            {"noise", 0.05},
            {"scene_count", 10},
            {"scene_rows", 3},
            {"scene_cols", 5}}},
          {"stl10",
           {{"train_data", ""}, {"train_labels", ""}, {"test_data", ""}, {"test_labels", ""}}},
          {"positive", data::kSyntheticPositiveClass},
          {"negatives", json::array({"blobs", "branches"})},
          {"unseen", json::array({"vehicle_variant", "spots", "curves"})}}},
        {"model", {{"arch", "discnn8"}, {"batchnorm", true}}},
        {"augment", {{"hflip", false}}},
        {"loss",
         {{"kind", "n2o"},
          {"margin", 10.0},
          {"neg_weight", 1.0},
          {"positive_variant", "hinge_norm"},
          {"center", json::array()}}},
        {"optim",
         {{"algorithm", "adam"},
          {"lr", 1e-3},
          {"momentum", 0.0},
          {"beta1", 0.9},
          {"beta2", 0.999},
          {"eps", 1e-8},
          {"batch_size", 32},
          {"epochs", 60},
          {"freeze_conv", false}}},
        {"schedule", "constant"},
        {"eval", {{"taus", json::array({0.0, 1.0, 2.0})}, {"sweep_steps", 0}, {"unseen_positive", json::array({"vehicle_variant"})}}},
        {"detect", {{"patch_px", 96}, {"auto_tau", true}, {"tau", nullptr}, {"center_crop", false}}},
    };
}

json load_config_file(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw DataError("cannot open config file '" + path + "'");
    try {
        return json::parse(file, nullptr, true, true);  // allow comments
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
}

struct CommonFlags {
    std::string config_path;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> arch;
    std::optional<std::string> synthetic;  // "default" or a spec json path
    std::optional<std::string> stl10_dir;
    std::optional<std::string> positive;
    std::optional<std::string> negatives;  // comma separated
    std::optional<std::string> unseen;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file; flags override file values");
    cmd->add_option("--out", flags.output_dir, "output directory (default from config / $DISCNN_OUT)");
    cmd->add_option("--seed", flags.seed, "run seed");
    cmd->add_option("--arch", flags.arch, "architecture: discnn8|discnn1|vgg_ref|probe1");
    cmd->add_option("--synthetic", flags.synthetic,
                    "use the synthetic dataset: 'default' or a JSON file with generator fields");
    cmd->add_option("--stl10-dir", flags.stl10_dir,
                    "directory holding train_X.bin/train_y.bin/test_X.bin/test_y.bin");
    cmd->add_option("--positive", flags.positive, "positive class name");
    cmd->add_option("--negatives", flags.negatives, "comma-separated negative class names");
    cmd->add_option("--unseen", flags.unseen, "comma-separated unseen class names");
}

std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> names;
    std::string cur;
    for (char ch : text) {
        if (ch == ',') {
            if (!cur.empty()) names.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) names.push_back(cur);
    return names;
}

json resolve_config(const CommonFlags& flags) {
    json cfg = default_config();
    if (!flags.config_path.empty()) cfg.merge_patch(load_config_file(flags.config_path));
    if (flags.seed) cfg["seed"] = *flags.seed;
    if (flags.arch) cfg["model"]["arch"] = *flags.arch;
    if (flags.synthetic) {
        cfg["data"]["source"] = "synthetic";
        if (*flags.synthetic != "default") cfg["data"]["synthetic"].merge_patch(load_config_file(*flags.synthetic));
    }
    if (flags.stl10_dir) {
        cfg["data"]["source"] = "stl10";
        const fs::path dir = *flags.stl10_dir;
        cfg["data"]["stl10"]["train_data"] = (dir / "train_X.bin").string();
        cfg["data"]["stl10"]["train_labels"] = (dir / "train_y.bin").string();
        cfg["data"]["stl10"]["test_data"] = (dir / "test_X.bin").string();
        cfg["data"]["stl10"]["test_labels"] = (dir / "test_y.bin").string();
        if (!flags.positive) cfg["data"]["positive"] = "car";
        if (!flags.negatives) cfg["data"]["negatives"] = json::array({"bird", "cat"});
        if (!flags.unseen) cfg["data"]["unseen"] = json::array({"deer", "monkey", "truck"});
    }
    if (flags.positive) cfg["data"]["positive"] = *flags.positive;
    if (flags.negatives) cfg["data"]["negatives"] = split_names(*flags.negatives);
    if (flags.unseen) cfg["data"]["unseen"] = split_names(*flags.unseen);
    if (!flags.output_dir.empty()) cfg["output_dir"] = flags.output_dir;
    return cfg;
}

fs::path output_dir(const json& cfg) {
    fs::path dir = cfg.at("output_dir").get<std::string>();
    if (dir.is_relative()) {
        if (const char* root = std::getenv("DISCNN_OUT")) dir = fs::path(root) / dir;
    }
    fs::create_directories(dir);
    return dir;
}

void write_resolved_config(const json& cfg, const fs::path& dir) {
    std::ofstream file(dir / "config.resolved.json", std::ios::trunc);
    if (!file) throw DataError("cannot write resolved config to '" + (dir / "config.resolved.json").string() + "'");
    file << cfg.dump(2) << '\n';
}

// --------------------------------------------------------------- datasets ----

data::SyntheticSpec synthetic_spec(const json& cfg) {
    const json& s = cfg.at("data").at("synthetic");
    data::SyntheticSpec spec;
    spec.seed = s.at("seed").get<std::uint64_t>();
    spec.canvas = s.at("canvas").get<int>();
    spec.train_per_class = s.at("train_per_class").get<int>();
    spec.test_per_class = s.at("test_per_class").get<int>();
    spec.unseen_per_class = s.at("unseen_per_class").get<int>();
    spec.noise = s.at("noise").get<double>();
    spec.scene_count = s.at("scene_count").get<int>();
    spec.scene_rows = s.at("scene_rows").get<int>();
    spec.scene_cols = s.at("scene_cols").get<int>();
    return spec;
}

data::DatasetSplit load_split(const json& cfg) {
    const std::string source = cfg.at("data").at("source").get<std::string>();
    if (source == "synthetic") {
        return data::generate_synthetic(synthetic_spec(cfg));
    }
    if (source != "stl10") throw ConfigError("data.source must be synthetic|stl10, got '" + source + "'");
    const json& s = cfg.at("data").at("stl10");
    const auto train_pool = data::load_stl10(s.at("train_data").get<std::string>(),
                                             s.at("train_labels").get<std::string>());
    const auto test_pool = data::load_stl10(s.at("test_data").get<std::string>(),
                                            s.at("test_labels").get<std::string>());
    std::set<std::string> negatives, unseen;
    for (const auto& n : cfg.at("data").at("negatives")) negatives.insert(n.get<std::string>());
    for (const auto& n : cfg.at("data").at("unseen")) unseen.insert(n.get<std::string>());
    data::DatasetSplit split =
        data::subset(train_pool, test_pool, cfg.at("data").at("positive").get<std::string>(), negatives, unseen);
    for (const auto& warning : split.warnings) std::cerr << "warning: " << warning << '\n';
    return split;
}

// ----------------------------------------------------------- option types ----

loss::N2OConfig n2o_from(const json& cfg) {
    const json& l = cfg.at("loss");
    loss::N2OConfig n2o;
    n2o.margin = l.at("margin").get<double>();
    n2o.neg_weight = l.at("neg_weight").get<double>();
    n2o.positive_variant = loss::pos_variant_from_name(l.at("positive_variant").get<std::string>());
    if (l.contains("center")) n2o.center = l.at("center").get<std::vector<double>>();
    return n2o;
}

train::OptimConfig optim_from(const json& cfg) {
    const json& o = cfg.at("optim");
    train::OptimConfig optim;
    optim.algorithm = train::algo_from_name(o.at("algorithm").get<std::string>());
    optim.lr = o.at("lr").get<double>();
    optim.momentum = o.at("momentum").get<double>();
    optim.beta1 = o.at("beta1").get<double>();
    optim.beta2 = o.at("beta2").get<double>();
    optim.eps = o.at("eps").get<double>();
    optim.batch_size = o.at("batch_size").get<int>();
    optim.epochs = o.at("epochs").get<int>();
    optim.freeze_conv = o.at("freeze_conv").get<bool>();
    optim.seed = cfg.at("seed").get<std::uint64_t>();
    return optim;
}

train::TrainOptions train_options_from(const json& cfg) {
    train::TrainOptions options;
    const std::string kind = cfg.at("loss").at("kind").get<std::string>();
    if (kind == "n2o") {
        options.loss_kind = train::LossKind::N2O;
        options.n2o = n2o_from(cfg);
    } else if (kind == "xent") {
        options.loss_kind = train::LossKind::CrossEntropy;
    } else {
        throw ConfigError("loss.kind must be n2o|xent, got '" + kind + "'");
    }
    options.optim = optim_from(cfg);
    options.schedule = train::LrSchedule::parse(cfg.at("schedule").get<std::string>());
    return options;
}

models::ArchitectureSpec arch_from(const json& cfg) {
    models::ArchitectureSpec spec = models::builtin_arch(cfg.at("model").at("arch").get<std::string>());
    if (!cfg.at("model").at("batchnorm").get<bool>()) spec = models::without_batchnorm(spec);
    return spec;
}

// ------------------------------------------------------------- subcommands ----

int cmd_data(const json& cfg, const std::string& mode, int limit) {
    const fs::path dir = output_dir(cfg);
    write_resolved_config(cfg, dir);
    if (mode == "synth") {
        const data::DatasetSplit split = data::generate_synthetic(synthetic_spec(cfg));
        data::write_dataset(split, dir.string());
        std::cout << "wrote synthetic dataset to " << dir << " (train " << split.train.size() << ", test "
                  << split.test.size() << ", unseen " << split.unseen.size() << ", scenes " << split.scenes.size()
                  << ")\n";
        return 0;
    }
    if (mode == "stl10") {
        const data::DatasetSplit split = load_split(cfg);
        std::cout << "class,train,test,unseen\n";
        for (const auto& [name, counts] : split.manifest) {
            std::cout << name << ',' << counts.train << ',' << counts.test << ',' << counts.unseen << '\n';
        }
        if (limit > 0) {
            fs::create_directories(dir / "preview");
            for (int i = 0; i < limit && i < static_cast<int>(split.train.size()); ++i) {
                data::write_ppm((dir / "preview" / (split.train[static_cast<std::size_t>(i)].id + ".ppm")).string(),
                                split.train[static_cast<std::size_t>(i)].pixels);
            }
        }
        return 0;
    }
    throw ConfigError("data mode must be synth|stl10, got '" + mode + "'");
}

int cmd_train(const json& cfg) {
    const fs::path dir = output_dir(cfg);
    write_resolved_config(cfg, dir);

    const data::DatasetSplit split = load_split(cfg);
    std::vector<data::LabeledImage> train_set = split.train;
    if (cfg.at("augment").at("hflip").get<bool>()) train_set = data::with_hflip(train_set);
    const models::ArchitectureSpec spec = arch_from(cfg);
    num::RngStream rng(cfg.at("seed").get<std::uint64_t>());
    models::Model model = models::Model::build(spec, rng);
    const train::TrainOptions options = train_options_from(cfg);

    std::cout << "training " << spec.name << " on " << train_set.size() << " samples, " << options.optim.epochs
              << " epochs\n";
    try {
        const train::TrainHistory history = train::train(model, train_set, options);
        train::write_history_csv(history, (dir / "history.csv").string());
        models::save_checkpoint(model, (dir / "checkpoint.bin").string(), cfg.dump());
        std::cout << "final loss " << history.final_loss() << "; wrote " << (dir / "checkpoint.bin").string()
                  << '\n';
    } catch (const DivergenceError& e) {
        evaluate::write_text_file((dir / "divergence.txt").string(), std::string(e.what()) + "\n");
        throw;
    }
    return 0;
}

int cmd_probe(const json& cfg, const std::string& checkpoint_path, const std::string& pair) {
    const fs::path dir = output_dir(cfg);
    write_resolved_config(cfg, dir);

    const auto names = split_names(pair);
    if (names.size() != 2 || names[0] == names[1]) {
        throw ConfigError("probe: --pair needs two distinct comma-separated class names, got '" + pair + "'");
    }

    models::LoadedCheckpoint source = models::load_checkpoint(checkpoint_path);

    models::ArchitectureSpec probe_spec = source.model.spec();
    probe_spec.name += "_probe";
    probe_spec.head = models::Head::softmax(2);
    num::RngStream rng(cfg.at("seed").get<std::uint64_t>());
    models::Model target = models::Model::build(probe_spec, rng);
    probe::graft(source.model, target);

    const data::DatasetSplit split = load_split(cfg);
    std::vector<data::LabeledImage> pair_set;
    for (const auto* pool : {&split.train, &split.unseen}) {
        for (const auto& img : *pool) {
            if (img.class_name == names[0] || img.class_name == names[1]) pair_set.push_back(img);
        }
    }
    if (pair_set.empty()) throw ConfigError("probe: no samples found for classes '" + pair + "'");

    train::OptimConfig optim = optim_from(cfg);
    optim.freeze_conv = true;
    const probe::ProbeResult result = probe::run_probe(target, pair_set, optim);

    train::write_history_csv(result.history, (dir / "probe_history.csv").string());
    evaluate::write_text_file((dir / "probe_verdict.csv").string(),
                              probe::verdict_record_csv_header() +
                                  probe::verdict_record_csv(names[0] + "|" + names[1], result.outcome));
    std::cout << "probe {" << names[0] << ", " << names[1] << "}: " << probe::verdict_name(result.outcome.verdict)
              << " (final accuracy " << result.outcome.final_accuracy << ", final loss " << result.outcome.final_loss
              << ", initial loss " << result.outcome.initial_loss << ")\n";
    return 0;  // the verdict is data, not a failure
}

int cmd_eval(const json& cfg, const std::string& checkpoint_path) {
    const fs::path dir = output_dir(cfg);
    write_resolved_config(cfg, dir);

    models::LoadedCheckpoint loaded = models::load_checkpoint(checkpoint_path);
    const data::DatasetSplit split = load_split(cfg);

    std::vector<double> taus = cfg.at("eval").at("taus").get<std::vector<double>>();
    const int sweep_steps = cfg.at("eval").at("sweep_steps").get<int>();

    const auto records = evaluate::encode_dataset(loaded.model, split.test);
    if (sweep_steps > 1) taus = evaluate::fine_tau_grid(records, sweep_steps);
    const evaluate::ThresholdReport report = evaluate::threshold_sweep(records, taus);

    evaluate::write_text_file((dir / "records.csv").string(), evaluate::records_to_csv(records));
    evaluate::write_text_file((dir / "report.csv").string(), evaluate::report_to_csv(report));
    evaluate::write_text_file((dir / "report.txt").string(), evaluate::report_to_table(report));
    evaluate::write_text_file((dir / "histogram.csv").string(), evaluate::histogram_csv(records));
    std::cout << evaluate::report_to_table(report);

    if (!split.unseen.empty()) {
        std::set<std::string> positive_like;
        for (const auto& n : cfg.at("eval").at("unseen_positive")) positive_like.insert(n.get<std::string>());
        std::map<std::string, Role> expected;
        for (const auto& img : split.unseen) {
            expected[img.class_name] = positive_like.count(img.class_name) ? Role::Positive : Role::Negative;
        }
        const evaluate::UnseenEvalResult unseen = evaluate::unseen_eval(loaded.model, split.unseen, expected, taus);
        evaluate::write_text_file((dir / "unseen_report.csv").string(), evaluate::report_to_csv(unseen.report));
        evaluate::write_text_file((dir / "unseen_report.txt").string(), evaluate::report_to_table(unseen.report));
        evaluate::write_text_file((dir / "unseen_summaries.csv").string(),
                                  evaluate::summaries_to_csv(unseen.summaries));
        std::cout << "unseen classes:\n" << evaluate::report_to_table(unseen.report);
    }
    return 0;
}

int cmd_detect(const json& cfg, const std::string& checkpoint_path, const std::string& image_path) {
    const fs::path dir = output_dir(cfg);
    write_resolved_config(cfg, dir);

    models::LoadedCheckpoint loaded = models::load_checkpoint(checkpoint_path);
    num::Tensor image = data::read_ppm(image_path);
    const json& d = cfg.at("detect");
    const int patch_px = d.at("patch_px").get<int>();
    if (d.at("center_crop").get<bool>()) image = detect::center_crop(image, patch_px);

    const detect::PatchGrid grid = detect::partition(image, patch_px);
    detect::DetectionResult result = detect::score_grid(loaded.model, grid);
    const detect::ThresholdSuggestion suggestion = detect::suggest_threshold(result.scores);

    double tau;
    if (!d.at("tau").is_null()) {
        tau = d.at("tau").get<double>();
    } else if (d.at("auto_tau").get<bool>()) {
        if (!suggestion.tau) throw DataError("detect: all patch scores are equal, no gap to threshold; pass --tau");
        tau = *suggestion.tau;
    } else {
        throw ConfigError("detect: pass --tau or enable auto thresholding");
    }
    detect::rank_and_select(result, tau);

    evaluate::write_text_file((dir / "detection.csv").string(), detect::detection_csv(result));
    data::write_ppm((dir / "annotated.ppm").string(), detect::annotate(image, result, patch_px));

    std::cout << "grid " << result.rows << "x" << result.cols << ", tau " << tau;
    if (suggestion.tau) std::cout << " (suggested " << *suggestion.tau << ", gap " << suggestion.gap << ")";
    std::cout << "\nselected patches:";
    if (result.selected.empty()) std::cout << " none";
    for (const auto& [row, col] : result.selected) std::cout << " (" << row << "," << col << ")";
    std::cout << '\n';
    return 0;
}

int cmd_report(const std::string& run_dir) {
    const fs::path dir = run_dir;
    if (!fs::exists(dir)) throw DataError("report: run directory '" + run_dir + "' does not exist");
    bool found = false;
    auto print_file = [&](const char* name, const char* title, int tail_lines) {
        const fs::path path = dir / name;
        if (!fs::exists(path)) return;
        found = true;
        std::ifstream file(path);
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(file, line)) lines.push_back(line);
        std::cout << "== " << title << " (" << path.string() << ")\n";
        const std::size_t begin = tail_lines > 0 && lines.size() > static_cast<std::size_t>(tail_lines)
                                      ? lines.size() - static_cast<std::size_t>(tail_lines)
                                      : 0;
        if (begin > 0) std::cout << "  ... (" << begin << " earlier lines)\n";
        for (std::size_t i = begin; i < lines.size(); ++i) std::cout << "  " << lines[i] << '\n';
        std::cout << '\n';
    };
    print_file("config.resolved.json", "resolved config", 0);
    print_file("history.csv", "training history", 8);
    print_file("probe_history.csv", "probe history", 8);
    print_file("probe_verdict.csv", "probe verdict", 0);
    print_file("report.txt", "threshold report", 0);
    print_file("unseen_report.txt", "unseen-class report", 0);
    print_file("unseen_summaries.csv", "unseen-class moduli", 0);
    print_file("detection.csv", "detection scores", 0);
    print_file("divergence.txt", "divergence diagnostic", 0);
    if (!found) std::cout << "no run artifacts found in " << dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-positive-class CNN trainer and evaluator"};
    app.require_subcommand(1);

    CommonFlags flags;

    auto* data_cmd = app.add_subcommand("data", "generate or inspect datasets");
    std::string data_mode = "synth";
    int data_limit = 0;
    data_cmd->add_option("mode", data_mode, "synth | stl10")->required();
    data_cmd->add_option("--preview", data_limit, "export the first N training images as PPM");
    add_common_flags(data_cmd, flags);

    auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
    std::optional<int> train_epochs;
    std::optional<double> train_lr, train_margin, train_neg_weight;
    std::optional<int> train_batch;
    std::optional<std::string> train_loss_kind, train_algo, train_schedule;
    bool train_no_bn = false;
    bool train_freeze = false;
    train_cmd->add_option("--epochs", train_epochs, "training epochs");
    train_cmd->add_option("--lr", train_lr, "learning rate");
    train_cmd->add_option("--batch", train_batch, "batch size (>= 2)");
    train_cmd->add_option("--loss", train_loss_kind, "n2o | xent");
    train_cmd->add_option("--algo", train_algo, "adam | sgd");
    train_cmd->add_option("--margin", train_margin, "n2o margin (target positive modulus)");
    train_cmd->add_option("--neg-weight", train_neg_weight, "n2o negative term weight");
    train_cmd->add_option("--schedule", train_schedule, "constant | step:<factor>@<epoch>");
    train_cmd->add_flag("--no-batchnorm", train_no_bn, "strip batchnorm layers (ablation)");
    train_cmd->add_flag("--freeze-conv", train_freeze, "freeze the conv stack, train FC layers only");
    bool train_hflip = false;
    train_cmd->add_flag("--hflip", train_hflip, "augment training data with horizontal flips");
    add_common_flags(train_cmd, flags);

    auto* probe_cmd = app.add_subcommand("probe", "graft a checkpoint and test two-class feature presence");
    std::string probe_checkpoint, probe_pair;
    std::optional<int> probe_epochs;
    probe_cmd->add_option("--checkpoint", probe_checkpoint, "trained source checkpoint")->required();
    probe_cmd->add_option("--pair", probe_pair, "two comma-separated class names")->required();
    probe_cmd->add_option("--epochs", probe_epochs, "probe head training epochs");
    add_common_flags(probe_cmd, flags);

    auto* eval_cmd = app.add_subcommand("eval", "modulus-threshold evaluation of a checkpoint");
    std::string eval_checkpoint;
    std::optional<std::string> eval_taus;
    std::optional<int> eval_sweep;
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "trained checkpoint")->required();
    eval_cmd->add_option("--taus", eval_taus, "comma-separated threshold grid (default 0,1,2)");
    eval_cmd->add_option("--sweep", eval_sweep, "use an even N-step grid from 0 to the max modulus");
    add_common_flags(eval_cmd, flags);

    auto* detect_cmd = app.add_subcommand("detect", "patch-grid detection on a PPM image");
    std::string detect_checkpoint, detect_image;
    std::optional<double> detect_tau;
    std::optional<int> detect_patch;
    bool detect_crop = false;
    detect_cmd->add_option("--checkpoint", detect_checkpoint, "trained checkpoint")->required();
    detect_cmd->add_option("--image", detect_image, "input image (binary PPM)")->required();
    detect_cmd->add_option("--tau", detect_tau, "threshold; omit to use the gap heuristic");
    detect_cmd->add_option("--patch", detect_patch, "patch size in pixels (default 96)");
    detect_cmd->add_flag("--center-crop", detect_crop, "crop to the largest patch multiple first");
    add_common_flags(detect_cmd, flags);

    auto* report_cmd = app.add_subcommand("report", "summarize the artifacts of a run directory");
    std::string report_dir;
    report_cmd->add_option("--run", report_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        json cfg = resolve_config(flags);
        if (train_cmd->parsed()) {
            if (train_epochs) cfg["optim"]["epochs"] = *train_epochs;
            if (train_lr) cfg["optim"]["lr"] = *train_lr;
            if (train_batch) cfg["optim"]["batch_size"] = *train_batch;
            if (train_algo) cfg["optim"]["algorithm"] = *train_algo;
            if (train_loss_kind) cfg["loss"]["kind"] = *train_loss_kind;
            if (train_margin) cfg["loss"]["margin"] = *train_margin;
            if (train_neg_weight) cfg["loss"]["neg_weight"] = *train_neg_weight;
            if (train_schedule) cfg["schedule"] = *train_schedule;
            if (train_no_bn) cfg["model"]["batchnorm"] = false;
            if (train_freeze) cfg["optim"]["freeze_conv"] = true;
            if (train_hflip) cfg["augment"]["hflip"] = true;
            return cmd_train(cfg);
        }
        if (data_cmd->parsed()) return cmd_data(cfg, data_mode, data_limit);
        if (probe_cmd->parsed()) {
            if (probe_epochs) cfg["optim"]["epochs"] = *probe_epochs;
            return cmd_probe(cfg, probe_checkpoint, probe_pair);
        }
        if (eval_cmd->parsed()) {
            if (eval_taus) {
                std::vector<double> taus;
                for (const auto& t : split_names(*eval_taus)) taus.push_back(std::stod(t));
                cfg["eval"]["taus"] = taus;
            }
            if (eval_sweep) cfg["eval"]["sweep_steps"] = *eval_sweep;
            return cmd_eval(cfg, eval_checkpoint);
        }
        if (detect_cmd->parsed()) {
            if (detect_tau) cfg["detect"]["tau"] = *detect_tau;
            if (detect_patch) cfg["detect"]["patch_px"] = *detect_patch;
            if (detect_crop) cfg["detect"]["center_crop"] = true;
            return cmd_detect(cfg, detect_checkpoint, detect_image);
        }
        if (report_cmd->parsed()) return cmd_report(report_dir);
        throw ConfigError("no subcommand given");
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 1;
    }
}
