#include "doctest.h"

#include <cmath>

#include "discnn/evaluate.hpp"
#include "test_support.hpp"

using namespace discnn;
using namespace discnn::evaluate;
using loss::EmbeddingRecord;
using models::ArchitectureSpec;
using models::LayerSpec;
using models::Model;
using num::RngStream;
using num::Tensor;

namespace {

EmbeddingRecord make_record(std::string id, Role label, double modulus) {
    EmbeddingRecord rec;
    rec.sample_id = std::move(id);
    rec.label = label;
    rec.class_name = label == Role::Positive ? "pos" : "neg";
    rec.embedding = {modulus, 0.0};
    rec.modulus = modulus;
    return rec;
}

// the reported confusion counts read as per-true-class totals
std::vector<EmbeddingRecord> table_records() {
    std::vector<EmbeddingRecord> records;
    for (int i = 0; i < 787; ++i) records.push_back(make_record("tp" + std::to_string(i), Role::Positive, 3.0));
    for (int i = 0; i < 13; ++i) records.push_back(make_record("fn" + std::to_string(i), Role::Positive, 0.0));
    for (int i = 0; i < 175; ++i) records.push_back(make_record("fp" + std::to_string(i), Role::Negative, 2.0));
    for (int i = 0; i < 1425; ++i) records.push_back(make_record("tn" + std::to_string(i), Role::Negative, 0.0));
    return records;
}

ArchitectureSpec flat_arch(int embed) {
    ArchitectureSpec spec;
    spec.name = "flat";
    spec.input = {1, 2, 2};
    spec.layers.push_back(LayerSpec::flatten());
    spec.layers.push_back(LayerSpec::fc(embed));
    return spec;
}

std::vector<data::LabeledImage> flat_images(int count, std::uint64_t seed) {
    RngStream rng(seed);
    std::vector<data::LabeledImage> ds;
    for (int i = 0; i < count; ++i) {
        data::LabeledImage img;
        img.id = "s" + std::to_string(i);
        img.class_name = i % 2 ? "pos" : "neg";
        img.role = i % 2 ? Role::Positive : Role::Negative;
        img.pixels = Tensor({1, 2, 2});
        testsupport::fill_uniform(img.pixels.values, rng, 0.0, 1.0);
        ds.push_back(std::move(img));
    }
    return ds;
}

}  // namespace

TEST_CASE("confusion counts under the strict threshold rule") {
    const auto records = table_records();
    const ConfusionMatrix cm = confusion(records, 0.0);
    CHECK(cm.tp == 787);
    CHECK(cm.fn == 13);
    CHECK(cm.fp == 175);
    CHECK(cm.tn == 1425);
    CHECK(cm.tp + cm.fn == 800);    // cars
    CHECK(cm.fp + cm.tn == 1600);   // negatives

    // tau above every modulus sends everything negative
    const ConfusionMatrix all_neg = confusion(records, 100.0);
    CHECK(all_neg.tp == 0);
    CHECK(all_neg.fp == 0);
    CHECK(all_neg.fn == 800);
    CHECK(all_neg.tn == 1600);
}

TEST_CASE("metrics reproduce the hand arithmetic for the published counts") {
    ConfusionMatrix cm;
    cm.tp = 787;
    cm.fp = 175;
    cm.fn = 13;
    cm.tn = 1425;
    const MetricsPair m = metrics(cm);
    REQUIRE(m.positive.precision.has_value());
    REQUIRE(m.positive.recall.has_value());
    CHECK(*m.positive.precision == doctest::Approx(787.0 / 962.0).epsilon(1e-12));
    CHECK(*m.positive.recall == doctest::Approx(787.0 / 800.0).epsilon(1e-12));
    CHECK(std::abs(*m.positive.precision - 0.81809) < 1e-5);
    CHECK(std::abs(*m.positive.recall - 0.98375) < 1e-5);
    REQUIRE(m.negative.precision.has_value());
    CHECK(*m.negative.precision == doctest::Approx(1425.0 / 1438.0));
    CHECK(*m.negative.recall == doctest::Approx(1425.0 / 1600.0));
}

TEST_CASE("perfect separation gives all-ones metrics and zero off-diagonals") {
    std::vector<EmbeddingRecord> records;
    for (int i = 0; i < 10; ++i) records.push_back(make_record("p" + std::to_string(i), Role::Positive, 5.0));
    for (int i = 0; i < 20; ++i) records.push_back(make_record("n" + std::to_string(i), Role::Negative, 0.1));
    const ConfusionMatrix cm = confusion(records, 1.0);
    CHECK(cm.fp == 0);
    CHECK(cm.fn == 0);
    const MetricsPair m = metrics(cm);
    CHECK(*m.positive.precision == 1.0);
    CHECK(*m.positive.recall == 1.0);
    CHECK(*m.positive.f1 == 1.0);
    CHECK(*m.negative.f1 == 1.0);
}

TEST_CASE("undefined metrics are flagged, never silently zero") {
    ConfusionMatrix cm;  // tp=fp=0: positive precision undefined
    cm.fn = 5;
    cm.tn = 5;
    const MetricsPair m = metrics(cm);
    CHECK(!m.positive.precision.has_value());
    CHECK(m.positive.recall.has_value());  // 0/5 defined, equals 0
    CHECK(*m.positive.recall == 0.0);
    CHECK(!m.positive.f1.has_value());
}

TEST_CASE("confusion rejects unseen labels") {
    std::vector<EmbeddingRecord> records = {make_record("x", Role::Unseen, 1.0)};
    CHECK_THROWS_WITH_AS(confusion(records, 0.0), doctest::Contains("unseen"), ConfigError);
}

TEST_CASE("threshold sweep: monotone counts and partition property") {
    RngStream rng(90);
    std::vector<EmbeddingRecord> records;
    for (int i = 0; i < 200; ++i) {
        records.push_back(make_record("r" + std::to_string(i), rng.uniform01() < 0.4 ? Role::Positive : Role::Negative,
                                      rng.uniform(0.0, 8.0)));
    }
    long long true_pos = 0, true_neg = 0;
    for (const auto& r : records) (r.label == Role::Positive ? true_pos : true_neg) += 1;

    const ThresholdReport report = threshold_sweep(records, fine_tau_grid(records, 50));
    REQUIRE(report.rows.size() == 50);
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& cm = report.rows[i].cm;
        CHECK(cm.tp + cm.fn == true_pos);
        CHECK(cm.fp + cm.tn == true_neg);
        if (i > 0) {
            CHECK(cm.tp <= report.rows[i - 1].cm.tp);
            CHECK(cm.fp <= report.rows[i - 1].cm.fp);
            CHECK(cm.fn >= report.rows[i - 1].cm.fn);
            CHECK(cm.tn >= report.rows[i - 1].cm.tn);
        }
    }
    CHECK_THROWS_AS(threshold_sweep(records, {}), ConfigError);
    CHECK_THROWS_AS(threshold_sweep(records, {2.0, 1.0}), ConfigError);
}

TEST_CASE("default tau grid emits a three-row report") {
    const auto records = table_records();
    const ThresholdReport report = threshold_sweep(records, default_tau_grid());
    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[0].tau == 0.0);
    CHECK(report.rows[1].tau == 1.0);
    CHECK(report.rows[2].tau == 2.0);
    // moduli of 2 are excluded at tau=2 by the strict rule
    CHECK(report.rows[2].cm.fp == 0);
}

TEST_CASE("report csv round-trips losslessly") {
    const auto records = table_records();
    const ThresholdReport report = threshold_sweep(records, {0.0, 1.0, 2.5});
    const std::string csv = report_to_csv(report);
    CHECK(csv.find("# modulus-threshold report") == 0);
    CHECK(csv.find("convention") != std::string::npos);

    const ThresholdReport parsed = report_from_csv(csv);
    REQUIRE(parsed.rows.size() == report.rows.size());
    for (std::size_t i = 0; i < parsed.rows.size(); ++i) {
        CHECK(parsed.rows[i].tau == report.rows[i].tau);
        CHECK(parsed.rows[i].cm.tp == report.rows[i].cm.tp);
        CHECK(parsed.rows[i].cm.tn == report.rows[i].cm.tn);
        CHECK(parsed.rows[i].m.positive.precision == report.rows[i].m.positive.precision);
        CHECK(parsed.rows[i].m.negative.f1 == report.rows[i].m.negative.f1);
    }
    CHECK(report_to_csv(parsed) == csv);
}

TEST_CASE("encode_dataset basics on a controllable model") {
    RngStream rng(91);
    Model model = Model::build(flat_arch(3), rng);

    CHECK(encode_dataset(model, {}).empty());

    auto ds = flat_images(6, 92);
    ds[3] = ds[2];  // duplicate one sample
    ds[3].id = "dup";
    const auto records = encode_dataset(model, ds);
    REQUIRE(records.size() == 6);
    CHECK(records[2].modulus == records[3].modulus);
    for (const auto& rec : records) {
        CHECK(rec.modulus >= 0.0);
        CHECK(rec.modulus == doctest::Approx(loss::modulus(rec.embedding)).epsilon(1e-12));
    }

    // zero the final fc: every modulus collapses to 0
    auto& fc = dynamic_cast<models::FCLayer&>(model.layer(1));
    std::fill(fc.weight.values.begin(), fc.weight.values.end(), 0.0);
    std::fill(fc.bias.begin(), fc.bias.end(), 0.0);
    for (const auto& rec : encode_dataset(model, ds)) CHECK(rec.modulus == 0.0);
}

TEST_CASE("unseen_eval maps classes to sides and summarizes moduli") {
    RngStream rng(93);
    Model model = Model::build(flat_arch(3), rng);
    auto& fc = dynamic_cast<models::FCLayer&>(model.layer(1));
    std::fill(fc.weight.values.begin(), fc.weight.values.end(), 0.0);
    std::fill(fc.bias.begin(), fc.bias.end(), 0.0);

    auto ds = flat_images(8, 94);
    for (auto& img : ds) {
        img.role = Role::Unseen;
        img.class_name = "mystery";
    }

    std::map<std::string, Role> expected;
    CHECK_THROWS_WITH_AS(unseen_eval(model, ds, expected, {0.0}), doctest::Contains("mystery"), ConfigError);

    expected["mystery"] = Role::Negative;
    const UnseenEvalResult result = unseen_eval(model, ds, expected, {0.0, 1.0});
    REQUIRE(result.report.rows.size() == 2);
    // all moduli are zero, the class is negative-like: only tn is populated
    CHECK(result.report.rows[0].cm.tn == 8);
    CHECK(result.report.rows[0].cm.tp == 0);
    CHECK(result.report.rows[0].cm.fp == 0);
    CHECK(result.report.rows[0].cm.fn == 0);
    REQUIRE(result.summaries.size() == 1);
    CHECK(result.summaries[0].class_name == "mystery");
    CHECK(result.summaries[0].count == 8);
    CHECK(result.summaries[0].mean == 0.0);
    CHECK(result.summaries[0].median == 0.0);

    std::map<std::string, Role> bad = {{"mystery", Role::Unseen}};
    CHECK_THROWS_AS(unseen_eval(model, ds, bad, {0.0}), ConfigError);
}

TEST_CASE("histogram and records csv emit one line per entry") {
    const auto records = std::vector<EmbeddingRecord>{make_record("a", Role::Positive, 1.0),
                                                      make_record("b", Role::Negative, 3.0)};
    const std::string rec_csv = records_to_csv(records);
    CHECK(rec_csv.find("sample_id,class,label,modulus") == 0);
    CHECK(rec_csv.find("a,pos,positive,1") != std::string::npos);

    const std::string hist = histogram_csv(records, 4);
    CHECK(hist.find("class,bin_lo,bin_hi,count") == 0);
    // the bin covering modulus 3 for class "neg" has one count
    CHECK(hist.find("neg,2.25,3,1") != std::string::npos);
}

TEST_CASE("best positive f1 row picks the sweep optimum") {
    std::vector<EmbeddingRecord> records;
    for (int i = 0; i < 10; ++i) records.push_back(make_record("p" + std::to_string(i), Role::Positive, 5.0));
    for (int i = 0; i < 10; ++i) records.push_back(make_record("n" + std::to_string(i), Role::Negative, i < 2 ? 4.0 : 0.0));
    const ThresholdReport report = threshold_sweep(records, {0.0, 4.5});
    const auto best = best_positive_f1_row(report);
    REQUIRE(best.has_value());
    CHECK(report.rows[*best].tau == 4.5);  // excludes the two high negatives
    CHECK(*report.rows[*best].m.positive.f1 == 1.0);
}
