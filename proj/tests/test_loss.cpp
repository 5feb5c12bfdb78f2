#include "doctest.h"

#include <cmath>

#include "discnn/loss.hpp"
#include "test_support.hpp"

using namespace discnn;
using namespace discnn::loss;
using num::RngStream;
using num::Tensor;
using testsupport::fill_uniform;
using testsupport::gradcheck;

TEST_CASE("modulus basics and summation oracle") {
    CHECK(modulus({0.0, 0.0, 0.0}) == 0.0);
    CHECK(modulus({3.0, 4.0}) == doctest::Approx(5.0).epsilon(1e-15));

    RngStream rng(31);
    std::vector<double> v(64);
    fill_uniform(v, rng, -2.0, 2.0);
    // independent accumulation order: pairwise sums from the back
    double back = 0.0;
    for (std::size_t i = v.size(); i-- > 0;) back += v[i] * v[i];
    CHECK(modulus(v) == doctest::Approx(std::sqrt(back)).epsilon(1e-12));
}

TEST_CASE("classify is a strict threshold rule") {
    CHECK(classify(0.0, 0.0) == Predicted::Negative);
    CHECK(classify(5.0, 1.0) == Predicted::Positive);
    CHECK(classify(1.0, 1.0) == Predicted::Negative);  // boundary: strict >
    CHECK(classify(1e-9, 0.0) == Predicted::Positive);
    CHECK_THROWS_AS(classify(1.0, -0.5), ConfigError);
}

TEST_CASE("classify is monotone in the threshold") {
    RngStream rng(32);
    for (int i = 0; i < 200; ++i) {
        const double m = rng.uniform(0.0, 10.0);
        const double t1 = rng.uniform(0.0, 10.0);
        const double t2 = t1 + rng.uniform(0.0, 5.0);
        if (classify(m, t1) == Predicted::Negative) {
            CHECK(classify(m, t2) == Predicted::Negative);  // raising tau never flips to positive
        }
    }
}

TEST_CASE("n2o loss is zero when the constraints are satisfied") {
    N2OConfig cfg;
    cfg.margin = 10.0;

    // all negatives at the origin
    Tensor z1({3, 4});
    const N2OResult r1 = n2o_loss(z1, {false, false, false}, cfg);
    CHECK(r1.loss == 0.0);

    // single positive exactly at the margin
    Tensor z2({1, 2}, {10.0, 0.0});
    const N2OResult r2 = n2o_loss(z2, {true}, cfg);
    CHECK(r2.loss == 0.0);
}

TEST_CASE("n2o hinge value and gradient on the 3-4-5 example") {
    N2OConfig cfg;
    cfg.margin = 10.0;
    Tensor z({1, 4}, {3.0, 4.0, 0.0, 0.0});  // modulus 5
    const N2OResult r = n2o_loss(z, {true}, cfg);
    CHECK(r.loss == doctest::Approx(25.0).epsilon(1e-12));  // (10-5)^2

    auto f = [&]() { return n2o_loss(z, {true}, cfg).loss; };
    CHECK(gradcheck(f, z.values, r.grad.values) < 1e-4);
}

TEST_CASE("n2o gradients point the right way") {
    RngStream rng(33);
    N2OConfig cfg;
    cfg.margin = 10.0;
    for (int trial = 0; trial < 30; ++trial) {
        Tensor z({2, 8});
        fill_uniform(z.values, rng, -2.0, 2.0);
        const N2OResult r = n2o_loss(z, {true, false}, cfg);

        // positive below the margin: gradient along -z (descent grows |z|)
        double dot_pos = 0.0, dot_neg = 0.0;
        for (int j = 0; j < 8; ++j) {
            dot_pos += r.grad.at2(0, j) * z.at2(0, j);
            dot_neg += r.grad.at2(1, j) * z.at2(1, j);
        }
        CHECK(dot_pos < 0.0);
        CHECK(dot_neg > 0.0);  // negative: gradient along +z (descent shrinks |z|)
    }
}

TEST_CASE("n2o loss is nonnegative and batches lacking a class drop that term") {
    RngStream rng(34);
    N2OConfig cfg;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(5));
        Tensor z({n, 6});
        fill_uniform(z.values, rng, -3.0, 3.0);
        std::vector<bool> flags(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) flags[static_cast<std::size_t>(i)] = rng.uniform01() < 0.5;
        const N2OResult r = n2o_loss(z, flags, cfg);
        CHECK(r.loss >= 0.0);
    }

    // positives-only batch: the negative term vanishes
    Tensor pos_only({1, 2}, {20.0, 0.0});
    N2OConfig cfg10;
    cfg10.margin = 10.0;
    CHECK(n2o_loss(pos_only, {true}, cfg10).loss == 0.0);
}

TEST_CASE("n2o per-class means weight a 1:2 batch equally") {
    N2OConfig cfg;
    cfg.margin = 10.0;
    cfg.neg_weight = 1.0;
    // one positive at modulus 5 (term 25), two negatives at moduli 1 and 3
    Tensor z({3, 2}, {5.0, 0.0, 1.0, 0.0, 3.0, 0.0});
    const N2OResult r = n2o_loss(z, {true, false, false}, cfg);
    CHECK(r.loss == doctest::Approx(25.0 + (1.0 + 9.0) / 2.0));
}

TEST_CASE("n2o gradient check across 20 seeds, both variants") {
    for (std::uint64_t seed = 200; seed < 220; ++seed) {
        RngStream rng(seed);
        const int n = 2 + static_cast<int>(rng.uniform_int(4));
        Tensor z({n, 5});
        fill_uniform(z.values, rng, -2.0, 2.0);
        std::vector<bool> flags(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) flags[static_cast<std::size_t>(i)] = i % 2 == 0;

        N2OConfig hinge;
        hinge.margin = 3.0;
        hinge.neg_weight = 0.7;
        auto fh = [&]() { return n2o_loss(z, flags, hinge).loss; };
        REQUIRE(gradcheck(fh, z.values, n2o_loss(z, flags, hinge).grad.values) < 1e-4);

        N2OConfig pull;
        pull.positive_variant = PosVariant::CenterPull;
        pull.center.assign(5, 0.0);
        pull.center[0] = 2.0;
        pull.neg_weight = 1.3;
        auto fp = [&]() { return n2o_loss(z, flags, pull).loss; };
        REQUIRE(gradcheck(fp, z.values, n2o_loss(z, flags, pull).grad.values) < 1e-4);
    }
}

TEST_CASE("n2o rejects bad configurations and empty batches") {
    Tensor z({1, 3});
    N2OConfig cfg;
    cfg.margin = 0.0;
    CHECK_THROWS_AS(n2o_loss(z, {true}, cfg), ConfigError);
    cfg.margin = 1.0;
    cfg.neg_weight = 0.0;
    CHECK_THROWS_AS(n2o_loss(z, {true}, cfg), ConfigError);

    N2OConfig pull;
    pull.positive_variant = PosVariant::CenterPull;
    pull.center = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(n2o_loss(z, {true}, pull), ConfigError);  // zero-modulus center
    pull.center = {1.0, 0.0};
    CHECK_THROWS_AS(n2o_loss(z, {true}, pull), ConfigError);  // wrong length

    CHECK_THROWS_AS(n2o_loss(Tensor({1, 3}), std::vector<bool>{}, N2OConfig{}), ShapeError);
}

TEST_CASE("center-pull keeps positives in a compact set away from the origin") {
    N2OConfig pull;
    pull.positive_variant = PosVariant::CenterPull;
    pull.center = {3.0, 4.0};
    Tensor z({1, 2}, {3.0, 4.0});  // exactly at the center
    CHECK(n2o_loss(z, {true}, pull).loss == 0.0);
}
