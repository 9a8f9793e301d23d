#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "ndl/dataio.hpp"
#include "ndl/neurogenesis.hpp"
#include "oracles.hpp"

using namespace ndl;

namespace {

// Net trained on class 0 of a two-class synthetic set; class 1 is novel.
struct NdlFixture {
    StackedAutoencoder ae;
    Matrix known;  // class 0 training rows
    Matrix novel;  // class 1 rows
    NeurogenesisConfig cfg;
};

NdlFixture make_fixture(uint64_t seed = 40) {
    RngState data_rng(seed);
    const LabeledDataset ds = make_synthetic(2, 220, 16, data_rng);
    const LabeledDataset known = filter_classes(ds, {0});
    const LabeledDataset novel = filter_classes(ds, {1});

    RngState init(seed + 1);
    NdlFixture fx{StackedAutoencoder({16, 10, 5}, init), known.images, novel.images, {}};
    TrainConfig tc;
    tc.epochs = 18;
    tc.minibatch_size = 10;
    tc.noise_fraction = 0.05;
    RngState train(seed + 2);
    pretrain_stack(fx.ae, fx.known, tc, train);

    fx.cfg.thresholds = calibrate_thresholds(fx.ae, fx.known, 95.0);
    fx.cfg.max_nodes = {8, 8};
    fx.cfg.max_outliers = 20;
    fx.cfg.nodes_per_step = 4;
    fx.cfg.plasticity_epochs = 8;
    fx.cfg.stability_epochs = 4;
    fx.cfg.learning_rate = 0.25;
    fx.cfg.minibatch_size = 10;
    fx.cfg.noise_fraction = 0.05;
    fx.cfg.replay_per_class = 100;
    return fx;
}

}  // namespace

TEST_CASE("detect_outliers with infinite threshold finds nothing") {
    RngState rng(1);
    StackedAutoencoder ae({8, 4}, rng);
    Matrix data(10, 8);
    for (double& v : data.data) v = rng.uniform01();
    CHECK(detect_outliers(ae, data, 1, std::numeric_limits<double>::infinity()).empty());
}

TEST_CASE("detect_outliers with zero threshold flags every row of an imperfect net") {
    RngState rng(2);
    StackedAutoencoder ae({8, 4}, rng);
    Matrix data(10, 8);
    for (double& v : data.data) v = rng.uniform01();
    CHECK(detect_outliers(ae, data, 1, 0.0).size() == 10);
}

TEST_CASE("detect_outliers equals the brute-force per-row filter") {
    RngState rng(3);
    StackedAutoencoder ae({8, 5, 3}, rng);
    Matrix data(30, 8);
    for (double& v : data.data) v = rng.uniform01();
    // pick a threshold near the median so both sides are populated
    Vec errors;
    for (size_t r = 0; r < data.rows; ++r) {
        errors.push_back(ae.reconstruction_error(data.row(r), 2));
    }
    Vec sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    const double threshold = sorted[sorted.size() / 2];

    std::vector<size_t> expect;
    for (size_t r = 0; r < data.rows; ++r) {
        if (errors[r] > threshold) expect.push_back(r);
    }
    CHECK(detect_outliers(ae, data, 2, threshold) == expect);
    CHECK_FALSE(expect.empty());
    CHECK(expect.size() < data.rows);
}

TEST_CASE("calibrate_thresholds picks the nearest-rank percentile per level") {
    RngState rng(4);
    StackedAutoencoder ae({8, 5, 3}, rng);
    Matrix data(20, 8);
    for (double& v : data.data) v = rng.uniform01();
    const Vec th = calibrate_thresholds(ae, data, 95.0);
    CHECK(th.size() == 2);
    for (size_t level = 1; level <= 2; ++level) {
        Vec errors;
        for (size_t r = 0; r < data.rows; ++r) {
            errors.push_back(ae.reconstruction_error(data.row(r), level));
        }
        std::sort(errors.begin(), errors.end());
        // ceil(0.95 * 20) = 19 -> index 18
        CHECK(th[level - 1] == errors[18]);
    }
    const Vec th100 = calibrate_thresholds(ae, data, 100.0);
    CHECK(th100.size() == 2);
}

TEST_CASE("effective_max_outliers supports the fractional variant") {
    NeurogenesisConfig cfg;
    cfg.max_outliers = 7;
    CHECK(cfg.effective_max_outliers(1000) == 7);
    cfg.max_outlier_fraction = 0.05;
    CHECK(cfg.effective_max_outliers(1000) == 50);
    CHECK(cfg.effective_max_outliers(30) == 1);
}

TEST_CASE("config validation rejects inconsistent settings") {
    RngState rng(5);
    StackedAutoencoder ae({8, 4, 2}, rng);
    NeurogenesisConfig cfg;
    cfg.thresholds = {1.0};  // wrong length
    cfg.max_nodes = {4, 4};
    CHECK_THROWS_AS(cfg.validate(ae.depth()), ConfigError);
    cfg.thresholds = {1.0, -2.0};
    CHECK_THROWS_AS(cfg.validate(ae.depth()), ConfigError);
    cfg.thresholds = {1.0, 1.0};
    cfg.nodes_per_step = 0;
    CHECK_THROWS_AS(cfg.validate(ae.depth()), ConfigError);
}

TEST_CASE("neurogenesis_level with a zero budget does nothing") {
    NdlFixture fx = make_fixture();
    fx.cfg.max_nodes = {0, 0};
    StackedAutoencoder before = fx.ae;
    RngState rng(6);
    const LevelReport rep = neurogenesis_level(fx.ae, fx.novel, fx.novel, 1, fx.cfg, rng);
    CHECK(rep.iterations == 0);
    CHECK(rep.nodes_added == 0);
    CHECK(fx.ae.encoder(1).weights.data == before.encoder(1).weights.data);
    CHECK(fx.ae.decoder(1).weights.data == before.decoder(1).weights.data);
}

TEST_CASE("neurogenesis_level does not grow when outliers are already acceptable") {
    NdlFixture fx = make_fixture();
    // the trained class passes its own calibrated thresholds by construction
    fx.cfg.max_outliers = fx.known.rows / 10;
    RngState rng(7);
    const LevelReport rep = neurogenesis_level(fx.ae, fx.known, fx.known, 1, fx.cfg, rng);
    CHECK(rep.nodes_added == 0);
    CHECK(rep.iterations == 0);
    CHECK(rep.outliers_before <= fx.cfg.max_outliers);
}

TEST_CASE("neurogenesis_level on a novel class meets the loop postcondition") {
    NdlFixture fx = make_fixture();
    RngState rng(8);
    const size_t width_before = fx.ae.width(1);
    const LevelReport rep = neurogenesis_level(fx.ae, fx.novel, fx.novel, 1, fx.cfg, rng);

    CHECK(rep.outliers_before > fx.cfg.max_outliers);  // novel class really is novel
    CHECK(rep.nodes_added >= 1);
    const bool budget_exhausted = rep.nodes_added >= fx.cfg.max_nodes[0];
    CHECK((rep.outliers_after <= fx.cfg.max_outliers || budget_exhausted));
    CHECK(rep.outliers_after <= rep.outliers_before);
    CHECK(rep.width_before == width_before);
    CHECK(rep.width_after == width_before + rep.nodes_added);

    // report consistency: recomputing outliers on the final model agrees
    const auto recount = detect_outliers(fx.ae, fx.novel, 1, fx.cfg.thresholds[0]);
    CHECK(recount.size() == rep.outliers_after);
}

TEST_CASE("neurogenesis_level keeps old encoder rows bitwise and respects the budget") {
    for (uint64_t seed : {50u, 51u, 52u}) {
        NdlFixture fx = make_fixture(seed);
        const Matrix old_enc1 = fx.ae.encoder(1).weights;
        const Vec old_bias1 = fx.ae.encoder(1).bias;
        RngState rng(seed + 9);
        const LevelReport rep = neurogenesis_level(fx.ae, fx.novel, fx.novel, 1, fx.cfg, rng);
        CHECK(rep.nodes_added <= fx.cfg.max_nodes[0]);
        CHECK(rep.iterations <= (fx.cfg.max_nodes[0] + fx.cfg.nodes_per_step - 1) /
                                    fx.cfg.nodes_per_step);
        for (size_t i = 0; i < old_enc1.rows; ++i) {
            for (size_t c = 0; c < old_enc1.cols; ++c) {
                CHECK(fx.ae.encoder(1).weights(i, c) == old_enc1(i, c));
            }
        }
        for (size_t i = 0; i < old_bias1.size(); ++i) {
            CHECK(fx.ae.encoder(1).bias[i] == old_bias1[i]);
        }
    }
}

TEST_CASE("neurogenesis_level with empty new data is a no-op report") {
    NdlFixture fx = make_fixture();
    RngState rng(10);
    const LevelReport rep = neurogenesis_level(fx.ae, Matrix(0, 16), fx.novel, 1, fx.cfg, rng);
    CHECK(rep.nodes_added == 0);
    CHECK(rep.iterations == 0);
}

TEST_CASE("forced growth runs even without outliers") {
    NdlFixture fx = make_fixture();
    fx.cfg.max_outliers = fx.known.rows;  // nothing will ever be an outlier
    RngState rng(11);
    const LevelReport rep =
        neurogenesis_level(fx.ae, fx.known, fx.known, 2, fx.cfg, rng, fx.cfg.nodes_per_step);
    CHECK(rep.nodes_added == fx.cfg.nodes_per_step);
    CHECK(rep.iterations == 1);
    CHECK(fx.ae.width(2) == 5 + fx.cfg.nodes_per_step);
}

TEST_CASE("forced growth respects a zero budget") {
    NdlFixture fx = make_fixture();
    fx.cfg.max_nodes = {0, 0};
    RngState rng(12);
    const LevelReport rep =
        neurogenesis_level(fx.ae, fx.novel, fx.novel, 1, fx.cfg, rng, fx.cfg.nodes_per_step);
    CHECK(rep.nodes_added == 0);
}

TEST_CASE("propagate_to_next_level trains the next pair and validates the level") {
    NdlFixture fx = make_fixture();
    RngState rng(13);
    neurogenesis_level(fx.ae, fx.novel, fx.novel, 1, fx.cfg, rng);

    const double before = fx.ae.mean_reconstruction_error(fx.novel, 2);
    propagate_to_next_level(fx.ae, 1, fx.novel, fx.novel, fx.cfg, rng);
    const double after = fx.ae.mean_reconstruction_error(fx.novel, 2);
    CHECK(after <= before);

    CHECK_THROWS_AS(propagate_to_next_level(fx.ae, 2, fx.novel, fx.novel, fx.cfg, rng),
                    LevelError);
}

TEST_CASE("run_ndl with zero budgets only refreshes the store") {
    NdlFixture fx = make_fixture();
    fx.cfg.max_nodes = {0, 0};
    const StackedAutoencoder before = fx.ae;
    RngState rng(14);
    const NdlResult res = run_ndl(fx.ae, fx.novel, 1, ReplayStore{}, fx.cfg, rng);
    for (size_t l = 1; l <= 2; ++l) {
        CHECK(fx.ae.encoder(l).weights.data == before.encoder(l).weights.data);
        CHECK(fx.ae.decoder(l).weights.data == before.decoder(l).weights.data);
    }
    CHECK(res.store.has_class(1));
    CHECK(res.report.total_nodes_added() == 0);
}

TEST_CASE("run_ndl grows within budget, reports consistently and refreshes the store") {
    NdlFixture fx = make_fixture();
    ReplayStore store;
    store.insert(fit_class_stats(fx.ae, fx.known, 0, 0.0));

    const std::vector<size_t> widths_before = fx.ae.widths();
    RngState rng(15);
    const NdlResult res = run_ndl(fx.ae, fx.novel, 1, store, fx.cfg, rng);

    size_t budget = 0;
    for (size_t b : fx.cfg.max_nodes) budget += b;
    CHECK(res.report.total_nodes_added() <= budget);
    CHECK(res.report.levels.size() == 2);
    for (size_t l = 1; l <= 2; ++l) {
        const LevelReport& rep = res.report.levels[l - 1];
        CHECK(rep.level == l);
        CHECK(rep.nodes_added <= fx.cfg.max_nodes[l - 1]);
        CHECK(fx.ae.width(l) == widths_before[l] + rep.nodes_added);
        CHECK(fx.ae.width(l) >= widths_before[l]);  // monotone architecture
        // per-class REs recorded for both the old and the new class
        CHECK(rep.mean_re_before.count(0) == 1);
        CHECK(rep.mean_re_before.count(1) == 1);
        CHECK(rep.mean_re_after.count(0) == 1);
        CHECK(rep.mean_re_after.count(1) == 1);
    }
    // level 1 grew, so level 2 must have added at least nodes_per_step
    if (res.report.levels[0].nodes_added > 0) {
        CHECK(res.report.levels[1].nodes_added >= 1);
    }
    // refreshed store covers both classes at the current top width
    CHECK(res.store.has_class(0));
    CHECK(res.store.has_class(1));
    CHECK(res.store.valid_for(fx.ae));
    // growing reduced the novel class's outlier count at level 1
    const auto outliers = detect_outliers(fx.ae, fx.novel, 1, fx.cfg.thresholds[0]);
    CHECK(outliers.size() == res.report.levels[0].outliers_after);
}

TEST_CASE("run_ndl is deterministic per seed") {
    NdlFixture fa = make_fixture(60);
    NdlFixture fb = make_fixture(60);
    RngState ra(16), rb(16);
    const NdlResult res_a = run_ndl(fa.ae, fa.novel, 1, ReplayStore{}, fa.cfg, ra);
    const NdlResult res_b = run_ndl(fb.ae, fb.novel, 1, ReplayStore{}, fb.cfg, rb);
    CHECK(res_a.report.total_nodes_added() == res_b.report.total_nodes_added());
    for (size_t l = 1; l <= 2; ++l) {
        CHECK(fa.ae.encoder(l).weights.data == fb.ae.encoder(l).weights.data);
        CHECK(fa.ae.decoder(l).weights.data == fb.ae.decoder(l).weights.data);
    }
}
