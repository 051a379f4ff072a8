#include <doctest.h>

#include <cmath>
#include <limits>

#include "core/errors.hpp"
#include "core/prune.hpp"
#include "core/rng.hpp"
#include "core/train.hpp"

using namespace nmtprune;

namespace {

ModelConfig cfg(std::size_t layers, std::size_t hidden, std::size_t vocab) {
    ModelConfig config;
    config.layers = layers;
    config.hidden = hidden;
    config.source_vocab = vocab;
    config.target_vocab = vocab;
    return config;
}

std::vector<Matrix> zero_gradients(const ClassRegistry& registry) {
    std::vector<Matrix> grads;
    for (const auto& e : registry.entries()) {
        grads.emplace_back(e.weights.rows, e.weights.cols);
    }
    return grads;
}

bool same_weights(const ClassRegistry& a, const ClassRegistry& b) {
    for (std::size_t c = 0; c < a.class_count(); ++c) {
        if (a.entries()[c].weights.values != b.entries()[c].weights.values) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("retrain_lr follows the halving schedule") {
    CHECK(retrain_lr(0.0) == doctest::Approx(0.5));
    CHECK(retrain_lr(1.0) == doctest::Approx(0.5));
    CHECK(retrain_lr(1.99) == doctest::Approx(0.5));
    CHECK(retrain_lr(2.0) == doctest::Approx(0.25));
    CHECK(retrain_lr(2.49) == doctest::Approx(0.25));
    CHECK(retrain_lr(2.5) == doctest::Approx(0.125));
    CHECK(retrain_lr(3.0) == doctest::Approx(0.0625));
    CHECK_THROWS_AS(retrain_lr(-0.1), Error);
}

TEST_CASE("retrain_lr is nonincreasing") {
    double previous = std::numeric_limits<double>::infinity();
    for (double e = 0.0; e < 6.0; e += 0.05) {
        const double lr = retrain_lr(e);
        CHECK(lr <= previous);
        previous = lr;
    }
}

TEST_CASE("sgd_step without clipping is a plain update") {
    ClassRegistry registry = init_weights(cfg(1, 1, 4), 1);
    const ClassRegistry before = registry;
    std::vector<Matrix> grads = zero_gradients(registry);
    grads[0].values[0] = 0.5;
    grads[3].values[2] = -0.25;
    sgd_step(registry, grads, 0.1, 5.0, nullptr);
    CHECK(registry.entries()[0].weights.values[0] ==
          doctest::Approx(before.entries()[0].weights.values[0] - 0.05));
    CHECK(registry.entries()[3].weights.values[2] ==
          doctest::Approx(before.entries()[3].weights.values[2] + 0.025));
    CHECK(registry.entries()[1].weights.values ==
          before.entries()[1].weights.values);
}

TEST_CASE("sgd_step clips a single large gradient to max_norm") {
    ClassRegistry registry(cfg(1, 1, 4));
    std::vector<Matrix> grads = zero_gradients(registry);
    grads[0].values[1] = 10.0;
    sgd_step(registry, grads, 1.0, 5.0, nullptr);
    CHECK(registry.entries()[0].weights.values[1] == doctest::Approx(-5.0));
}

TEST_CASE("clipped gradient norm never exceeds max_norm") {
    Rng rng(33);
    for (int trial = 0; trial < 30; ++trial) {
        ClassRegistry registry(cfg(1, 2, 5));
        std::vector<Matrix> grads = zero_gradients(registry);
        for (auto& g : grads) {
            for (double& v : g.values) v = rng.uniform(-8.0, 8.0);
        }
        const double max_norm = 0.5 + rng.uniform() * 6.0;
        // Weights start at zero and lr is 1, so the applied update equals
        // the clipped gradient.
        sgd_step(registry, grads, 1.0, max_norm, nullptr);
        double norm_sq = 0.0;
        for (const auto& e : registry.entries()) {
            for (double v : e.weights.values) norm_sq += v * v;
        }
        CHECK(std::sqrt(norm_sq) <= max_norm + 1e-9);
    }
}

TEST_CASE("sgd_step keeps masked positions at bitwise zero") {
    ClassRegistry registry = init_weights(cfg(1, 2, 5), 3);
    PruneMask mask = prune_class_blind(registry, 0.5);
    apply_mask(registry, mask);
    std::vector<Matrix> grads = zero_gradients(registry);
    for (auto& g : grads) {
        for (double& v : g.values) v = 1.0; // nonzero gradient everywhere
    }
    sgd_step(registry, grads, 0.7, 100.0, &mask);
    for (std::size_t c = 0; c < registry.class_count(); ++c) {
        for (std::size_t i = 0; i < mask.entries[c].mask.bits.size(); ++i) {
            const double w = registry.entries()[c].weights.values[i];
            if (mask.entries[c].mask.bits[i] == 0) {
                CHECK(w == 0.0);
            } else {
                CHECK(w != 0.0);
            }
        }
    }
}

TEST_CASE("sgd_step rejects non-finite gradients without touching weights") {
    ClassRegistry registry = init_weights(cfg(1, 1, 4), 9);
    const ClassRegistry before = registry;
    std::vector<Matrix> grads = zero_gradients(registry);
    grads[2].values[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(sgd_step(registry, grads, 0.1, 5.0, nullptr), Error);
    CHECK(same_weights(registry, before));
}

TEST_CASE("init_weights is seeded and bounded") {
    const ClassRegistry a = init_weights(cfg(2, 3, 6), 42);
    const ClassRegistry b = init_weights(cfg(2, 3, 6), 42);
    const ClassRegistry c = init_weights(cfg(2, 3, 6), 43);
    CHECK(same_weights(a, b));
    CHECK_FALSE(same_weights(a, c));
    for (const auto& e : a.entries()) {
        for (double v : e.weights.values) CHECK(std::abs(v) <= 0.1);
    }
}

TEST_CASE("zero epochs leave the registry unchanged with an empty log") {
    ClassRegistry registry = init_weights(cfg(1, 2, 6), 5);
    const ClassRegistry before = registry;
    const Corpus train_c = gen_synthetic_reversal(6, 20, 2, 4, 1);
    const Corpus valid_c = gen_synthetic_reversal(6, 5, 2, 4, 2, Split::valid);
    TrainConfig config;
    config.epochs = 0;
    config.batch_size = 4;
    const TrainLog log = train(registry, train_c, valid_c, config);
    CHECK(log.records.empty());
    CHECK(log.steps == 0);
    CHECK(same_weights(registry, before));
}

TEST_CASE("training is deterministic for a fixed seed") {
    const Corpus train_c = gen_synthetic_reversal(8, 40, 2, 5, 10);
    const Corpus valid_c = gen_synthetic_reversal(8, 10, 2, 5, 11, Split::valid);
    TrainConfig config;
    config.learning_rate = 0.5;
    config.epochs = 2;
    config.batch_size = 8;
    config.dropout = 0.2;
    config.patience = 0;
    config.seed = 77;

    ClassRegistry r1 = init_weights(cfg(1, 4, 8), 21);
    ClassRegistry r2 = init_weights(cfg(1, 4, 8), 21);
    const TrainLog l1 = train(r1, train_c, valid_c, config);
    const TrainLog l2 = train(r2, train_c, valid_c, config);
    CHECK(same_weights(r1, r2));
    REQUIRE(l1.records.size() == l2.records.size());
    for (std::size_t i = 0; i < l1.records.size(); ++i) {
        CHECK(l1.records[i].train_loss == l2.records[i].train_loss);
        CHECK(l1.records[i].valid_loss == l2.records[i].valid_loss);
        CHECK(l1.records[i].epoch == l2.records[i].epoch);
    }
    CHECK(l1.records.size() >= 4); // two evaluations per epoch
}

TEST_CASE("an all-ones mask trains step-for-step like no mask") {
    const Corpus train_c = gen_synthetic_reversal(6, 24, 2, 4, 4);
    const Corpus valid_c = gen_synthetic_reversal(6, 6, 2, 4, 5, Split::valid);
    TrainConfig config;
    config.learning_rate = 1.0;
    config.epochs = 1;
    config.batch_size = 6;
    config.patience = 0;
    config.seed = 9;

    ClassRegistry bare = init_weights(cfg(1, 3, 6), 8);
    ClassRegistry masked = bare;
    const PruneMask ones = PruneMask::all_ones(bare);
    TrainConfig with_mask = config;
    with_mask.mask = &ones;

    const TrainLog a = train(bare, train_c, valid_c, config);
    const TrainLog b = train(masked, train_c, valid_c, with_mask);
    CHECK(same_weights(bare, masked));
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].valid_loss == b.records[i].valid_loss);
    }
}

TEST_CASE("masked positions stay bitwise zero across many steps") {
    ClassRegistry registry = init_weights(cfg(1, 4, 8), 15);
    const PruneMask mask = prune_class_blind(registry, 0.8);
    apply_mask(registry, mask);

    const Corpus train_c = gen_synthetic_reversal(8, 64, 2, 5, 20);
    const Corpus valid_c = gen_synthetic_reversal(8, 8, 2, 5, 21, Split::valid);
    TrainConfig config;
    config.learning_rate = 0.5;
    config.epochs = 3;
    config.batch_size = 8;
    config.patience = 0;
    config.seed = 2;
    config.mask = &mask;
    const TrainLog log = train(registry, train_c, valid_c, config);
    CHECK(log.steps >= 24);
    std::size_t checked = 0;
    for (std::size_t c = 0; c < registry.class_count(); ++c) {
        for (std::size_t i = 0; i < mask.entries[c].mask.bits.size(); ++i) {
            if (mask.entries[c].mask.bits[i] == 0) {
                CHECK(registry.entries()[c].weights.values[i] == 0.0);
                ++checked;
            }
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("training reduces the validation loss on the reversal task") {
    const Corpus train_c = gen_synthetic_reversal(8, 256, 2, 5, 30);
    const Corpus valid_c = gen_synthetic_reversal(8, 40, 2, 5, 31, Split::valid);
    ClassRegistry registry = init_weights(cfg(1, 12, 8), 77);
    const double initial = corpus_mean_loss(registry, valid_c);

    TrainConfig config;
    config.learning_rate = 1.0;
    config.epochs = 4;
    config.batch_size = 16;
    config.patience = 0;
    config.seed = 12;
    const TrainLog log = train(registry, train_c, valid_c, config);
    CHECK_FALSE(log.diverged);
    REQUIRE_FALSE(log.records.empty());
    CHECK(log.records.back().valid_loss < initial);
    // Epoch positions are nondecreasing.
    for (std::size_t i = 1; i < log.records.size(); ++i) {
        CHECK(log.records[i].epoch >= log.records[i - 1].epoch);
    }
}

TEST_CASE("a divergent run aborts with a partial log") {
    const Corpus train_c = gen_synthetic_reversal(6, 32, 2, 4, 50);
    const Corpus valid_c = gen_synthetic_reversal(6, 8, 2, 4, 51, Split::valid);
    ClassRegistry registry = init_weights(cfg(1, 4, 6), 1);
    TrainConfig config;
    config.learning_rate = 1e200;
    config.epochs = 3;
    config.batch_size = 8;
    config.patience = 0;
    config.seed = 3;
    const TrainLog log = train(registry, train_c, valid_c, config);
    CHECK(log.diverged);
}

TEST_CASE("train log serializes to csv") {
    TrainLog log;
    log.records.push_back({0.5, Phase::baseline, 1.0, 2.5, 2.25});
    log.records.push_back({1.0, Phase::retrain, 0.5, 2.0, 1.75});
    const std::string csv = log.to_csv();
    CHECK(csv.find("epoch,phase,lr,train_loss,valid_loss\n") == 0);
    CHECK(csv.find("0.5000,baseline,1,2.5,2.25\n") != std::string::npos);
    CHECK(csv.find("1.0000,retrain,0.5,2,1.75\n") != std::string::npos);
}
