#include <doctest.h>

#include <cmath>

#include "core/analyze.hpp"
#include "core/errors.hpp"
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

} // namespace

TEST_CASE("breakdown at x=0 reproduces the baseline bit-exactly") {
    const ClassRegistry registry = init_weights(cfg(1, 3, 6), 19);
    const Corpus corpus = gen_synthetic_reversal(6, 8, 2, 4, 2, Split::valid);
    const double baseline = perplexity(registry, corpus);
    const auto rows = class_breakdown(registry, corpus, PruneScheme::class_blind, 0.0);
    REQUIRE(rows.size() == registry.class_count());
    for (const auto& row : rows) {
        CHECK(row.perplexity == baseline);
        CHECK(row.perplexity_delta == 0.0);
        CHECK(row.class_fraction_pruned == 0.0);
        CHECK(row.max_deleted_magnitude == 0.0);
    }
}

TEST_CASE("pruning an all-zero class changes nothing") {
    ClassRegistry registry = init_weights(cfg(1, 3, 6), 20);
    Matrix& attention = registry.weights({WeightClassKind::attention, 0});
    for (double& v : attention.values) v = 0.0;
    const Corpus corpus = gen_synthetic_reversal(6, 8, 2, 4, 3, Split::valid);
    const auto rows =
        class_breakdown(registry, corpus, PruneScheme::class_uniform, 0.9);
    const std::size_t attention_index =
        registry.index_of({WeightClassKind::attention, 0});
    CHECK(rows[attention_index].perplexity_delta == 0.0);
    CHECK(rows[attention_index].max_deleted_magnitude == 0.0);
    CHECK(rows[attention_index].class_fraction_pruned > 0.0);
}

TEST_CASE("breakdown leaves the input registry untouched and fills rows") {
    const ClassRegistry registry = init_weights(cfg(2, 2, 5), 21);
    const ClassRegistry copy = registry;
    const Corpus corpus = gen_synthetic_reversal(5, 6, 2, 4, 4, Split::valid);
    const double baseline = perplexity(registry, corpus);
    const auto rows = class_breakdown(registry, corpus, PruneScheme::class_blind, 0.5);
    for (std::size_t c = 0; c < registry.class_count(); ++c) {
        CHECK(registry.entries()[c].weights.values ==
              copy.entries()[c].weights.values);
    }
    REQUIRE(rows.size() == 8); // 2 embeddings + 4 layers + attention + softmax
    bool damaged = false;
    for (const auto& row : rows) {
        CHECK(row.perplexity_delta == row.perplexity - baseline);
        if (row.perplexity_delta != 0.0) damaged = true;
    }
    CHECK(damaged);

    const std::string csv = breakdown_csv(rows);
    CHECK(csv.find("class,scheme,x,class_fraction_pruned,ppl,ppl_delta,"
                   "max_deleted_magnitude\n") == 0);
    const std::string scatter = scatter_csv(rows);
    CHECK(scatter.find("class,max_deleted_magnitude,ppl_delta\n") == 0);
    // One line per class plus the header.
    CHECK(std::count(scatter.begin(), scatter.end(), '\n') == 9);
}

TEST_CASE("redundancy bitmap extremes and hand case") {
    const Matrix m = {{1, 2}, {3, 4}};
    const MaskMatrix white = redundancy_bitmap(m, 0.0);
    CHECK(white.retained() == 4);
    const MaskMatrix black = redundancy_bitmap(m, 1.0);
    CHECK(black.retained() == 0);
    const MaskMatrix half = redundancy_bitmap(m, 0.5);
    CHECK(half.at(0, 0) == 0); // |1| and |2| are the bottom half
    CHECK(half.at(0, 1) == 0);
    CHECK(half.at(1, 0) == 1);
    CHECK(half.at(1, 1) == 1);
}

TEST_CASE("bitmap black count is exactly floor(x times size)") {
    Rng rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        Matrix m(1 + rng.below(12), 1 + rng.below(12));
        for (double& v : m.values) v = rng.uniform(-2.0, 2.0);
        const double x = rng.uniform();
        const MaskMatrix bitmap = redundancy_bitmap(m, x);
        const std::size_t expect =
            static_cast<std::size_t>(std::floor(x * static_cast<double>(m.size())));
        CHECK(bitmap.size() - bitmap.retained() == expect);
    }
}

TEST_CASE("pgm rendering carries dimensions and pixel bytes") {
    MaskMatrix bitmap(2, 3, 1);
    bitmap.set(0, 1, 0);
    const std::string pgm = to_pgm(bitmap);
    CHECK(pgm.rfind("P5\n3 2\n255\n", 0) == 0);
    const std::string pixels = pgm.substr(pgm.size() - 6);
    CHECK(static_cast<unsigned char>(pixels[0]) == 255);
    CHECK(static_cast<unsigned char>(pixels[1]) == 0);
    CHECK(static_cast<unsigned char>(pixels[2]) == 255);
    for (int i = 3; i < 6; ++i) {
        CHECK(static_cast<unsigned char>(pixels[i]) == 255);
    }
}

TEST_CASE("subgroup retention on block-structured masks") {
    const std::size_t n = 3;
    MaskMatrix ones(4 * n, 2 * n, 1);
    const auto all = subgroup_retention(ones);
    for (double f : all) CHECK(f == 1.0);

    // Zero the input-gate rows: both i subgroups drop to zero.
    MaskMatrix gated = ones;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < 2 * n; ++c) gated.set(r, c, 0);
    }
    const auto fractions = subgroup_retention(gated);
    CHECK(fractions[0] == 0.0); // i, feed-forward
    CHECK(fractions[1] == 0.0); // i, recurrent
    for (std::size_t k = 2; k < 8; ++k) CHECK(fractions[k] == 1.0);

    CHECK_THROWS_AS(subgroup_retention(MaskMatrix(6, 4, 1)), Error);
}

TEST_CASE("subgroup retention matches brute-force block counting") {
    Rng rng(77);
    const std::size_t n = 4;
    MaskMatrix mask(4 * n, 2 * n, 1);
    for (auto& b : mask.bits) b = rng.bernoulli(0.6) ? 0 : 1;
    const auto fractions = subgroup_retention(mask);
    double total = 0.0;
    for (std::size_t gate = 0; gate < 4; ++gate) {
        for (std::size_t input = 0; input < 2; ++input) {
            std::size_t retained = 0;
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t c = 0; c < n; ++c) {
                    retained += mask.at(gate * n + r, input * n + c);
                }
            }
            CHECK(fractions[gate * 2 + input] ==
                  doctest::Approx(static_cast<double>(retained) / (n * n)));
            total += fractions[gate * 2 + input];
        }
    }
    // Equal-weight average equals the whole-matrix retention.
    CHECK(total / 8.0 ==
          doctest::Approx(static_cast<double>(mask.retained()) /
                          static_cast<double>(mask.size())));
}

TEST_CASE("pruned_out_words finds fully-zero columns") {
    MaskMatrix ones(3, 5, 1);
    CHECK(pruned_out_words(ones).empty());

    MaskMatrix one_out = ones;
    for (std::size_t r = 0; r < 3; ++r) one_out.set(r, 2, 0);
    const auto found = pruned_out_words(one_out);
    REQUIRE(found.size() == 1);
    CHECK(found[0] == 2);
}

TEST_CASE("pruned_out_words agrees with a brute-force column scan") {
    const ClassRegistry registry = init_weights(cfg(1, 4, 16), 55);
    const PruneMask mask = prune_class_blind(registry, 0.8);
    const MaskMatrix& emb =
        mask.mask_for({WeightClassKind::source_embedding, 0});
    const auto found = pruned_out_words(emb);
    std::vector<std::size_t> expect;
    for (std::size_t c = 0; c < emb.cols; ++c) {
        std::size_t retained = 0;
        for (std::size_t r = 0; r < emb.rows; ++r) retained += emb.at(r, c);
        if (retained == 0) expect.push_back(c);
    }
    CHECK(found == expect);
}
