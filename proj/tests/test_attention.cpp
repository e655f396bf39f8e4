#include <catch2/catch.hpp>

#include "support/oracles.hpp"
#include "trajpred/nn.hpp"
#include "trajpred/rng.hpp"

using namespace trajpred;

namespace {

template <typename T>
void randomize(ParamRegistry<T>& reg, Rng& rng, double scale = 0.5) {
    for (std::size_t b = 0; b < reg.block_count(); ++b) {
        auto& t = reg.block(b).tensor;
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(-scale, scale));
    }
}

template <typename T>
Tensor<T> random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor<T> t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(-scale, scale));
    return t;
}

} // namespace

TEST_CASE("single key/value row reduces attention to a projection chain") {
    Rng rng(41);
    ParamRegistry<double> reg;
    auto p = add_attention(reg, "attn", 48, 48);
    randomize(reg, rng);
    auto q_in = random_tensor<double>({3, 48}, rng);
    auto kv = random_tensor<double>({1, 48}, rng);

    Graph<double> g;
    auto out = multi_head_attention(g, g.constant(q_in), g.constant(kv), p, 8);

    // With one key the softmax weight is exactly 1, so every query row gets
    // V W^O + b^O of the single value row.
    Graph<double> h;
    auto chain = h.linear(h.linear(h.constant(kv), h.param(*p.wv), h.param(*p.bv)),
                          h.param(*p.wo), h.param(*p.bo));
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 48; ++j) {
            CHECK(out.value().at(i, j) == Approx(chain.value().at(0, j)).margin(1e-12));
        }
    }
}

TEST_CASE("duplicated key/value rows do not change the output") {
    Rng rng(42);
    ParamRegistry<double> reg;
    auto p = add_attention(reg, "attn", 48, 48);
    randomize(reg, rng);
    auto q_in = random_tensor<double>({2, 48}, rng);
    auto kv1 = random_tensor<double>({1, 48}, rng);
    Tensor<double> kv2({2, 48});
    for (std::size_t j = 0; j < 48; ++j) {
        kv2.at(0, j) = kv1.at(0, j);
        kv2.at(1, j) = kv1.at(0, j);
    }

    Graph<double> g1, g2;
    auto out1 = multi_head_attention(g1, g1.constant(q_in), g1.constant(kv1), p, 8);
    auto out2 = multi_head_attention(g2, g2.constant(q_in), g2.constant(kv2), p, 8);
    CHECK(max_abs_diff(out1.value(), out2.value()) < 1e-12);
}

TEST_CASE("attention matches the scalar-loop oracle") {
    Rng rng(43);
    ParamRegistry<double> reg;
    auto p = add_attention(reg, "attn", 48, 48);
    randomize(reg, rng);
    auto q_in = random_tensor<double>({2, 48}, rng);
    auto kv = random_tensor<double>({3, 48}, rng);

    Graph<double> g;
    auto out = multi_head_attention(g, g.constant(q_in), g.constant(kv), p, 8);
    auto expect = oracles::multi_head_attention(
        q_in, kv, p.wq->tensor, p.bq->tensor, p.wk->tensor, p.bk->tensor, p.wv->tensor,
        p.bv->tensor, p.wo->tensor, p.bo->tensor, 8);
    CHECK(max_abs_diff(out.value(), expect) < 1e-10);
}

TEST_CASE("attention is invariant under joint kv row permutation") {
    Rng rng(44);
    ParamRegistry<float> reg;
    auto p = add_attention(reg, "attn", 48, 48);
    randomize(reg, rng);
    auto q_in = random_tensor<float>({4, 48}, rng);
    auto kv = random_tensor<float>({5, 48}, rng);
    Tensor<float> kv_perm({5, 48});
    const std::size_t perm[5] = {3, 0, 4, 2, 1};
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 48; ++j) kv_perm.at(i, j) = kv.at(perm[i], j);
    }

    Graph<float> g1, g2;
    auto out1 = multi_head_attention(g1, g1.constant(q_in), g1.constant(kv), p, 8);
    auto out2 = multi_head_attention(g2, g2.constant(q_in), g2.constant(kv_perm), p, 8);
    CHECK(max_abs_diff(out1.value(), out2.value()) < 1e-6);
}

TEST_CASE("attention rejects an empty context") {
    ParamRegistry<double> reg;
    auto p = add_attention(reg, "attn", 48, 48);
    Graph<double> g;
    auto q = g.constant(Tensor<double>({2, 48}));
    auto kv = g.constant(Tensor<double>({0, 48}));
    CHECK_THROWS_AS(multi_head_attention(g, q, kv, p, 8), EmptyContextError);
}

TEST_CASE("attention rejects width not divisible by heads") {
    ParamRegistry<double> reg;
    auto p = add_attention(reg, "attn", 48, 48);
    Graph<double> g;
    auto q = g.constant(Tensor<double>({2, 48}));
    auto kv = g.constant(Tensor<double>({2, 48}));
    CHECK_THROWS_AS(multi_head_attention(g, q, kv, p, 7), ConfigError);
}

TEST_CASE("masking a kv row equals removing it") {
    Rng rng(45);
    ParamRegistry<double> reg;
    auto p = add_attention(reg, "attn", 48, 48);
    randomize(reg, rng);
    auto q_in = random_tensor<double>({2, 48}, rng);
    auto kv3 = random_tensor<double>({3, 48}, rng);
    Tensor<double> kv2({2, 48});
    for (std::size_t j = 0; j < 48; ++j) {
        kv2.at(0, j) = kv3.at(0, j);
        kv2.at(1, j) = kv3.at(2, j);
    }
    std::vector<std::uint8_t> mask = {1, 0, 1};

    Graph<double> g1, g2;
    auto masked = multi_head_attention(g1, g1.constant(q_in), g1.constant(kv3), p, 8, &mask);
    auto removed = multi_head_attention(g2, g2.constant(q_in), g2.constant(kv2), p, 8);
    CHECK(max_abs_diff(masked.value(), removed.value()) < 1e-12);
}

TEST_CASE("fully masked context is an error") {
    ParamRegistry<double> reg;
    auto p = add_attention(reg, "attn", 8, 8);
    Graph<double> g;
    auto q = g.constant(Tensor<double>({1, 8}, 0.1));
    auto kv = g.constant(Tensor<double>({2, 8}, 0.2));
    std::vector<std::uint8_t> mask = {0, 0};
    CHECK_THROWS_AS(multi_head_attention(g, q, kv, p, 2, &mask), EmptyContextError);
}
