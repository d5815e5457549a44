// Finite-difference checks for every differentiable primitive. Each op is
// reduced to a scalar through a fixed random linear functional so the
// whole Jacobian is exercised, and each check runs over multiple seeds.

#include <vector>

#include "doctest.h"
#include "gradcheck_util.hpp"
#include "voe/ops.hpp"
#include "voe/rng.hpp"

using namespace voe;
using namespace voe::num;
using voe::testutil::gradcheck;

namespace {

constexpr double kTol = 1e-4;
constexpr int kSeeds = 10;

Tensor rand_t(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(s));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Projects out to a scalar with fixed weights so every output matters.
Var project(Tape& t, Var out, Rng& rng) {
    Tensor w(t.shape(out));
    for (double& v : w.data) v = rng.uniform(-1.0, 1.0);
    return dot(t, out, t.leaf(w));
}

}  // namespace

TEST_CASE("gradcheck: conv2d (strides 1 and 2)") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(100 + seed);
        const int sy = seed % 2 ? 2 : 1;
        const int sx = seed % 3 ? 2 : 1;
        Rng proj_rng(seed);
        auto f = [&](Tape& t, const std::vector<Var>& in) {
            Rng pr(777 + seed);
            return project(t, conv2d(t, in[0], in[1], sy, sx), pr);
        };
        CHECK(gradcheck(f, {rand_t({5, 6, 2}, rng), rand_t({3, 3, 2, 3}, rng)}) < kTol);
    }
}

TEST_CASE("gradcheck: upsample2x") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(200 + seed);
        auto f = [&](Tape& t, const std::vector<Var>& in) {
            Rng pr(778 + seed);
            return project(t, upsample2x(t, in[0]), pr);
        };
        CHECK(gradcheck(f, {rand_t({3, 4, 2}, rng)}) < kTol);
    }
}

TEST_CASE("gradcheck: dense with every activation") {
    for (Act act : {Act::none, Act::relu, Act::tanh, Act::sigmoid}) {
        for (int seed = 0; seed < kSeeds; ++seed) {
            Rng rng(300 + seed);
            auto f = [&](Tape& t, const std::vector<Var>& in) {
                Rng pr(779 + seed);
                return project(t, dense(t, in[0], in[1], in[2], act), pr);
            };
            // Bias offset keeps relu pre-activations away from the kink.
            Tensor x = rand_t({5}, rng);
            Tensor w = rand_t({4, 5}, rng);
            Tensor b = rand_t({4}, rng, 0.4, 0.9);
            CHECK(gradcheck(f, {x, w, b}) < kTol);
        }
    }
}

TEST_CASE("gradcheck: matvec and matvec_t") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(400 + seed);
        auto f1 = [&](Tape& t, const std::vector<Var>& in) {
            Rng pr(780 + seed);
            return project(t, matvec(t, in[0], in[1]), pr);
        };
        CHECK(gradcheck(f1, {rand_t({4, 3}, rng), rand_t({3}, rng)}) < kTol);
        auto f2 = [&](Tape& t, const std::vector<Var>& in) {
            Rng pr(781 + seed);
            return project(t, matvec_t(t, in[0], in[1]), pr);
        };
        CHECK(gradcheck(f2, {rand_t({4, 3}, rng), rand_t({4}, rng)}) < kTol);
    }
}

TEST_CASE("gradcheck: cosine_similarity_rows") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(500 + seed);
        auto f = [&](Tape& t, const std::vector<Var>& in) {
            Rng pr(782 + seed);
            return project(t, cosine_similarity_rows(t, in[0], in[1]), pr);
        };
        // Keep vectors away from zero norm for a smooth neighbourhood.
        Tensor m = rand_t({4, 5}, rng, 0.3, 1.5);
        Tensor k = rand_t({5}, rng, 0.3, 1.5);
        CHECK(gradcheck(f, {m, k}) < kTol);
    }
}

TEST_CASE("gradcheck: slot_write") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(600 + seed);
        auto f = [&](Tape& t, const std::vector<Var>& in) {
            Rng pr(783 + seed);
            return project(t, slot_write(t, in[0], seed % 3, in[1]), pr);
        };
        CHECK(gradcheck(f, {rand_t({3, 4}, rng), rand_t({4}, rng)}) < kTol);
    }
}

TEST_CASE("gradcheck: elementwise ops") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(700 + seed);
        auto binary = [&](auto op) {
            return [op, seed](Tape& t, const std::vector<Var>& in) {
                Rng pr(784 + seed);
                return project(t, op(t, in[0], in[1]), pr);
            };
        };
        CHECK(gradcheck(binary([](Tape& t, Var a, Var b) { return add(t, a, b); }),
                        {rand_t({6}, rng), rand_t({6}, rng)}) < kTol);
        CHECK(gradcheck(binary([](Tape& t, Var a, Var b) { return sub(t, a, b); }),
                        {rand_t({6}, rng), rand_t({6}, rng)}) < kTol);
        CHECK(gradcheck(binary([](Tape& t, Var a, Var b) { return mul(t, a, b); }),
                        {rand_t({6}, rng), rand_t({6}, rng)}) < kTol);

        auto unary = [&](auto op, double lo, double hi) {
            auto f = [op, seed](Tape& t, const std::vector<Var>& in) {
                Rng pr(785 + seed);
                return project(t, op(t, in[0]), pr);
            };
            return gradcheck(f, {rand_t({8}, rng, lo, hi)});
        };
        // relu checked away from the kink at 0; clip away from +-2.
        CHECK(unary([](Tape& t, Var a) { return relu(t, a); }, 0.1, 2.0) < kTol);
        CHECK(unary([](Tape& t, Var a) { return relu(t, a); }, -2.0, -0.1) < kTol);
        CHECK(unary([](Tape& t, Var a) { return tanh_op(t, a); }, -2, 2) < kTol);
        CHECK(unary([](Tape& t, Var a) { return sigmoid(t, a); }, -2, 2) < kTol);
        CHECK(unary([](Tape& t, Var a) { return softplus(t, a); }, -2, 2) < kTol);
        CHECK(unary([](Tape& t, Var a) { return clip(t, a, -2.0, 2.0); }, -1.5, 1.5) < kTol);
        CHECK(unary([](Tape& t, Var a) { return clip(t, a, -1.0, 1.0); }, 1.1, 1.9) < kTol);
        CHECK(unary([](Tape& t, Var a) { return affine(t, a, 1.7, -0.3); }, -2, 2) < kTol);
    }
}

TEST_CASE("gradcheck: shape plumbing and reductions") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(800 + seed);
        auto f1 = [&](Tape& t, const std::vector<Var>& in) {
            Rng pr(786 + seed);
            return project(t, concat(t, in[0], in[1], in[2]), pr);
        };
        CHECK(gradcheck(f1, {rand_t({3}, rng), rand_t({4}, rng), rand_t({2}, rng)}) < kTol);

        auto f2 = [&](Tape& t, const std::vector<Var>& in) {
            Rng pr(787 + seed);
            return project(t, slice(t, in[0], 2, 3), pr);
        };
        CHECK(gradcheck(f2, {rand_t({7}, rng)}) < kTol);

        auto f3 = [&](Tape& t, const std::vector<Var>& in) {
            return sum(t, reshape(t, in[0], Shape{6}));
        };
        CHECK(gradcheck(f3, {rand_t({2, 3}, rng)}) < kTol);

        auto f4 = [&](Tape& t, const std::vector<Var>& in) {
            Rng pr(788 + seed);
            return project(t, softmax(t, in[0]), pr);
        };
        CHECK(gradcheck(f4, {rand_t({6}, rng, -2, 2)}) < kTol);
    }
}

TEST_CASE("gradcheck: gaussian_kl_op over all four inputs") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(900 + seed);
        auto f = [](Tape& t, const std::vector<Var>& in) {
            return gaussian_kl_op(t, in[0], in[1], in[2], in[3]);
        };
        CHECK(gradcheck(f,
                        {rand_t({5}, rng, -2, 2), rand_t({5}, rng, 0.4, 2.0),
                         rand_t({5}, rng, -2, 2), rand_t({5}, rng, 0.4, 2.0)}) < kTol);
    }
}

TEST_CASE("gradcheck: bernoulli_ll_op through the logits") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(1000 + seed);
        Tensor target = rand_t({10}, rng, 0.0, 1.0);
        auto f = [&](Tape& t, const std::vector<Var>& in) {
            return bernoulli_ll_op(t, target, in[0]);
        };
        CHECK(gradcheck(f, {rand_t({10}, rng, -3, 3)}) < kTol);
    }
}

TEST_CASE("gradcheck: composite softplus-floored std path") {
    // The sigma = softplus(raw) + 1e-6 construction used by every map.
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(1100 + seed);
        auto f = [](Tape& t, const std::vector<Var>& in) {
            Var sp = affine(t, softplus(t, in[0]), 1.0, 1e-6);
            Var sq = affine(t, softplus(t, in[1]), 1.0, 1e-6);
            return gaussian_kl_op(t, in[2], sp, in[3], sq);
        };
        CHECK(gradcheck(f,
                        {rand_t({4}, rng, -1.5, 1.5), rand_t({4}, rng, -1.5, 1.5),
                         rand_t({4}, rng, -2, 2), rand_t({4}, rng, -2, 2)}) < kTol);
    }
}
