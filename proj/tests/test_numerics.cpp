#include <cmath>
#include <set>

#include "cil/ops.hpp"
#include "cil/rng.hpp"
#include "doctest.h"

using namespace cil;

namespace {
Tensor vec(std::vector<double> v) {
    int n = static_cast<int>(v.size());
    return Tensor({n}, std::move(v));
}
} // namespace

TEST_CASE("softmax basics") {
    auto p = softmax(vec({0.0, 0.0}));
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-15));

    // shift invariance forces uniform even for huge logits
    p = softmax(vec({1000.0, 1000.0, 1000.0}));
    for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(1.0 / 3).epsilon(1e-15));

    // exponentiate-and-normalize by hand: exp(ln k) = k
    p = softmax(vec({std::log(1.0), std::log(2.0), std::log(3.0)}));
    CHECK(p[0] == doctest::Approx(1.0 / 6).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(2.0 / 6).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(3.0 / 6).epsilon(1e-12));
}

TEST_CASE("softmax errors") {
    CHECK_THROWS_AS(softmax(Tensor()), std::invalid_argument);
    CHECK_THROWS_AS(softmax(vec({1.0, std::nan("")})), std::invalid_argument);
    CHECK_THROWS_AS(softmax(vec({std::numeric_limits<double>::infinity()})),
                    std::invalid_argument);
}

TEST_CASE("softmax normalization and shift invariance properties") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 1 + static_cast<int>(rng.next_below(10));
        Tensor v = Tensor::zeros({n});
        for (auto& x : v.data) x = rng.uniform(-30.0, 30.0);
        Tensor p = softmax(v);
        double sum = 0.0;
        for (auto x : p.data) {
            CHECK(x > 0.0);
            CHECK(x <= 1.0);
            sum += x;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);

        // bit-exact shift invariance: use values whose shifted sums round to
        // nothing, i.e. dyadic logits and an integer shift
        Tensor w = Tensor::zeros({n});
        for (auto& x : w.data)
            x = static_cast<double>(static_cast<long long>(rng.next_below(481)) - 240) / 8.0;
        double c = static_cast<double>(rng.next_below(1001)) - 500.0;
        Tensor shifted = w;
        for (auto& x : shifted.data) x += c;
        Tensor p1 = softmax(w);
        Tensor q1 = softmax(shifted);
        for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == q1[i]);
    }
}

TEST_CASE("cross_entropy") {
    CHECK(cross_entropy(vec({0.25, 0.25, 0.25, 0.25}), 2) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(cross_entropy(vec({0.0, 1.0}), 1) == 0.0);
    CHECK(cross_entropy(vec({0.1, 0.7, 0.2}), 1) ==
          doctest::Approx(-std::log(0.7)).epsilon(1e-12));
    CHECK(cross_entropy(vec({0.1, 0.7, 0.2}), 1) == doctest::Approx(0.356675).epsilon(1e-5));

    CHECK_THROWS_AS(cross_entropy(vec({0.5, 0.5}), 2), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy(vec({0.5, 0.5}), -1), std::invalid_argument);

    // nonnegative, zero iff perfect
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        Tensor raw = Tensor::zeros({5});
        for (auto& x : raw.data) x = rng.uniform(-4.0, 4.0);
        Tensor p = softmax(raw);
        int t = static_cast<int>(rng.next_below(5));
        double loss = cross_entropy(p, t);
        CHECK(loss >= 0.0);
        CHECK((loss == 0.0) == (p[static_cast<std::size_t>(t)] == 1.0));
    }
}

TEST_CASE("affine") {
    Tensor eye({2, 2}, {1.0, 0.0, 0.0, 1.0});
    auto y = affine(vec({3.0, -4.0}), eye, vec({0.0, 0.0}));
    CHECK(y[0] == 3.0);
    CHECK(y[1] == -4.0);

    Tensor w({2, 3}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
    y = affine(vec({0.0, 0.0}), w, vec({7.0, 8.0, 9.0}));
    CHECK(y.data == std::vector<double>{7.0, 8.0, 9.0});

    y = affine(vec({1.0, 2.0}), eye, vec({3.0, 3.0}));
    CHECK(y.data == std::vector<double>{4.0, 5.0});

    CHECK_THROWS_AS(affine(vec({1.0}), eye, vec({0.0, 0.0})), std::invalid_argument);
    CHECK_THROWS_AS(affine(vec({1.0, 2.0}), eye, vec({0.0})), std::invalid_argument);
}

TEST_CASE("finite_diff_grad") {
    auto norm2 = [](const Tensor& x) {
        double s = 0.0;
        for (double v : x.data) s += v * v;
        return s;
    };
    Tensor g = finite_diff_grad(norm2, vec({1.0, -2.0}));
    CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(g[1] == doctest::Approx(-4.0).epsilon(1e-6));

    auto constant = [](const Tensor&) { return 3.5; };
    g = finite_diff_grad(constant, vec({0.3, -0.7, 2.0}));
    for (double v : g.data) CHECK(std::abs(v) <= 1e-9);

    // softmax-CE: analytic gradient is p - t; the central difference must agree
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        int n = 3 + static_cast<int>(rng.next_below(5));
        Tensor x = Tensor::zeros({n});
        for (auto& v : x.data) v = rng.uniform(-2.0, 2.0);
        int target = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
        auto f = [&](const Tensor& logits) { return cross_entropy(softmax(logits), target); };
        Tensor num = finite_diff_grad(f, x);
        Tensor p = softmax(x);
        double max_diff = 0.0;
        for (int i = 0; i < n; ++i) {
            double analytic = p[static_cast<std::size_t>(i)] - (i == target ? 1.0 : 0.0);
            max_diff = std::max(max_diff, std::abs(analytic - num[static_cast<std::size_t>(i)]));
        }
        CHECK(max_diff < 1e-6);
    }
}

TEST_CASE("rng determinism") {
    Rng a(123), b(123), c(124);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 64; ++i) {
        auto x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
        all_equal = all_equal && (x == y);
        any_diff = any_diff || (x != z);
    }
    CHECK(all_equal);
    CHECK(any_diff);

    Rng g1(55), g2(55);
    for (int i = 0; i < 16; ++i) CHECK(g1.gaussian() == g2.gaussian());
}

TEST_CASE("rng_shuffle") {
    Rng rng(1);
    CHECK(rng_shuffle(rng, 0).empty());
    CHECK(rng_shuffle(rng, 1) == std::vector<int>{0});

    // golden permutation, frozen from the pinned generator
    Rng g(42);
    CHECK(rng_shuffle(g, 5) == std::vector<int>{0, 1, 3, 4, 2});

    // bijectivity
    Rng r2(99);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 1 + static_cast<int>(r2.next_below(40));
        auto p = rng_shuffle(r2, n);
        std::set<int> seen(p.begin(), p.end());
        CHECK(static_cast<int>(seen.size()) == n);
        CHECK(*seen.begin() == 0);
        CHECK(*seen.rbegin() == n - 1);
    }
}
