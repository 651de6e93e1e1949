// Adaptive non-uniform quantizer: hand-computed point families, a brute-force
// nearest-point oracle, the additive-plus-relative error bound in both modes,
// two-point randomization, and the representable-range formulas.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "qn/quantizer.hpp"

using namespace qn;

namespace {

// Exhaustive nearest-point search over |ell| <= cap; exact double-distance
// comparison, scanning small magnitudes first so ties keep the smaller |ell|.
QuantIndex nearest_point_oracle(double x, const AnqParams& p, long long cap) {
    QuantIndex best = 0;
    double best_dist = std::fabs(x);
    for (long long a = 1; a <= cap; ++a) {
        for (QuantIndex ell : {a, -a}) {
            const double dist = std::fabs(x - quant_point(ell, p));
            if (dist < best_dist) {
                best = ell;
                best_dist = dist;
            }
        }
        // points grow monotonically; once past |x| by a wide margin, stop
        if (quant_point(a, p) > 4.0 * std::fabs(x) + 8.0 * p.eta) break;
    }
    return best;
}

double logunif(CounterRng& rng, double lo, double hi) {
    return lo * std::exp(rng.uniform01() * std::log(hi / lo));
}

}  // namespace

TEST_CASE("deterministic point family, eta=1 omega=0.5") {
    AnqParams p(1.0, 0.5, 2, QuantMode::deterministic);
    CHECK(quant_point(0, p) == 0.0);
    CHECK(quant_point(1, p) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(quant_point(2, p) == doctest::Approx(16.0).epsilon(1e-15));
    CHECK(quant_point(-1, p) == doctest::Approx(-4.0).epsilon(1e-15));
    CHECK(quant_point(-2, p) == doctest::Approx(-16.0).epsilon(1e-15));
}

TEST_CASE("deterministic nearest-point rule with hand values") {
    AnqParams p(1.0, 0.5, 2, QuantMode::deterministic);
    CHECK(quantize_det(3.0, p) == 1);   // |3-4| < |3-0|
    CHECK(quantize_det(-3.0, p) == -1);
    CHECK(quantize_det(0.0, p) == 0);
    CHECK(quantize_det(11.0, p) == 2);  // past the 4/16 midpoint
    CHECK(quantize_det(-11.0, p) == -2);
}

TEST_CASE("exact tie at the midpoint resolves toward smaller magnitude") {
    AnqParams p(1.0, 0.5, 2, QuantMode::deterministic);
    // q_1/2 is an exact double tie between q_0 = 0 and q_1 (halving and the
    // complementary subtraction are both exact)
    const double q1 = quant_point(1, p);
    const double mid = q1 / 2;
    REQUIRE(q1 - mid == mid);
    CHECK(quantize_det(mid, p) == 0);
    CHECK(quantize_det(-mid, p) == 0);
    CHECK(quantize_det(std::nextafter(mid, 100.0), p) == 1);
    CHECK(quantize_det(std::nextafter(mid, 0.0), p) == 0);
}

TEST_CASE("probabilistic point family, eta=1 omega=0.5") {
    AnqParams p(1.0, 0.5, 2, QuantMode::probabilistic);
    const double a = std::sqrt(1.25) + 0.5;  // golden ratio
    CHECK(quant_point(1, p) == doctest::Approx(2.0 * (a * a - 1.0)).epsilon(1e-14));
    CHECK(quant_point(1, p) == doctest::Approx(1.0 + std::sqrt(5.0)).epsilon(1e-14));
    CHECK(quant_point(0, p) == 0.0);
}

TEST_CASE("omega=0 collapses both modes to the uniform grid") {
    for (QuantMode mode : {QuantMode::deterministic, QuantMode::probabilistic}) {
        AnqParams p(0.25, 0.0, 2, mode);
        for (QuantIndex ell : {-3LL, -1LL, 0LL, 2LL, 7LL})
            CHECK(quant_point(ell, p) == doctest::Approx(0.5 * ell).epsilon(1e-15));
    }
    AnqParams p(0.25, 0.0, 2, QuantMode::deterministic);
    CHECK(quantize_det(0.74, p) == 1);
    CHECK(quantize_det(0.76, p) == 2);
    CHECK(quantize_det(0.25, p) == 0);   // tie at eta goes to 0
    CHECK(quantize_det(-0.25, p) == 0);
    CHECK(quantize_det(0.7499999999, p) == 1);
}

TEST_CASE("tiny omega behaves like omega=0") {
    AnqParams z(0.5, 0.0, 2, QuantMode::deterministic);
    AnqParams t(0.5, 1e-13, 2, QuantMode::deterministic);  // below the zero threshold
    for (double x : {0.1, 0.9, 5.3, -2.2})
        CHECK(quantize_det(x, z) == quantize_det(x, t));
    CHECK(quant_point(3, t) == quant_point(3, z));
}

TEST_CASE("omega=0 index overflow raises domain_error") {
    AnqParams p(1e-300, 0.0, 2, QuantMode::deterministic);
    CHECK_THROWS_AS(quantize_det(1.0, p), std::domain_error);
}

TEST_CASE("deterministic quantizer matches the brute-force oracle") {
    CounterRng rng(101, 0);
    int checked = 0;
    for (int t = 0; t < 1500; ++t) {
        const double eta = logunif(rng, 1e-3, 10.0);
        const double omega = (t % 5 == 0) ? 0.0 : 0.02 + 0.9 * rng.uniform01();
        AnqParams p(eta, omega, 2, QuantMode::deterministic);
        const double reach = quant_point(18, p);
        const double x = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * rng.uniform01() * reach;
        const QuantIndex got = quantize_det(x, p);
        const QuantIndex want = nearest_point_oracle(x, p, 40);
        CHECK(got == want);
        ++checked;
    }
    CHECK(checked == 1500);
}

TEST_CASE("deterministic error bound eta + omega|x| holds surely") {
    CounterRng rng(102, 0);
    for (int t = 0; t < 5000; ++t) {
        const double eta = logunif(rng, 1e-4, 100.0);
        const double omega = (t % 7 == 0) ? 0.0 : rng.uniform01() * 0.95;
        AnqParams p(eta, omega, 2, QuantMode::deterministic);
        const double x = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * logunif(rng, 1e-6, 1e6);
        const double q = quant_point(quantize_det(x, p), p);
        CHECK(std::fabs(q - x) <= (eta + omega * std::fabs(x)) * (1.0 + 1e-12));
    }
}

TEST_CASE("quantize_det is odd and monotone in x") {
    AnqParams p(0.3, 0.35, 2, QuantMode::deterministic);
    CounterRng rng(103, 0);
    std::vector<double> xs;
    for (int i = 0; i < 400; ++i) xs.push_back((rng.uniform01() - 0.5) * 50.0);
    for (double x : xs) CHECK(quantize_det(-x, p) == -quantize_det(x, p));
    std::sort(xs.begin(), xs.end());
    for (size_t i = 1; i < xs.size(); ++i)
        CHECK(quantize_det(xs[i - 1], p) <= quantize_det(xs[i], p));
}

TEST_CASE("quant_point is odd and strictly increasing") {
    for (QuantMode mode : {QuantMode::deterministic, QuantMode::probabilistic}) {
        AnqParams p(0.7, 0.4, 2, mode);
        for (QuantIndex ell = -20; ell < 20; ++ell)
            CHECK(quant_point(ell, p) < quant_point(ell + 1, p));
        for (QuantIndex ell = 0; ell <= 20; ++ell)
            CHECK(quant_point(-ell, p) == -quant_point(ell, p));
    }
}

TEST_CASE("probabilistic rule lands on the two bracketing points, unbiased") {
    CounterRng rng(104, 0);
    for (int t = 0; t < 300; ++t) {
        const double eta = logunif(rng, 1e-2, 10.0);
        const double omega = (t % 6 == 0) ? 0.0 : 0.05 + 0.8 * rng.uniform01();
        AnqParams p(eta, omega, 2, QuantMode::probabilistic);
        const double x =
            (rng.uniform01() < 0.5 ? -1.0 : 1.0) * rng.uniform01() * quant_point(12, p);

        // locate the signed bracket by scanning for the first point >= x
        QuantIndex ihi = -13;
        while (quant_point(ihi, p) < x) ++ihi;
        const double hi = quant_point(ihi, p);
        const double lo = (x == hi) ? hi : quant_point(ihi - 1, p);

        const double bc = eta + omega * std::fabs(x);
        int seen_lo = 0, seen_hi = 0;
        for (int rep = 0; rep < 40; ++rep) {
            const QuantIndex q = quantize_prob(x, p, rng);
            const double qp = quant_point(q, p);
            const bool is_lo = qp == lo, is_hi = qp == hi;
            REQUIRE((is_lo || is_hi));
            seen_lo += is_lo;
            seen_hi += is_hi;
        }
        CHECK(seen_lo + seen_hi == 40);
        if (lo != hi) {
            // unbiasedness is exact by construction of the mixing probability
            const double prob_hi = (x - lo) / (hi - lo);
            REQUIRE(prob_hi >= -1e-12);
            REQUIRE(prob_hi <= 1.0 + 1e-12);
            CHECK(prob_hi * hi + (1.0 - prob_hi) * lo ==
                  doctest::Approx(x).epsilon(1e-12));
            // variance form of the error bound
            CHECK((x - lo) * (hi - x) <= bc * bc * (1.0 + 1e-10));
        }
    }
}

TEST_CASE("exact lattice points are returned surely in probabilistic mode") {
    AnqParams p(0.8, 0.3, 2, QuantMode::probabilistic);
    CounterRng rng(105, 0);
    for (QuantIndex ell : {-5LL, -1LL, 0LL, 1LL, 7LL}) {
        const double x = quant_point(ell, p);
        for (int rep = 0; rep < 20; ++rep) CHECK(quantize_prob(x, p, rng) == ell);
    }
}

TEST_CASE("quantize_vector equals per-coordinate quantization") {
    AnqParams pd(0.2, 0.25, 2, QuantMode::deterministic);
    const double x[5] = {0.1, -3.0, 0.0, 7.7, -0.2};
    QuantIndex out[5];
    CounterRng rng(106, 0);
    quantize_vector(x, 5, pd, rng, out);
    for (int i = 0; i < 5; ++i) CHECK(out[i] == quantize_det(x[i], pd));

    AnqParams pp(0.2, 0.25, 2, QuantMode::probabilistic);
    CounterRng r1(107, 0), r2(107, 0);
    QuantIndex v1[5], v2[5];
    quantize_vector(x, 5, pp, r1, v1);
    for (int i = 0; i < 5; ++i) v2[i] = quantize_prob(x[i], pp, r2);
    for (int i = 0; i < 5; ++i) CHECK(v1[i] == v2[i]);
}

TEST_CASE("max_range hand values, odd N") {
    // deterministic: midpoint between the last in-range and first out-of-range point
    CHECK(max_range(QuantMode::deterministic, 1.0, 0.5, 3) ==
          doctest::Approx(10.0).epsilon(1e-14));
    // probabilistic: the largest point itself
    CHECK(max_range(QuantMode::probabilistic, 1.0, 0.5, 3) ==
          doctest::Approx(1.0 + std::sqrt(5.0)).epsilon(1e-14));
}

TEST_CASE("max_range omega=0 limits") {
    CHECK(max_range(QuantMode::deterministic, 0.3, 0.0, 5) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(max_range(QuantMode::probabilistic, 0.3, 0.0, 5) ==
          doctest::Approx(1.2).epsilon(1e-14));
    // continuity in omega at the switch
    const double near = max_range(QuantMode::deterministic, 0.3, 1e-9, 5);
    CHECK(near == doctest::Approx(1.5).epsilon(1e-6));
}

TEST_CASE("max_range vanishes when eta is zero, for any N") {
    for (long long N : {1LL, 3LL, 101LL, 1000001LL}) {
        CHECK(max_range(QuantMode::deterministic, 0.0, 0.5, N) == 0.0);
        CHECK(max_range(QuantMode::probabilistic, 0.0, 0.5, N) == 0.0);
    }
}

TEST_CASE("max_range is nondecreasing in N") {
    for (QuantMode mode : {QuantMode::deterministic, QuantMode::probabilistic}) {
        double prev = 0.0;
        for (long long N = 1; N <= 25; ++N) {
            const double r = max_range(mode, 0.4, 0.3, N);
            CHECK(r >= prev);
            prev = r;
        }
    }
}

TEST_CASE("finer eta needs more resolution for the same value") {
    long long prev = -1;
    for (double eta : {1.0, 1e-2, 1e-4, 1e-6}) {
        AnqParams p(eta, 0.05, 2, QuantMode::deterministic);
        const long long ell = std::llabs(quantize_det(5.0, p));
        CHECK(ell > prev);
        prev = ell;
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(AnqParams(0.0, 0.5, 2, QuantMode::deterministic), std::invalid_argument);
    CHECK_THROWS_AS(AnqParams(-1.0, 0.5, 2, QuantMode::deterministic), std::invalid_argument);
    CHECK_THROWS_AS(AnqParams(1.0, -0.1, 2, QuantMode::deterministic), std::invalid_argument);
    CHECK_THROWS_AS(AnqParams(1.0, 1.0, 2, QuantMode::deterministic), std::invalid_argument);
    CHECK_THROWS_AS(AnqParams(1.0, 0.5, 1, QuantMode::deterministic), std::invalid_argument);
}
