#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "prtransx/loss.hpp"
#include "prtransx/types.hpp"

using namespace prtransx;

namespace {
// Frozen high-precision references.
constexpr double kExpMinus1 = 0.36787944117144233;       // e^-1
constexpr double kPhiInvEpsP = 0.9210340371976183;       // 4 ln10 / 10
constexpr double kPhiInvEpsN = 2.9933606208922594;       // 13 ln10 / 10
constexpr double kNegLossAtOne = 1.9933606208922594;     // 13 ln10 / 10 - 1
constexpr double kLn2Over10 = 0.06931471805599453;       // ln2 / 10
}  // namespace

TEST_CASE("phi maps scores to probabilities") {
    CHECK(phi(0.0, 10.0) == doctest::Approx(1.0).epsilon(0));
    CHECK(std::abs(phi(0.1, 10.0) - kExpMinus1) < 1e-12);
    CHECK(std::abs(phi(phi_inv(0.37, 10.0), 10.0) - 0.37) < 1e-12);
    CHECK_THROWS_AS(phi(-0.5, 10.0), std::invalid_argument);
}

TEST_CASE("phi_inv maps probabilities to scores") {
    CHECK(phi_inv(1.0, 10.0) == 0.0);
    CHECK(std::abs(phi_inv(1e-4, 10.0) - kPhiInvEpsP) < 1e-12);
    CHECK(std::abs(phi_inv(1e-13, 10.0) - kPhiInvEpsN) < 1e-12);
    CHECK_THROWS_AS(phi_inv(0.0, 10.0), std::domain_error);
    CHECK_THROWS_AS(phi_inv(-0.2, 10.0), std::domain_error);
    CHECK_THROWS_AS(phi_inv(1.5, 10.0), std::domain_error);
}

TEST_CASE("phi/phi_inv are mutual inverses on the full range") {
    const Hyperparams hyper;
    const double lambda = hyper.lambda;
    const double log_lo = std::log(hyper.eps_n);
    for (int i = 0; i <= 1000; ++i) {
        const double p = std::exp(log_lo + (0.0 - log_lo) * i / 1000.0);
        CHECK(std::abs(phi(phi_inv(p, lambda), lambda) - p) < 1e-12);
    }
    const double f_hi = phi_inv(hyper.eps_n, lambda);
    for (int i = 0; i <= 1000; ++i) {
        const double f = f_hi * i / 1000.0;
        CHECK(std::abs(phi_inv(phi(f, lambda), lambda) - f) < 1e-12);
    }
}

TEST_CASE("phi and phi_inv are strictly decreasing") {
    double prev = phi(0.0, 10.0);
    for (int i = 1; i <= 100; ++i) {
        const double cur = phi(i * 0.03, 10.0);
        CHECK(cur < prev);
        prev = cur;
    }
    prev = phi_inv(1e-13, 10.0);
    for (int i = 1; i <= 100; ++i) {
        const double cur = phi_inv(1e-13 * std::pow(1e13, i / 100.0), 10.0);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("clamp_probability applies the floor and the negative pin") {
    const Hyperparams hyper;
    CHECK(clamp_probability(0.5, hyper, false) == 0.5);
    CHECK(clamp_probability(1e-6, hyper, false) == hyper.eps_p);
    CHECK(clamp_probability(0.7, hyper, true) == hyper.eps_n);
    CHECK(clamp_probability(0.0, hyper, true) == hyper.eps_n);
}

TEST_CASE("margin_pair_loss hinge") {
    CHECK(margin_pair_loss(0.2, 1.5, 1.0) == 0.0);
    CHECK(margin_pair_loss(1.0, 1.2, 1.0) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(margin_pair_loss(0.7, 0.7, 1.0) == 1.0);
}

TEST_CASE("positive_prob_loss") {
    const Hyperparams hyper;
    CHECK(positive_prob_loss(1.0, 0.0, hyper) == 0.0);
    CHECK(std::abs(positive_prob_loss(kExpMinus1, 0.1, hyper)) < 1e-12);
    CHECK(std::abs(positive_prob_loss(0.5, 0.0, hyper) - kLn2Over10) < 1e-12);
}

TEST_CASE("negative_prob_loss") {
    const Hyperparams hyper;
    CHECK(negative_prob_loss(5.0, hyper) == 0.0);
    CHECK(std::abs(negative_prob_loss(1.0, hyper) - kNegLossAtOne) < 1e-9);
    CHECK(negative_prob_loss(phi_inv(hyper.eps_n, hyper.lambda), hyper) == 0.0);
}

TEST_CASE("combined_pair_loss composes weight and probability losses") {
    const Hyperparams hyper;
    SUBCASE("inactive hinge leaves the weight at one") {
        const double s = 0.3, s_neg = 2.0;  // hinge 0.3 + 1 - 2 < 0
        const double expect = hyper.alpha_for(0) * positive_prob_loss(0.4, s, hyper) +
                              hyper.beta_for(0) * negative_prob_loss(s_neg, hyper);
        CHECK(combined_pair_loss(s, s_neg, 0.4, 0, hyper) == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("prior-knowledge relation weights: alpha 10, beta 0") {
        const double s = 0.5, s_neg = 3.0;
        const double expect = 10.0 * positive_prob_loss(0.9, s, hyper);
        CHECK(combined_pair_loss(s, s_neg, 0.9, kUpperToLowerDisease, hyper) ==
              doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("capped weight keeps a 0.8 hinge violation finite") {
        const double s = 1.0, s_neg = 1.2;  // hinge = 0.8
        const double loss = combined_pair_loss(s, s_neg, 0.5, 0, hyper);
        CHECK(std::isfinite(loss));
        CHECK(pair_weight(s, s_neg, hyper) == doctest::Approx(std::exp(60.0)).epsilon(1e-12));
    }
    SUBCASE("disabling the cap overflows to infinity") {
        Hyperparams uncapped = hyper;
        uncapped.weight_exponent_cap = std::numeric_limits<double>::infinity();
        const double loss = combined_pair_loss(1.0, 0.2, 0.5, 0, uncapped);
        CHECK(!std::isfinite(loss));
    }
    SUBCASE("zero iff both probability losses are zero") {
        const double p = 0.3;
        const double s = phi_inv(p, hyper.lambda);
        const double s_neg = phi_inv(hyper.eps_n, hyper.lambda) + 0.5;
        CHECK(combined_pair_loss(s, s_neg, p, 1, hyper) == 0.0);
        CHECK(combined_pair_loss(s + 0.01, s_neg, p, 1, hyper) > 0.0);
    }
}

TEST_CASE("grad_combined kink conventions") {
    const Hyperparams hyper;
    SUBCASE("zero positive loss gives zero d_s") {
        const double p = 0.25;
        const double s = phi_inv(p, hyper.lambda);
        const auto g = grad_combined(s, 5.0, p, 0, hyper, true);
        CHECK(g.d_s == 0.0);
    }
    SUBCASE("inactive negative hinge gives zero d_s_neg") {
        const auto g = grad_combined(0.5, 5.0, 0.3, 0, hyper, true);
        CHECK(g.d_s_neg == 0.0);
    }
}

TEST_CASE("grad_combined matches finite differences away from kinks") {
    using namespace prtransx::testing;
    Hyperparams hyper;
    Rng rng(20240517);
    int accepted = 0;
    while (accepted < 80) {
        const double s = uniform_in(rng, 0.0, 3.2);
        const double s_neg = uniform_in(rng, 0.0, 3.2);
        const double p = std::exp(uniform_in(rng, std::log(hyper.eps_p), 0.0));
        const int relation = static_cast<int>(uniform_index(rng, 6));
        const double hinge = s + hyper.gamma - s_neg;
        const double target_pos = phi_inv(p, hyper.lambda);
        const double target_neg = phi_inv(hyper.eps_n, hyper.lambda);
        // Stay away from the hinge kinks, the absolute-value kink, and the
        // weight-cap saturation boundary.
        if (std::abs(hinge) < 1e-3) continue;
        if (std::abs(target_pos - s) < 1e-3) continue;
        if (std::abs(target_neg - s_neg) < 1e-3) continue;
        if (hinge > 0.0 && std::abs(hyper.margin_weight_scale * hinge - hyper.weight_exponent_cap) < 1.0) {
            continue;
        }
        for (bool detach : {true, false}) {
            const auto report = fd_check_combined(s, s_neg, p, relation, hyper, detach);
            CAPTURE(s);
            CAPTURE(s_neg);
            CAPTURE(p);
            CAPTURE(detach);
            CHECK(report.max_err < 1e-4);
        }
        ++accepted;
    }
}

TEST_CASE("additive margin term flag") {
    Hyperparams hyper;
    hyper.add_margin_term = true;
    const double s = 1.0, s_neg = 1.5;  // hinge 0.5
    Hyperparams plain;
    const double base = combined_pair_loss(s, s_neg, 0.5, 0, plain);
    CHECK(combined_pair_loss(s, s_neg, 0.5, 0, hyper) ==
          doctest::Approx(base + 0.5).epsilon(1e-9));
}

TEST_CASE("hyperparameter validation") {
    Hyperparams hyper;
    CHECK_NOTHROW(hyper.validate(6));
    Hyperparams bad = hyper;
    bad.eps_n = 1e-3;  // above eps_p
    CHECK_THROWS_AS(bad.validate(6), ConfigError);
    bad = hyper;
    bad.lambda = 0.0;
    CHECK_THROWS_AS(bad.validate(6), ConfigError);
    bad = hyper;
    bad.alpha = {1, 2};
    CHECK_THROWS_AS(bad.validate(6), ConfigError);
}
