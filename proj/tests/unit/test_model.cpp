#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "prtransx/model.hpp"

using namespace prtransx;
using namespace prtransx::testing;

namespace {

constexpr ModelVariant kAllVariants[] = {
    ModelVariant::TransE,          ModelVariant::TransH,
    ModelVariant::TransR,          ModelVariant::TransD,
    ModelVariant::TranSparseShare, ModelVariant::TranSparseSeparate,
};

double vec_norm(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return std::sqrt(sum);
}

}  // namespace

TEST_CASE("init_params normalizes entity vectors") {
    for (ModelVariant variant : kAllVariants) {
        SparseSpec sparse{{5, 9, 3}, 0.3};
        const bool needs_sparse = variant == ModelVariant::TranSparseShare ||
                                  variant == ModelVariant::TranSparseSeparate;
        const auto params = init_params({variant, DistanceNorm::L1}, 12, 3, 20, 20, 4,
                                        needs_sparse ? &sparse : nullptr);
        for (int e = 0; e < params.entity_count; ++e) {
            CHECK(vec_norm(params.entity(e)) <= 1.0 + 1e-12);
        }
        if (variant == ModelVariant::TransH) {
            for (int r = 0; r < params.relation_count; ++r) {
                CHECK(vec_norm(params.normal(r)) == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("init_params is bit-deterministic per seed") {
    const auto a = init_params({ModelVariant::TransH, DistanceNorm::L1}, 10, 2, 8, 8, 99);
    const auto b = init_params({ModelVariant::TransH, DistanceNorm::L1}, 10, 2, 8, 8, 99);
    CHECK(a.entity_emb == b.entity_emb);
    CHECK(a.relation_emb == b.relation_emb);
    CHECK(a.hyperplane_normals == b.hyperplane_normals);
    CHECK(a.checksum() == b.checksum());
    const auto c = init_params({ModelVariant::TransH, DistanceNorm::L1}, 10, 2, 8, 8, 100);
    CHECK(a.entity_emb != c.entity_emb);
}

TEST_CASE("init_params enforces matching dimensions for TransE/H/D") {
    CHECK_THROWS_AS(static_cast<void>(init_params({ModelVariant::TransD, DistanceNorm::L1}, 4, 2,
                                                  6, 8, 1)),
                    ConfigError);
    CHECK_NOTHROW(static_cast<void>(init_params({ModelVariant::TransR, DistanceNorm::L1}, 4, 2,
                                                6, 8, 1)));
}

TEST_CASE("TransR starts at identity and reproduces TransE scores") {
    const auto transe = init_params({ModelVariant::TransE, DistanceNorm::L1}, 20, 3, 10, 10, 7);
    const auto transr = init_params({ModelVariant::TransR, DistanceNorm::L1}, 20, 3, 10, 10, 7);
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        const int h = static_cast<int>(uniform_index(rng, 20));
        const int t = static_cast<int>(uniform_index(rng, 20));
        const int r = static_cast<int>(uniform_index(rng, 3));
        CHECK(std::abs(score(transe, h, r, t) - score(transr, h, r, t)) < 1e-12);
    }
}

TEST_CASE("TransD with zero projection vectors equals TransE") {
    const auto transe = init_params({ModelVariant::TransE, DistanceNorm::L2}, 15, 2, 12, 12, 3);
    const auto transd = init_params({ModelVariant::TransD, DistanceNorm::L2}, 15, 2, 12, 12, 3);
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const int h = static_cast<int>(uniform_index(rng, 15));
        const int t = static_cast<int>(uniform_index(rng, 15));
        const int r = static_cast<int>(uniform_index(rng, 2));
        CHECK(std::abs(score(transe, h, r, t) - score(transd, h, r, t)) < 1e-12);
        CHECK(project(transd, h, r, Side::head) == project(transe, h, r, Side::head));
    }
}

TEST_CASE("TransH projection removes the normal component") {
    auto params = init_params({ModelVariant::TransH, DistanceNorm::L1}, 2, 1, 2, 2, 1);
    auto w = params.normal(0);
    w[0] = 1.0;
    w[1] = 0.0;
    auto e = params.entity(0);
    e[0] = 3.0;
    e[1] = 2.0;
    const auto projected = project(params, 0, 0, Side::head);
    CHECK(projected[0] == doctest::Approx(0.0));
    CHECK(projected[1] == doctest::Approx(2.0));
}

TEST_CASE("TransE projection is the identity") {
    const auto params = init_params({ModelVariant::TransE, DistanceNorm::L1}, 5, 1, 6, 6, 2);
    for (int e = 0; e < 5; ++e) {
        const auto projected = project(params, e, 0, Side::tail);
        const auto original = params.entity(e);
        for (std::size_t i = 0; i < projected.size(); ++i) CHECK(projected[i] == original[i]);
    }
}

TEST_CASE("score hand cases") {
    auto params = init_params({ModelVariant::TransE, DistanceNorm::L1}, 2, 1, 2, 2, 1);
    auto h = params.entity(0);
    auto t = params.entity(1);
    auto r = params.relation(0);
    h[0] = 0.1; h[1] = 0.2;
    r[0] = 0.3; r[1] = -0.1;
    t[0] = 0.4; t[1] = 0.1;
    CHECK(score(params, 0, 0, 1) == doctest::Approx(0.0).epsilon(1e-15));

    h[0] = 0.0; h[1] = 0.0;
    r[0] = 1.0; r[1] = 1.0;
    t[0] = 0.0; t[1] = 0.0;
    CHECK(score(params, 0, 0, 1) == doctest::Approx(2.0));

    params.kind.norm = DistanceNorm::L2;
    CHECK(score(params, 0, 0, 1) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("scores are nonnegative for all variants") {
    Rng rng(600);
    for (ModelVariant variant : kAllVariants) {
        for (DistanceNorm norm : {DistanceNorm::L1, DistanceNorm::L2}) {
            auto params = make_random_params({variant, norm}, 8, 3, 5, 5, rng);
            for (int i = 0; i < 50; ++i) {
                const int h = static_cast<int>(uniform_index(rng, 8));
                const int t = static_cast<int>(uniform_index(rng, 8));
                const int r = static_cast<int>(uniform_index(rng, 3));
                CHECK(score(params, h, r, t) >= 0.0);
            }
        }
    }
}

TEST_CASE("analytic score gradients match finite differences") {
    Rng rng(123);
    for (ModelVariant variant : kAllVariants) {
        for (DistanceNorm norm : {DistanceNorm::L1, DistanceNorm::L2}) {
            const int d = 5;
            const int k = variant == ModelVariant::TransR ? 4 : 5;  // exercise d != k once
            int accepted = 0;
            while (accepted < 12) {
                auto params = make_random_params({variant, norm}, 9, 3, d, k, rng);
                const int h = static_cast<int>(uniform_index(rng, 9));
                const int t = static_cast<int>(uniform_index(rng, 9));
                const int r = static_cast<int>(uniform_index(rng, 3));
                if (min_abs_translation_component(params, h, r, t) < 1e-3) continue;
                const auto report = fd_check_score(params, h, r, t);
                CAPTURE(static_cast<int>(variant));
                CAPTURE(static_cast<int>(norm));
                CHECK(report.checked > 0);
                CHECK(report.max_err < 1e-4);
                ++accepted;
            }
        }
    }
}

TEST_CASE("L1 subgradient is zero at an exact translation") {
    auto params = init_params({ModelVariant::TransE, DistanceNorm::L1}, 2, 1, 3, 3, 1);
    auto h = params.entity(0);
    auto t = params.entity(1);
    auto r = params.relation(0);
    for (int i = 0; i < 3; ++i) {
        h[i] = 0.2 * i;
        r[i] = 0.1;
        t[i] = 0.2 * i + 0.1;
    }
    const auto grad = grad_score(params, 0, 0, 1);
    for (const auto& entry : grad.entries) {
        for (double g : entry.grad) CHECK(g == 0.0);
    }
}

TEST_CASE("apply_constraints rescales only infeasible vectors") {
    auto params = init_params({ModelVariant::TransE, DistanceNorm::L1}, 2, 1, 4, 4, 1);
    auto big = params.entity(0);
    for (auto& x : big) x = 1.0;  // norm 2
    auto small = params.entity(1);
    for (auto& x : small) x = 0.25;  // norm 0.5
    const std::vector<int> touched = {0, 1};
    apply_constraints(params, touched, {});
    CHECK(vec_norm(params.entity(0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vec_norm(params.entity(1)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("apply_constraints renormalizes hyperplane normals") {
    auto params = init_params({ModelVariant::TransH, DistanceNorm::L1}, 2, 1, 4, 4, 1);
    auto w = params.normal(0);
    for (auto& x : w) x = 0.7;
    const std::vector<int> relations = {0};
    apply_constraints(params, {}, relations);
    CHECK(vec_norm(params.normal(0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sparse_degree formula") {
    const std::vector<std::int64_t> counts = {100, 50, 10};
    const auto theta = sparse_degree(counts, 0.3);
    CHECK(theta[0] == doctest::Approx(0.3));
    CHECK(theta[1] == doctest::Approx(1.0 - 0.7 * 0.5));
    const auto theta0 = sparse_degree(counts, 0.0);
    CHECK(theta0[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(static_cast<void>(sparse_degree(std::vector<std::int64_t>{0, 0}, 0.3)),
                    ConfigError);
}

TEST_CASE("sparse masks zero exactly floor(theta*d*k) entries") {
    Rng rng(52);
    for (int trial = 0; trial < 20; ++trial) {
        const int rows = 2 + static_cast<int>(uniform_index(rng, 8));
        const int cols = 2 + static_cast<int>(uniform_index(rng, 8));
        const double theta = uniform_01(rng) * 0.95;
        const auto mask = build_sparse_mask(theta, rows, cols, rng());
        const int total = rows * cols;
        const int expected_zeroed = static_cast<int>(std::floor(theta * total));
        CHECK(mask.count_active() == total - expected_zeroed);
    }
}

TEST_CASE("masked entries survive updates and constraints at exactly zero") {
    Rng rng(77);
    for (ModelVariant variant : {ModelVariant::TranSparseShare, ModelVariant::TranSparseSeparate}) {
        auto params = make_random_params({variant, DistanceNorm::L1}, 6, 3, 5, 5, rng, 0.5);
        // Arbitrary gradient-ish updates through the masked-gradient path.
        for (int step = 0; step < 20; ++step) {
            const int h = static_cast<int>(uniform_index(rng, 6));
            const int t = static_cast<int>(uniform_index(rng, 6));
            const int r = static_cast<int>(uniform_index(rng, 3));
            const auto grad = grad_score(params, h, r, t);
            for (const auto& entry : grad.entries) {
                auto row = param_row(params, entry.table, entry.index);
                for (std::size_t i = 0; i < entry.grad.size(); ++i) row[i] -= 0.05 * entry.grad[i];
            }
            const std::vector<int> entities = {h, t};
            const std::vector<int> relations = {r};
            const std::vector<std::pair<int, int>> pairs = {{r, h}, {r, t}};
            apply_constraints(params, entities, relations, pairs);
        }
        for (int r = 0; r < 3; ++r) {
            for (Side side : {Side::head, Side::tail}) {
                if (side == Side::tail && variant != ModelVariant::TranSparseSeparate) break;
                const auto m = params.matrix(side, r);
                const SparseMask& mask = params.mask(side, r);
                for (std::size_t i = 0; i < m.size(); ++i) {
                    if (!mask.active(static_cast<int>(i))) CHECK(m[i] == 0.0);
                }
            }
        }
    }
}

TEST_CASE("unmasked identity TranSparse reproduces TransE") {
    // theta_min = 0 and equal counts keep every mask dense; identity
    // matrices then make the projection the identity.
    SparseSpec sparse{{10, 10, 10}, 0.0};
    const auto sparse_params =
        init_params({ModelVariant::TranSparseShare, DistanceNorm::L1}, 10, 3, 6, 6, 21, &sparse);
    const auto transe = init_params({ModelVariant::TransE, DistanceNorm::L1}, 10, 3, 6, 6, 21);
    Rng rng(22);
    for (int i = 0; i < 100; ++i) {
        const int h = static_cast<int>(uniform_index(rng, 10));
        const int t = static_cast<int>(uniform_index(rng, 10));
        const int r = static_cast<int>(uniform_index(rng, 3));
        CHECK(std::abs(score(sparse_params, h, r, t) - score(transe, h, r, t)) < 1e-12);
    }
}

TEST_CASE("variant and norm names round-trip") {
    for (ModelVariant variant : kAllVariants) {
        CHECK(model_variant_from_string(to_string(variant)) == variant);
    }
    CHECK(distance_norm_from_string("L1") == DistanceNorm::L1);
    CHECK(distance_norm_from_string("l2") == DistanceNorm::L2);
    CHECK_THROWS_AS(static_cast<void>(model_variant_from_string("transQ")), ConfigError);
}
