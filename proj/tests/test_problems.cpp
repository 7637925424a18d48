#include "oracles.hpp"

#include "sparsa/problems.hpp"

#include <doctest.h>

#include <random>

using namespace sparsa;

namespace {

// Central differences of the value along random unit directions.
void check_gradient(const LeastSquaresProblem& p, std::uint64_t seed) {
    auto f = p.objective();
    std::mt19937_64 rng(seed);
    const Vector x = p.x1 + oracle::random_vec(p.x1.size(), rng, 0.1);
    const Vector g = f.gradient(x);
    for (int t = 0; t < 10; ++t) {
        Vector d = oracle::random_vec(x.size(), rng);
        d /= d.norm();
        const double h = 1e-4;
        const double fd = (f.value(x + h * d) - f.value(x - h * d)) / (2 * h);
        const double an = g.dot(d);
        CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
    }
}

}  // namespace

TEST_CASE("substreams are independent and reproducible") {
    auto a = substream(7, Stream::matrix);
    auto b = substream(7, Stream::matrix);
    auto c = substream(7, Stream::noise);
    auto d = substream(8, Stream::matrix);
    const auto va = a(), vb = b(), vc = c(), vd = d();
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(va != vd);
}

TEST_CASE("least-squares objective") {
    Matrix a(2, 2);
    a << 1, 2, 3, 4;
    Vector b(2);
    b << 1, -1;
    LeastSquaresObjective f(make_dense(a), std::make_shared<Vector>(b));
    Vector x(2);
    x << 0.5, -0.25;
    const Vector r = a * x - b;
    CHECK(f.value(x) == doctest::Approx(0.5 * r.squaredNorm()).epsilon(1e-15));
    CHECK((f.gradient(x) - a.transpose() * r).norm() < 1e-14);
    // value + gradient at the same point share the forward product
    CHECK(f.matvecs() == MatvecCounter{1, 1});
    f.gradient(Vector::Zero(2));
    CHECK(f.matvecs() == MatvecCounter{2, 2});
    f.value(Vector::Zero(2));
    CHECK(f.matvecs() == MatvecCounter{3, 2});
    CHECK(f.value_calls() == 2);
    CHECK(f.gradient_calls() == 2);
    CHECK_THROWS_AS(f.value(Vector::Zero(3)), DimensionMismatch);
}

TEST_CASE("bpdn generator") {
    SUBCASE("deterministic") {
        const auto p = gen_bpdn(256, 1024, 160, 1, 0.1);
        const auto q = gen_bpdn(256, 1024, 160, 1, 0.1);
        CHECK(materialize(*p.op) == materialize(*q.op));
        CHECK(*p.b == *q.b);
        CHECK(*p.x_true == *q.x_true);
        CHECK(p.x1 == Vector::Zero(1024));
        CHECK(p.x_true->cwiseAbs().sum() == 160.0);
        CHECK(p.atb_inf == doctest::Approx(p.op->adjoint(*p.b).lpNorm<Eigen::Infinity>()).epsilon(1e-15));
    }
    SUBCASE("changing the shape leaves the spike pattern's noise stream alone") {
        const auto p = gen_bpdn(64, 128, 0, 5, 0.1);
        const auto q = gen_bpdn(64, 256, 0, 5, 0.1);
        // With no spikes, b is pure noise drawn from its own stream.
        CHECK(*p.b == *q.b);
    }
    SUBCASE("noise energy without spikes") {
        const Index k = 256;
        double mean = 0.0;
        for (std::uint64_t s = 0; s < 100; ++s) mean += gen_bpdn(k, 1024, 0, s, 0.1).b->squaredNorm();
        mean /= 100.0;
        CHECK(std::abs(mean - k * 1e-4) <= 0.2 * k * 1e-4);
    }
    SUBCASE("entry variance") {
        const Index n = 64;
        double sum = 0.0, sq = 0.0, cnt = 0.0;
        for (std::uint64_t s = 0; s < 200; ++s) {
            const Matrix a = materialize(*gen_bpdn(16, n, 0, s, 0.1).op);
            sum += a.col(0).sum();
            sq += a.col(0).squaredNorm();
            cnt += static_cast<double>(a.rows());
        }
        const double var = sq / cnt - (sum / cnt) * (sum / cnt);
        CHECK(std::abs(var - 1.0 / (2.0 * n)) <= 0.1 / (2.0 * n));
    }
    CHECK_THROWS(gen_bpdn(4, 8, 9, 1, 0.1));
}

TEST_CASE("group generator") {
    const auto p = gen_group(3, 256, 64, 64, 8, 0.3);
    const Matrix a = materialize(*p.op);
    CHECK((a * a.transpose() - Matrix::Identity(256, 256)).cwiseAbs().maxCoeff() <= 1e-10);
    int zero_groups = 0;
    for (Index g = 0; g < 64; ++g) zero_groups += p.x_true->segment(g * 64, 64).isZero(0.0) ? 1 : 0;
    CHECK(zero_groups == 56);
    const double atb = (a.transpose() * *p.b).lpNorm<Eigen::Infinity>();
    CHECK(p.regularizer.tau() == doctest::Approx(0.3 * atb).epsilon(1e-12));
    CHECK(p.regularizer.kind() == RegularizerKind::group_l2);
    CHECK(p.regularizer.groups().size() == 64);
    const auto q = gen_group(3, 256, 64, 64, 8, 0.3);
    CHECK(*p.b == *q.b);
}

TEST_CASE("deblur generator") {
    SUBCASE("degenerate operator") {
        const Image2D img = test_pattern(16, 16);
        const auto p = gen_deblur(img, 1, 0, 1, 0.0, 0.05);
        CHECK((*p.b - img.to_vector()).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((p.x1 - img.to_vector()).cwiseAbs().maxCoeff() < 1e-14);
        auto f = p.objective();
        SolverConfig cfg;
        cfg.eps = 1e-12;
        const auto res = solve(f, p.regularizer, p.x1, cfg);
        Vector want = img.to_vector();
        for (Index i = 0; i < want.size(); ++i) want[i] = oracle::scalar_l1_prox(want[i], 0.05);
        CHECK((res.x - want).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("noise energy at the true coefficients") {
        const Image2D img = test_pattern(32, 32);
        const double n = 32.0 * 32.0;
        double mean = 0.0;
        for (std::uint64_t s = 0; s < 50; ++s) {
            const auto p = gen_deblur(img, 4, 2, s);
            auto f = p.objective();
            mean += f.value(*p.x_true);
        }
        mean /= 50.0;
        const double want = 0.5 * n * 0.0055 * 0.0055;
        CHECK(std::abs(mean - want) <= 0.2 * want);
    }
    SUBCASE("x1 is the analysis transform of b") {
        const auto p = gen_deblur(test_pattern(16, 16), 3, 2, 4);
        CHECK((p.x1 - make_haar_dwt(16, 16, 2)->adjoint(*p.b)).norm() < 1e-13);
    }
    CHECK_THROWS(gen_deblur(test_pattern(12, 12), 3, 3, 1));
}

TEST_CASE("tv phantom generator") {
    const Image2D ph = shepp_logan(64, 64);
    CHECK(*std::min_element(ph.pixels.begin(), ph.pixels.end()) >= 0.0);
    CHECK(*std::max_element(ph.pixels.begin(), ph.pixels.end()) <= 1.0);
    CHECK(ph.at(0, 0) == 0.0);
    CHECK(ph.at(63, 0) == 0.0);
    CHECK(ph.at(0, 63) == 0.0);

    SUBCASE("direct point evaluation") {
        // centre: outer skull (1) and brain (-0.8)
        const Image2D big = shepp_logan(256, 256);
        CHECK(big.at(128, 128) == doctest::Approx(0.2));
        // inside the upper ellipse centred at y = 0.35
        CHECK(big.at(128 - 45, 128) == doctest::Approx(0.3));
        // skull rim: just inside the outer ellipse, outside the brain
        CHECK(big.at(12, 128) == doctest::Approx(1.0));
    }

    SUBCASE("mask size and DC") {
        const auto p = gen_tv_phantom(64, 64, 0, 1);
        REQUIRE(p.mask.has_value());
        const double target = 6136.0 / 65536.0 * 64 * 64;
        CHECK(std::abs(p.mask->count() - target) <= 0.02 * target);
        CHECK(p.mask->at(0, 0));
        CHECK(p.op->range_dim() == 2 * p.mask->count());
        CHECK(p.regularizer.kind() == RegularizerKind::tv_iso);
        CHECK((p.x1 - p.op->adjoint(*p.b)).norm() < 1e-13);
    }
    SUBCASE("line masks always contain DC") {
        for (Index lines : {1, 3, 10}) CHECK(radial_line_mask(32, 32, lines).at(0, 0));
        CHECK(radial_line_mask(32, 32, 10).count() > radial_line_mask(32, 32, 3).count());
    }
}

TEST_CASE("generate dispatches on the spec") {
    auto s = GeneratorSpec::defaults(Family::bpdn);
    s.k = 32;
    s.n = 64;
    s.spikes = 4;
    s.tau = 0.5;
    s.tau_rule = TauRule::relative_atb;
    const auto p = generate(s);
    CHECK(p.regularizer.tau() == doctest::Approx(0.5 * p.atb_inf));
    const auto q = generate(s);
    CHECK(*p.b == *q.b);

    auto g = GeneratorSpec::defaults(Family::group);
    CHECK(g.tau_rule == TauRule::relative_atb);
    CHECK(g.tau == 0.3);
    CHECK(GeneratorSpec::defaults(Family::tv_phantom).tau == 0.01);
    CHECK(GeneratorSpec::defaults(Family::deblur).tau == 5e-5);
    CHECK(family_from_string(to_string(Family::tv_phantom)) == Family::tv_phantom);
    CHECK_THROWS(family_from_string("lasso"));
}

TEST_CASE("gradient oracles pass finite differences") {
    check_gradient(gen_bpdn(32, 64, 5, 1, 0.1), 1);
    check_gradient(gen_group(2, 32, 8, 8, 2), 2);
    check_gradient(gen_deblur(test_pattern(16, 16), 4, 2, 3), 3);
    check_gradient(gen_tv_phantom(16, 16, 0, 4), 4);
}

TEST_CASE("matvec accounting during a solve") {
    const auto p = gen_bpdn(32, 128, 5, 2, 0.05);
    p.op->reset_counts();
    auto f = p.objective();
    const auto res = solve(f, p.regularizer, p.x1, SolverConfig{});
    CHECK(res.matvecs.total() > 0);
    // every gradient is taken at the point whose value was just computed
    CHECK(res.matvecs.forward_count == f.value_calls());
    CHECK(res.matvecs.adjoint_count == f.gradient_calls());
    CHECK(p.op->counts() == res.matvecs);
}
