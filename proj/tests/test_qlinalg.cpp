#include <gtest/gtest.h>
#include <pcnet/qlinalg.hpp>

#include "common.hpp"

using namespace pcnet;

namespace {
const cplx I(0, 1);

cmat diag2(cplx a, cplx b) {
    cmat m = cmat::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}
} // namespace

TEST(Pauli, Definitions) {
    EXPECT_LT(max_abs(pauli(3) - diag2(1, -1)), 1e-15);
    EXPECT_LT(max_abs(pauli(1) * pauli(2) - I * pauli(3)), 1e-15);
    EXPECT_NEAR((pauli(1) * pauli(1)).trace().real(), 2.0, 1e-15);
    for(int a = 0; a < 4; ++a) {
        EXPECT_LT(hermiticity_defect(pauli(a)), 1e-15);
        EXPECT_LT(unitarity_defect(pauli(a)), 1e-15);
        if(a) { EXPECT_LT(std::abs(pauli(a).trace()), 1e-15); }
    }
}

TEST(Embed, Examples) {
    EXPECT_LT(max_abs(embed(pauli(3), 0, 2) - kron(pauli(3), pauli(0))), 1e-15);
    EXPECT_LT(max_abs(embed(pauli(1), 1, 2) * embed(pauli(1), 0, 2) - kron(pauli(1), pauli(1))), 1e-15);
    EXPECT_THROW(embed(pauli(1), 2, 2), std::out_of_range);
}

TEST(Embed, ChargeOnAllOnes) {
    cmat q = cmat::Zero(8, 8);
    for(int i = 0; i < 3; ++i) q += embed(pauli(3), i, 3);
    // |111> has q = 0 zero bits, so Q = 2q - N = -3
    EXPECT_NEAR(q(7, 7).real(), -3.0, 1e-15);
    EXPECT_NEAR(q(0, 0).real(), 3.0, 1e-15);
    for(int a = 0; a < 8; ++a) EXPECT_NEAR(q(a, a).real(), 2.0 * (3 - __builtin_popcount(unsigned(a))) - 3, 1e-15) << a;
}

TEST(Density, Examples) {
    cmat mm = density_of(diagonal_state({0, 0, 0}));
    EXPECT_LT(max_abs(mm - cmat::Identity(8, 8) / 8.0), 1e-15);
    EXPECT_LT(max_abs(density_of(diagonal_state({1})) - diag2(1, 0)), 1e-15);
    cmat r = density_of(diagonal_state({1, -1}));
    cmat expect = cmat::Zero(4, 4);
    expect(1, 1) = 1; // |0>|1> is index 01
    EXPECT_LT(max_abs(r - expect), 1e-15);
    EXPECT_THROW(density_of({{1, 1, 0}}), std::invalid_argument);
}

TEST(PartialTrace, Examples) {
    std::mt19937_64 g(3);
    const Bloch a = test::random_bloch(g), b = test::random_bloch(g), c = test::random_bloch(g);
    const cmat rho = density_of({a, b, c});
    EXPECT_LT(max_abs(partial_trace_keep(rho, 0) - single_density(a)), 1e-14);
    EXPECT_LT(max_abs(partial_trace_keep(rho, 1) - single_density(b)), 1e-14);
    EXPECT_LT(max_abs(partial_trace_keep(cmat::Identity(4, 4) / 4.0, 1) - cmat::Identity(2, 2) / 2.0), 1e-15);
    cvec bell = cvec::Zero(4);
    bell(0) = bell(3) = 1 / std::sqrt(2.0);
    const cmat pb = bell * bell.adjoint();
    for(int s = 0; s < 2; ++s) EXPECT_LT(max_abs(partial_trace_keep(pb, s) - cmat::Identity(2, 2) / 2.0), 1e-15);
    EXPECT_THROW(partial_trace_keep(cmat::Identity(3, 3), 0), std::invalid_argument);
    EXPECT_THROW(partial_trace_keep(pb, 2), std::out_of_range);
}

TEST(PartialTrace, ReproducesBlochVectors) {
    std::mt19937_64 g(11);
    for(int rep = 0; rep < 20; ++rep) {
        ProductState s;
        for(int i = 0; i < 4; ++i) s.push_back(test::random_bloch(g));
        const cmat rho = density_of(s);
        for(int i = 0; i < 4; ++i) {
            const Bloch b = bloch_of(partial_trace_keep(rho, i));
            EXPECT_NEAR(b.x, s[i].x, 1e-12);
            EXPECT_NEAR(b.y, s[i].y, 1e-12);
            EXPECT_NEAR(b.z, s[i].z, 1e-12);
        }
    }
}

TEST(Evolve, Examples) {
    std::mt19937_64 g(5);
    const cmat h = test::random_hermitian(8, g);
    const cmat rho = density_of({test::random_bloch(g), test::random_bloch(g), test::random_bloch(g)});
    EXPECT_LT(max_abs(evolve(h, 0.0, rho) - rho), 1e-13);
    const cmat out = evolve(h, 1.7, rho);
    EXPECT_NEAR(out.trace().real(), 1.0, 1e-12);
    Eigen::SelfAdjointEigenSolver<cmat> e0(rho), e1(out);
    EXPECT_LT((e0.eigenvalues() - e1.eigenvalues()).cwiseAbs().maxCoeff(), 1e-12);

    // precession by angle 2 h t = pi about z
    const cmat plus = single_density({1, 0, 0});
    const Bloch b = bloch_of(evolve(pauli(3), pi / 2, plus));
    EXPECT_NEAR(b.x, -1.0, 1e-12);
    EXPECT_NEAR(b.y, 0.0, 1e-12);

    cmat bad = pauli(0);
    bad(0, 1) = 1;
    EXPECT_THROW(evolve(bad, 1.0, single_density({0, 0, 1})), std::invalid_argument);
}

TEST(Evolve, UnitarityOfPropagator) {
    std::mt19937_64 g(7);
    for(int rep = 0; rep < 10; ++rep) {
        const cmat h = test::random_hermitian(16, g);
        for(double t : {0.1, 3.0, 40.0}) {
            EXPECT_LT(unitarity_defect(Propagator::dense(h).unitary(t)), 1e-11);
        }
    }
}

TEST(TransferOfMap, Examples) {
    EXPECT_LT((transfer_of_map([](const cmat &r) { return r; }) - TransferMatrix::Identity()).cwiseAbs().maxCoeff(), 1e-15);
    TransferMatrix dep = TransferMatrix::Zero();
    dep(0, 0) = 1;
    EXPECT_LT((transfer_of_map([](const cmat &r) { return cmat(r.trace() * cmat::Identity(2, 2) / 2.0); }) - dep).cwiseAbs().maxCoeff(), 1e-15);

    const double h = 0.7, t = 0.4;
    const cmat u = Propagator::dense(h * pauli(3)).unitary(t);
    const TransferMatrix m = transfer_of_map([&](const cmat &r) { return cmat(u * r * u.adjoint()); });
    EXPECT_NEAR(m(1, 1), std::cos(2 * h * t), 1e-14);
    EXPECT_NEAR(m(2, 2), std::cos(2 * h * t), 1e-14);
    EXPECT_NEAR(m(2, 1), std::sin(2 * h * t), 1e-14);
    EXPECT_NEAR(m(1, 2), -std::sin(2 * h * t), 1e-14);
    EXPECT_NEAR(m(3, 3), 1.0, 1e-14);

    EXPECT_THROW(transfer_of_map([](const cmat &r) { return cmat(cplx(0, 1) * r); }), std::invalid_argument);
}

TEST(TransferOfMap, CompositionIsProduct) {
    std::mt19937_64 g(9);
    for(int rep = 0; rep < 10; ++rep) {
        const cmat u1 = Propagator::dense(test::random_hermitian(2, g)).unitary(1.0);
        const cmat u2 = Propagator::dense(test::random_hermitian(2, g)).unitary(1.0);
        auto f1 = [&](const cmat &r) { return cmat(u1 * r * u1.adjoint()); };
        auto f2 = [&](const cmat &r) { return cmat(u2 * r * u2.adjoint()); };
        const TransferMatrix both = transfer_of_map([&](const cmat &r) { return f2(f1(r)); });
        EXPECT_LT((both - transfer_of_map(f2) * transfer_of_map(f1)).cwiseAbs().maxCoeff(), 1e-13);
    }
}
