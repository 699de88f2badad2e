#include <gtest/gtest.h>
#include <pcnet/ensemble.hpp>

#include "common.hpp"

#include <algorithm>

using namespace pcnet;

namespace {
NetworkSpec make(Topology top, int n, double h, double jp, double jz) {
    NetworkSpec s;
    s.topology = top;
    s.n = n;
    s.h = h;
    s.j_perp = jp;
    s.j_par = jz;
    return s;
}

TransferMatrix rotation(double a) {
    TransferMatrix m = TransferMatrix::Identity();
    m(1, 1) = m(2, 2) = std::cos(a);
    m(2, 1) = std::sin(a);
    m(1, 2) = -std::sin(a);
    return m;
}
} // namespace

TEST(Esym, Examples) {
    EXPECT_NEAR(esym({1, 1.0 / 3, 2.0 / 3}, 1), 2.0, 1e-15);
    EXPECT_EQ(esym({1, 1, 1, 1}, 2), 6.0);
    EXPECT_EQ(esym({1, 2, 3}, 3), 6.0);
    EXPECT_EQ(esym({1, 2, 3}, 0), 1.0);
    EXPECT_THROW(esym({1, 2}, 3), std::out_of_range);
    EXPECT_THROW(esym({1, 2}, -1), std::out_of_range);
    const auto r = esym_all(std::vector<Rational>{Rational(1, 2), Rational(1, 3), Rational(-1)});
    EXPECT_EQ(r[1], Rational(-1, 6));
    EXPECT_EQ(r[3], Rational(-1, 6));
}

TEST(NetworkAverage, Examples) {
    const TransferMatrix m = rotation(0.3);
    EXPECT_LT((network_average({m, m, m}) - m).cwiseAbs().maxCoeff(), 1e-15);
    const TransferMatrix a = network_average({rotation(0.7), rotation(-0.7)});
    EXPECT_NEAR(fit_pc(a).lambda1, std::cos(0.7), 1e-15);
    EXPECT_THROW(network_average({}), std::invalid_argument);
}

TEST(NetworkAverage, ConvexClosure) {
    std::mt19937_64 g(2);
    std::uniform_real_distribution<double> u(-1, 1), th(-pi, pi);
    for(int rep = 0; rep < 100; ++rep) {
        std::vector<TransferMatrix> ms;
        for(int k = 0; k < 4; ++k) ms.push_back(pc_matrix(std::abs(u(g)) / 2, th(g), u(g) / 2, u(g) / 2));
        EXPECT_LE(fit_pc(network_average(ms)).residual, 1e-12);
    }
}

TEST(NetworkAverage, HierarchyLambda3) {
    // XXX ring: individual maps of the N = 4 hierarchy state cross zero, the network average does not
    const NetworkSpec s = make(Topology::ring, 4, generic_h(1), 1, 1);
    const TimeGrid grid = make_grid(1, 10, 400);
    DiagonalMapEngine eng(propagator_of(s));
    const auto z = hierarchy_state(4);
    double avg_min = 1;
    int site_crossings = 0;
    std::vector<double> prev(4, 1);
    for(int k = 0; k <= grid.steps; ++k) {
        const auto ks = eng.kernels(grid.time(k));
        avg_min = std::min(avg_min, eng.network_map(ks, z)(3, 3));
        for(int site = 0; site < 4; ++site) {
            const double l3 = eng.map(ks, site, z)(3, 3);
            if((l3 > 0) != (prev[site] > 0)) ++site_crossings;
            prev[site] = l3;
        }
    }
    EXPECT_GT(avg_min, 0.0);
    EXPECT_GT(site_crossings, 0);
}

TEST(TimeAverage, Examples) {
    const TransferMatrix c = rotation(0.4);
    std::vector<TransferMatrix> series(50, c);
    for(const auto &m : time_average(series, 0.1)) EXPECT_LT((m - c).cwiseAbs().maxCoeff(), 1e-14);

    const double w = 3.0, dt = 0.001;
    std::vector<TransferMatrix> osc;
    std::vector<double> times;
    for(int k = 0; k <= 20000; ++k) {
        TransferMatrix m = TransferMatrix::Identity();
        m(3, 3) = std::cos(w * k * dt);
        osc.push_back(m);
        times.push_back(k * dt);
    }
    const auto avg = time_average(osc, times);
    for(std::size_t k = 1000; k < avg.size(); k += 1000) EXPECT_LE(std::abs(avg[k](3, 3)), 1.0 / (w * times[k]) + 1e-6);

    times[5] += 1e-4;
    EXPECT_THROW(time_average(osc, times), std::invalid_argument);
    times[5] -= 1e-4;
    times[0] = 0.01;
    EXPECT_THROW(time_average(osc, times), std::invalid_argument);
}

TEST(TimeAverage, ThreeQubitLimit) {
    const NetworkSpec s = make(Topology::complete, 3, generic_h(1), 1, 1);
    const TimeGrid grid = make_grid(1, 200, 40);
    const AveragedRun r = averaged_run(network_series(s, uniform_state(3, 0.0), grid), grid, 1);
    EXPECT_NEAR(r.lambda3.back(), 5.0 / 9, 0.002);
}

TEST(TimeAverage, Lambda1Decays) {
    const NetworkSpec s = make(Topology::complete, 3, 0.7319, 1, 1);
    const TimeGrid grid = make_grid(1, 500, 20);
    const AveragedRun r = averaged_run(network_series(s, hierarchy_state(3), grid), grid, 1);
    EXPECT_LT(r.lambda1.back(), 0.01);
}

TEST(Steady, Examples) {
    const SteadyChannel c4 = steady_channel(4, Topology::complete);
    EXPECT_EQ(c4.lambda3_t(std::vector<Rational>(4, Rational(1))), Rational(5, 8));
    EXPECT_EQ(c4.tau3_t(std::vector<Rational>(4, Rational(1))), Rational(3, 8));
    const SteadyChannel c6 = steady_channel(6, Topology::complete);
    EXPECT_EQ(c6.lambda3_t(std::vector<Rational>(6, Rational(0))), Rational(59, 144));
    EXPECT_EQ(c6.tau3_t(std::vector<Rational>(6, Rational(0))), Rational(0));
    EXPECT_EQ(steady_channel(5, Topology::ring).lambda3_t(std::vector<Rational>(5, Rational(0))), Rational(71, 225));
    EXPECT_EQ(steady_channel(3, Topology::complete).lambda3(hierarchy_state(3)), 5.0 / 9);
    EXPECT_THROW(steady_channel(7, Topology::complete), unsupported_error);
    EXPECT_THROW(steady_channel(6, Topology::ring), unsupported_error);
}

TEST(Steady, ConstraintExact) {
    for(auto [n, top] : std::vector<std::pair<int, Topology>>{{3, Topology::complete}, {4, Topology::complete}, {5, Topology::complete},
                                                            {6, Topology::complete}, {4, Topology::ring}, {5, Topology::ring}}) {
        const SteadyChannel c = steady_channel(n, top);
        EXPECT_TRUE(c.constraint_holds()) << n;
        for(int sgn : {1, -1}) {
            const std::vector<Rational> z(n, Rational(sgn));
            EXPECT_EQ(c.tau3_t(z) + Rational(sgn) * c.lambda3_t(z), Rational(sgn));
        }
        // mixed sign patterns still give a channel
        for(int m = 0; m < (1 << n); ++m) {
            std::vector<Rational> z(n);
            for(int i = 0; i < n; ++i) z[i] = (m >> i) & 1 ? Rational(-1) : Rational(1);
            const Rational l = c.lambda3_t(z), t = c.tau3_t(z);
            const Rational al = l < Rational(0) ? -l : l, at = t < Rational(0) ? -t : t;
            EXPECT_LE(at + al, Rational(1)) << n << " " << m;
        }
    }
}

TEST(Steady, GeneralFormMatchesTables) {
    using R = Rational;
    const std::map<int, std::vector<R>> a = {{3, {R(5, 9)}}, {4, {R(7, 16), R(3, 16)}}, {5, {R(7, 15), R(16, 75)}}, {6, {R(59, 144), R(5, 12), R(-5, 48)}}};
    std::mt19937_64 g(4);
    for(const auto &[n, coef] : a) {
        const SteadyChannel gen = steady_channel_general(n, coef), tab = steady_channel(n, Topology::complete);
        const auto z = test::random_z(n, g);
        EXPECT_NEAR(gen.lambda3(z), tab.lambda3(z), 1e-15);
        EXPECT_NEAR(gen.tau3(z), tab.tau3(z), 1e-15);
        EXPECT_TRUE(gen.constraint_holds());
    }
    EXPECT_THROW(steady_channel_general(6, {R(1)}), config_error);
}

TEST(Steady, PermutationSymmetry) {
    std::mt19937_64 g(5);
    for(int n = 3; n <= 6; ++n) {
        auto z = test::random_z(n, g);
        const SteadyChannel c = steady_channel(n, Topology::complete);
        const double l = c.lambda3(z), t = c.tau3(z);
        std::sort(z.begin(), z.end());
        do {
            EXPECT_NEAR(c.lambda3(z), l, 1e-14);
            EXPECT_NEAR(c.tau3(z), t, 1e-14);
        } while(std::next_permutation(z.begin(), z.end()));
    }
    const SteadyChannel r4 = steady_channel(4, Topology::ring);
    const std::vector<double> z{0.9, -0.3, 0.5, 0.1};
    std::vector<double> cyc{-0.3, 0.5, 0.1, 0.9}, swp{-0.3, 0.9, 0.5, 0.1};
    EXPECT_NEAR(r4.lambda3(cyc), r4.lambda3(z), 1e-14);
    EXPECT_GT(std::abs(r4.lambda3(swp) - r4.lambda3(z)), 1e-3);
    const SteadyChannel r5 = steady_channel(5, Topology::ring);
    const std::vector<double> y{0.9, -0.3, 0.5, 0.1, -0.7}, ys{-0.3, 0.9, 0.5, 0.1, -0.7};
    EXPECT_NEAR(r5.lambda3(ys), r5.lambda3(y), 1e-14);
}

TEST(Steady, NumericConvergence) {
    std::mt19937_64 g(6);
    const double horizon = 100;
    for(auto [n, top] : std::vector<std::pair<int, Topology>>{{3, Topology::complete}, {4, Topology::complete}, {4, Topology::ring}, {5, Topology::ring}}) {
        const NetworkSpec s = make(top, n, generic_h(1), 1, 1);
        const TimeGrid grid = make_grid(1, horizon, 40);
        const SteadyChannel c = steady_channel(n, top);
        std::vector<std::vector<double>> zs;
        for(int k = 0; k < 3; ++k) zs.push_back(test::random_z(n, g));
        const auto series = network_series(s, zs, grid);
        for(std::size_t k = 0; k < zs.size(); ++k) {
            const AveragedRun r = averaged_run(series[k], grid, 1);
            EXPECT_LT(std::abs(r.lambda3.back() - c.lambda3(zs[k])), 5.0 / (n * horizon)) << n;
            EXPECT_LT(std::abs(r.tau3.back() - c.tau3(zs[k])), 5.0 / (n * horizon)) << n;
        }
    }
}

TEST(Fluctuations, Examples) {
    std::vector<double> t{0, 10, 30, 50}, l(4, 0.5), tau(4, 0.0);
    FluctuationSeries f = fluctuations(t, l, tau, 0.5, 0.0, 4);
    EXPECT_EQ(f.c_lambda, 0.0);
    EXPECT_EQ(f.c_tau, 0.0);
    EXPECT_FALSE(f.lambda_absolute);
    EXPECT_TRUE(f.tau_absolute);
    l = {1, 1, 0.55, 0.5};
    f = fluctuations(t, l, tau, 0.5, 0.0, 4);
    EXPECT_NEAR(f.d_lambda[2], 0.1, 1e-15);
    EXPECT_NEAR(f.c_lambda, 0.1 * 4 * 30, 1e-12);
}

TEST(Fluctuations, CompleteGraphOrderOne) {
    const NetworkSpec s = make(Topology::complete, 4, generic_h(1), 1, 1);
    const FluctuationSeries f = truncated_fluctuations(s, steady_channel(4, Topology::complete), make_grid(1, 100, 40));
    EXPECT_GE(f.c_zeta(), 0.1);
    EXPECT_LE(f.c_zeta(), 10.0);
}

TEST(Quench, DenseRouteMatchesEngine) {
    NetworkSpec s = make(Topology::quench, 3, 0, 1.0, 1.0);
    s.quench.n_cl = 1;
    s.quench.t_i = {2.3};
    s.quench.h_i = {0.37};
    NetworkSpec inter = make(Topology::complete, 3, 0, 1.0, 1.0);
    DiagonalMapEngine eng(propagator_of(inter));
    const std::vector<double> z{0.8, -0.2, 0.4};
    for(double t : {1.0, 2.3, 4.0, 9.5}) {
        const auto ks = eng.kernels(std::max(0.0, t - 2.3));
        for(int site = 0; site < 3; ++site)
            EXPECT_LT((quench_cluster_map(s, 0, t, site, z) - eng.map(ks, site, z)).cwiseAbs().maxCoeff(), 1e-11) << t << " " << site;
    }
}

TEST(Quench, SingleClusterAndDegenerateSchedule) {
    const NetworkSpec s = make(Topology::complete, 3, 0, 1.0, 1.0);
    const std::vector<double> z = hierarchy_state(3);
    const double tj = t_J(1.0), t_eval = 10 * tj;
    QuenchResult r = quench_demo(s, 1, 5 * tj, t_eval, z, 3);
    DiagonalMapEngine eng(propagator_of(s));
    EXPECT_LT((r.cluster_average - eng.network_map(eng.kernels(t_eval - r.t_i[0]), z)).cwiseAbs().maxCoeff(), 1e-12);
    r = quench_demo(s, 20, 0.0, t_eval, z, 3);
    EXPECT_TRUE(r.window_too_short);
    EXPECT_LT((r.cluster_average - eng.network_map(eng.kernels(t_eval), z)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Quench, StratifiedTimes) {
    const auto t = stratified_quench_times(50, 10.0, 1);
    for(int i = 0; i < 50; ++i) {
        EXPECT_GE(t[i], 10.0 * i / 50);
        EXPECT_LT(t[i], 10.0 * (i + 1) / 50);
    }
    EXPECT_EQ(t, stratified_quench_times(50, 10.0, 1));
}
