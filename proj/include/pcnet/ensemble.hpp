#pragma once

#include "analytic.hpp"
#include "network.hpp"
#include "parallel.hpp"
#include "polynomial.hpp"
#include "reduced.hpp"
#include "rng.hpp"

#include <optional>

namespace pcnet {

// Default field for "generic h": golden-ratio multiple of J_perp.
inline double generic_h(double j_perp) { return 0.5 * (std::sqrt(5.0) - 1) * j_perp; }

// ---- initial states ----

inline std::vector<double> hierarchy_state(int n) {
    std::vector<double> z(n);
    z[0] = 1;
    for(int k = 1; k < n; ++k) z[k] = double(k) / n;
    return z;
}

inline std::vector<double> neel_state(int n) {
    std::vector<double> z(n);
    for(int k = 0; k < n; ++k) z[k] = k % 2 ? -1.0 : 1.0;
    return z;
}

inline std::vector<double> uniform_state(int n, double z) {
    if(std::abs(z) > 1) throw config_error("uniform state requires |z| <= 1");
    return std::vector<double>(n, z);
}

inline std::vector<double> random_diagonal_state(int n, Stream &rng) {
    std::vector<double> z(n);
    for(auto &v : z) v = rng.uniform(-1, 1);
    return z;
}

// ---- averages ----

inline TransferMatrix network_average(const std::vector<TransferMatrix> &maps) {
    if(maps.empty()) throw std::invalid_argument("network_average: empty list");
    TransferMatrix acc = TransferMatrix::Zero();
    for(const auto &m : maps) acc += m;
    return acc / double(maps.size());
}

struct TimeGrid {
    double dt = 0;
    int steps = 0;  // number of intervals; times are k dt for k = 0..steps

    double time(int k) const { return k * dt; }
    std::vector<double> times() const {
        std::vector<double> t(steps + 1);
        for(int k = 0; k <= steps; ++k) t[k] = k * dt;
        return t;
    }
};

inline TimeGrid make_grid(double j_perp, double horizon_tJ, int points_per_tJ) {
    if(!(horizon_tJ > 0)) throw config_error("time horizon must be positive");
    if(points_per_tJ < 2) throw config_error("points per t_J must be at least 2");
    TimeGrid g;
    g.dt = t_J(j_perp) / points_per_tJ;
    g.steps = int(std::llround(horizon_tJ * points_per_tJ));
    return g;
}

// Cumulative trapezoidal mean (1/t) int_0^t; the t = 0 entry is the value itself.
inline std::vector<TransferMatrix> time_average(const std::vector<TransferMatrix> &series, double dt) {
    std::vector<TransferMatrix> out(series.size());
    if(series.empty()) return out;
    TransferMatrix integral = TransferMatrix::Zero();
    out[0] = series[0];
    for(std::size_t k = 1; k < series.size(); ++k) {
        integral += 0.5 * dt * (series[k - 1] + series[k]);
        out[k] = integral / (k * dt);
    }
    return out;
}

inline std::vector<TransferMatrix> time_average(const std::vector<TransferMatrix> &series, const std::vector<double> &times) {
    if(series.size() != times.size()) throw std::invalid_argument("time_average: size mismatch");
    if(times.empty()) return {};
    if(times[0] != 0.0) throw std::invalid_argument("time_average: grid must start at t = 0");
    if(times.size() == 1) return series;
    const double dt = times[1] - times[0];
    for(std::size_t k = 1; k < times.size(); ++k)
        if(std::abs(times[k] - times[k - 1] - dt) > 1e-9 * std::max(1.0, dt)) throw std::invalid_argument("time_average: grid is not uniform");
    return time_average(series, dt);
}

inline double lambda1_bar(const TransferMatrix &avg) { return std::hypot(avg(1, 1), avg(1, 2)); }

// Network-averaged maps on a time grid for several diagonal initial states; one kernel
// evaluation per time serves every state.
inline std::vector<std::vector<TransferMatrix>> network_series(const NetworkSpec &spec, const std::vector<std::vector<double>> &zs,
                                                               const TimeGrid &grid) {
    for(const auto &z : zs)
        if(int(z.size()) != spec.n) throw config_error("initial state must have N entries");
    DiagonalMapEngine eng(propagator_of(spec));
    std::vector<std::vector<TransferMatrix>> out(zs.size(), std::vector<TransferMatrix>(grid.steps + 1));
    parallel_for(std::size_t(grid.steps + 1), [&](std::size_t k) {
        auto ks = eng.kernels(grid.time(int(k)));
        for(std::size_t s = 0; s < zs.size(); ++s) out[s][k] = eng.network_map(ks, zs[s]);
    });
    return out;
}

inline std::vector<TransferMatrix> network_series(const NetworkSpec &spec, const std::vector<double> &z, const TimeGrid &grid) {
    return network_series(spec, std::vector<std::vector<double>>{z}, grid)[0];
}

// ---- steady channels ----

struct SteadyChannel {
    int n = 3;
    Topology topology = Topology::complete;
    std::vector<Rational> lam;  // coefficients of eps_0, eps_2, ...
    std::vector<Rational> tau;  // coefficients of eps_1, eps_3, ...
    bool ring4_term = false;    // adds -4 z1 z3 - 4 z2 z4 inside the e_2 numerator

    template <class T> T lambda3_t(const std::vector<T> &z) const {
        check(z.size());
        auto e = esym_all(z);
        T v = T(0);
        for(std::size_t k = 0; k < lam.size(); ++k) {
            T ek = e[2 * k];
            if(ring4_term && k == 1) ek = ek - T(4) * (z[0] * z[2] + z[1] * z[3]);
            v = v + conv<T>(lam[k]) * ek / T(binom_ll(n, int(2 * k)));
        }
        return v;
    }
    template <class T> T tau3_t(const std::vector<T> &z) const {
        check(z.size());
        auto e = esym_all(z);
        T v = T(0);
        for(std::size_t k = 0; k < tau.size(); ++k) v = v + conv<T>(tau[k]) * e[2 * k + 1] / T(binom_ll(n, int(2 * k + 1)));
        return v;
    }
    double lambda3(const std::vector<double> &z) const { return lambda3_t(z); }
    double tau3(const std::vector<double> &z) const { return tau3_t(z); }

    // tau3 + s lambda3 = s at z_i = s for s = +-1, evaluated exactly.
    bool constraint_holds() const {
        for(int s : {1, -1}) {
            std::vector<Rational> z(n, Rational(s));
            if(tau3_t(z) + Rational(s) * lambda3_t(z) != Rational(s)) return false;
        }
        return true;
    }

private:
    void check(std::size_t m) const {
        if(int(m) != n) throw std::invalid_argument("steady channel: z must have N entries");
    }
    template <class T> static T conv(const Rational &r) {
        if constexpr(std::is_same_v<T, Rational>) return r;
        else return to_double(r);
    }
};

inline bool has_steady_table(Topology top, int n) {
    return (top == Topology::complete && n >= 3 && n <= 6) || (top == Topology::ring && (n == 4 || n == 5));
}

inline SteadyChannel steady_channel(int n, Topology top) {
    SteadyChannel c;
    c.n = n;
    c.topology = top;
    using R = Rational;
    if(top == Topology::complete) {
        switch(n) {
            case 3: c.lam = {R(5, 9)}; c.tau = {R(4, 9)}; return c;
            case 4: c.lam = {R(7, 16), R(3, 16)}; c.tau = {R(9, 16), R(-3, 16)}; return c;
            case 5: c.lam = {R(7, 15), R(16, 75)}; c.tau = {R(8, 15), R(-16, 75)}; return c;
            case 6: c.lam = {R(59, 144), R(5, 12), R(-5, 48)}; c.tau = {R(85, 144), R(-5, 12), R(5, 48)}; return c;
            default: break;
        }
    } else if(top == Topology::ring) {
        if(n == 4) {
            c.lam = {R(7, 16), R(3, 16)};
            c.tau = {R(9, 16), R(1, 16)};
            c.ring4_term = true;
            return c;
        }
        if(n == 5) {
            c.lam = {R(71, 225), R(2, 45)};
            c.tau = {R(154, 225), R(-2, 45)};
            return c;
        }
    }
    throw unsupported_error("no steady-channel table for " + to_string(top) + " with N = " + std::to_string(n) +
                            "; supply coefficients for the general complete-graph form");
}

// General complete-graph form from user coefficients a_0, a_2, ...
inline SteadyChannel steady_channel_general(int n, const std::vector<Rational> &a) {
    if(n < 2) throw config_error("steady channel needs N >= 2");
    const std::size_t want = std::size_t((n % 2 ? n - 3 : n - 2) / 2 + 1);
    if(a.size() != want) throw config_error("expected " + std::to_string(want) + " coefficients a_0, a_2, ... for N = " + std::to_string(n));
    SteadyChannel c;
    c.n = n;
    c.topology = Topology::complete;
    c.lam = a;
    c.tau.push_back(Rational(1) - a[0]);
    for(std::size_t k = 1; k < a.size(); ++k) c.tau.push_back(-a[k]);
    return c;
}

// ---- fluctuations ----

struct FluctuationSeries {
    std::vector<double> t_over_tJ, d_lambda, d_tau;
    double c_lambda = 0, c_tau = 0;
    bool lambda_absolute = false, tau_absolute = false;  // steady value zero: absolute deviation used
    double c_zeta() const { return std::max(c_lambda, c_tau); }
};

inline FluctuationSeries fluctuations(const std::vector<double> &t_over_tJ, const std::vector<double> &lam_bar,
                                      const std::vector<double> &tau_bar, double lam_inf, double tau_inf, int n, double onset_tJ = 20) {
    if(t_over_tJ.size() != lam_bar.size() || t_over_tJ.size() != tau_bar.size())
        throw std::invalid_argument("fluctuations: size mismatch");
    FluctuationSeries f;
    f.t_over_tJ = t_over_tJ;
    f.lambda_absolute = lam_inf == 0.0;
    f.tau_absolute = tau_inf == 0.0;
    for(std::size_t k = 0; k < t_over_tJ.size(); ++k) {
        double dl = lam_bar[k] - lam_inf, dt = tau_bar[k] - tau_inf;
        if(!f.lambda_absolute) dl /= lam_inf;
        if(!f.tau_absolute) dt /= tau_inf;
        f.d_lambda.push_back(dl);
        f.d_tau.push_back(dt);
        if(t_over_tJ[k] > onset_tJ) {
            f.c_lambda = std::max(f.c_lambda, std::abs(dl) * n * t_over_tJ[k]);
            f.c_tau = std::max(f.c_tau, std::abs(dt) * n * t_over_tJ[k]);
        }
    }
    return f;
}

struct AveragedRun {
    std::vector<double> t_over_tJ;
    std::vector<TransferMatrix> running;
    std::vector<double> lambda1, lambda3, tau3;
};

inline AveragedRun averaged_run(const std::vector<TransferMatrix> &series, const TimeGrid &grid, double j_perp) {
    AveragedRun r;
    r.running = time_average(series, grid.dt);
    const double tj = t_J(j_perp);
    for(int k = 0; k <= grid.steps; ++k) {
        r.t_over_tJ.push_back(grid.time(k) / tj);
        r.lambda1.push_back(lambda1_bar(r.running[k]));
        r.lambda3.push_back(r.running[k](3, 3));
        r.tau3.push_back(r.running[k](3, 0));
    }
    return r;
}

// Small-z class: lambda3 from the z = 0 state, tau3 through its linear response
// d tau3 / dz at z = 0 along the uniform direction (sum of single-site Moebius terms).
inline FluctuationSeries truncated_fluctuations(const NetworkSpec &spec, const SteadyChannel &steady, const TimeGrid &grid) {
    std::vector<std::vector<double>> zs;
    zs.push_back(std::vector<double>(spec.n, 0.0));
    for(int k = 0; k < spec.n; ++k) {
        std::vector<double> z(spec.n, 0.0);
        z[k] = 1;
        zs.push_back(z);
    }
    auto series = network_series(spec, zs, grid);
    std::vector<TransferMatrix> slope(grid.steps + 1, TransferMatrix::Zero());
    for(int k = 0; k <= grid.steps; ++k)
        for(int s = 1; s <= spec.n; ++s) slope[k] += series[s][k] - series[0][k];
    auto base = averaged_run(series[0], grid, spec.j_perp);
    auto lin = averaged_run(slope, grid, spec.j_perp);
    return fluctuations(base.t_over_tJ, base.lambda3, lin.tau3, to_double(steady.lam[0]), to_double(steady.tau[0]), spec.n);
}

// ---- staggered quench ----

struct QuenchResult {
    TransferMatrix cluster_average;
    TransferMatrix time_average;
    double max_diff = 0;
    std::vector<double> t_i;
    bool window_too_short = false;
};

// Stratified quench times: t_I = window (I + U_I) / N_CL.
inline std::vector<double> stratified_quench_times(int n_cl, double window, std::uint64_t seed) {
    std::vector<double> t(n_cl);
    for(int i = 0; i < n_cl; ++i) {
        Stream s(seed, std::uint64_t(i));
        t[i] = window * (i + s.uniform()) / n_cl;
    }
    return t;
}

// Focal map of one quench cluster in the frame co-rotating with its field, via the
// piecewise propagator exp(-i H_on (t - t_I)) exp(-i H_off t_I). Dense reference route.
inline TransferMatrix quench_cluster_map(const NetworkSpec &s, int cluster, double t, int site, const std::vector<double> &z) {
    const double ti = quench_time(s, cluster), h = quench_field(s, cluster);
    cmat off = quench_cluster_hamiltonian(s, cluster, ti - 1.0);
    cmat on = quench_cluster_hamiltonian(s, cluster, ti);
    cmat u = t <= ti ? Propagator::dense(off).unitary(t) : cmat(Propagator::dense(on).unitary(t - ti) * Propagator::dense(off).unitary(ti));
    const TransferMatrix lab = reduced_map_of_unitary(u, site, env_of(diagonal_state(z), site));
    TransferMatrix back = TransferMatrix::Identity();
    const double c = std::cos(2 * h * t), sn = std::sin(2 * h * t);
    back(1, 1) = c;
    back(1, 2) = sn;
    back(2, 1) = -sn;
    back(2, 2) = c;
    return back * lab;
}

// Cluster-averaged network map at t_eval against the running time average of one cluster's
// interaction map over [0, t_eval]. Both are taken in the co-rotating frame, where the
// field drops out and each cluster evolves with the XXX interaction from t_I on.
inline QuenchResult quench_demo(const NetworkSpec &spec, int n_cl, double window, double t_eval, const std::vector<double> &z,
                                std::uint64_t seed, int points_per_tJ = 40) {
    if(n_cl < 1) throw config_error("quench: n_cl must be >= 1");
    if(int(z.size()) != spec.n) throw config_error("quench: initial state must have N entries");
    QuenchResult r;
    const double tj = t_J(spec.j_perp);
    r.window_too_short = window < tj;
    r.t_i = stratified_quench_times(n_cl, window, seed);
    NetworkSpec inter;
    inter.topology = Topology::complete;
    inter.n = spec.n;
    inter.h = 0;
    inter.j_perp = inter.j_par = spec.j_perp;
    DiagonalMapEngine eng(propagator_of(inter));
    std::vector<TransferMatrix> per(n_cl);
    parallel_for(std::size_t(n_cl), [&](std::size_t i) {
        const double tau = t_eval - r.t_i[i];
        per[i] = tau <= 0 ? TransferMatrix::Identity() : eng.network_map(eng.kernels(tau), z);
    });
    r.cluster_average = network_average(per);
    TimeGrid g;
    g.steps = std::max(1, int(std::llround(t_eval / tj * points_per_tJ)));
    g.dt = t_eval / g.steps;
    std::vector<TransferMatrix> ser(g.steps + 1);
    parallel_for(std::size_t(g.steps + 1), [&](std::size_t k) { ser[k] = eng.network_map(eng.kernels(g.time(int(k))), z); });
    r.time_average = time_average(ser, g.dt).back();
    r.max_diff = (r.cluster_average - r.time_average).cwiseAbs().maxCoeff();
    return r;
}

} // namespace pcnet
