#pragma once

#include "parallel.hpp"
#include "reduced.hpp"
#include "rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <array>

namespace pcnet {

inline bool cp_contains(double lambda1, double tau3, double lambda3, double tol = 0) {
    if(std::abs(lambda3) > 1 + tol) return false;
    if(std::abs(tau3) > 1 - std::abs(lambda3) + tol) return false;
    const double r = std::max(0.0, (1 + lambda3) * (1 + lambda3) - tau3 * tau3);
    return std::abs(lambda1) <= 0.5 * std::sqrt(r) + tol;
}

// Uniform over the CP solid in (lambda1, tau3, lambda3) by rejection from [-1, 1]^3,
// reported with lambda1 = |lambda1| and theta uniform on (-pi, pi].
inline PCParams uniform_sample(Stream &rng, long *tries = nullptr) {
    for(long k = 1;; ++k) {
        const double l1 = rng.uniform(-1, 1), t3 = rng.uniform(-1, 1), l3 = rng.uniform(-1, 1);
        if(!cp_contains(l1, t3, l3)) continue;
        if(tries) *tries = k;
        PCParams p;
        p.lambda1 = std::abs(l1);
        p.theta = pi - 2 * pi * rng.uniform();
        p.lambda3 = l3;
        p.tau3 = t3;
        return p;
    }
}

struct VolumeEstimate {
    std::size_t n = 0;
    double total = 0, total_err = 0;
    double negative = 0, negative_err = 0;
    double positive = 0, positive_err = 0;
};

// Hit-or-miss over [-1, 1]^3; point i uses Stream(seed, i).
inline VolumeEstimate volume_mc(std::size_t n, std::uint64_t seed) {
    if(n == 0) throw config_error("volume_mc: n must be positive");
    constexpr std::size_t chunks = 64;
    std::vector<std::size_t> neg(chunks, 0), pos(chunks, 0);
    parallel_for(chunks, [&](std::size_t c) {
        for(std::size_t i = n * c / chunks; i < n * (c + 1) / chunks; ++i) {
            Stream rng(seed, i);
            const double l1 = rng.uniform(-1, 1), t3 = rng.uniform(-1, 1), l3 = rng.uniform(-1, 1);
            if(cp_contains(l1, t3, l3)) ++(l3 < 0 ? neg[c] : pos[c]);
        }
    });
    std::size_t hn = 0, hp = 0;
    for(std::size_t c = 0; c < chunks; ++c) {
        hn += neg[c];
        hp += pos[c];
    }
    auto est = [n](std::size_t hits, double &v, double &e) {
        const double p = double(hits) / double(n);
        v = 8 * p;
        e = 8 * std::sqrt(p * (1 - p) / double(n));
    };
    VolumeEstimate r;
    r.n = n;
    est(hn + hp, r.total, r.total_err);
    est(hn, r.negative, r.negative_err);
    est(hp, r.positive, r.positive_err);
    return r;
}

inline std::array<cplx, 4> eigenvalues_pc(const PCParams &p) {
    return {cplx(1, 0), std::polar(p.lambda1, p.theta), std::polar(p.lambda1, -p.theta), cplx(p.lambda3, 0)};
}

struct BrokenPCParams {
    double lambda1 = 1, lambda2 = 1, theta = 0, lambda3 = 1, tau3 = 0;
};

inline TransferMatrix broken_matrix(const BrokenPCParams &b) {
    TransferMatrix m = TransferMatrix::Zero();
    m(0, 0) = 1;
    m(1, 1) = b.lambda1 * std::cos(b.theta);
    m(1, 2) = -b.lambda2 * std::sin(b.theta);
    m(2, 1) = b.lambda1 * std::sin(b.theta);
    m(2, 2) = b.lambda2 * std::cos(b.theta);
    m(3, 0) = b.tau3;
    m(3, 3) = b.lambda3;
    return m;
}

// mu_pm = [(l1 + l2) cos(theta) +- sqrt((l1 + l2)^2 cos^2(theta) - 4 l1 l2)] / 2
inline std::array<cplx, 4> eigenvalues_broken(const BrokenPCParams &b) {
    const double s = (b.lambda1 + b.lambda2) * std::cos(b.theta);
    const cplx root = std::sqrt(cplx(s * s - 4 * b.lambda1 * b.lambda2, 0));
    return {cplx(1, 0), 0.5 * (s + root), 0.5 * (s - root), cplx(b.lambda3, 0)};
}

// Rejection from [-1, 1]^4 x uniform theta with the Choi test as the CP criterion.
inline BrokenPCParams broken_uniform_sample(Stream &rng) {
    for(;;) {
        BrokenPCParams b;
        b.lambda1 = rng.uniform(-1, 1);
        b.lambda2 = rng.uniform(-1, 1);
        b.lambda3 = rng.uniform(-1, 1);
        b.tau3 = rng.uniform(-1, 1);
        b.theta = pi - 2 * pi * rng.uniform();
        if(choi_check(broken_matrix(b)) >= -1e-9) return b;
    }
}

// Standard normal restricted to [a, b] with a >= 6, Robert's exponential proposal.
inline double tail_normal(double a, double b, Stream &rng) {
    const double lam = 0.5 * (a + std::sqrt(a * a + 4));
    for(;;) {
        double u;
        do u = rng.uniform();
        while(u == 0.0);
        const double x = a - std::log(u) / lam;
        if(x > b) continue;
        if(rng.uniform() <= std::exp(-0.5 * (x - lam) * (x - lam))) return x;
    }
}

inline double trunc_gauss_sample(double mu, double sigma, double a, double b, Stream &rng) {
    if(!(a < b)) throw std::invalid_argument("trunc_gauss_sample: need a < b");
    if(!(sigma > 0)) throw std::invalid_argument("trunc_gauss_sample: sigma must be positive");
    const double al = (a - mu) / sigma, be = (b - mu) / sigma;
    double x;
    if(al >= 6) x = tail_normal(al, be, rng);
    else if(be <= -6) x = -tail_normal(-be, -al, rng);
    else {
        static const boost::math::normal_distribution<double> nd;
        const double u = rng.uniform();
        if(al > 0) {
            // Upper half: work with survival probabilities to keep precision.
            const double sa = boost::math::cdf(boost::math::complement(nd, al));
            const double sb = std::isinf(be) ? 0.0 : boost::math::cdf(boost::math::complement(nd, be));
            double s = sb + u * (sa - sb);
            s = std::clamp(s, std::numeric_limits<double>::min(), 1.0);
            x = boost::math::quantile(boost::math::complement(nd, s));
        } else {
            const double fa = std::isinf(al) ? 0.0 : boost::math::cdf(nd, al);
            const double fb = std::isinf(be) ? 1.0 : boost::math::cdf(nd, be);
            double f = fa + u * (fb - fa);
            f = std::clamp(f, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
            x = boost::math::quantile(nd, f);
        }
    }
    return std::clamp(mu + sigma * x, a, b);
}

enum class TauRule { symmetric, late_sign };

struct MeasureSpec {
    double mu_lambda1 = 0, mu_lambda3 = 5.0 / 9, mu_tau3 = 8.0 / 27;
    double c_lambda1 = 1, c_lambda3 = 1, c_tau3 = 1;
    double t_ref = 2 * pi;
    int n = 3;
    double t_max_ref = 50;  // grid end in units of t_ref
    TauRule tau_rule = TauRule::symmetric;

    double sigma(double c, double t) const { return c / n * t_ref / t; }
};

// t_ref / 10 followed by t_ref, 2 t_ref, ..., t_max.
inline std::vector<double> measure_grid(const MeasureSpec &s) {
    if(!(s.t_ref > 0)) throw config_error("measure: t_ref must be positive");
    if(!(s.t_max_ref >= 1)) throw config_error("measure: t_max must be at least t_ref");
    if(s.n < 1) throw config_error("measure: N must be positive");
    std::vector<double> g{s.t_ref / 10};
    for(int k = 1; k <= int(std::floor(s.t_max_ref + 1e-12)); ++k) g.push_back(k * s.t_ref);
    return g;
}

struct TrajectoryPoint {
    double t = 0;
    PCParams p;
};

// Step k draws from Stream(seed, k): lambda3, then tau3 inside its CP interval, then lambda1.
inline std::vector<TrajectoryPoint> trajectory_sample(const MeasureSpec &s, const std::vector<double> &grid, std::uint64_t seed) {
    for(std::size_t k = 0; k < grid.size(); ++k)
        if(!(grid[k] > 0) || (k > 0 && !(grid[k] > grid[k - 1]))) throw config_error("measure: time grid must be positive and increasing");
    std::vector<TrajectoryPoint> out;
    for(std::size_t k = 0; k < grid.size(); ++k) {
        Stream rng(seed, k);
        const double t = grid[k];
        TrajectoryPoint pt;
        pt.t = t;
        pt.p.lambda3 = trunc_gauss_sample(s.mu_lambda3, s.sigma(s.c_lambda3, t), -1, 1, rng);
        double half;
        if(s.tau_rule == TauRule::symmetric) half = 1 - std::abs(pt.p.lambda3);
        else half = s.mu_lambda3 >= 0 ? 1 - pt.p.lambda3 : 1 + pt.p.lambda3;
        pt.p.tau3 = half > 0 ? trunc_gauss_sample(s.mu_tau3, s.sigma(s.c_tau3, t), -half, half, rng) : 0.0;
        const double r = (1 + pt.p.lambda3) * (1 + pt.p.lambda3) - pt.p.tau3 * pt.p.tau3;
        const double top = r > 0 ? 0.5 * std::sqrt(r) : 0.0;
        pt.p.lambda1 = top > 0 ? trunc_gauss_sample(s.mu_lambda1, s.sigma(s.c_lambda1, t), 0, top, rng) : 0.0;
        pt.p.theta = 0;
        out.push_back(pt);
    }
    return out;
}

inline std::vector<TrajectoryPoint> trajectory_sample(const MeasureSpec &s, std::uint64_t seed) {
    return trajectory_sample(s, measure_grid(s), seed);
}

} // namespace pcnet
