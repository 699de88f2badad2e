#pragma once

#include "analytic.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <json.hpp>

namespace pcnet {

enum class PhiDist { gaussian, trunc_tanh };

inline std::string to_string(PhiDist d) { return d == PhiDist::gaussian ? "gaussian" : "trunc_tanh"; }

inline PhiDist phi_dist_from_string(const std::string &s) {
    if(s == "gaussian") return PhiDist::gaussian;
    if(s == "trunc_tanh") return PhiDist::trunc_tanh;
    throw config_error("unknown phi distribution '" + s + "' (expected gaussian or trunc_tanh)");
}

struct DisorderSpec {
    double B = 0, Omega = 1;
    double sigma_h = 1, sigma_omega = 1;
    PhiDist phi_dist = PhiDist::gaussian;
    double sigma_phi = pi / 3;
    double a_phi = 1;
    double varphi = 3;  // width symbol of the printed closed forms; sigma_phi = pi / varphi makes them exact
};

inline void validate(const DisorderSpec &s) {
    if(!(s.sigma_h > 0)) throw config_error("disorder.sigma_h must be positive");
    if(!(s.sigma_omega > 0)) throw config_error("disorder.sigma_omega must be positive");
    if(s.phi_dist == PhiDist::gaussian && !(s.sigma_phi > 0)) throw config_error("disorder.sigma_phi must be positive");
    if(s.phi_dist == PhiDist::trunc_tanh && !(s.a_phi > 0)) throw config_error("disorder.a_phi must be positive");
    if(!(s.varphi > 0)) throw config_error("disorder.varphi must be positive");
}

// Rejection from the uniform proposal on [-pi/2, pi/2] with acceptance tanh^2(a phi) / tanh^2(a pi/2).
inline double sample_trunc_tanh(double a, Stream &rng) {
    const double top = std::tanh(a * pi / 2);
    for(;;) {
        const double phi = rng.uniform(-pi / 2, pi / 2);
        const double r = std::tanh(a * phi) / top;
        if(rng.uniform() < r * r) return phi;
    }
}

inline PairEig sample_pair(const DisorderSpec &s, Stream &rng) {
    const double h = rng.normal(s.B, s.sigma_h);
    const double w = rng.normal(s.Omega, s.sigma_omega);
    const double phi = s.phi_dist == PhiDist::gaussian ? rng.normal(0, s.sigma_phi) : sample_trunc_tanh(s.a_phi, rng);
    return PairEig::from_eigen(h, w, phi);
}

struct MCMap {
    TransferMatrix mean = TransferMatrix::Zero();
    TransferMatrix stderr_ = TransferMatrix::Zero();
    std::size_t n = 0;
};

// Sample i draws from Stream(seed, i). Partial sums over fixed chunks are combined in
// chunk order, so the result does not depend on the thread count.
inline MCMap mc_disorder_map(const DisorderSpec &s, double t, const Bloch &env, std::size_t n_samples, std::uint64_t seed,
                             int which = 1) {
    validate(s);
    if(n_samples < 100) throw config_error("mc_disorder_map needs at least 100 samples");
    check_state({env});
    constexpr std::size_t chunks = 64;
    std::vector<TransferMatrix> sum(chunks, TransferMatrix::Zero()), sq(chunks, TransferMatrix::Zero());
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t lo = n_samples * c / chunks, hi = n_samples * (c + 1) / chunks;
        for(std::size_t i = lo; i < hi; ++i) {
            Stream rng(seed, i);
            const TransferMatrix m = xx_reduced_map(t, sample_pair(s, rng), env, which);
            sum[c] += m;
            sq[c] += m.cwiseProduct(m);
        }
    });
    TransferMatrix s1 = TransferMatrix::Zero(), s2 = TransferMatrix::Zero();
    for(std::size_t c = 0; c < chunks; ++c) {
        s1 += sum[c];
        s2 += sq[c];
    }
    MCMap r;
    r.n = n_samples;
    const double n = double(n_samples);
    r.mean = s1 / n;
    TransferMatrix var = (s2 - n * r.mean.cwiseProduct(r.mean)) / (n - 1);
    r.stderr_ = (var.cwiseMax(0.0) / n).cwiseSqrt();
    return r;
}

struct DisorderComponents {
    double xx0 = 1, yx0 = 0, z0z = 0, zz0 = 1;
};

// Printed Gaussian-family averages with the width symbol varphi.
inline DisorderComponents closedform_disorder_components(const DisorderSpec &s, double t) {
    if(s.phi_dist != PhiDist::gaussian) throw unsupported_error("closed-form disorder components exist only for the Gaussian phi family");
    const double damp = std::exp(-(s.sigma_omega * s.sigma_omega + 4 * s.sigma_h * s.sigma_h) * t * t / 2);
    const double ephi = std::exp(-pi * pi / (2 * s.varphi * s.varphi));
    const double W = s.Omega * t, b = 2 * s.B * t;
    DisorderComponents c;
    c.xx0 = (std::cos(W) * std::cos(b) - ephi * std::sin(W) * std::sin(b)) * damp;
    c.yx0 = (std::cos(W) * std::sin(b) + ephi * std::sin(W) * std::cos(b)) * damp;
    c.z0z = 0.25 * (1 - std::exp(-2 * pi * pi / (s.varphi * s.varphi))) *
            (1 - std::cos(2 * W) * std::exp(-2 * s.sigma_omega * s.sigma_omega * t * t));
    c.zz0 = 1 - c.z0z;
    return c;
}

// Focal map assembled from the printed components for an env qubit (0, 0, z2).
inline TransferMatrix closedform_disorder_map(const DisorderSpec &s, double t, double z2) {
    const auto c = closedform_disorder_components(s, t);
    TransferMatrix m = TransferMatrix::Zero();
    m(0, 0) = 1;
    m(1, 1) = m(2, 2) = c.xx0;
    m(2, 1) = c.yx0;
    m(1, 2) = -c.yx0;
    m(3, 3) = c.zz0;
    m(3, 0) = z2 * c.z0z;
    return m;
}

inline double max_tau3_trunc_tanh() { return (6 + pi * pi) / (2 * pi * pi); }

// Printed normalization pi - (2/a) tanh(a pi / 2) of the truncated-tanh density.
inline double trunc_tanh_norm(double a) { return pi - 2 / a * std::tanh(a * pi / 2); }

// <sin^2 phi> under the truncated-tanh density by adaptive Gauss-Kronrod quadrature.
inline double trunc_tanh_sin2_quadrature(double a) {
    using boost::math::quadrature::gauss_kronrod;
    auto num = [a](double p) { return std::sin(p) * std::sin(p) * std::tanh(a * p) * std::tanh(a * p); };
    auto den = [a](double p) { return std::tanh(a * p) * std::tanh(a * p); };
    return gauss_kronrod<double, 61>::integrate(num, -pi / 2, pi / 2, 15, 1e-14) /
           gauss_kronrod<double, 61>::integrate(den, -pi / 2, pi / 2, 15, 1e-14);
}

// a -> 0 limit: tanh^2(a phi) ~ a^2 phi^2, the density tends to phi^2 / (pi^3 / 12).
inline double trunc_tanh_sin2_limit_quadrature() {
    using boost::math::quadrature::gauss_kronrod;
    auto f = [](double p) { return p * p * std::sin(p) * std::sin(p); };
    return gauss_kronrod<double, 61>::integrate(f, -pi / 2, pi / 2, 15, 1e-15) / (pi * pi * pi / 12);
}

inline double gaussian_sin2(double sigma_phi) { return 0.5 * (1 - std::exp(-2 * sigma_phi * sigma_phi)); }

struct MomentEstimate {
    double mean = 0, stderr_ = 0;
};

inline MomentEstimate mc_sin2_moment(const DisorderSpec &s, std::size_t n, std::uint64_t seed) {
    constexpr std::size_t chunks = 64;
    std::vector<double> s1(chunks, 0), s2(chunks, 0);
    parallel_for(chunks, [&](std::size_t c) {
        for(std::size_t i = n * c / chunks; i < n * (c + 1) / chunks; ++i) {
            Stream rng(seed, i);
            const double p = sample_pair(s, rng).phi12, v = std::sin(p) * std::sin(p);
            s1[c] += v;
            s2[c] += v * v;
        }
    });
    double a = 0, b = 0;
    for(std::size_t c = 0; c < chunks; ++c) {
        a += s1[c];
        b += s2[c];
    }
    MomentEstimate m;
    m.mean = a / n;
    m.stderr_ = std::sqrt(std::max(0.0, (b / n - m.mean * m.mean) / (n - 1.0)));
    return m;
}

// Transfer-matrix entries odd in phi; they average to zero for an even phi density.
inline const std::vector<std::pair<int, int>> &pc_breaking_entries() {
    static const std::vector<std::pair<int, int>> e = {{1, 3}, {2, 3}, {3, 1}, {3, 2}};
    return e;
}

// Closed-form vs Monte Carlo discrepancies beyond k standard errors.
inline nlohmann::json disorder_discrepancies(const DisorderSpec &s, double t, double z2, const MCMap &mc, double k = 5) {
    nlohmann::json out = nlohmann::json::array();
    const TransferMatrix cf = closedform_disorder_map(s, t, z2);
    const char *lab = "0xyz";
    for(int i = 0; i < 4; ++i)
        for(int j = 0; j < 4; ++j) {
            const double d = std::abs(cf(i, j) - mc.mean(i, j));
            const double se = mc.stderr_(i, j);
            if(d > k * se && d > 1e-12)
                out.push_back({{"t", t}, {"entry", std::string{lab[i], lab[j]}}, {"closed_form", cf(i, j)}, {"mc_mean", mc.mean(i, j)},
                               {"mc_stderr", se}, {"n_stderr", se > 0 ? d / se : std::numeric_limits<double>::infinity()}});
        }
    return out;
}

} // namespace pcnet
