#pragma once

#include "network.hpp"
#include "polynomial.hpp"
#include "reduced.hpp"

#include <array>
#include <limits>
#include <map>
#include <string>

namespace pcnet {

// printed: the closed forms exactly as published.
// corrected: minimal repairs of the transcription defects listed in TRANSCRIPTION_NOTES.md.
enum class Variant { printed, corrected };

inline std::string to_string(Variant v) { return v == Variant::printed ? "printed" : "corrected"; }

struct AnalyticMap {
    double lambda3 = 1, tau3 = 0;
    double alpha = 1, beta = 0;
    bool has_ab = true;

    PCParams pc(double h, double t) const {
        if(!has_ab) throw unsupported_error("closed form provides only lambda3 and tau3");
        PCParams p;
        p.lambda1 = std::hypot(alpha, beta);
        p.theta = wrap_angle(2 * h * t + std::atan2(beta, alpha));
        p.lambda3 = lambda3;
        p.tau3 = tau3;
        return p;
    }
    ABDecomp ab() const { return {alpha, beta, std::atan2(beta, alpha)}; }
    TransferMatrix matrix(double h, double t) const {
        if(!has_ab) throw unsupported_error("closed form provides only lambda3 and tau3");
        return pc_matrix_ab(alpha, beta, lambda3, tau3, h, t);
    }
};

struct RingEig4 {
    double j_cross = 0, phi_cross = 0;
};

inline RingEig4 ring_eig4(double jp, double jz, Variant v = Variant::corrected) {
    RingEig4 r;
    r.j_cross = std::sqrt(jz * jz + 8 * jp * jp);
    const double s = 2 * std::sqrt(2.0) * jp;
    r.phi_cross = v == Variant::printed ? -std::atan(s / jz) : -std::atan2(s, jz);
    return r;
}

struct RingEig5 {
    std::array<double, 5> psi{}, phi{}, j{};
};

inline RingEig5 ring_eig5(double jp, double jz) {
    RingEig5 r;
    for(int a = 0; a < 5; ++a) {
        const double k = 6 * pi * a / 5, c = std::cos(k);
        r.psi[a] = std::atan(k);
        r.phi[a] = std::atan2(2 * c * jp, jz - c * jp);
        r.j[a] = std::sqrt((jz - c * jp) * (jz - c * jp) + 4 * c * c * jp * jp);
    }
    return r;
}

namespace detail {

inline void check_env(int n, const std::vector<double> &z) {
    if(int(z.size()) != n - 1) throw std::invalid_argument("env_z must have N-1 entries");
    for(double v : z)
        if(!(std::abs(v) <= 1)) throw std::invalid_argument("env_z entries must lie in [-1, 1]");
}

inline AnalyticMap cc3(double t, double P, double Q, const std::vector<double> &z, Variant v) {
    const double e1 = z[0] + z[1], pz = z[0] * z[1];
    const double c3 = std::cos(3 * P * t);
    const double F = v == Variant::printed ? Q + 2 * P : 2 * Q + P;
    AnalyticMap m;
    m.lambda3 = (5 + 4 * c3) / 9;
    m.tau3 = 2.0 / 9 * e1 * (1 - c3);
    m.alpha = ((1 - pz) * (7 + 2 * c3) + (1 + pz) * (3 * std::cos((2 * Q - 2 * P) * t) + 6 * std::cos(F * t))) / 18;
    m.beta = e1 * (3 * std::sin((2 * Q - 2 * P) * t) + 6 * std::sin(F * t)) / 18;
    return m;
}

inline AnalyticMap cc4(double t, double P, double Q, const std::vector<double> &z, Variant v) {
    auto e = esym_all(z);
    const double c2 = std::cos(2 * P * t), c4 = std::cos(4 * P * t);
    double fa = 3 * P + Q, fc = P + 3 * Q;
    if(v == Variant::corrected) std::swap(fa, fc);
    const double fb = 3 * (P - Q), fd = P + Q, fe = P - Q, ff = 5 * P - Q;
    auto C = [t](double w) { return std::cos(w * t); };
    auto S = [t](double w) { return std::sin(w * t); };
    AnalyticMap m;
    m.lambda3 = (7.0 / 16 + c2 / 4 + 5 * c4 / 16) + (1.0 / 16 - c2 / 12 + c4 / 48) * e[2];
    m.tau3 = (3.0 / 16 - c2 / 12 - 5 * c4 / 48) * e[1] - (3.0 / 16 - c2 / 4 + c4 / 16) * e[3];
    double a0 = 3.0 / 16 * C(fa) + 1.0 / 16 * C(fb) + 3.0 / 32 * C(fc) + 1.0 / 4 * C(fd) + 3.0 / 8 * C(fe) + 1.0 / 32 * C(ff);
    double a2 = 3.0 / 16 * C(fa) + 1.0 / 16 * C(fb) - 1.0 / 32 * C(fc) - 1.0 / 12 * C(fd) - 1.0 / 8 * C(fe) - 1.0 / 96 * C(ff);
    double b1 = 3.0 / 16 * S(fa) - 1.0 / 16 * S(fb) + 1.0 / 32 * S(fc) + 1.0 / 12 * S(fd) - 1.0 / 8 * S(fe) - 1.0 / 96 * S(ff);
    double b3 = 3.0 / 16 * S(fa) - 1.0 / 16 * S(fb) - 3.0 / 32 * S(fc) - 1.0 / 4 * S(fd) + 3.0 / 8 * S(fe) + 1.0 / 32 * S(ff);
    m.alpha = a0 + a2 * e[2];
    m.beta = b1 * e[1] + b3 * e[3];
    return m;
}

inline AnalyticMap cc5(double t, double P, double Q, const std::vector<double> &z) {
    auto e = esym_all(z);
    const double c3 = std::cos(3 * P * t), c5 = std::cos(5 * P * t);
    auto C = [t](double w) { return std::cos(w * t); };
    auto S = [t](double w) { return std::sin(w * t); };
    const double g1 = 3 * P + 2 * Q, g2 = 4 * (P - Q), g3 = 7 * P - 2 * Q, g4 = 2 * (P - Q), g5 = P + 2 * Q, g6 = P + 4 * Q;
    AnalyticMap m;
    m.lambda3 = (7.0 / 15 + c3 / 3 + c5 / 5) + (8.0 / 225 - c3 / 18 + c5 / 50) * e[2];
    m.tau3 = (2.0 / 15 - c3 / 12 - c5 / 20) * e[1] - (4.0 / 75 - c3 / 12 + 3 * c5 / 100) * e[3];
    double A0 = 157.0 / 600 + c3 / 12 + 3 * c5 / 100 + 3.0 / 50 * C(g1) + 1.0 / 40 * C(g2) + 1.0 / 100 * C(g3) + 9.0 / 50 * C(g4) +
                1.0 / 4 * C(g5) + 1.0 / 10 * C(g6);
    double A2 = 157.0 / 1800 + c3 / 36 + c5 / 100 - 1.0 / 40 * C(g2) - 1.0 / 10 * C(g6);
    double A4 = 157.0 / 600 + c3 / 12 + 3 * c5 / 100 + 1.0 / 10 * C(g6) - 1.0 / 4 * C(g5) - 3.0 / 50 * C(g1) - 1.0 / 100 * C(g3) -
                9.0 / 50 * C(g4) + 1.0 / 40 * C(g2);
    double B1 = 3.0 / 100 * S(g1) - 1.0 / 40 * S(g2) - 1.0 / 200 * S(g3) - 9.0 / 100 * S(g4) + 1.0 / 8 * S(g5) + 1.0 / 10 * S(g6);
    double B3 = 3.0 / 100 * S(g1) + 1.0 / 40 * S(g2) - 1.0 / 200 * S(g3) - 9.0 / 100 * S(g4) + 1.0 / 8 * S(g5) - 1.0 / 10 * S(g6);
    m.alpha = A0 - A2 * e[2] + A4 * e[4];
    m.beta = B1 * e[1] - B3 * e[3];
    return m;
}

inline AnalyticMap cc6(double t, double P, double Q, const std::vector<double> &z) {
    auto e = esym_all(z);
    const double c2 = std::cos(2 * P * t), c4 = std::cos(4 * P * t), c6 = std::cos(6 * P * t);
    const std::array<double, 12> f = {P + 5 * Q, 5 * (P - Q), P + 3 * Q, 3 * (P - Q), 9 * P - 3 * Q, 5 * P + Q,
                                      3 * P + Q, P + Q,       P - Q,     5 * P - Q,   7 * P - Q,     3 * (P + Q)};
    using Row = std::array<double, 12>;
    const Row a0 = {5. / 96, 1. / 96, 3. / 16, 25. / 288, 1. / 288, 1. / 48, 3. / 32, 5. / 32, 5. / 16, 1. / 32, 1. / 96, 5. / 144};
    const Row a2 = {5. / 96, 1. / 96, 3. / 80, 5. / 288, 1. / 1440, -1. / 240, -3. / 160, -1. / 32, -1. / 16, -1. / 160, -1. / 480, 1. / 144};
    const Row a4 = {5. / 96, 1. / 96, -9. / 80, -5. / 96, -1. / 480, 1. / 240, 3. / 160, 1. / 32, 1. / 16, 1. / 160, 1. / 480, -1. / 48};
    const Row b1 = {5. / 96, -1. / 96, 9. / 80, -5. / 96, -1. / 480, 1. / 240, 3. / 160, 1. / 32, -1. / 16, -1. / 160, -1. / 480, 1. / 48};
    const Row b3 = {5. / 96, -1. / 96, -3. / 80, 5. / 288, 1. / 1440, -1. / 240, -3. / 160, -1. / 32, 1. / 16, 1. / 160, 1. / 480, -1. / 144};
    const Row b5 = {5. / 96, -1. / 96, -3. / 16, 25. / 288, 1. / 288, 1. / 48, 3. / 32, 5. / 32, -5. / 16, -1. / 32, -1. / 96, -5. / 144};
    auto cs = [&](const Row &r) {
        double s = 0;
        for(int k = 0; k < 12; ++k) s += r[k] * std::cos(f[k] * t);
        return s;
    };
    auto sn = [&](const Row &r) {
        double s = 0;
        for(int k = 0; k < 12; ++k) s += r[k] * std::sin(f[k] * t);
        return s;
    };
    AnalyticMap m;
    m.lambda3 = (59. / 144 + 5 * c2 / 32 + 5 * c4 / 16 + 35 * c6 / 288) + (1. / 24 - c2 / 32 - c4 / 40 + 7 * c6 / 480) * e[2] -
                (1. / 48 - c2 / 32 + c4 / 80 - c6 / 480) * e[4];
    m.tau3 = (17. / 144 - c2 / 32 - c4 / 16 - 7 * c6 / 288) * e[1] - (1. / 24 - c2 / 32 - c4 / 40 + 7 * c6 / 480) * e[3] +
             (5. / 48 - 5 * c2 / 32 + c4 / 16 - c6 / 96) * e[5];
    m.alpha = cs(a0) + cs(a2) * e[2] + cs(a4) * e[4];
    m.beta = sn(b1) * e[1] + sn(b3) * e[3] + sn(b5) * e[5];
    return m;
}

// Env slots (0, 1, 2) = sites (i+1, i+2, i-1).
inline AnalyticMap ring4(double t, double P, double Q, const std::vector<double> &z, Variant v) {
    const RingEig4 r = ring_eig4(P, Q, v);
    const double X = r.j_cross, f = r.phi_cross, r2 = std::sqrt(2.0);
    const double c2 = std::cos(2 * P * t), c4 = std::cos(4 * P * t);
    const double CQ = std::cos(Q * t), SQ = std::sin(Q * t), CX = std::cos(X * t), SX = std::sin(X * t);
    const double C2Q = std::cos(2 * Q * t), S2Q = std::sin(2 * Q * t), S2P = std::sin(2 * P * t);
    const double cP2 = std::cos(P * t) * std::cos(P * t), sP2 = std::sin(P * t) * std::sin(P * t);
    const double Cf = std::cos(f), Sf = std::sin(f);
    const double K = CQ * CX, L = Cf * SQ * SX;
    const double z0 = z[0], z1 = z[1], z2 = z[2];

    AnalyticMap m;
    const double lzz = v == Variant::printed ? 1. / 16 + c4 - K / 8 - L / 8 : 1. / 16 + c4 / 16 - K / 8 - L / 8;
    const double lzoz = 3. / 16 - c2 / 4 + c4 / 16;
    m.lambda3 = (7. / 16 + c2 / 4 + c4 / 16 + K / 4 + L / 4) + lzz * (z2 * z1 + z0 * z1) - lzoz * z2 * z0;
    m.tau3 = (1. / 16 - c2 / 4 - c4 / 16 + K / 4 + L / 4) * z0 * z1 * z2 + (3. / 16 - c4 / 16 - L / 8 - K / 8) * (z2 + z0) + lzoz * z1;

    double a000, a0zz, az0z, bz00, b0z0, bzzz;
    a0zz = cP2 / 8 * (C2Q - K + L) + r2 / 16 * Sf * CQ * S2P * SX;
    if(v == Variant::printed) {
        a000 = 1. / 4 + (1 + 3 * C2Q) / 16 * cP2 + (1 + 3 * c2) / 16 * K - r2 / 8 * Sf * S2P * CQ * SX -
               (1 + Cf * std::sin(P * t) * SX) / 8 * SQ * SQ;
        az0z = -1. / 8 + cP2 / 4 * (1 + 1.5 * C2Q) - sP2 / 8 * K + (1 + 3 * c2) / 16 * L;
        bz00 = -cP2 / 8 * (3 * S2Q + SQ * CX + Cf * CQ * SX) + r2 / 16 * Sf * SQ * S2P * SX;
        b0z0 = (1 + 3 * c2) / 16 * Cf * CQ * SX - cP2 / 8 * S2Q + sP2 / 8 * SQ * CX;
        bzzz = sP2 / 8 * std::cos(f * t) * CQ * SX - cP2 / 8 * S2Q + (1 + 3 * c2) / 16 * SQ * CX - r2 / 16 * Sf * SQ * S2P * SX;
    } else {
        a000 = 1. / 8 + (2 + 3 * C2Q) / 8 * cP2 + (1 + 3 * c2) / 16 * K - r2 / 8 * Sf * S2P * CQ * SX - sP2 / 8 * Cf * SQ * SX;
        az0z = -1. / 8 + cP2 / 4 * (-1 + 1.5 * C2Q) + sP2 / 8 * K - (1 + 3 * c2) / 16 * L;
        bz00 = cP2 / 8 * (3 * S2Q + SQ * CX + Cf * CQ * SX) - r2 / 16 * Sf * SQ * S2P * SX;
        b0z0 = -(1 + 3 * c2) / 16 * Cf * CQ * SX + cP2 / 8 * S2Q - sP2 / 8 * SQ * CX;
        bzzz = cP2 / 8 * S2Q - (1 + 3 * c2) / 16 * SQ * CX - sP2 / 8 * Cf * CQ * SX + r2 / 8 * Sf * SQ * S2P * SX;
    }
    m.alpha = a000 + a0zz * (z1 * z2 + z0 * z1) + az0z * z0 * z2;
    m.beta = bz00 * (z0 + z2) + b0z0 * z1 + bzzz * z0 * z1 * z2;
    return m;
}

// XXX point only. Env slots (0..3) = sites (i+1, ..., i+4).
inline AnalyticMap ring5(double t, double P, const std::vector<double> &z, Variant v) {
    const double s5 = std::sqrt(5.0);
    auto C = [t, P](double w) { return std::cos(w * P * t); };
    const double f1 = (3 - s5) / 2, f2 = (5 - s5) / 2, f3 = 3 * (1 - s5) / 2;
    const double g1 = (3 + s5) / 2, g2 = (5 + s5) / 2, g4 = 3 * (1 + s5) / 2;
    const double l0 = 71. / 225 + 13. / 90 * C(f1) + 1. / 10 * C(f2) + 1. / 45 * C(f3) + 32. / 225 * C(s5) + 13. / 90 * C(g1) +
                      1. / 10 * C(g2) + 2. / 225 * C(2 * s5) + 1. / 45 * C(g4);
    const double lzz00 = -(6 * s5 + 25) / 900 * C(g1) + (6 * s5 - 25) / 900 * C(f1) + 1. / 100 * C(g2) + 1. / 100 * C(f2) -
                         s5 / 450 * C(f3) + s5 / 450 * C(g4) - 2. / 225 * C(2 * s5) + 2. / 45 * C(s5);
    const double lz0z0 = 1. / 100 * C(f2) - (6 * s5 + 25) / 900 * C(f1) + s5 / 450 * C(f3) - s5 / 450 * C(g4) +
                         (6 * s5 - 25) / 900 * C(g1) + 1. / 100 * C(g2) - 2. / 225 * C(2 * s5) + 2. / 45 * C(s5);
    const double l0zz0 = 1. / 45 + (3 * s5 - 5) / 300 * C(f1) + 1. / 75 * C(2 * s5) + (1 - s5) / 100 * C(f2) - (5 - s5) / 450 * C(f3) -
                         (3 * s5 + 5) / 300 * C(g1) + (1 + s5) / 100 * C(g2) - (5 + s5) / 450 * C(g4);
    const double lz00z_last = v == Variant::printed ? (5 - s5) / 450 * C(g4) : -(5 - s5) / 450 * C(g4);
    const double lz00z = 1. / 45 - (3 * s5 + 5) / 300 * C(f1) + (1 + s5) / 100 * C(f2) - (5 + s5) / 450 * C(f3) +
                         (3 * s5 - 5) / 300 * C(g1) + (1 - s5) / 100 * C(g2) + 1. / 75 * C(2 * s5) + lz00z_last;
    const double tz000 = 77. / 450 - (1 + s5) / 40 * C(g2) - (1 - s5) / 40 * C(f2) - (1 - s5) / 180 * C(f3) - (1 + s5) / 180 * C(g4) -
                         (13 + 3 * s5) / 360 * C(g1) - (13 - 3 * s5) / 360 * C(f1) - 1. / 450 * C(2 * s5) - 8. / 225 * C(s5);
    const double t0z00 = 77. / 450 - (1 - s5) / 40 * C(g2) - (1 + s5) / 40 * C(f2) - (1 + s5) / 180 * C(f3) - (1 - s5) / 180 * C(g4) -
                         (13 - 3 * s5) / 360 * C(g1) - (13 + 3 * s5) / 360 * C(f1) - 1. / 450 * C(2 * s5) - 8. / 225 * C(s5);
    const double tzzz0 = -1. / 90 - (3 - s5) / 200 * C(g2) - (3 + s5) / 200 * C(f2) + (5 + 3 * s5) / 900 * C(f3) +
                         (5 - 3 * s5) / 900 * C(g4) + (65 + 3 * s5) / 1800 * C(g1) + (65 - 3 * s5) / 1800 * C(f1) +
                         1. / 450 * C(2 * s5) - 2. / 45 * C(s5);
    const double tz0zz_s5 = v == Variant::printed ? 2. / 45 * C(s5) : -2. / 45 * C(s5);
    const double tz0zz = -1. / 90 - (3 + s5) / 200 * C(g2) - (3 - s5) / 200 * C(f2) + (5 - 3 * s5) / 900 * C(f3) +
                         (5 + 3 * s5) / 900 * C(g4) + (65 - 3 * s5) / 1800 * C(g1) + (65 + 3 * s5) / 1800 * C(f1) +
                         1. / 450 * C(2 * s5) + tz0zz_s5;
    const double z0 = z[0], z1 = z[1], z2 = z[2], z3 = z[3];
    AnalyticMap m;
    m.has_ab = false;
    m.alpha = m.beta = std::numeric_limits<double>::quiet_NaN();
    m.lambda3 = l0 + lzz00 * (z0 * z1 + z2 * z3) + lz0z0 * (z0 * z2 + z1 * z3) + l0zz0 * z1 * z2 + lz00z * z0 * z3;
    m.tau3 = tz000 * (z0 + z3) + t0z00 * (z1 + z2) + tzzz0 * (z0 * z1 * z2 + z1 * z2 * z3) + tz0zz * (z0 * z2 * z3 + z0 * z1 * z3);
    return m;
}

} // namespace detail

inline AnalyticMap cc_params(int n, double t, double jp, double jz, const std::vector<double> &env_z,
                             Variant v = Variant::corrected) {
    if(n < 3 || n > 6) throw unsupported_error("no closed form for the complete graph with N = " + std::to_string(n));
    detail::check_env(n, env_z);
    switch(n) {
        case 3: return detail::cc3(t, jp, jz, env_z, v);
        case 4: return detail::cc4(t, jp, jz, env_z, v);
        case 5: return detail::cc5(t, jp, jz, env_z);
        default: return detail::cc6(t, jp, jz, env_z);
    }
}

inline AnalyticMap ring_params(int n, double t, double jp, double jz, const std::vector<double> &env_z,
                               Variant v = Variant::corrected) {
    if(n != 4 && n != 5) throw unsupported_error("no closed form for the ring with N = " + std::to_string(n));
    detail::check_env(n, env_z);
    if(n == 4) return detail::ring4(t, jp, jz, env_z, v);
    if(std::abs(jz - jp) > 1e-12 * std::max(1.0, std::abs(jp)))
        throw unsupported_error("5-qubit ring closed form exists only for J_par = J_perp");
    return detail::ring5(t, jp, env_z, v);
}

inline bool has_closed_form(Topology top, int n) {
    if(top == Topology::complete) return n >= 3 && n <= 6;
    if(top == Topology::ring) return n == 4 || n == 5;
    return false;
}

// Env z values in the slot order the closed forms expect for focal site i.
inline std::vector<double> env_slots(Topology top, int n, int site, const std::vector<double> &z_full) {
    if(int(z_full.size()) != n) throw std::invalid_argument("env_slots: z must have N entries");
    std::vector<double> e;
    if(top == Topology::ring) {
        for(int k = 1; k < n; ++k) e.push_back(z_full[(site + k) % n]);
    } else {
        for(int k = 0; k < n; ++k)
            if(k != site) e.push_back(z_full[k]);
    }
    return e;
}

inline AnalyticMap analytic_map(const NetworkSpec &s, double t, int site, const std::vector<double> &z_full,
                                Variant v = Variant::corrected) {
    if(!has_closed_form(s.topology, s.n))
        throw unsupported_error("no closed form for " + to_string(s.topology) + " with N = " + std::to_string(s.n));
    auto e = env_slots(s.topology, s.n, site, z_full);
    return s.topology == Topology::complete ? cc_params(s.n, t, s.j_perp, s.j_par, e, v) : ring_params(s.n, t, s.j_perp, s.j_par, e, v);
}

// ---- disconnected XX pairs ----

struct PairEig {
    double h12 = 0, delta12 = 0, omega12 = 0, phi12 = 0;

    // omega = sgn(Delta) sqrt(Delta^2 + J^2), tan(phi) = J / Delta, sgn(0) = +1.
    static PairEig from_hamiltonian(double h1, double h2, double j) {
        PairEig p;
        p.h12 = 0.5 * (h1 + h2);
        p.delta12 = h1 - h2;
        p.omega12 = sgn_plus(p.delta12) * std::hypot(p.delta12, j);
        p.phi12 = p.delta12 == 0.0 ? std::atan2(j, 0.0) : std::atan(j / p.delta12);
        return p;
    }
    static PairEig from_eigen(double h, double omega, double phi) {
        PairEig p{h, omega * std::cos(phi), omega, phi};
        return p;
    }
    double coupling() const { return omega12 * std::sin(phi12); }
    PairEig swapped() const {
        const double j = coupling();
        return from_hamiltonian(h12 - 0.5 * delta12, h12 + 0.5 * delta12, j);
    }
};

// U^{ij}_{lk} = 1/4 tr[(s_i s_j) U (s_l s_k) U^dag], stored at index 64 i + 16 j + 4 l + k.
using XXTable = std::array<double, 256>;

inline int xx_index(int i, int j, int l, int k) { return 64 * i + 16 * j + 4 * l + k; }

namespace detail {

inline int pauli_char(char c) {
    switch(c) {
        case '0': return 0;
        case 'x': return 1;
        case 'y': return 2;
        case 'z': return 3;
        default: throw std::logic_error("bad Pauli label");
    }
}

inline void assign_row(XXTable &u, const char *keys, double v) {
    std::string s(keys);
    std::size_t p = 0;
    while(p < s.size()) {
        while(p < s.size() && s[p] == ' ') ++p;
        if(p >= s.size()) break;
        double sign = 1;
        if(s[p] == '-') {
            sign = -1;
            ++p;
        }
        u[xx_index(pauli_char(s[p]), pauli_char(s[p + 1]), pauli_char(s[p + 2]), pauli_char(s[p + 3]))] = sign * v;
        p += 4;
    }
}

} // namespace detail

inline XXTable xx_unitary_components(double t, double h, double omega, double phi, Variant v = Variant::corrected) {
    XXTable u{};
    const double sp = std::sin(phi), cp = std::cos(phi);
    const double sw = std::sin(omega * t), cw = std::cos(omega * t), s2w = std::sin(2 * omega * t), c2w = std::cos(2 * omega * t);
    const double ch = std::cos(2 * h * t), sh = std::sin(2 * h * t), c4h = std::cos(4 * h * t), s4h = std::sin(4 * h * t);
    const bool pr = v == Variant::printed;
    using detail::assign_row;
    u[xx_index(0, 0, 0, 0)] = 1;
    u[xx_index(3, 3, 3, 3)] = 1;
    assign_row(u, "x0zy zxy0 0xyz xz0y -y0zx -zyx0 -0yxz -yz0x", sp * sw * ch);
    assign_row(u, pr ? "xx0z yyz0 z0xx z0yy -xx0z -yy0z -0zxx -0zyy" : "xxz0 yyz0 z0xx z0yy -xx0z -yy0z -0zxx -0zyy", cp * sp * sw * sw);
    assign_row(u, pr ? "xyz0 yxz0 z0yx 0zxy -xy0z -yxz0 -z0xy -0zyx" : "xyz0 yx0z z0yx 0zxy -xy0z -yxz0 -z0xy -0zyx", 0.5 * sp * s2w);
    assign_row(u, "0xxz 0yyz xz0x yz0y x0zx y0zy zxx0 zyy0", sp * sw * sh);
    assign_row(u, "y0x0 -x0y0 yzxz -xzyz", cw * sh + cp * sw * ch);
    assign_row(u, "0y0x -0x0y zyzx -zxzy", cw * sh - cp * sw * ch);
    assign_row(u, "x0x0 y0y0 xzxz yzyz", cw * ch - cp * sw * sh);
    assign_row(u, "0x0x 0y0y zxzx zyzy", cw * ch + cp * sw * sh);
    assign_row(u, "yxxx yyxy -xxyx -xyyy", 0.5 * (s4h + cp * s2w));
    assign_row(u, "xyxx yyyx -xxxy -yxyy", 0.5 * (s4h - cp * s2w));
    assign_row(u, "yyxx xxyy", 0.5 * (-c4h + cp * cp * c2w + sp * sp));
    assign_row(u, "xxxx yyyy", 0.5 * (c4h + cp * cp * c2w + sp * sp));
    assign_row(u, "xyxy yxyx", 0.5 * (c4h + c2w));
    assign_row(u, "xyyx yxxy", 0.5 * (c4h - c2w));
    assign_row(u, "z0z0 0z0z", 1 - sp * sp * sw * sw);
    assign_row(u, "z00z 0zz0", sp * sp * sw * sw);
    return u;
}

inline XXTable xx_unitary_components(double t, const PairEig &p, Variant v = Variant::corrected) {
    return xx_unitary_components(t, p.h12, p.omega12, p.phi12, v);
}

// 16x16 matrix M[(i,j),(l,k)]; orthogonal when the table describes a unitary channel.
inline rmat xx_channel_matrix(const XXTable &u) {
    rmat m(16, 16);
    for(int a = 0; a < 16; ++a)
        for(int b = 0; b < 16; ++b) m(a, b) = u[16 * a + b];
    return m;
}

// which = 1: T_ij = sum_k r_k U^{i0}_{jk}; which = 2: T_ij = sum_k r_k U^{0i}_{kj}, r = (1, env).
inline TransferMatrix xx_reduced_map(double t, const PairEig &p, const Bloch &env, int which, Variant v = Variant::corrected) {
    if(which != 1 && which != 2) throw std::invalid_argument("xx_reduced_map: which must be 1 or 2");
    check_state({env});
    const XXTable u = xx_unitary_components(t, p, v);
    const double r[4] = {1, env.x, env.y, env.z};
    TransferMatrix tm = TransferMatrix::Zero();
    for(int i = 0; i < 4; ++i)
        for(int j = 0; j < 4; ++j) {
            double s = 0;
            for(int k = 0; k < 4; ++k) s += r[k] * (which == 1 ? u[xx_index(i, 0, j, k)] : u[xx_index(0, i, k, j)]);
            tm(i, j) = s;
        }
    return tm;
}

struct Diagnostic {
    std::string name;
    double max_error = 0;
};

// Largest deviation of the printed XX table from the corrected one over a small parameter sweep.
inline std::vector<Diagnostic> xx_table_diagnostics() {
    static const char *lab = "0xyz";
    std::map<int, double> worst;
    for(double t : {0.3, 1.1, 2.7})
        for(double phi : {-1.2, 0.4, 1.0}) {
            auto a = xx_unitary_components(t, 0.7, 1.3, phi, Variant::printed);
            auto b = xx_unitary_components(t, 0.7, 1.3, phi, Variant::corrected);
            for(int k = 0; k < 256; ++k) worst[k] = std::max(worst[k], std::abs(a[k] - b[k]));
        }
    std::vector<Diagnostic> out;
    for(auto [k, e] : worst)
        if(e > 1e-12) {
            std::string n = "xx.U^{";
            n += lab[k / 64];
            n += lab[(k / 16) % 4];
            n += "}_{";
            n += lab[(k / 4) % 4];
            n += lab[k % 4];
            n += "}";
            out.push_back({n, e});
        }
    return out;
}

} // namespace pcnet
