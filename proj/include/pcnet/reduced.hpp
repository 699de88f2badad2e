#pragma once

#include "qlinalg.hpp"

#include <limits>
#include <optional>

namespace pcnet {

struct PCParams {
    double lambda1 = 1, theta = 0, lambda3 = 1, tau3 = 0;
    double residual = 0;
};

struct ABDecomp {
    double alpha = 1, beta = 0, phi = 0;
};

inline TransferMatrix pc_matrix(double lambda1, double theta, double lambda3, double tau3) {
    TransferMatrix m = TransferMatrix::Zero();
    m(0, 0) = 1;
    m(1, 1) = m(2, 2) = lambda1 * std::cos(theta);
    m(2, 1) = lambda1 * std::sin(theta);
    m(1, 2) = -m(2, 1);
    m(3, 0) = tau3;
    m(3, 3) = lambda3;
    return m;
}

inline TransferMatrix pc_matrix(const PCParams &p) { return pc_matrix(p.lambda1, p.theta, p.lambda3, p.tau3); }

// Assembles the pattern directly from the decomposition at field h.
inline TransferMatrix pc_matrix_ab(double alpha, double beta, double lambda3, double tau3, double h, double t) {
    TransferMatrix m = TransferMatrix::Zero();
    double c = std::cos(2 * h * t), s = std::sin(2 * h * t);
    m(0, 0) = 1;
    m(1, 1) = m(2, 2) = alpha * c - beta * s;
    m(2, 1) = beta * c + alpha * s;
    m(1, 2) = -m(2, 1);
    m(3, 0) = tau3;
    m(3, 3) = lambda3;
    return m;
}

// Reduced map of `site` under a given global unitary; env = states of the other sites in increasing site order.
inline TransferMatrix reduced_map_of_unitary(const cmat &u, int site, const ProductState &env) {
    const int n = qubit_count(u.rows());
    if(site < 0 || site >= n) throw std::out_of_range("reduced_map: site out of range");
    if(int(env.size()) != n - 1) throw std::invalid_argument("reduced_map: env must cover the other N-1 sites");
    check_state(env);
    TransferMatrix tm;
    for(int j = 0; j < 4; ++j) {
        cmat rho = cmat::Ones(1, 1);
        for(int k = 0, e = 0; k < n; ++k) rho = kron(rho, k == site ? pauli(j) : single_density(env[e++]));
        cmat out = partial_trace_keep(u * rho * u.adjoint(), site);
        for(int i = 0; i < 4; ++i) tm(i, j) = 0.5 * (pauli(i) * out).trace().real();
    }
    return tm;
}

inline TransferMatrix reduced_map(const Propagator &p, double t, int site, const ProductState &env) {
    return reduced_map_of_unitary(p.unitary(t), site, env);
}

inline TransferMatrix reduced_map(const cmat &h, double t, int site, const ProductState &env) {
    return reduced_map(Propagator::dense(h), t, site, env);
}

inline ProductState env_of(const ProductState &full, int site) {
    ProductState e;
    for(int k = 0; k < int(full.size()); ++k)
        if(k != site) e.push_back(full[k]);
    return e;
}

// Heisenberg-picture kernels for diagonal environments.
// T_ij = 1/2 sum_a K_site(r(i,j), a) w(a) with w(a) = prod_{k != site} (1 + z_k s_k(a)) / 2.
class DiagonalMapEngine {
public:
    explicit DiagonalMapEngine(const Propagator &p) : prop_(p), n_(qubit_count(p.dim())) {
        const int d = p.dim();
        support_.assign(d, {});
        for(const auto &b : p.blocks())
            for(int a : b.idx) support_[a] = b.idx;
    }

    int n() const { return n_; }
    const Propagator &propagator() const { return prop_; }

    static int row(int i, int j) { return 4 * (i - 1) + j; }

    std::vector<rmat> kernels(double t) const { return kernels_from(prop_.unitary(t)); }

    std::vector<rmat> kernels_from(const cmat &u) const {
        const int d = 1 << n_;
        const cplx I(0, 1);
        std::vector<rmat> out(n_, rmat::Zero(12, d));
        for(int s = 0; s < n_; ++s) {
            const int m = flip_mask(s, n_);
            rmat &k = out[s];
            for(int a = 0; a < d; ++a) {
                const int b = a ^ m;
                cplx diag[3] = {0, 0, 0}, off[3] = {0, 0, 0};
                for(int c : support_[a]) {
                    cplx ua = std::conj(u(c, a));
                    if(ua == 0.0) continue;
                    const int cf = c ^ m;
                    const cplx sy = bit_of(c, s, n_) ? I : -I;
                    diag[0] += ua * u(cf, a);
                    diag[1] += ua * sy * u(cf, a);
                    diag[2] += ua * z_sign(c, s, n_) * u(c, a);
                    off[0] += ua * u(cf, b);
                    off[1] += ua * sy * u(cf, b);
                    off[2] += ua * z_sign(c, s, n_) * u(c, b);
                }
                const double za = z_sign(a, s, n_);
                const cplx yb = bit_of(a, s, n_) ? -I : I;
                for(int i = 0; i < 3; ++i) {
                    k(4 * i + 0, a) = diag[i].real();
                    k(4 * i + 3, a) = (diag[i] * za).real();
                    k(4 * i + 1, a) = off[i].real();
                    k(4 * i + 2, a) = (off[i] * yb).real();
                }
            }
        }
        return out;
    }

    rvec weights(int site, const std::vector<double> &z) const {
        const int d = 1 << n_;
        rvec w(d);
        for(int a = 0; a < d; ++a) {
            double v = 1;
            for(int k = 0; k < n_; ++k)
                if(k != site) v *= 0.5 * (1 + z[k] * z_sign(a, k, n_));
            w(a) = v;
        }
        return w;
    }

    static TransferMatrix apply(const rmat &k, const rvec &w) {
        TransferMatrix tm = TransferMatrix::Zero();
        tm(0, 0) = 1;
        Eigen::VectorXd r = 0.5 * (k * w);
        for(int i = 1; i < 4; ++i)
            for(int j = 0; j < 4; ++j) tm(i, j) = r(row(i, j));
        return tm;
    }

    TransferMatrix map(const std::vector<rmat> &ks, int site, const std::vector<double> &z) const {
        return apply(ks[site], weights(site, z));
    }

    TransferMatrix network_map(const std::vector<rmat> &ks, const std::vector<double> &z) const {
        TransferMatrix acc = TransferMatrix::Zero();
        for(int s = 0; s < n_; ++s) acc += map(ks, s, z);
        return acc / n_;
    }

private:
    Propagator prop_;
    int n_;
    std::vector<std::vector<int>> support_;
};

inline PCParams fit_pc(const TransferMatrix &t) {
    PCParams p;
    p.lambda1 = std::hypot(t(1, 1), t(2, 1));
    p.theta = std::atan2(t(2, 1), t(1, 1));
    p.lambda3 = t(3, 3);
    p.tau3 = t(3, 0);
    double r = std::abs(t(0, 0) - 1);
    const int zeros[9][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 0}, {2, 0}, {1, 3}, {2, 3}, {3, 1}, {3, 2}};
    for(auto &z : zeros) r = std::max(r, std::abs(t(z[0], z[1])));
    r = std::max(r, std::abs(t(1, 1) - t(2, 2)));
    r = std::max(r, std::abs(t(1, 2) + t(2, 1)));
    p.residual = r;
    return p;
}

inline bool is_phase_covariant(const TransferMatrix &t, double tol) {
    if(!(tol > 0)) throw std::invalid_argument("is_phase_covariant: tol must be positive");
    return fit_pc(t).residual <= tol;
}

// Choi operator sum_ij |i><j| (x) Lambda(|i><j|), input factor first.
inline cmat choi_matrix(const TransferMatrix &t) {
    cmat c = cmat::Zero(4, 4);
    for(int i = 0; i < 2; ++i)
        for(int j = 0; j < 2; ++j) {
            cmat e = cmat::Zero(2, 2);
            e(i, j) = 1;
            cmat out = cmat::Zero(2, 2);
            for(int k = 0; k < 4; ++k) {
                cplx ck = (pauli(k) * e).trace();
                if(ck == 0.0) continue;
                for(int l = 0; l < 4; ++l) out += 0.5 * ck * t(l, k) * pauli(l);
            }
            c.block(2 * i, 2 * j, 2, 2) = out;
        }
    return c;
}

inline double choi_check(const TransferMatrix &t) {
    Eigen::SelfAdjointEigenSolver<cmat> es(choi_matrix(t), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline bool pc_cp_inequalities(double lambda1, double lambda3, double tau3, double tol = 0) {
    return std::abs(lambda3) + std::abs(tau3) <= 1 + tol && 4 * lambda1 * lambda1 + tau3 * tau3 <= (1 + lambda3) * (1 + lambda3) + tol;
}

struct FixedPoint {
    enum class Kind { unique, all_diagonal } kind = Kind::unique;
    double a_star = 0;
    double beta_star = 0;
};

inline FixedPoint fixed_point(const PCParams &p) {
    FixedPoint f;
    if(p.lambda3 == 1.0) {
        if(p.tau3 != 0.0) throw invariant_error("fixed_point: lambda3 = 1 with tau3 != 0 has no fixed point");
        f.kind = FixedPoint::Kind::all_diagonal;
        f.a_star = std::numeric_limits<double>::quiet_NaN();
        f.beta_star = std::numeric_limits<double>::quiet_NaN();
        return f;
    }
    f.a_star = p.tau3 / (1 - p.lambda3);
    f.beta_star = f.a_star >= 1 ? std::numeric_limits<double>::infinity() : std::log(2 / (1 - f.a_star));
    return f;
}

inline ABDecomp ab_decompose(const TransferMatrix &t, double h, double time) {
    double c = std::cos(2 * h * time), s = std::sin(2 * h * time);
    ABDecomp r;
    r.alpha = t(1, 1) * c + t(2, 1) * s;
    r.beta = t(2, 1) * c - t(1, 1) * s;
    r.phi = std::atan2(r.beta, r.alpha);
    return r;
}

} // namespace pcnet
