#pragma once

#include "core.hpp"

#include <Eigen/Eigenvalues>

#include <functional>

namespace pcnet {

// Basis index convention: big-endian bit string, site 0 is the most significant bit,
// bit 0 is the Z = +1 state |0>, bit 1 is Z = -1.
inline int bit_of(int index, int site, int n) { return (index >> (n - 1 - site)) & 1; }
inline int flip_mask(int site, int n) { return 1 << (n - 1 - site); }
inline double z_sign(int index, int site, int n) { return bit_of(index, site, n) ? -1.0 : 1.0; }

inline cmat pauli(int axis) {
    cmat m = cmat::Zero(2, 2);
    const cplx I(0, 1);
    switch(axis) {
        case 0: m(0, 0) = m(1, 1) = 1; break;
        case 1: m(0, 1) = m(1, 0) = 1; break;
        case 2: m(0, 1) = -I; m(1, 0) = I; break;
        case 3: m(0, 0) = 1; m(1, 1) = -1; break;
        default: throw std::invalid_argument("pauli axis must be 0..3");
    }
    return m;
}

inline cmat kron(const cmat &a, const cmat &b) {
    cmat r(a.rows() * b.rows(), a.cols() * b.cols());
    for(Eigen::Index i = 0; i < a.rows(); ++i)
        for(Eigen::Index j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
}

inline cmat embed(const cmat &op, int site, int n) {
    if(op.rows() != 2 || op.cols() != 2) throw std::invalid_argument("embed expects a 2x2 operator");
    if(site < 0 || site >= n) throw std::out_of_range("embed: site out of range");
    const int d = 1 << n;
    const int m = flip_mask(site, n);
    cmat r = cmat::Zero(d, d);
    for(int a = 0; a < d; ++a) {
        int ba = bit_of(a, site, n);
        for(int bb = 0; bb < 2; ++bb) {
            cplx v = op(bb, ba);
            if(v == 0.0) continue;
            int row = bb == ba ? a : (a ^ m);
            r(row, a) = v;
        }
    }
    return r;
}

inline cmat single_density(const Bloch &b) {
    cmat r(2, 2);
    const cplx I(0, 1);
    r(0, 0) = 0.5 * (1 + b.z);
    r(1, 1) = 0.5 * (1 - b.z);
    r(0, 1) = 0.5 * (b.x - I * b.y);
    r(1, 0) = 0.5 * (b.x + I * b.y);
    return r;
}

inline cmat density_of(const ProductState &s) {
    check_state(s);
    cmat r = cmat::Ones(1, 1);
    for(const auto &b : s) r = kron(r, single_density(b));
    return r;
}

inline int qubit_count(Eigen::Index dim) {
    int n = 0;
    while((Eigen::Index(1) << n) < dim) ++n;
    if((Eigen::Index(1) << n) != dim) throw std::invalid_argument("dimension is not a power of 2");
    return n;
}

inline cmat partial_trace_keep(const cmat &rho, int site) {
    if(rho.rows() != rho.cols()) throw std::invalid_argument("partial_trace_keep: matrix not square");
    const int n = qubit_count(rho.rows());
    if(site < 0 || site >= n) throw std::out_of_range("partial_trace_keep: site out of range");
    const int d = 1 << n, m = flip_mask(site, n);
    cmat r = cmat::Zero(2, 2);
    for(int a = 0; a < d; ++a) {
        if(a & m) continue;
        int a1 = a | m;
        r(0, 0) += rho(a, a);
        r(1, 1) += rho(a1, a1);
        r(0, 1) += rho(a, a1);
        r(1, 0) += rho(a1, a);
    }
    return r;
}

inline Bloch bloch_of(const cmat &rho2) {
    return {2 * rho2(1, 0).real(), 2 * rho2(1, 0).imag(), (rho2(0, 0) - rho2(1, 1)).real()};
}

inline double max_abs(const cmat &a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }
inline double hermiticity_defect(const cmat &a) { return max_abs(a - a.adjoint()); }
inline double unitarity_defect(const cmat &u) { return max_abs(u * u.adjoint() - cmat::Identity(u.rows(), u.cols())); }

// Spectral block of a Hermitian operator restricted to a subset of basis states.
struct EigenBlock {
    std::vector<int> idx;
    cmat v;
    rvec e;
};

// Cached eigensystem; U(t) = sum_blocks V exp(-iEt) V^dag.
class Propagator {
public:
    Propagator() = default;
    Propagator(int dim, std::vector<EigenBlock> blocks) : dim_(dim), blocks_(std::move(blocks)) {}

    static Propagator dense(const cmat &h) {
        if(hermiticity_defect(h) > 1e-10) throw std::invalid_argument("Hamiltonian is not Hermitian");
        Eigen::SelfAdjointEigenSolver<cmat> es(h);
        EigenBlock b;
        b.idx.resize(h.rows());
        for(int i = 0; i < h.rows(); ++i) b.idx[i] = i;
        b.v = es.eigenvectors();
        b.e = es.eigenvalues();
        return Propagator(int(h.rows()), {std::move(b)});
    }

    // Diagonalizes each fixed-charge sector separately. Requires [H, Q] = 0.
    static Propagator charge_blocked(const cmat &h) {
        if(hermiticity_defect(h) > 1e-10) throw std::invalid_argument("Hamiltonian is not Hermitian");
        const int d = int(h.rows()), n = qubit_count(d);
        std::vector<std::vector<int>> sec(n + 1);
        for(int a = 0; a < d; ++a) sec[n - __builtin_popcount(unsigned(a))].push_back(a);
        for(int a = 0; a < d; ++a)
            for(int b = 0; b < d; ++b)
                if(__builtin_popcount(unsigned(a)) != __builtin_popcount(unsigned(b)) && std::abs(h(a, b)) > 1e-12)
                    throw std::invalid_argument("Hamiltonian does not conserve the excitation number");
        std::vector<EigenBlock> blocks;
        for(auto &idx : sec) {
            const int m = int(idx.size());
            cmat hb(m, m);
            for(int i = 0; i < m; ++i)
                for(int j = 0; j < m; ++j) hb(i, j) = h(idx[i], idx[j]);
            Eigen::SelfAdjointEigenSolver<cmat> es(hb);
            blocks.push_back({idx, es.eigenvectors(), es.eigenvalues()});
        }
        return Propagator(d, std::move(blocks));
    }

    int dim() const { return dim_; }
    const std::vector<EigenBlock> &blocks() const { return blocks_; }

    cmat unitary(double t) const {
        cmat u = cmat::Zero(dim_, dim_);
        for(const auto &b : blocks_) {
            const int m = int(b.idx.size());
            cvec ph(m);
            for(int k = 0; k < m; ++k) ph(k) = std::polar(1.0, -b.e(k) * t);
            cmat ub = b.v * ph.asDiagonal() * b.v.adjoint();
            for(int i = 0; i < m; ++i)
                for(int j = 0; j < m; ++j) u(b.idx[i], b.idx[j]) = ub(i, j);
        }
        return u;
    }

    rvec eigenvalues() const {
        rvec all(dim_);
        int k = 0;
        for(const auto &b : blocks_)
            for(int i = 0; i < b.e.size(); ++i) all(k++) = b.e(i);
        std::sort(all.data(), all.data() + all.size());
        return all;
    }

private:
    int dim_ = 0;
    std::vector<EigenBlock> blocks_;
};

inline cmat evolve(const Propagator &p, double t, const cmat &rho) {
    cmat u = p.unitary(t);
    return u * rho * u.adjoint();
}

inline cmat evolve(const cmat &h, double t, const cmat &rho) {
    return evolve(Propagator::dense(h), t, rho);
}

// Lambda_ij = 1/2 tr[sigma_i apply(sigma_j)].
inline TransferMatrix transfer_of_map(const std::function<cmat(const cmat &)> &apply) {
    TransferMatrix t;
    for(int j = 0; j < 4; ++j) {
        cmat out = apply(pauli(j));
        for(int i = 0; i < 4; ++i) {
            cplx v = 0.5 * (pauli(i) * out).trace();
            if(std::abs(v.imag()) > 1e-10) throw std::invalid_argument("transfer_of_map: map is not Hermiticity preserving");
            t(i, j) = v.real();
        }
    }
    return t;
}

} // namespace pcnet
