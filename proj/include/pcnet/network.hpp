#pragma once

#include "qlinalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <optional>

namespace pcnet {

enum class Topology { ring, complete, xx_pairs, quench };

inline std::string to_string(Topology t) {
    switch(t) {
        case Topology::ring: return "ring";
        case Topology::complete: return "complete";
        case Topology::xx_pairs: return "xx_pairs";
        case Topology::quench: return "quench";
    }
    return "?";
}

inline Topology topology_from_string(const std::string &s) {
    if(s == "ring") return Topology::ring;
    if(s == "complete") return Topology::complete;
    if(s == "xx_pairs") return Topology::xx_pairs;
    if(s == "quench") return Topology::quench;
    throw config_error("unknown topology '" + s + "'");
}

struct PairCoupling {
    double h1 = 0, h2 = 0, j = 1;
};

// Clusters of n qubits whose XXX couplings switch on at t_i; fields h_i are always on.
struct QuenchSchedule {
    int n_cl = 1;
    std::vector<double> t_i;
    std::vector<double> h_i;
};

struct NetworkSpec {
    Topology topology = Topology::complete;
    int n = 3;
    double h = 0;
    double j_perp = 1;
    double j_par = 1;
    std::vector<PairCoupling> pairs;
    QuenchSchedule quench;
};

inline void validate(const NetworkSpec &s) {
    if(s.n < 2) throw config_error("network.n: need at least 2 qubits");
    if(s.n > 10) throw config_error("network.n: at most 10 qubits supported");
    switch(s.topology) {
        case Topology::ring:
            if(s.n < 3) throw config_error("network.n: ring requires n >= 3");
            break;
        case Topology::complete: break;
        case Topology::xx_pairs:
            if(s.n % 2) throw config_error("network.n: xx_pairs requires an even qubit count");
            if(!s.pairs.empty() && int(s.pairs.size()) * 2 != s.n)
                throw config_error("network.pairs: expected n/2 entries");
            break;
        case Topology::quench:
            if(s.quench.n_cl < 1) throw config_error("network.quench.n_cl: must be >= 1");
            if(!s.quench.t_i.empty() && int(s.quench.t_i.size()) != s.quench.n_cl)
                throw config_error("network.quench.t_i: expected n_cl entries");
            if(!s.quench.h_i.empty() && int(s.quench.h_i.size()) != s.quench.n_cl)
                throw config_error("network.quench.h_i: expected n_cl entries");
            break;
    }
}

inline std::vector<std::pair<int, int>> bonds(Topology top, int n) {
    std::vector<std::pair<int, int>> b;
    if(top == Topology::ring) {
        for(int i = 0; i < n; ++i) b.emplace_back(std::min(i, (i + 1) % n), std::max(i, (i + 1) % n));
        if(n == 2) b.resize(1);
    } else {
        for(int i = 0; i < n; ++i)
            for(int j = i + 1; j < n; ++j) b.emplace_back(i, j);
    }
    return b;
}

// h sum Z_i + J_perp/2 sum (XX + YY) + J_par/2 sum ZZ over the given bonds, sites offset..offset+m-1.
inline void add_xxz(cmat &hm, int n_total, int offset, const std::vector<std::pair<int, int>> &bd, double h,
                    double j_perp, double j_par, int m) {
    const int d = 1 << n_total;
    for(int a = 0; a < d; ++a) {
        double diag = 0;
        for(int i = 0; i < m; ++i) diag += h * z_sign(a, offset + i, n_total);
        for(auto [i, j] : bd) {
            double zi = z_sign(a, offset + i, n_total), zj = z_sign(a, offset + j, n_total);
            diag += 0.5 * j_par * zi * zj;
            if(zi != zj) hm(a ^ flip_mask(offset + i, n_total) ^ flip_mask(offset + j, n_total), a) += j_perp;
        }
        hm(a, a) += diag;
    }
}

inline double quench_field(const NetworkSpec &s, int cluster) {
    return s.quench.h_i.empty() ? s.h : s.quench.h_i[cluster];
}

inline double quench_time(const NetworkSpec &s, int cluster) {
    return s.quench.t_i.empty() ? 0.0 : s.quench.t_i[cluster];
}

// Single cluster of the quench topology; XXX coupling J = j_perp once t >= t_i.
inline cmat quench_cluster_hamiltonian(const NetworkSpec &s, int cluster, double t) {
    const int n = s.n;
    cmat hm = cmat::Zero(1 << n, 1 << n);
    bool on = t >= quench_time(s, cluster);
    add_xxz(hm, n, 0, bonds(Topology::complete, n), quench_field(s, cluster), on ? s.j_perp : 0.0, on ? s.j_perp : 0.0, n);
    return hm;
}

inline cmat build_hamiltonian(const NetworkSpec &s, double t = 0.0) {
    validate(s);
    switch(s.topology) {
        case Topology::ring:
        case Topology::complete: {
            cmat hm = cmat::Zero(1 << s.n, 1 << s.n);
            add_xxz(hm, s.n, 0, bonds(s.topology, s.n), s.h, s.j_perp, s.j_par, s.n);
            return hm;
        }
        case Topology::xx_pairs: {
            cmat hm = cmat::Zero(1 << s.n, 1 << s.n);
            const int np = s.n / 2;
            const int d = 1 << s.n;
            for(int p = 0; p < np; ++p) {
                PairCoupling c = s.pairs.empty() ? PairCoupling{s.h, s.h, s.j_perp} : s.pairs[p];
                int i = 2 * p, j = 2 * p + 1;
                for(int a = 0; a < d; ++a) {
                    double zi = z_sign(a, i, s.n), zj = z_sign(a, j, s.n);
                    hm(a, a) += c.h1 * zi + c.h2 * zj;
                    if(zi != zj) hm(a ^ flip_mask(i, s.n) ^ flip_mask(j, s.n), a) += c.j;
                }
            }
            return hm;
        }
        case Topology::quench: {
            const int total = s.n * s.quench.n_cl;
            if(total > 10) throw unsupported_error("quench: full Hamiltonian limited to 10 qubits; use cluster Hamiltonians");
            cmat hm = cmat::Zero(1 << total, 1 << total);
            for(int c = 0; c < s.quench.n_cl; ++c) {
                bool on = t >= quench_time(s, c);
                add_xxz(hm, total, c * s.n, bonds(Topology::complete, s.n), quench_field(s, c), on ? s.j_perp : 0.0,
                        on ? s.j_perp : 0.0, s.n);
            }
            return hm;
        }
    }
    return {};
}

inline cmat charge_operator(int n) {
    cmat q = cmat::Zero(1 << n, 1 << n);
    for(int i = 0; i < n; ++i) q += embed(pauli(3), i, n);
    return q;
}

inline cmat parity_operator(int n) {
    cmat p = cmat::Identity(1 << n, 1 << n);
    for(int i = 0; i < n; ++i) p = p * embed(pauli(3), i, n);
    return p;
}

// Cyclic shift: T|b_0 b_1 ... b_{N-1}> = |b_1 ... b_{N-1} b_0>.
inline int rotl(int a, int n) { return ((a << 1) & ((1 << n) - 1)) | (a >> (n - 1)); }
inline int rotr(int a, int n) { return (a >> 1) | ((a & 1) << (n - 1)); }

inline cmat translation_operator(int n) {
    const int d = 1 << n;
    cmat t = cmat::Zero(d, d);
    for(int a = 0; a < d; ++a) t(rotl(a, n), a) = 1;
    return t;
}

inline int zero_bits(int a, int n) { return n - __builtin_popcount(unsigned(a)); }

struct ExcitationBlocks {
    int n = 0;
    std::vector<int> perm;  // perm[new position] = computational index
    std::vector<int> sizes; // C(n, q) for q = 0..n
    std::vector<int> offsets;
};

// q counts 0-bits; within a block states are ordered by binary value.
inline ExcitationBlocks excitation_permutation(int n) {
    if(n < 1 || n > 10) throw std::invalid_argument("excitation_permutation: 1 <= n <= 10");
    ExcitationBlocks b;
    b.n = n;
    for(int q = 0; q <= n; ++q) {
        b.offsets.push_back(int(b.perm.size()));
        for(int a = 0; a < (1 << n); ++a)
            if(zero_bits(a, n) == q) b.perm.push_back(a);
        b.sizes.push_back(int(b.perm.size()) - b.offsets.back());
    }
    return b;
}

inline cmat permutation_matrix(const ExcitationBlocks &b) {
    const int d = 1 << b.n;
    cmat p = cmat::Zero(d, d);
    for(int i = 0; i < d; ++i) p(i, b.perm[i]) = 1;
    return p;
}

struct FourierBlock {
    int q = 0, a = 0;
    std::vector<int> reps; // orbit representatives (label k)
    cmat basis;            // 2^N x dim, columns |F^a_q; k>
};

// |F^a_q; k> ~ sum_m exp(i m theta_a) T^{-m} |r_k>, theta_a = 2 pi a / N.
inline std::vector<FourierBlock> fourier_blocks(int n, int q) {
    if(q < 0 || q > n) throw std::invalid_argument("fourier_blocks: q out of range");
    const int d = 1 << n;
    std::vector<int> reps;
    std::vector<int> period;
    for(int a = 0; a < d; ++a) {
        if(zero_bits(a, n) != q) continue;
        int m = a, p = 0, mn = a;
        do {
            m = rotr(m, n);
            mn = std::min(mn, m);
            ++p;
        } while(m != a);
        if(mn == a) {
            reps.push_back(a);
            period.push_back(p);
        }
    }
    std::vector<FourierBlock> out;
    for(int a = 0; a < n; ++a) {
        FourierBlock fb;
        fb.q = q;
        fb.a = a;
        std::vector<cvec> cols;
        for(std::size_t k = 0; k < reps.size(); ++k) {
            if((a * period[k]) % n) continue;
            cvec v = cvec::Zero(d);
            int s = reps[k];
            for(int m = 0; m < period[k]; ++m) {
                v(s) += std::polar(1.0, 2 * pi * a * m / n);
                s = rotr(s, n);
            }
            v /= v.norm();
            cols.push_back(v);
            fb.reps.push_back(reps[k]);
        }
        fb.basis = cmat(d, cols.size());
        for(std::size_t c = 0; c < cols.size(); ++c) fb.basis.col(c) = cols[c];
        out.push_back(std::move(fb));
    }
    return out;
}

struct EigenLabel {
    int q, a, l;
};

struct BlockedEigensystem {
    rvec values;
    cmat vectors;
    std::vector<EigenLabel> labels;

    Propagator propagator() const {
        const int d = int(values.size()), n = qubit_count(d);
        std::vector<EigenBlock> blocks;
        for(int q = 0; q <= n; ++q) {
            EigenBlock b;
            for(int a = 0; a < d; ++a)
                if(zero_bits(a, n) == q) b.idx.push_back(a);
            std::vector<int> cols;
            for(int c = 0; c < d; ++c)
                if(labels[c].q == q) cols.push_back(c);
            const int m = int(b.idx.size());
            b.v = cmat(m, m);
            b.e = rvec(m);
            for(int j = 0; j < m; ++j) {
                b.e(j) = values(cols[j]);
                for(int i = 0; i < m; ++i) b.v(i, j) = vectors(b.idx[i], cols[j]);
            }
            blocks.push_back(std::move(b));
        }
        return Propagator(d, std::move(blocks));
    }
};

// Orthonormalizes projections of the label-ordered basis onto each degenerate cluster.
inline cmat canonical_degenerate_basis(const cmat &w, const rvec &e, double tol = 1e-9) {
    const int m = int(w.cols());
    cmat out = w;
    int s = 0;
    while(s < m) {
        int t = s + 1;
        while(t < m && std::abs(e(t) - e(s)) <= tol * std::max(1.0, std::abs(e(s)))) ++t;
        if(t - s > 1) {
            cmat wc = w.middleCols(s, t - s);
            cmat proj = wc * wc.adjoint();
            int got = 0;
            for(int k = 0; k < m && got < t - s; ++k) {
                cvec v = proj.col(k);
                for(int g = 0; g < got; ++g) v -= out.col(s + g).dot(v) * out.col(s + g);
                double nv = v.norm();
                if(nv < 1e-8) continue;
                out.col(s + got) = v / nv;
                ++got;
            }
        }
        s = t;
    }
    return out;
}

inline BlockedEigensystem blocked_eigensystem(const NetworkSpec &spec) {
    if(spec.topology != Topology::ring && spec.topology != Topology::complete)
        throw unsupported_error("blocked_eigensystem: ring or complete topology required");
    cmat h = build_hamiltonian(spec);
    const int n = spec.n, d = 1 << n;
    BlockedEigensystem es;
    es.values = rvec(d);
    es.vectors = cmat(d, d);
    int col = 0;
    for(int q = 0; q <= n; ++q) {
        for(const auto &fb : fourier_blocks(n, q)) {
            const int m = int(fb.basis.cols());
            if(!m) continue;
            cmat hb = fb.basis.adjoint() * h * fb.basis;
            Eigen::SelfAdjointEigenSolver<cmat> sol(hb);
            cmat w = canonical_degenerate_basis(sol.eigenvectors(), sol.eigenvalues());
            cmat v = fb.basis * w;
            for(int l = 0; l < m; ++l) {
                es.values(col) = sol.eigenvalues()(l);
                es.vectors.col(col) = v.col(l);
                es.labels.push_back({q, fb.a, l});
                ++col;
            }
        }
    }
    return es;
}

// Default propagator for a spec: per-charge-sector dense eigensolves.
inline Propagator propagator_of(const NetworkSpec &spec) { return Propagator::charge_blocked(build_hamiltonian(spec)); }

inline nlohmann::json to_json(const NetworkSpec &s) {
    nlohmann::json j;
    j["topology"] = to_string(s.topology);
    j["n"] = s.n;
    j["h"] = s.h;
    j["j_perp"] = s.j_perp;
    j["j_par"] = s.j_par;
    nlohmann::json pairs = nlohmann::json::array();
    for(const auto &p : s.pairs) pairs.push_back({{"h1", p.h1}, {"h2", p.h2}, {"j", p.j}});
    j["pairs"] = pairs;
    j["quench"] = {{"n_cl", s.quench.n_cl}, {"t_i", s.quench.t_i}, {"h_i", s.quench.h_i}};
    return j;
}

namespace detail {
inline double num_field(const nlohmann::json &j, const std::string &key, const std::string &path) {
    if(!j.at(key).is_number()) throw config_error(path + "." + key + ": expected a number");
    return j.at(key).get<double>();
}
inline int int_field(const nlohmann::json &j, const std::string &key, const std::string &path) {
    if(!j.at(key).is_number_integer()) throw config_error(path + "." + key + ": expected an integer");
    return j.at(key).get<int>();
}
inline std::vector<double> num_list(const nlohmann::json &j, const std::string &path) {
    if(!j.is_array()) throw config_error(path + ": expected an array of numbers");
    std::vector<double> v;
    for(std::size_t i = 0; i < j.size(); ++i) {
        if(!j[i].is_number()) throw config_error(path + "[" + std::to_string(i) + "]: expected a number");
        v.push_back(j[i].get<double>());
    }
    return v;
}
} // namespace detail

inline NetworkSpec network_from_json(const nlohmann::json &j, const std::string &path = "network") {
    if(!j.is_object()) throw config_error(path + ": expected an object");
    NetworkSpec s;
    for(auto it = j.begin(); it != j.end(); ++it) {
        const std::string &k = it.key();
        if(k == "topology") {
            if(!it->is_string()) throw config_error(path + ".topology: expected a string");
            s.topology = topology_from_string(it->get<std::string>());
        } else if(k == "n") s.n = detail::int_field(j, k, path);
        else if(k == "h") s.h = detail::num_field(j, k, path);
        else if(k == "j_perp") s.j_perp = detail::num_field(j, k, path);
        else if(k == "j_par") s.j_par = detail::num_field(j, k, path);
        else if(k == "pairs") {
            if(!it->is_array()) throw config_error(path + ".pairs: expected an array");
            for(std::size_t i = 0; i < it->size(); ++i) {
                const auto &p = (*it)[i];
                std::string pp = path + ".pairs[" + std::to_string(i) + "]";
                if(!p.is_object()) throw config_error(pp + ": expected an object");
                PairCoupling c;
                for(auto f = p.begin(); f != p.end(); ++f) {
                    if(f.key() == "h1") c.h1 = detail::num_field(p, "h1", pp);
                    else if(f.key() == "h2") c.h2 = detail::num_field(p, "h2", pp);
                    else if(f.key() == "j") c.j = detail::num_field(p, "j", pp);
                    else throw config_error(pp + "." + f.key() + ": unknown key");
                }
                s.pairs.push_back(c);
            }
        } else if(k == "quench") {
            const auto &q = *it;
            std::string qp = path + ".quench";
            if(!q.is_object()) throw config_error(qp + ": expected an object");
            for(auto f = q.begin(); f != q.end(); ++f) {
                if(f.key() == "n_cl") s.quench.n_cl = detail::int_field(q, "n_cl", qp);
                else if(f.key() == "t_i") s.quench.t_i = detail::num_list(*f, qp + ".t_i");
                else if(f.key() == "h_i") s.quench.h_i = detail::num_list(*f, qp + ".h_i");
                else throw config_error(qp + "." + f.key() + ": unknown key");
            }
        } else throw config_error(path + "." + k + ": unknown key");
    }
    validate(s);
    return s;
}

} // namespace pcnet
