#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcnet {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rmat = Eigen::MatrixXd;
using rvec = Eigen::VectorXd;

// Pauli-basis transfer matrix, rows/columns ordered (0, x, y, z).
using TransferMatrix = Eigen::Matrix4d;

inline constexpr double pi = std::numbers::pi;

// Error categories map onto CLI exit codes 2, 3 and 4.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct invariant_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct unsupported_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Bloch {
    double x = 0, y = 0, z = 0;
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

using ProductState = std::vector<Bloch>;

inline ProductState diagonal_state(const std::vector<double> &z) {
    ProductState s;
    s.reserve(z.size());
    for(double v : z) s.push_back({0, 0, v});
    return s;
}

inline bool is_diagonal(const ProductState &s) {
    for(const auto &b : s)
        if(b.x != 0.0 || b.y != 0.0) return false;
    return true;
}

inline void check_state(const ProductState &s) {
    for(std::size_t i = 0; i < s.size(); ++i)
        if(s[i].norm() > 1.0 + 1e-12)
            throw std::invalid_argument("Bloch vector of site " + std::to_string(i) + " has norm > 1");
}

// Dynamical timescale t_J = 2 pi / J_perp.
inline double t_J(double j_perp) { return 2.0 * pi / std::abs(j_perp); }

inline int sgn_plus(double v) { return v < 0 ? -1 : 1; }

inline double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * pi);
    if(a <= -pi) a += 2.0 * pi;
    return a;
}

inline double binom(int n, int k) {
    if(k < 0 || k > n) return 0.0;
    double r = 1.0;
    for(int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

} // namespace pcnet
