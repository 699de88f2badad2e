#pragma once

#include <pcnet/core.hpp>

#include <random>

namespace pcnet::test {

inline cmat random_hermitian(int d, std::mt19937_64 &g) {
    std::normal_distribution<double> n;
    cmat a(d, d);
    for(int i = 0; i < d; ++i)
        for(int j = 0; j < d; ++j) a(i, j) = cplx(n(g), n(g));
    return 0.5 * (a + a.adjoint());
}

inline std::vector<double> random_z(int n, std::mt19937_64 &g) {
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> z(n);
    for(auto &v : z) v = u(g);
    return z;
}

inline Bloch random_bloch(std::mt19937_64 &g) {
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u(0, 1);
    Bloch b{n(g), n(g), n(g)};
    const double r = std::cbrt(u(g)) / b.norm();
    return {b.x * r, b.y * r, b.z * r};
}

} // namespace pcnet::test
