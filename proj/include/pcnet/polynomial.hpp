#pragma once

#include <boost/rational.hpp>

#include <stdexcept>
#include <vector>

namespace pcnet {

using Rational = boost::rational<long long>;

inline double to_double(const Rational &r) { return double(r.numerator()) / double(r.denominator()); }

// All e_0..e_n via e_k <- e_k + z e_{k-1}, sweeping k downward per site.
inline std::vector<double> esym_all(const std::vector<double> &z) {
    std::vector<double> e(z.size() + 1, 0.0);
    e[0] = 1;
    for(std::size_t i = 0; i < z.size(); ++i)
        for(std::size_t k = i + 1; k >= 1; --k) e[k] += z[i] * e[k - 1];
    return e;
}

inline double esym(const std::vector<double> &z, int k) {
    if(k < 0 || k > int(z.size())) throw std::out_of_range("esym: k out of range");
    return esym_all(z)[k];
}

inline std::vector<Rational> esym_all(const std::vector<Rational> &z) {
    std::vector<Rational> e(z.size() + 1, Rational(0));
    e[0] = 1;
    for(std::size_t i = 0; i < z.size(); ++i)
        for(std::size_t k = i + 1; k >= 1; --k) e[k] += z[i] * e[k - 1];
    return e;
}

inline long long binom_ll(int n, int k) {
    if(k < 0 || k > n) return 0;
    long long r = 1;
    for(int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

} // namespace pcnet
