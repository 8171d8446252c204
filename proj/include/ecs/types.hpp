#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace ecs {

using Complex = std::complex<double>;

// Integer vector n = (n_1, ..., n_N) on the lattice Z^N.
using LatticeVector = std::vector<int>;

// Relative lattice vector m - n; always has zero component sum in this code.
using RelVec = std::vector<int>;

// Compensated (Kahan-Neumaier) accumulator for long series sums.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline int component_sum(const RelVec& v) {
    int s = 0;
    for (int x : v) s += x;
    return s;
}

inline int max_abs_component(const RelVec& v) {
    int m = 0;
    for (int x : v) m = std::max(m, std::abs(x));
    return m;
}

inline RelVec relative(const LatticeVector& m, const LatticeVector& n) {
    RelVec r(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) r[j] = m[j] - n[j];
    return r;
}

inline LatticeVector shifted(const LatticeVector& n, const RelVec& r) {
    LatticeVector m(n.size());
    for (std::size_t j = 0; j < n.size(); ++j) m[j] = n[j] + r[j];
    return m;
}

// True when n_1 >= n_2 >= ... >= n_N >= 0.
inline bool is_partition(const LatticeVector& n) {
    for (std::size_t j = 0; j + 1 < n.size(); ++j)
        if (n[j] < n[j + 1]) return false;
    return n.empty() || n.back() >= 0;
}

}  // namespace ecs
