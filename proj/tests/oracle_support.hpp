// Test-only oracles, deliberately independent of the library's solver and
// power-iteration code paths: spectral radii come from repeated squaring
// (Gelfand's formula) and linear solves from a local Gaussian elimination.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline double max_row_sum(const Mat& a) {
    double m = 0.0;
    for (const auto& row : a) {
        double s = 0.0;
        for (double v : row) s += std::abs(v);
        m = std::max(m, s);
    }
    return m;
}

inline Mat mat_mul(const Mat& a, const Mat& b) {
    const std::size_t n = a.size();
    Mat c(n, Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a[i][k];
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) c[i][j] += aik * b[k][j];
        }
    }
    return c;
}

// rho(A) ~ ||A^(2^T)||^(1/2^T) via repeated squaring with norm scaling.
inline double spectral_radius(Mat a, int squarings = 40) {
    if (a.empty()) return 0.0;
    double log_rho = 0.0;
    double weight = 1.0;
    for (int t = 0; t < squarings; ++t) {
        const double s = max_row_sum(a);
        if (s == 0.0) return 0.0;  // nilpotent along the way
        for (auto& row : a) {
            for (double& v : row) v /= s;
        }
        log_rho += weight * std::log(s);
        a = mat_mul(a, a);
        weight *= 0.5;
    }
    log_rho += weight * std::log(std::max(max_row_sum(a), 1e-300));
    return std::exp(log_rho);
}

// Plain Gaussian elimination with partial pivoting; throws on singularity.
inline Vec solve_dense(Mat a, Vec b) {
    const std::size_t n = a.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        }
        if (a[piv][c] == 0.0) throw std::runtime_error("oracle solve: singular matrix");
        std::swap(a[piv], a[c]);
        std::swap(b[piv], b[c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            if (f == 0.0) continue;
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    Vec x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

// Cost of a fixed deterministic policy: (G^u)' (I - gamma (P_u)')^{-1} m,
// where row j of P_u is row j of the chosen action's sub-matrix.
// Returns infinity when gamma * rho(P_u) >= 1 (non-stabilizing policy).
struct PolicyCost {
    bool admissible = false;
    double cost = 0.0;
    double rho = 0.0;
};

inline PolicyCost policy_cost(const std::vector<Mat>& sub, const std::vector<Vec>& cost,
                              const Vec& m, double gamma, const std::vector<int>& choice) {
    const std::size_t ns = m.size();
    Mat pu(ns, Vec(ns, 0.0));
    Vec gu(ns, 0.0);
    for (std::size_t j = 0; j < ns; ++j) {
        pu[j] = sub[std::size_t(choice[j])][j];
        gu[j] = cost[std::size_t(choice[j])][j];
    }
    PolicyCost pc;
    pc.rho = spectral_radius(pu);
    if (!(gamma * pc.rho < 1.0 - 1e-9)) return pc;
    // Solve (I - gamma P_u') mu = m.
    Mat sys(ns, Vec(ns, 0.0));
    for (std::size_t i = 0; i < ns; ++i) {
        for (std::size_t j = 0; j < ns; ++j) sys[i][j] = (i == j ? 1.0 : 0.0) - gamma * pu[j][i];
    }
    const Vec mu = solve_dense(sys, m);
    pc.admissible = true;
    pc.cost = 0.0;
    for (std::size_t j = 0; j < ns; ++j) pc.cost += gu[j] * mu[j];
    return pc;
}

// Exhaustive enumeration of the M^(N-1) deterministic policies.
struct BruteForceResult {
    bool any_admissible = false;
    double best_cost = 0.0;
    std::vector<int> best_choice;
};

inline BruteForceResult enumerate_policies(const std::vector<Mat>& sub,
                                           const std::vector<Vec>& cost, const Vec& m,
                                           double gamma) {
    const std::size_t ns = m.size();
    const std::size_t na = sub.size();
    BruteForceResult best;
    std::vector<int> choice(ns, 0);
    while (true) {
        const PolicyCost pc = policy_cost(sub, cost, m, gamma, choice);
        if (pc.admissible && (!best.any_admissible || pc.cost < best.best_cost)) {
            best.any_admissible = true;
            best.best_cost = pc.cost;
            best.best_choice = choice;
        }
        std::size_t d = 0;
        while (d < ns && ++choice[d] == int(na)) {
            choice[d] = 0;
            ++d;
        }
        if (d == ns) break;
    }
    return best;
}

// Deterministic pseudo-random stream for instance generation.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double unit() { return double(next() >> 11) * 0x1.0p-53; }
    int uniform_int(int lo, int hi) { return lo + int(next() % std::uint64_t(hi - lo + 1)); }
};

} // namespace oracle
