#include "lyap/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lyap {

namespace {
constexpr double kPositiveEntry = 1e-12;
}

FeasibilityResult grow_tree(const TransitionFamily& family) {
    const int n = family.n_cells;
    const int m = family.n_actions();
    const int macro = n - 1;

    FeasibilityResult res;
    res.assignment.assign(n - 1, -1);
    std::vector<char> layered(n, 0);
    layered[macro] = 1;
    res.layers.push_back({macro});

    while (true) {
        std::vector<int> next;
        const std::vector<int>& prev = res.layers.back();
        std::vector<char> in_prev(n, 0);
        for (int j : prev) in_prev[j] = 1;
        for (int i = 0; i < n - 1; ++i) {
            if (layered[i]) continue;
            int chosen = -1;
            for (int a = 0; a < m && chosen < 0; ++a) {
                const CsrMatrix& p = family.full[a];
                for (int k = p.row_ptr[i]; k < p.row_ptr[i + 1]; ++k) {
                    if (p.vals[k] > kPositiveEntry && in_prev[p.col_idx[k]]) {
                        chosen = a;
                        break;
                    }
                }
            }
            if (chosen >= 0) {
                res.assignment[i] = chosen;
                next.push_back(i);
            }
        }
        for (int i : next) layered[i] = 1;
        if (next.empty()) break;
        res.layers.push_back(std::move(next));
    }

    for (int i = 0; i < n - 1; ++i) {
        if (!layered[i]) res.unstabilizable.push_back(i);
    }
    res.status = res.unstabilizable.empty() ? FeasibilityStatus::stabilizable
                                            : FeasibilityStatus::partially_stabilizable;
    return res;
}

CsrMatrix closed_loop_from_assignment(const TransitionFamily& family,
                                      const std::vector<int>& assignment) {
    const int n_sub = family.n_cells - 1;
    if (int(assignment.size()) != n_sub) {
        throw std::invalid_argument("closed_loop_from_assignment: assignment size mismatch");
    }
    std::vector<std::vector<std::pair<int, double>>> rows(n_sub);
    for (int i = 0; i < n_sub; ++i) {
        const int a = assignment[i];
        if (a < 0) continue;  // unassigned cells keep an all-zero row
        const CsrMatrix& p = family.sub[a];
        for (int k = p.row_ptr[i]; k < p.row_ptr[i + 1]; ++k) {
            rows[i].emplace_back(p.col_idx[k], p.vals[k]);
        }
    }
    return CsrMatrix::from_rows(n_sub, rows);
}

TransienceReport transience_certificate(const TransitionFamily& family,
                                        const FeasibilityResult& result, int horizon) {
    if (!result.stabilizable()) {
        throw std::invalid_argument("transience_certificate: result is not stabilizable");
    }
    const int n_sub = family.n_cells - 1;
    const CsrMatrix loop = closed_loop_from_assignment(family, result.assignment);

    TransienceReport rep;
    rep.lmax = std::max(1, result.lmax());
    rep.horizon = horizon > 0 ? horizon : int(std::ceil(200.0 / rep.lmax));

    // ||P^k||_inf tracked through the row-sum vector P^k 1.
    Vec ones(n_sub, 1.0), tmp(n_sub);
    Vec rowsum = ones;
    rep.norms.reserve(rep.horizon);
    rep.strictly_decreasing = true;
    double prev = norm_inf(rowsum);
    for (int k = 0; k < rep.horizon; ++k) {
        for (int step = 0; step < rep.lmax; ++step) {
            csr_matvec(loop, rowsum, tmp);
            rowsum.swap(tmp);
        }
        const double nk = norm_inf(rowsum);
        rep.norms.push_back(nk);
        if (!(nk < prev) && prev > 0.0) rep.strictly_decreasing = false;
        prev = nk;
        if (nk == 0.0) break;  // nilpotent: later powers stay zero
    }
    rep.final_norm = rep.norms.empty() ? 1.0 : rep.norms.back();

    Vec mu0(n_sub, 1.0 / std::max(1, n_sub));
    rep.mass_before = norm_one(mu0);
    Vec v = mu0;
    for (int step = 0; step < rep.lmax; ++step) {
        csr_matvec(loop, v, tmp);
        v.swap(tmp);
    }
    rep.mass_after = norm_one(v);
    rep.mass_decreased = rep.mass_after < rep.mass_before;
    return rep;
}

std::string feasibility_report(const FeasibilityResult& result) {
    std::ostringstream out;
    out << "status "
        << (result.stabilizable() ? "stabilizable" : "partially_stabilizable") << '\n';
    out << "lmax " << result.lmax() << '\n';
    out << "layers " << result.layers.size() << '\n';
    for (std::size_t l = 0; l < result.layers.size(); ++l) {
        out << "layer " << l << ':';
        for (int c : result.layers[l]) out << ' ' << c + 1;
        out << '\n';
    }
    out << "assignment (cell action):\n";
    for (std::size_t i = 0; i < result.assignment.size(); ++i) {
        if (result.assignment[i] >= 0) {
            out << "  " << i + 1 << ' ' << result.assignment[i] + 1 << '\n';
        }
    }
    out << "unstabilizable:";
    if (result.unstabilizable.empty()) {
        out << " (none)\n";
    } else {
        for (int c : result.unstabilizable) out << ' ' << c + 1;
        out << '\n';
    }
    return out.str();
}

} // namespace lyap
