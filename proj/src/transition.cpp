#include "lyap/transition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lyap/text_io.hpp"

namespace lyap {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// xorshift-free uniform in [0,1) from the top 53 bits; avoids
// std::uniform_real_distribution so streams are identical across platforms.
struct SampleRng {
    std::uint64_t state;
    explicit SampleRng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next_u64() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }
};

int subgrid_side(int samples_per_cell, int q) {
    int k = 1;
    while (true) {
        std::int64_t p = 1;
        for (int d = 0; d < q; ++d) p *= k;
        if (p >= samples_per_cell) return k;
        ++k;
    }
}

std::vector<std::pair<int, double>> row_from_counts(const std::map<int, int>& counts,
                                                    int samples) {
    std::vector<std::pair<int, double>> row;
    row.reserve(counts.size());
    for (const auto& [cell, count] : counts) {
        row.emplace_back(cell, double(count) / double(samples));
    }
    return row;
}

} // namespace

std::vector<Vec> stratified_points(const Vec& lower, const Vec& width, int samples_per_cell) {
    const int q = int(lower.size());
    const int k = subgrid_side(samples_per_cell, q);
    std::vector<Vec> pts;
    pts.reserve(samples_per_cell);
    std::vector<int> idx(q, 0);
    while (int(pts.size()) < samples_per_cell) {
        Vec p(q);
        for (int d = 0; d < q; ++d) {
            p[d] = lower[d] + width[d] * ((idx[d] + 0.5) / double(k));
        }
        pts.push_back(std::move(p));
        // lexicographic advance, last dimension fastest
        int d = q - 1;
        while (d >= 0 && ++idx[d] == k) {
            idx[d] = 0;
            --d;
        }
        if (d < 0) break;
    }
    return pts;
}

TransitionFamily build_transition_family(const SystemDef& system, const Partition& partition,
                                         const ControlGrid& grid, int samples_per_cell,
                                         SamplingMode mode, std::uint64_t seed, Exec exec) {
    grid.validate();
    if (samples_per_cell < 1) {
        throw std::invalid_argument("build_transition_family: samples_per_cell must be >= 1");
    }
    const int n = partition.n_cells();
    const int m = grid.size();
    const int n_sub = n - 1;
    const Vec width = partition.cell_width();

    // One row per (action, cell) pair, filled independently.
    std::vector<std::vector<std::pair<int, double>>> rows(std::size_t(m) * n_sub);

    auto fill_row = [&](int a, int i) {
        std::vector<Vec> pts;
        if (mode == SamplingMode::stratified_grid) {
            pts = stratified_points(partition.cell_lower(i), width, samples_per_cell);
        } else {
            SampleRng rng(splitmix64(seed ^ splitmix64(std::uint64_t(a) * 0x51ed2701ULL +
                                                       std::uint64_t(i))));
            const Vec lo = partition.cell_lower(i);
            pts.reserve(samples_per_cell);
            for (int s = 0; s < samples_per_cell; ++s) {
                Vec p(width.size());
                for (std::size_t d = 0; d < width.size(); ++d) {
                    p[d] = lo[d] + rng.next_unit() * width[d];
                }
                pts.push_back(std::move(p));
            }
        }
        std::map<int, int> counts;
        for (const Vec& p : pts) {
            const Vec image = evaluate(system, p, grid.values[a]);
            counts[partition.cell_of(image)]++;
        }
        rows[std::size_t(a) * n_sub + i] = row_from_counts(counts, samples_per_cell);
    };

    const std::int64_t work = std::int64_t(m) * n_sub;
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 64)
        for (std::int64_t w = 0; w < work; ++w) fill_row(int(w / n_sub), int(w % n_sub));
    } else {
        for (std::int64_t w = 0; w < work; ++w) fill_row(int(w / n_sub), int(w % n_sub));
    }

    TransitionFamily family;
    family.n_cells = n;
    family.samples_per_cell = samples_per_cell;
    family.mode = mode;
    family.seed = seed;
    family.full.reserve(m);
    family.sub.reserve(m);
    for (int a = 0; a < m; ++a) {
        std::vector<std::vector<std::pair<int, double>>> full_rows(n);
        std::vector<std::vector<std::pair<int, double>>> sub_rows(n_sub);
        for (int i = 0; i < n_sub; ++i) {
            full_rows[i] = rows[std::size_t(a) * n_sub + i];
            for (const auto& [j, v] : full_rows[i]) {
                if (j < n_sub) sub_rows[i].emplace_back(j, v);
            }
        }
        full_rows[n - 1] = {{n - 1, 1.0}};  // attractor macro-cell absorbs
        family.full.push_back(CsrMatrix::from_rows(n, full_rows));
        family.sub.push_back(CsrMatrix::from_rows(n_sub, sub_rows));
    }
    return family;
}

TransitionFamily family_from_explicit(const ExplicitSystem& system) {
    TransitionFamily family;
    family.n_cells = system.n_cells;
    const int n = system.n_cells;
    for (const CsrMatrix& m : system.matrices) {
        std::vector<std::vector<std::pair<int, double>>> full_rows(n);
        std::vector<std::vector<std::pair<int, double>>> sub_rows(n - 1);
        for (int i = 0; i < n - 1; ++i) {
            for (int k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
                full_rows[i].emplace_back(m.col_idx[k], m.vals[k]);
                if (m.col_idx[k] < n - 1) sub_rows[i].emplace_back(m.col_idx[k], m.vals[k]);
            }
        }
        full_rows[n - 1] = {{n - 1, 1.0}};
        family.full.push_back(CsrMatrix::from_rows(n, full_rows));
        family.sub.push_back(CsrMatrix::from_rows(n - 1, sub_rows));
    }
    return family;
}

void validate_family(const TransitionFamily& family) {
    const int n = family.n_cells;
    if (family.full.empty() || family.full.size() != family.sub.size()) {
        throw std::invalid_argument("TransitionFamily: full/sub action counts differ");
    }
    for (std::size_t a = 0; a < family.full.size(); ++a) {
        const CsrMatrix& f = family.full[a];
        const CsrMatrix& s = family.sub[a];
        if (f.rows != n || f.cols != n || s.rows != n - 1 || s.cols != n - 1) {
            throw std::invalid_argument("TransitionFamily: matrix shape mismatch");
        }
        for (int i = 0; i < n; ++i) {
            if (std::abs(f.row_sum(i) - 1.0) > 1e-9) {
                throw std::invalid_argument("TransitionFamily: row " + std::to_string(i + 1) +
                                            " of action " + std::to_string(a + 1) +
                                            " is not stochastic");
            }
        }
        for (double v : f.vals) {
            if (v < 0.0 || v > 1.0) {
                throw std::invalid_argument("TransitionFamily: entry outside [0,1]");
            }
        }
        if (f.row_ptr[n] - f.row_ptr[n - 1] != 1 || f.col_idx[f.row_ptr[n - 1]] != n - 1 ||
            f.vals[f.row_ptr[n - 1]] != 1.0) {
            throw std::invalid_argument("TransitionFamily: attractor row must be absorbing");
        }
        // Restriction must agree entry-for-entry with the leading block.
        for (int i = 0; i < n - 1; ++i) {
            int ks = s.row_ptr[i];
            for (int kf = f.row_ptr[i]; kf < f.row_ptr[i + 1]; ++kf) {
                if (f.col_idx[kf] >= n - 1) continue;
                if (ks >= s.row_ptr[i + 1] || s.col_idx[ks] != f.col_idx[kf] ||
                    s.vals[ks] != f.vals[kf]) {
                    throw std::invalid_argument("TransitionFamily: sub-matrix mismatch at row " +
                                                std::to_string(i + 1));
                }
                ++ks;
            }
            if (ks != s.row_ptr[i + 1]) {
                throw std::invalid_argument("TransitionFamily: sub-matrix has extra entries");
            }
        }
    }
}

std::string export_triplets(const TransitionFamily& family) {
    std::size_t nnz = 0;
    for (const CsrMatrix& m : family.full) nnz += m.nnz();
    std::ostringstream out;
    out << family.n_cells << ' ' << family.full.size() << ' ' << nnz << '\n';
    for (std::size_t a = 0; a < family.full.size(); ++a) {
        const CsrMatrix& m = family.full[a];
        for (int i = 0; i < m.rows; ++i) {
            for (int k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
                out << a + 1 << ' ' << i + 1 << ' ' << m.col_idx[k] + 1 << ' '
                    << fmt_double(m.vals[k]) << '\n';
            }
        }
    }
    return out.str();
}

TransitionFamily import_triplets(const std::string& text) {
    std::istringstream in(text);
    int n = 0;
    std::size_t m = 0, nnz = 0;
    if (!(in >> n >> m >> nnz)) {
        throw std::invalid_argument("import_triplets: bad header");
    }
    std::vector<std::vector<std::vector<std::pair<int, double>>>> rows(
        m, std::vector<std::vector<std::pair<int, double>>>(n));
    for (std::size_t k = 0; k < nnz; ++k) {
        std::size_t a;
        int i, j;
        std::string val;
        if (!(in >> a >> i >> j >> val)) {
            throw std::invalid_argument("import_triplets: truncated triplet list");
        }
        if (a < 1 || a > m || i < 1 || i > n || j < 1 || j > n) {
            throw std::invalid_argument("import_triplets: index out of range");
        }
        rows[a - 1][i - 1].emplace_back(j - 1, std::strtod(val.c_str(), nullptr));
    }
    TransitionFamily family;
    family.n_cells = n;
    for (std::size_t a = 0; a < m; ++a) {
        for (auto& r : rows[a]) std::sort(r.begin(), r.end());
        std::vector<std::vector<std::pair<int, double>>> sub_rows(n - 1);
        for (int i = 0; i < n - 1; ++i) {
            for (const auto& [j, v] : rows[a][i]) {
                if (j < n - 1) sub_rows[i].emplace_back(j, v);
            }
        }
        family.full.push_back(CsrMatrix::from_rows(n, rows[a]));
        family.sub.push_back(CsrMatrix::from_rows(n - 1, sub_rows));
    }
    return family;
}

void write_triplets(const std::filesystem::path& path, const TransitionFamily& family) {
    write_text_file(path, export_triplets(family));
}

TransitionFamily read_triplets(const std::filesystem::path& path) {
    return import_triplets(read_text_file(path));
}

} // namespace lyap
