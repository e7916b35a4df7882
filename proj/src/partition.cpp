#include "lyap/partition.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace lyap {

Partition::Partition(StateBox box, std::vector<int> cells_per_dim,
                     std::vector<std::int64_t> attractor_raw)
    : box_(std::move(box)), cells_per_dim_(std::move(cells_per_dim)),
      attractor_raw_(std::move(attractor_raw)) {
    box_.validate();
    if (int(cells_per_dim_.size()) != box_.dimension()) {
        throw std::invalid_argument("Partition: cells_per_dim dimension mismatch");
    }
    std::int64_t total = 1;
    for (int c : cells_per_dim_) {
        if (c < 1) throw std::invalid_argument("Partition: cells_per_dim entries must be >= 1");
        total *= c;
    }
    if (attractor_raw_.empty()) {
        throw std::invalid_argument("Partition: attractor cell set must be nonempty");
    }
    std::sort(attractor_raw_.begin(), attractor_raw_.end());
    attractor_raw_.erase(std::unique(attractor_raw_.begin(), attractor_raw_.end()),
                         attractor_raw_.end());
    for (std::int64_t r : attractor_raw_) {
        if (r < 0 || r >= total) throw std::invalid_argument("Partition: attractor index range");
    }
    n_ = int(total - std::int64_t(attractor_raw_.size()) + 1);
    raw_to_final_.assign(std::size_t(total), -1);
    for (std::int64_t r : attractor_raw_) raw_to_final_[std::size_t(r)] = n_ - 1;
    final_to_raw_.reserve(std::size_t(n_) - 1);
    int next = 0;
    for (std::int64_t r = 0; r < total; ++r) {
        if (raw_to_final_[std::size_t(r)] == -1) {
            raw_to_final_[std::size_t(r)] = next++;
            final_to_raw_.push_back(r);
        }
    }
}

std::int64_t Partition::raw_cell_of(const Vec& folded) const {
    std::int64_t raw = 0;
    for (int d = 0; d < dimension(); ++d) {
        const double w = (box_.upper[d] - box_.lower[d]) / cells_per_dim_[d];
        int idx = int(std::floor((folded[d] - box_.lower[d]) / w));
        if (idx >= cells_per_dim_[d]) idx = cells_per_dim_[d] - 1;
        if (idx < 0) idx = 0;
        raw = raw * cells_per_dim_[d] + idx;
    }
    return raw;
}

int Partition::cell_of(const Vec& x) const {
    const Vec xf = box_.fold(x);
    if (!box_.contains(xf)) {
        throw std::domain_error("cell_of: point outside box on a non-wrapped dimension");
    }
    return raw_to_final_[std::size_t(raw_cell_of(xf))];
}

std::vector<double> Partition::raw_lower(std::int64_t raw) const {
    Vec lo(dimension());
    for (int d = dimension() - 1; d >= 0; --d) {
        const std::int64_t idx = raw % cells_per_dim_[d];
        raw /= cells_per_dim_[d];
        const double w = (box_.upper[d] - box_.lower[d]) / cells_per_dim_[d];
        lo[d] = box_.lower[d] + double(idx) * w;
    }
    return lo;
}

Vec Partition::cell_center(int cell) const {
    Vec lo = cell_lower(cell);
    const Vec w = cell_width();
    for (int d = 0; d < dimension(); ++d) lo[d] += 0.5 * w[d];
    return lo;
}

Vec Partition::cell_lower(int cell) const {
    if (cell < 0 || cell >= n_ - 1) {
        throw std::invalid_argument("cell_lower: geometry exists only for non-attractor cells");
    }
    return raw_lower(final_to_raw_[cell]);
}

Vec Partition::cell_width() const {
    Vec w(dimension());
    for (int d = 0; d < dimension(); ++d) {
        w[d] = (box_.upper[d] - box_.lower[d]) / cells_per_dim_[d];
    }
    return w;
}

double Partition::cell_volume() const {
    double v = 1.0;
    for (double w : cell_width()) v *= w;
    return v;
}

Partition build_partition(const StateBox& box, const std::vector<int>& cells_per_dim,
                          const std::vector<Vec>& attractor_points) {
    box.validate();
    if (attractor_points.empty()) {
        throw std::invalid_argument("build_partition: need at least one attractor point");
    }
    // Resolve attractor cells through a throwaway partition with a dummy
    // attractor so cell_of's folding and domain checks apply uniformly.
    Partition probe(box, cells_per_dim, {0});
    std::set<std::int64_t> raw;
    for (const Vec& p : attractor_points) {
        if (int(p.size()) != box.dimension()) {
            throw std::invalid_argument("build_partition: attractor point dimension mismatch");
        }
        const Vec pf = box.fold(p);
        if (!box.contains(pf)) {
            throw std::domain_error("build_partition: attractor point outside box");
        }
        std::int64_t r = 0;
        for (int d = 0; d < box.dimension(); ++d) {
            const double w = (box.upper[d] - box.lower[d]) / cells_per_dim[d];
            int idx = int(std::floor((pf[d] - box.lower[d]) / w));
            if (idx >= cells_per_dim[d]) idx = cells_per_dim[d] - 1;
            if (idx < 0) idx = 0;
            r = r * cells_per_dim[d] + idx;
        }
        raw.insert(r);
    }
    return Partition(box, cells_per_dim, {raw.begin(), raw.end()});
}

Vec lebesgue_vector(const Partition& partition) {
    return Vec(std::size_t(partition.n_cells()) - 1, partition.cell_volume());
}

void ControlGrid::validate() const {
    if (values.empty()) throw std::invalid_argument("ControlGrid: need at least one value");
    const std::size_t d = values.front().size();
    for (std::size_t a = 0; a < values.size(); ++a) {
        if (values[a].size() != d) {
            throw std::invalid_argument("ControlGrid: inconsistent control dimension");
        }
        for (std::size_t b = a + 1; b < values.size(); ++b) {
            if (values[a] == values[b]) {
                throw std::invalid_argument("ControlGrid: values must be distinct");
            }
        }
    }
}

ControlGrid control_grid_from_range(double lo, double step, double hi) {
    if (!(step > 0.0) || !(hi >= lo)) {
        throw std::invalid_argument("control_grid_from_range: need step > 0 and hi >= lo");
    }
    ControlGrid grid;
    const double span = hi - lo;
    const double ratio = span / step;
    const long n = std::lround(ratio);
    if (std::abs(ratio - double(n)) <= 1e-9 * std::max(1.0, ratio)) {
        // Step divides the span: interpolate so the endpoints and midpoints
        // come out exact (e.g. -0.5:0.05:0.5 contains 0 exactly).
        for (long k = 0; k <= n; ++k) {
            grid.values.push_back(Vec{n == 0 ? lo : lo + span * (double(k) / double(n))});
        }
    } else {
        for (long k = 0;; ++k) {
            const double v = lo + double(k) * step;
            if (v > hi + 1e-9 * step) break;
            grid.values.push_back(Vec{v});
        }
    }
    grid.validate();
    return grid;
}

} // namespace lyap
