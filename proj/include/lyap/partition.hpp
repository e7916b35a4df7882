#pragma once

#include <cstdint>
#include <vector>

#include "lyap/systems.hpp"

namespace lyap {

/// Uniform rectangular partition of a state box with the attractor cells
/// lumped into one absorbing macro-cell.
///
/// Cell indices are 0-based in the API: non-attractor cells are numbered
/// 0..n_cells()-2 in lexicographic grid order and the attractor macro-cell is
/// the last index, n_cells()-1. File formats write 1-based indices.
class Partition {
  public:
    Partition() = default;
    Partition(StateBox box, std::vector<int> cells_per_dim,
              std::vector<std::int64_t> attractor_raw);

    const StateBox& box() const { return box_; }
    const std::vector<int>& cells_per_dim() const { return cells_per_dim_; }
    int dimension() const { return int(cells_per_dim_.size()); }

    /// Total cell count after lumping; the N in the triplet file header.
    int n_cells() const { return n_; }
    int macro_cell() const { return n_ - 1; }
    int attractor_cell_count() const { return int(attractor_raw_.size()); }
    const std::vector<std::int64_t>& attractor_raw_cells() const { return attractor_raw_; }

    /// Cell membership after folding. Attractor cells all map to macro_cell().
    /// Throws std::domain_error for points outside a non-wrapped dimension.
    int cell_of(const Vec& x) const;

    /// Geometry of a non-attractor cell (by final index).
    Vec cell_center(int cell) const;
    Vec cell_lower(int cell) const;
    Vec cell_width() const;
    double cell_volume() const;

    std::int64_t raw_index_of(int cell) const { return final_to_raw_[cell]; }

  private:
    std::int64_t raw_cell_of(const Vec& folded) const;
    std::vector<double> raw_lower(std::int64_t raw) const;

    StateBox box_;
    std::vector<int> cells_per_dim_;
    std::vector<std::int64_t> attractor_raw_;       // sorted raw indices
    std::vector<int> raw_to_final_;                 // size = product(cells_per_dim)
    std::vector<std::int64_t> final_to_raw_;        // size = n_ - 1
    int n_ = 0;
};

/// Builds the partition and lumps the cells containing the attractor points.
/// Attractor points must lie inside the box (folded on wrapped dimensions).
Partition build_partition(const StateBox& box, const std::vector<int>& cells_per_dim,
                          const std::vector<Vec>& attractor_points);

/// m_j = volume of cell D_j for the N-1 non-attractor cells.
Vec lebesgue_vector(const Partition& partition);

/// Finite quantized control set; the index order is the action order.
struct ControlGrid {
    std::vector<Vec> values;

    int size() const { return int(values.size()); }
    void validate() const;
};

/// Expands the range notation lo:step:hi (inclusive of hi to within a
/// half-step tolerance) into scalar control values.
ControlGrid control_grid_from_range(double lo, double step, double hi);

} // namespace lyap
