#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lyap/partition.hpp"
#include "lyap/systems.hpp"

namespace lyap {

enum class SamplingMode {
    stratified_grid,
    seeded_random,
};

/// Per-action transition matrices of the discretized transfer operator.
/// full[a] is the N x N row-stochastic matrix with the attractor macro-cell
/// forced absorbing; sub[a] is its leading (N-1) x (N-1) restriction.
struct TransitionFamily {
    int n_cells = 0;  // N
    std::vector<CsrMatrix> full;
    std::vector<CsrMatrix> sub;
    int samples_per_cell = 0;  // 0 when not produced by sampling
    SamplingMode mode = SamplingMode::stratified_grid;
    std::uint64_t seed = 0;

    int n_actions() const { return int(full.size()); }
};

/// Estimates transition fractions by pushing samples_per_cell points from
/// each non-attractor cell through T(., u^a) and counting arrival cells.
/// Stratified mode places a deterministic sub-grid of sub-cell centers;
/// seeded_random draws uniform points with a per-(action, cell) stream so
/// the result is independent of scheduling.
TransitionFamily build_transition_family(const SystemDef& system, const Partition& partition,
                                         const ControlGrid& grid, int samples_per_cell,
                                         SamplingMode mode = SamplingMode::stratified_grid,
                                         std::uint64_t seed = 0, Exec exec = Exec::parallel);

/// Wraps validated explicit matrices as a family (row N forced absorbing).
TransitionFamily family_from_explicit(const ExplicitSystem& system);

/// Checks row-stochasticity (1e-9), entry range, restriction consistency and
/// the absorbing attractor row; throws std::invalid_argument on violation.
void validate_family(const TransitionFamily& family);

/// Stratified sample positions for one cell: the smallest k with k^q >=
/// samples_per_cell gives a k^q sub-grid of sub-cell centers, truncated to
/// samples_per_cell points in lexicographic order.
std::vector<Vec> stratified_points(const Vec& lower, const Vec& width, int samples_per_cell);

/// Sparse triplet text export: header "N M nnz" then one line "a i j value"
/// per nonzero of the full matrices, all indices 1-based. Values are printed
/// with enough digits to round-trip bit-exactly.
std::string export_triplets(const TransitionFamily& family);
TransitionFamily import_triplets(const std::string& text);

void write_triplets(const std::filesystem::path& path, const TransitionFamily& family);
TransitionFamily read_triplets(const std::filesystem::path& path);

} // namespace lyap
