// Compares the serial reference kernels against the OpenMP paths and checks
// that both produce identical results on the way.
#include <chrono>
#include <cstdio>
#include <omp.h>

#include "lyap/lp.hpp"
#include "lyap/simulate.hpp"
#include "lyap/transition.hpp"

using namespace lyap;

namespace {

using clock_type = std::chrono::steady_clock;

template <typename F>
double time_of(F&& f) {
    const auto t0 = clock_type::now();
    f();
    const auto t1 = clock_type::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

void report(const char* name, double serial, double parallel, bool identical) {
    std::printf("%-28s %10.3fs %10.3fs %8.2fx   %s\n", name, serial, parallel,
                serial / parallel, identical ? "identical" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    int cells = 40;
    int samples = 10;
    int actions = 21;
    if (argc > 1) cells = std::atoi(argv[1]);
    if (argc > 2) samples = std::atoi(argv[2]);
    if (argc > 3) actions = std::atoi(argv[3]);
    std::printf("threads: %d, grid: %dx%d, samples/cell: %d, actions: %d\n",
                omp_get_max_threads(), cells, cells, samples, actions);
    std::printf("%-28s %11s %11s %9s\n", "kernel", "serial", "openmp", "speedup");

    const SystemDef sys = standard_map({0.25});
    const Partition part = build_partition(sys.state_box, {cells, cells},
                                           {{0.25, 0.5}, {0.75, 0.5}});
    const ControlGrid grid = control_grid_from_range(-0.5, 1.0 / (actions - 1), 0.5);

    TransitionFamily fam_serial, fam_parallel;
    const double t_build_s = time_of([&] {
        fam_serial = build_transition_family(sys, part, grid, samples,
                                             SamplingMode::stratified_grid, 1, Exec::serial);
    });
    const double t_build_p = time_of([&] {
        fam_parallel = build_transition_family(sys, part, grid, samples,
                                               SamplingMode::stratified_grid, 1, Exec::parallel);
    });
    bool same = fam_serial.full.size() == fam_parallel.full.size();
    for (std::size_t a = 0; same && a < fam_serial.full.size(); ++a) {
        same = fam_serial.full[a] == fam_parallel.full[a];
    }
    report("transition build", t_build_s, t_build_p, same);

    // Repeated sparse matvec, the workhorse of the certificates.
    const CsrMatrix& p0 = fam_serial.sub[0];
    Vec x(p0.cols, 1.0), ys(p0.rows), yp(p0.rows);
    const int reps = 2000;
    const double t_mv_s = time_of([&] {
        for (int r = 0; r < reps; ++r) csr_matvec(p0, x, ys, Exec::serial);
    });
    const double t_mv_p = time_of([&] {
        for (int r = 0; r < reps; ++r) csr_matvec(p0, x, yp, Exec::parallel);
    });
    report("sparse matvec x2000", t_mv_s, t_mv_p, ys == yp);

    // Dense Cholesky at normal-equation size.
    const int n = part.n_cells() - 1;
    DenseMatrix spd(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) spd(i, j) = 1.0 / (1.0 + std::abs(i - j));
        spd(i, i) += 2.0;
    }
    DenseMatrix f_serial = spd, f_parallel = spd;
    const double t_ch_s =
        time_of([&] { cholesky_factor(f_serial, 0.0, Exec::serial); });
    const double t_ch_p =
        time_of([&] { cholesky_factor(f_parallel, 0.0, Exec::parallel); });
    same = true;
    for (int i = 0; same && i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            if (f_serial(i, j) != f_parallel(i, j)) {
                same = false;
                break;
            }
        }
    }
    report("dense cholesky", t_ch_s, t_ch_p, same);

    // Closed-loop rollout from all cell centers (uses a trivial policy).
    std::vector<int> action_of(std::size_t(n), actions / 2);
    RolloutConfig rc;
    rc.horizon = 300;
    RolloutResult rs, rp;
    const double t_ro_s =
        time_of([&] { rs = rollout(sys, part, action_of, grid, rc, Exec::serial); });
    const double t_ro_p =
        time_of([&] { rp = rollout(sys, part, action_of, grid, rc, Exec::parallel); });
    report("rollout", t_ro_s, t_ro_p,
           rs.report.survival_counts == rp.report.survival_counts);
    return 0;
}
