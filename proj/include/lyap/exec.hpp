#pragma once

namespace lyap {

/// Execution policy for the data-parallel kernels. Both policies produce
/// bit-identical results; `parallel` farms independent work items to OpenMP
/// threads while `serial` is the reference path used by the tests.
enum class Exec {
    serial,
    parallel,
};

} // namespace lyap
