#pragma once

namespace moeguide {

// Selects the serial reference or the OpenMP variant of a data-parallel
// kernel. Both variants produce bit-identical results.
enum class Exec { Serial, Parallel };

// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

}  // namespace moeguide
