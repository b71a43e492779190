#pragma once

namespace collabrep {

// Selects between the OpenMP kernel and the serial reference loop. Both
// produce identical results; the serial path exists for testing and for
// callers that already parallelize at a coarser level.
enum class Execution { serial, parallel };

}  // namespace collabrep
