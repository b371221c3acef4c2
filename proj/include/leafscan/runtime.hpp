#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace leafscan {

// The trainers allocate and free multi-megabyte Eigen blocking buffers every
// epoch; glibc's default thresholds hand that memory back to the kernel each
// time and the page faults cost roughly 20% of a Levenberg-Marquardt run.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

}  // namespace leafscan
