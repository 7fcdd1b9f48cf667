#include "sglab/runtime.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace sglab {

void tune_allocator() {
#ifdef __GLIBC__
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

}  // namespace sglab
