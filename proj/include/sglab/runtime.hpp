#pragma once

namespace sglab {

// The forward/backward passes allocate hundreds of >128KB temporaries per
// batch; raising the malloc mmap threshold keeps them on the reusable heap
// instead of fresh zeroed pages. Idempotent, glibc-only.
void tune_allocator();

}  // namespace sglab
