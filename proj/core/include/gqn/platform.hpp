#pragma once

namespace gqn {

// Raises the allocator's trim/mmap thresholds. Training allocates and frees
// many short-lived buffers of a few hundred kB per step; with the default
// glibc settings each of those round-trips through the kernel.
// No-op on other C libraries. Call once from main().
void configure_allocator();

} // namespace gqn
