#pragma once

namespace invdes {

/// Keeps freed tape buffers in the heap instead of returning them to the
/// kernel (glibc only; a no-op elsewhere). Call once at program start.
void tune_allocator();

}  // namespace invdes
