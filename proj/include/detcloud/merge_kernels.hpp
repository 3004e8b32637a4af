#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace detcloud::simd {

// Word-level three-way merge over equal-length spans, the hot inner loop of
// the kernel's snapshot merge. Per word i:
//
//   child[i] != snap[i], parent[i] == snap[i]               -> parent[i] := child[i]
//   child[i] != snap[i], parent[i] != snap[i], != child[i]  -> conflict, parent kept
//   otherwise                                               -> untouched
//
// Conflicting indices are appended to `conflicts` in ascending order.
// Returns the number of words copied into parent.
//
// Variants must be bit-equivalent including the conflict list; the scalar
// kernel is the reference the SIMD paths are tested against.
using MergeFn = size_t (*)(uint32_t* parent, const uint32_t* child, const uint32_t* snap,
                           size_t n, std::vector<uint32_t>& conflicts);

size_t merge_words_scalar(uint32_t* parent, const uint32_t* child, const uint32_t* snap,
                          size_t n, std::vector<uint32_t>& conflicts);

enum class Backend { Auto, Scalar, Avx2, Neon };

// Active kernel, chosen once from CPU features (or forced via set_backend).
size_t merge_words(uint32_t* parent, const uint32_t* child, const uint32_t* snap, size_t n,
                   std::vector<uint32_t>& conflicts);

void set_backend(Backend b);  // Auto re-probes the CPU
Backend active_backend();
std::string_view backend_name(Backend b);
bool backend_available(Backend b);

}  // namespace detcloud::simd
