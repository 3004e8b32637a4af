#include "detcloud/merge_kernels.hpp"

#include <atomic>

#if defined(__x86_64__) || defined(__i386__)
#define DETCLOUD_X86 1
#include <immintrin.h>
#elif defined(__aarch64__) || defined(__ARM_NEON)
#define DETCLOUD_NEON 1
#include <arm_neon.h>
#endif

namespace detcloud::simd {

namespace {

inline size_t merge_span(uint32_t* parent, const uint32_t* child, const uint32_t* snap,
                         size_t from, size_t n, std::vector<uint32_t>& conflicts) {
    size_t merged = 0;
    for (size_t i = from; i < n; i++) {
        uint32_t c = child[i];
        uint32_t s = snap[i];
        if (c == s) continue;
        uint32_t p = parent[i];
        if (p == s) {
            parent[i] = c;
            merged++;
        } else if (p != c) {
            conflicts.push_back(uint32_t(i));
        }
    }
    return merged;
}

}  // namespace

size_t merge_words_scalar(uint32_t* parent, const uint32_t* child, const uint32_t* snap,
                          size_t n, std::vector<uint32_t>& conflicts) {
    return merge_span(parent, child, snap, 0, n, conflicts);
}

#if DETCLOUD_X86

__attribute__((target("avx2"))) static size_t merge_words_avx2(uint32_t* parent,
                                                               const uint32_t* child,
                                                               const uint32_t* snap, size_t n,
                                                               std::vector<uint32_t>& conflicts) {
    size_t merged = 0;
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256i c = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(child + i));
        __m256i s = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(snap + i));
        __m256i ceq = _mm256_cmpeq_epi32(c, s);
        if (_mm256_movemask_epi8(ceq) == -1) continue;  // child untouched here

        __m256i p = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(parent + i));
        __m256i peq = _mm256_cmpeq_epi32(p, s);
        __m256i take = _mm256_andnot_si256(ceq, peq);
        __m256i out = _mm256_blendv_epi8(p, c, take);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(parent + i), out);
        merged += size_t(__builtin_popcount(uint32_t(_mm256_movemask_ps(_mm256_castsi256_ps(take)))));

        __m256i pceq = _mm256_cmpeq_epi32(p, c);
        __m256i confl = _mm256_andnot_si256(peq, _mm256_andnot_si256(ceq, _mm256_set1_epi32(-1)));
        confl = _mm256_andnot_si256(pceq, confl);
        uint32_t cm = uint32_t(_mm256_movemask_ps(_mm256_castsi256_ps(confl)));
        while (cm) {
            unsigned bit = unsigned(__builtin_ctz(cm));
            conflicts.push_back(uint32_t(i + bit));
            cm &= cm - 1;
        }
    }
    merged += merge_span(parent, child, snap, i, n, conflicts);
    return merged;
}

#endif  // DETCLOUD_X86

#if DETCLOUD_NEON

static size_t merge_words_neon(uint32_t* parent, const uint32_t* child, const uint32_t* snap,
                               size_t n, std::vector<uint32_t>& conflicts) {
    size_t merged = 0;
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        uint32x4_t c = vld1q_u32(child + i);
        uint32x4_t s = vld1q_u32(snap + i);
        uint32x4_t ceq = vceqq_u32(c, s);
        if (vminvq_u32(ceq) == 0xffffffffu) continue;

        uint32x4_t p = vld1q_u32(parent + i);
        uint32x4_t peq = vceqq_u32(p, s);
        uint32x4_t take = vbicq_u32(peq, ceq);
        vst1q_u32(parent + i, vbslq_u32(take, c, p));

        uint32x4_t pceq = vceqq_u32(p, c);
        uint32x4_t confl = vbicq_u32(vbicq_u32(vmvnq_u32(ceq), peq), pceq);
        uint32_t lanes_take[4], lanes_confl[4];
        vst1q_u32(lanes_take, take);
        vst1q_u32(lanes_confl, confl);
        for (unsigned lane = 0; lane < 4; lane++) {
            if (lanes_take[lane]) merged++;
            if (lanes_confl[lane]) conflicts.push_back(uint32_t(i + lane));
        }
    }
    merged += merge_span(parent, child, snap, i, n, conflicts);
    return merged;
}

#endif  // DETCLOUD_NEON

namespace {

std::atomic<Backend> g_backend{Backend::Auto};

Backend probe() {
#if DETCLOUD_X86
    if (__builtin_cpu_supports("avx2")) return Backend::Avx2;
#endif
#if DETCLOUD_NEON
    return Backend::Neon;
#endif
    return Backend::Scalar;
}

Backend resolved() {
    Backend b = g_backend.load(std::memory_order_relaxed);
    if (b != Backend::Auto) return b;
    b = probe();
    g_backend.store(b, std::memory_order_relaxed);
    return b;
}

}  // namespace

size_t merge_words(uint32_t* parent, const uint32_t* child, const uint32_t* snap, size_t n,
                   std::vector<uint32_t>& conflicts) {
    switch (resolved()) {
#if DETCLOUD_X86
        case Backend::Avx2:
            return merge_words_avx2(parent, child, snap, n, conflicts);
#endif
#if DETCLOUD_NEON
        case Backend::Neon:
            return merge_words_neon(parent, child, snap, n, conflicts);
#endif
        default:
            return merge_words_scalar(parent, child, snap, n, conflicts);
    }
}

void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

Backend active_backend() { return resolved(); }

std::string_view backend_name(Backend b) {
    switch (b) {
        case Backend::Auto: return "auto";
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "?";
}

bool backend_available(Backend b) {
    switch (b) {
        case Backend::Auto:
        case Backend::Scalar:
            return true;
        case Backend::Avx2:
#if DETCLOUD_X86
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Backend::Neon:
#if DETCLOUD_NEON
            return true;
#else
            return false;
#endif
    }
    return false;
}

}  // namespace detcloud::simd
