#include "hcube/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <bit>

namespace hcube::kernels::avx2 {

namespace {

// Per-64-bit-lane popcount: nibble lookup, then byte sums via SAD.
inline __m256i lanePopcount(__m256i v) {
    const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                         0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
    const __m256i low = _mm256_set1_epi8(0x0f);
    __m256i lo = _mm256_and_si256(v, low);
    __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low);
    __m256i bytes = _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
    return _mm256_sad_epu8(bytes, _mm256_setzero_si256());
}

template <bool And>
void reduceBlocks(const std::uint64_t* in, std::size_t blocks, std::size_t block, std::uint64_t* out) {
    std::size_t j = 0;
    if (block == 4) {
        // One block per vector; fold the four lanes.
        for (; j < blocks; ++j) {
            __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(in + 4 * j));
            __m128i a = _mm256_castsi256_si128(v);
            __m128i b = _mm256_extracti128_si256(v, 1);
            __m128i c = And ? _mm_and_si128(a, b) : _mm_or_si128(a, b);
            __m128i d = _mm_unpackhi_epi64(c, c);
            c = And ? _mm_and_si128(c, d) : _mm_or_si128(c, d);
            out[j] = static_cast<std::uint64_t>(_mm_cvtsi128_si64(c));
        }
        return;
    }
    // Four blocks at a time, striding by the block length.
    const __m256i stride = _mm256_setr_epi64x(0, 1, 2, 3);
    const __m256i scaled = _mm256_mul_epu32(stride, _mm256_set1_epi64x(static_cast<long long>(block)));
    for (; j + 4 <= blocks; j += 4) {
        __m256i acc = And ? _mm256_set1_epi64x(-1) : _mm256_setzero_si256();
        const long long* base = reinterpret_cast<const long long*>(in + j * block);
        for (std::size_t k = 0; k < block; ++k) {
            __m256i v = _mm256_i64gather_epi64(base + k, scaled, 8);
            acc = And ? _mm256_and_si256(acc, v) : _mm256_or_si256(acc, v);
        }
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + j), acc);
    }
    for (; j < blocks; ++j) {
        std::uint64_t acc = And ? ~std::uint64_t{0} : 0;
        for (std::size_t k = 0; k < block; ++k) acc = And ? (acc & in[j * block + k]) : (acc | in[j * block + k]);
        out[j] = acc;
    }
}

}  // namespace

void andReduceBlocks(const std::uint64_t* in, std::size_t blocks, std::size_t block, std::uint64_t* out) {
    reduceBlocks<true>(in, blocks, block, out);
}

void orReduceBlocks(const std::uint64_t* in, std::size_t blocks, std::size_t block, std::uint64_t* out) {
    reduceBlocks<false>(in, blocks, block, out);
}

std::uint64_t popcountSum(const std::uint64_t* in, std::size_t count) {
    __m256i acc = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(in + i));
        acc = _mm256_add_epi64(acc, lanePopcount(v));
    }
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
    std::uint64_t total = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; i < count; ++i) total += std::popcount(in[i]);
    return total;
}

int minPopcount(const std::uint64_t* in, std::size_t count) {
    __m256i best = _mm256_set1_epi64x(64);
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        __m256i v = lanePopcount(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(in + i)));
        __m256i gt = _mm256_cmpgt_epi64(best, v);
        best = _mm256_blendv_epi8(best, v, gt);
    }
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), best);
    int result = static_cast<int>(std::min(std::min(lanes[0], lanes[1]), std::min(lanes[2], lanes[3])));
    for (; i < count; ++i) result = std::min(result, std::popcount(in[i]));
    return result;
}

}  // namespace hcube::kernels::avx2
