#include "hcube/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <bit>

namespace hcube::kernels {

namespace scalar {

void andReduceBlocks(const std::uint64_t* in, std::size_t blocks, std::size_t block, std::uint64_t* out) {
    for (std::size_t j = 0; j < blocks; ++j) {
        std::uint64_t acc = ~std::uint64_t{0};
        for (std::size_t k = 0; k < block; ++k) acc &= in[j * block + k];
        out[j] = acc;
    }
}

void orReduceBlocks(const std::uint64_t* in, std::size_t blocks, std::size_t block, std::uint64_t* out) {
    for (std::size_t j = 0; j < blocks; ++j) {
        std::uint64_t acc = 0;
        for (std::size_t k = 0; k < block; ++k) acc |= in[j * block + k];
        out[j] = acc;
    }
}

std::uint64_t popcountSum(const std::uint64_t* in, std::size_t count) {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < count; ++i) total += std::popcount(in[i]);
    return total;
}

int minPopcount(const std::uint64_t* in, std::size_t count) {
    int best = 64;
    for (std::size_t i = 0; i < count; ++i) best = std::min(best, std::popcount(in[i]));
    return best;
}

}  // namespace scalar

#if !defined(HCUBE_HAVE_AVX2)
// Without an AVX2 translation unit the vector entry points fall back to scalar.
namespace avx2 {
void andReduceBlocks(const std::uint64_t* in, std::size_t b, std::size_t k, std::uint64_t* out) {
    scalar::andReduceBlocks(in, b, k, out);
}
void orReduceBlocks(const std::uint64_t* in, std::size_t b, std::size_t k, std::uint64_t* out) {
    scalar::orReduceBlocks(in, b, k, out);
}
std::uint64_t popcountSum(const std::uint64_t* in, std::size_t c) { return scalar::popcountSum(in, c); }
int minPopcount(const std::uint64_t* in, std::size_t c) { return scalar::minPopcount(in, c); }
}  // namespace avx2
#endif

namespace {

Isa detect() {
#if defined(HCUBE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    if (__builtin_cpu_supports("avx2")) return Isa::Avx2;
#endif
    return Isa::Scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

Isa active() { return current().load(std::memory_order_relaxed); }

bool supported(Isa isa) { return isa == Isa::Scalar || detect() == Isa::Avx2; }

Isa force(Isa isa) {
    if (!supported(isa)) isa = Isa::Scalar;
    return current().exchange(isa);
}

void andReduceBlocks(const std::uint64_t* in, std::size_t blocks, std::size_t block, std::uint64_t* out) {
    if (active() == Isa::Avx2) avx2::andReduceBlocks(in, blocks, block, out);
    else scalar::andReduceBlocks(in, blocks, block, out);
}

void orReduceBlocks(const std::uint64_t* in, std::size_t blocks, std::size_t block, std::uint64_t* out) {
    if (active() == Isa::Avx2) avx2::orReduceBlocks(in, blocks, block, out);
    else scalar::orReduceBlocks(in, blocks, block, out);
}

std::uint64_t popcountSum(const std::uint64_t* in, std::size_t count) {
    return active() == Isa::Avx2 ? avx2::popcountSum(in, count) : scalar::popcountSum(in, count);
}

int minPopcount(const std::uint64_t* in, std::size_t count) {
    return active() == Isa::Avx2 ? avx2::minPopcount(in, count) : scalar::minPopcount(in, count);
}

}  // namespace hcube::kernels
