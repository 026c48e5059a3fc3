#ifndef HCUBE_KERNELS_HPP
#define HCUBE_KERNELS_HPP

#include <cstddef>
#include <cstdint>

namespace hcube::kernels {

enum class Isa { Scalar, Avx2 };

// Active implementation; defaults to the best one the CPU supports.
Isa active();
bool supported(Isa isa);
// Tests use this to pin one implementation; returns the previous choice.
Isa force(Isa isa);

// out[j] = AND (resp. OR) of in[j*block .. j*block+block-1].
void andReduceBlocks(const std::uint64_t* in, std::size_t blocks, std::size_t block, std::uint64_t* out);
void orReduceBlocks(const std::uint64_t* in, std::size_t blocks, std::size_t block, std::uint64_t* out);

std::uint64_t popcountSum(const std::uint64_t* in, std::size_t count);
// Minimum popcount over in[0..count); 64 for an empty range.
int minPopcount(const std::uint64_t* in, std::size_t count);

namespace scalar {
void andReduceBlocks(const std::uint64_t* in, std::size_t blocks, std::size_t block, std::uint64_t* out);
void orReduceBlocks(const std::uint64_t* in, std::size_t blocks, std::size_t block, std::uint64_t* out);
std::uint64_t popcountSum(const std::uint64_t* in, std::size_t count);
int minPopcount(const std::uint64_t* in, std::size_t count);
}  // namespace scalar

namespace avx2 {
void andReduceBlocks(const std::uint64_t* in, std::size_t blocks, std::size_t block, std::uint64_t* out);
void orReduceBlocks(const std::uint64_t* in, std::size_t blocks, std::size_t block, std::uint64_t* out);
std::uint64_t popcountSum(const std::uint64_t* in, std::size_t count);
int minPopcount(const std::uint64_t* in, std::size_t count);
}  // namespace avx2

}  // namespace hcube::kernels

#endif
