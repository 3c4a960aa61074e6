/* rng.hpp */

#ifndef VRVM_RNG_HPP
#define VRVM_RNG_HPP

#include <cstdint>

namespace vrvm {

inline std::uint64_t SplitMix64(std::uint64_t state)
{
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/* Deterministic substream seed for a (master, tag) pair; different
 * tags decorrelate the streams without sharing state */
inline std::uint64_t DeriveSeed(const std::uint64_t master,
                                const std::uint64_t tag)
{
    return SplitMix64(master ^ SplitMix64(tag + 0x632be59bd9b4e019ull));
}

} /* namespace vrvm */

#endif /* VRVM_RNG_HPP */
